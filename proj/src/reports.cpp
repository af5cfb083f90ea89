#include <cmath>
#include <cstdio>
#include <cstring>

#include "cmaflow/harness.hpp"

namespace cmaflow {

namespace {

struct FileHandle {
    std::FILE* f;
    explicit FileHandle(const std::string& path) : f(std::fopen(path.c_str(), "wb")) {
        if (!f) throw Error("cannot open " + path + " for writing");
    }
    ~FileHandle() {
        if (f) std::fclose(f);
    }
    FileHandle(const FileHandle&) = delete;
    FileHandle& operator=(const FileHandle&) = delete;
};

}  // namespace

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

void write_field_csv(const GridField& f, const std::string& path) {
    FileHandle fh(path);
    const Grid& g = *f.grid;
    std::fprintf(fh.f, "id");
    for (int i = 0; i < g.real_dim(); ++i) std::fprintf(fh.f, ",s%d", i);
    std::fprintf(fh.f, ",t,value\n");
    for (std::int32_t id = 0; id < g.num_points(); ++id) {
        std::fprintf(fh.f, "%d", id);
        const Vec p = g.coords(id);
        for (int i = 0; i < g.real_dim(); ++i) std::fprintf(fh.f, ",%s", fmt_g(p[i]).c_str());
        std::fprintf(fh.f, ",%s,%s\n", fmt_g(f.time).c_str(), fmt_g(f[id]).c_str());
    }
}

void write_field_binary(const GridField& f, const std::string& path) {
    FileHandle fh(path);
    const Grid& g = *f.grid;
    const char magic[4] = {'C', 'M', 'A', 'F'};
    std::fwrite(magic, 1, 4, fh.f);
    const std::uint32_t version = 1;
    const std::uint32_t n = static_cast<std::uint32_t>(g.n());
    std::fwrite(&version, 4, 1, fh.f);
    std::fwrite(&n, 4, 1, fh.f);
    for (int i = 0; i < g.real_dim(); ++i) {
        const std::uint32_t s = static_cast<std::uint32_t>(g.size()[static_cast<size_t>(i)]);
        std::fwrite(&s, 4, 1, fh.f);
    }
    const double h = g.h();
    std::fwrite(&h, 8, 1, fh.f);
    std::fwrite(&f.time, 8, 1, fh.f);
    // full box, row major, NaN outside the domain
    std::vector<double> row(static_cast<size_t>(g.box_points()),
                            std::numeric_limits<double>::quiet_NaN());
    for (std::int32_t id = 0; id < g.num_points(); ++id) {
        // recover the flat index from the packed lattice index
        std::int64_t flat = 0;
        const Vec p = g.coords(id);
        (void)p;
        std::int64_t stride = 1;
        for (int i = g.real_dim() - 1; i >= 0; --i) {
            const std::int64_t ix = static_cast<std::int64_t>(
                std::llround((g.coords(id)[i] - g.origin()[i]) / g.h()));
            flat += stride * ix;
            stride *= g.size()[static_cast<size_t>(i)];
        }
        row[static_cast<size_t>(flat)] = f[id];
    }
    std::fwrite(row.data(), 8, row.size(), fh.f);
}

void write_bound_report_csv(const BoundReport& rep, const std::string& path) {
    FileHandle fh(path);
    std::fprintf(fh.f, "name,measured,bound,pass,enforced,provenance\n");
    for (const auto& l : rep.lines) {
        std::fprintf(fh.f, "\"%s\",%s,%s,%s,%d,\"%s\"\n", l.name.c_str(),
                     fmt_g(l.measured).c_str(), l.bound ? fmt_g(*l.bound).c_str() : "",
                     l.pass ? (*l.pass ? "1" : "0") : "", l.enforced ? 1 : 0,
                     l.provenance.c_str());
    }
    std::fprintf(fh.f, "# C_u=%s C_phi=%s C_f=%s M1=%s C1=%s C2=%s lambda=%s Lambda=%s\n",
                 fmt_g(rep.cu).c_str(), fmt_g(rep.cphi).c_str(), fmt_g(rep.cf).c_str(),
                 fmt_g(rep.m1).c_str(), fmt_g(rep.c1).c_str(), fmt_g(rep.c2).c_str(),
                 fmt_g(rep.lambda).c_str(), fmt_g(rep.Lambda).c_str());
}

void write_trace_csv(const TraceReport& rep, const std::string& path) {
    FileHandle fh(path);
    std::fprintf(fh.f, "t,sup_error\n");
    for (size_t i = 0; i < rep.times.size(); ++i)
        std::fprintf(fh.f, "%s,%s\n", fmt_g(rep.times[i]).c_str(),
                     fmt_g(rep.sup_error[i]).c_str());
}

void write_cascade_csv(const CascadeReport& rep, const std::string& path) {
    FileHandle fh(path);
    std::fprintf(fh.f, "m,k,sup_gap,bound,ok\n");
    for (const auto& pg : rep.pairs)
        std::fprintf(fh.f, "%d,%d,%s,%s,%d\n", pg.m, pg.k, fmt_g(pg.sup_gap).c_str(),
                     fmt_g(pg.bound).c_str(), pg.ok ? 1 : 0);
    std::fprintf(fh.f, "# levels:");
    for (size_t i = 0; i < rep.levels.size(); ++i)
        std::fprintf(fh.f, " m=%d eps=%s sup_g=%s delta=%s", rep.levels[i],
                     fmt_g(rep.eps_m[i]).c_str(), fmt_g(rep.sup_gm[i]).c_str(),
                     fmt_g(rep.delta_m[i]).c_str());
    std::fprintf(fh.f, "\n");
}

void write_convergence_csv(const std::vector<double>& xs, const std::vector<double>& errs,
                           const std::string& xname, const std::string& path) {
    FileHandle fh(path);
    std::fprintf(fh.f, "%s,error,order\n", xname.c_str());
    for (size_t i = 0; i < xs.size(); ++i) {
        std::string order;
        if (i > 0 && errs[i] > 0 && errs[i - 1] > 0)
            order = fmt_g(std::log(errs[i - 1] / errs[i]) / std::log(xs[i - 1] / xs[i]));
        std::fprintf(fh.f, "%s,%s,%s\n", fmt_g(xs[i]).c_str(), fmt_g(errs[i]).c_str(),
                     order.c_str());
    }
}

void write_radial_csv(const RadialCurve& curve, const std::string& path) {
    FileHandle fh(path);
    std::fprintf(fh.f, "r,t,value\n");
    for (size_t ti = 0; ti < curve.times.size(); ++ti)
        for (size_t i = 0; i < curve.r.size(); ++i)
            std::fprintf(fh.f, "%s,%s,%s\n", fmt_g(curve.r[i]).c_str(),
                         fmt_g(curve.times[ti]).c_str(), fmt_g(curve.values[ti][i]).c_str());
}

void write_long_csv(const std::vector<std::tuple<std::string, double, double>>& rows,
                    const std::string& path) {
    FileHandle fh(path);
    std::fprintf(fh.f, "series,x,y\n");
    for (const auto& [series, x, y] : rows)
        std::fprintf(fh.f, "%s,%s,%s\n", series.c_str(), fmt_g(x).c_str(), fmt_g(y).c_str());
}

void write_summary(const std::vector<std::string>& lines, const std::string& path) {
    FileHandle fh(path);
    for (const auto& l : lines) std::fprintf(fh.f, "%s\n", l.c_str());
}

}  // namespace cmaflow
