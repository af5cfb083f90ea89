#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cmaflow/config.hpp"
#include "cmaflow/estimates.hpp"
#include "cmaflow/oracle.hpp"

namespace cmaflow {

struct ExperimentResult {
    bool all_pass = true;
    std::vector<std::string> summary_lines;
    std::string out_dir;
};

/// Executes the configured pipeline (run / cascade / converge / verify),
/// writes the artifact bundle into the output directory and returns the
/// machine-readable summary. Identical config + seed give byte-identical
/// outputs.
ExperimentResult run_experiment(const Config& cfg, const std::string& out_dir_override = "",
                                std::optional<long> seed_override = std::nullopt, int jobs = 1);

// ---- report writers --------------------------------------------------------

std::string fmt_g(double v);

void write_field_csv(const GridField& f, const std::string& path);
/// Compact binary grid format: "CMAF", u32 version, u32 n, u32 sizes[2n],
/// f64 h, f64 time, then the full box row-major as little-endian f64 with NaN
/// at exterior points.
void write_field_binary(const GridField& f, const std::string& path);
void write_bound_report_csv(const BoundReport& rep, const std::string& path);
void write_trace_csv(const TraceReport& rep, const std::string& path);
void write_cascade_csv(const CascadeReport& rep, const std::string& path);
void write_convergence_csv(const std::vector<double>& xs, const std::vector<double>& errs,
                           const std::string& xname, const std::string& path);
void write_radial_csv(const RadialCurve& curve, const std::string& path);
/// Plot-ready long format: series,x,y
void write_long_csv(const std::vector<std::tuple<std::string, double, double>>& rows,
                    const std::string& path);
void write_summary(const std::vector<std::string>& lines, const std::string& path);

}  // namespace cmaflow
