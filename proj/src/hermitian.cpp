#include "cmaflow/hermitian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cmaflow {

void HermitianForm::symmetrize() {
    for (int i = 0; i < n; ++i) {
        at(i, i) = Cplx(at(i, i).real(), 0.0);
        for (int j = i + 1; j < n; ++j) {
            Cplx m = 0.5 * (at(i, j) + std::conj(at(j, i)));
            at(i, j) = m;
            at(j, i) = std::conj(m);
        }
    }
}

double HermitianForm::hermitian_defect() const {
    double d = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) d = std::max(d, std::abs(at(i, j) - std::conj(at(j, i))));
    return d;
}

HermitianForm& HermitianForm::operator+=(const HermitianForm& o) {
    for (int i = 0; i < n * n; ++i) a[static_cast<size_t>(i)] += o.a[static_cast<size_t>(i)];
    return *this;
}

HermitianForm& HermitianForm::operator*=(double c) {
    for (int i = 0; i < n * n; ++i) a[static_cast<size_t>(i)] *= c;
    return *this;
}

Cholesky cholesky(const HermitianForm& h) {
    Cholesky res;
    res.n = h.n;
    double max_diag = 0;
    for (int i = 0; i < h.n; ++i) max_diag = std::max(max_diag, h.at(i, i).real());
    const double pivot_floor = 1e-13 * (1.0 + max_diag);

    std::array<Cplx, kMaxComplexDim * kMaxComplexDim>& l = res.l;
    res.min_pivot = std::numeric_limits<double>::infinity();
    for (int j = 0; j < h.n; ++j) {
        double d = h.at(j, j).real();
        for (int k = 0; k < j; ++k) d -= std::norm(l[static_cast<size_t>(j * h.n + k)]);
        res.min_pivot = std::min(res.min_pivot, d);
        if (!(d > pivot_floor)) {
            res.ok = false;
            return res;
        }
        const double ljj = std::sqrt(d);
        l[static_cast<size_t>(j * h.n + j)] = ljj;
        for (int i = j + 1; i < h.n; ++i) {
            Cplx s = h.at(i, j);
            for (int k = 0; k < j; ++k)
                s -= l[static_cast<size_t>(i * h.n + k)] *
                     std::conj(l[static_cast<size_t>(j * h.n + k)]);
            l[static_cast<size_t>(i * h.n + j)] = s / ljj;
        }
    }
    res.ok = true;
    return res;
}

double log_det_pd(const HermitianForm& h) {
    Cholesky c = cholesky(h);
    if (!c.ok)
        throw NotPlurisubharmonic("log det requested outside the positive-definite cone",
                                  c.min_pivot);
    double s = 0;
    for (int i = 0; i < h.n; ++i) s += std::log(c.lat(i, i).real());
    return 2.0 * s;
}

double det_pd(const HermitianForm& h) { return std::exp(log_det_pd(h)); }

namespace {

/// Solve L L* X = I for Hermitian inverse.
HermitianForm inverse_from_cholesky(const Cholesky& c) {
    const int n = c.n;
    HermitianForm inv(n);
    // Columns of the inverse: forward then backward substitution per unit vector.
    for (int col = 0; col < n; ++col) {
        std::array<Cplx, kMaxComplexDim> y{};
        for (int i = 0; i < n; ++i) {
            Cplx s = (i == col) ? Cplx(1.0) : Cplx(0.0);
            for (int k = 0; k < i; ++k) s -= c.lat(i, k) * y[static_cast<size_t>(k)];
            y[static_cast<size_t>(i)] = s / c.lat(i, i);
        }
        for (int i = n - 1; i >= 0; --i) {
            Cplx s = y[static_cast<size_t>(i)];
            for (int k = i + 1; k < n; ++k)
                s -= std::conj(c.lat(k, i)) * inv.at(k, col);
            inv.at(i, col) = s / c.lat(i, i);
        }
    }
    inv.symmetrize();
    return inv;
}

}  // namespace

HermitianForm inverse_pd(const HermitianForm& h) {
    Cholesky c = cholesky(h);
    if (!c.ok)
        throw NotPlurisubharmonic("inverse requested outside the positive-definite cone",
                                  c.min_pivot);
    return inverse_from_cholesky(c);
}

HermitianForm linearization_coeffs(const HermitianForm& h) {
    HermitianForm inv = inverse_pd(h);
    HermitianForm t(h.n);
    for (int i = 0; i < h.n; ++i)
        for (int j = 0; j < h.n; ++j) t.at(i, j) = inv.at(j, i);
    return t;
}

double trace_of_inverse_times(const HermitianForm& a, const HermitianForm& b) {
    HermitianForm inv = inverse_pd(a);
    Cplx s = 0;
    for (int i = 0; i < a.n; ++i)
        for (int k = 0; k < a.n; ++k) s += inv.at(i, k) * b.at(k, i);
    return s.real();
}

std::array<double, kMaxComplexDim> hermitian_eigenvalues(const HermitianForm& h) {
    std::array<double, kMaxComplexDim> ev{};
    if (h.n == 1) {
        ev[0] = h.at(0, 0).real();
        return ev;
    }
    if (h.n == 2) {
        const double p = h.at(0, 0).real();
        const double q = h.at(1, 1).real();
        const double r2 = std::norm(h.at(0, 1));
        const double mid = 0.5 * (p + q);
        const double rad = std::sqrt(0.25 * (p - q) * (p - q) + r2);
        ev[0] = mid - rad;
        ev[1] = mid + rad;
        return ev;
    }
    // n = 3: trigonometric solution of the characteristic cubic (Smith's method).
    const double q = h.trace_real() / 3.0;
    HermitianForm b = h;
    for (int i = 0; i < 3; ++i) b.at(i, i) -= q;
    double p2 = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) p2 += std::norm(b.at(i, j));
    const double p = std::sqrt(p2 / 6.0);
    if (p < 1e-300) {
        ev[0] = ev[1] = ev[2] = q;
        return ev;
    }
    for (int i = 0; i < 9; ++i) b.a[static_cast<size_t>(i)] /= p;
    // det of 3x3 Hermitian b
    const Cplx d = b.at(0, 0) * (b.at(1, 1) * b.at(2, 2) - b.at(1, 2) * b.at(2, 1)) -
                   b.at(0, 1) * (b.at(1, 0) * b.at(2, 2) - b.at(1, 2) * b.at(2, 0)) +
                   b.at(0, 2) * (b.at(1, 0) * b.at(2, 1) - b.at(1, 1) * b.at(2, 0));
    double r = std::clamp(d.real() / 2.0, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    ev[2] = q + 2.0 * p * std::cos(phi);
    ev[0] = q + 2.0 * p * std::cos(phi + 2.0 * M_PI / 3.0);
    ev[1] = 3.0 * q - ev[0] - ev[2];
    if (ev[0] > ev[1]) std::swap(ev[0], ev[1]);
    if (ev[1] > ev[2]) std::swap(ev[1], ev[2]);
    if (ev[0] > ev[1]) std::swap(ev[0], ev[1]);
    return ev;
}

double min_eigenvalue(const HermitianForm& h) { return hermitian_eigenvalues(h)[0]; }

double max_eigenvalue(const HermitianForm& h) {
    return hermitian_eigenvalues(h)[static_cast<size_t>(h.n - 1)];
}

bool trace_inequality_check(const HermitianForm& h1, const HermitianForm& h2, double rel_tol) {
    const int n = h1.n;
    const double ratio = std::exp(log_det_pd(h1) - log_det_pd(h2));
    const double tr21 = trace_of_inverse_times(h2, h1);
    const double tr12 = trace_of_inverse_times(h1, h2);
    const double lower = n * std::pow(ratio, 1.0 / n);
    const double upper = n * ratio * std::pow(tr12, n - 1);
    const double slack_lo = rel_tol * std::max(std::abs(lower), std::abs(tr21));
    const double slack_hi = rel_tol * std::max(std::abs(upper), std::abs(tr21));
    return lower <= tr21 + slack_lo && tr21 <= upper + slack_hi;
}

HermitianForm restrict_to_complement(const HermitianForm& h,
                                     const std::array<Cplx, kMaxComplexDim>& w) {
    const int n = h.n;
    // Unitary basis with first column w/|w| via modified Gram-Schmidt on {w, e_j}.
    std::array<std::array<Cplx, kMaxComplexDim>, kMaxComplexDim> basis{};
    double wn = 0;
    for (int i = 0; i < n; ++i) wn += std::norm(w[static_cast<size_t>(i)]);
    wn = std::sqrt(wn);
    if (!(wn > 0)) throw Error("tangential restriction requires a nonzero normal vector");
    for (int i = 0; i < n; ++i) basis[0][static_cast<size_t>(i)] = w[static_cast<size_t>(i)] / wn;

    int filled = 1;
    for (int e = 0; e < n && filled < n; ++e) {
        std::array<Cplx, kMaxComplexDim> cand{};
        cand[static_cast<size_t>(e)] = 1.0;
        for (int b = 0; b < filled; ++b) {
            Cplx proj = 0;
            for (int i = 0; i < n; ++i)
                proj += std::conj(basis[static_cast<size_t>(b)][static_cast<size_t>(i)]) *
                        cand[static_cast<size_t>(i)];
            for (int i = 0; i < n; ++i)
                cand[static_cast<size_t>(i)] -= proj * basis[static_cast<size_t>(b)][static_cast<size_t>(i)];
        }
        double cn = 0;
        for (int i = 0; i < n; ++i) cn += std::norm(cand[static_cast<size_t>(i)]);
        cn = std::sqrt(cn);
        if (cn > 1e-8) {
            for (int i = 0; i < n; ++i) basis[static_cast<size_t>(filled)][static_cast<size_t>(i)] =
                cand[static_cast<size_t>(i)] / cn;
            ++filled;
        }
    }
    if (filled < n) throw Error("failed to complete tangential basis");

    HermitianForm out(n - 1);
    for (int r = 1; r < n; ++r) {
        for (int c = 1; c < n; ++c) {
            Cplx s = 0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    s += std::conj(basis[static_cast<size_t>(r)][static_cast<size_t>(i)]) *
                         h.at(i, j) * basis[static_cast<size_t>(c)][static_cast<size_t>(j)];
            out.at(r - 1, c - 1) = s;
        }
    }
    out.symmetrize();
    return out;
}

}  // namespace cmaflow
