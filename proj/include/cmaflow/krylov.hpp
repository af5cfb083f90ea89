#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace cmaflow {

struct KrylovResult {
    bool converged = false;
    int iters = 0;
    double final_residual = 0;  // max norm of the true residual
    std::vector<double> history;
};

using ApplyFn = std::function<void(const double* x, double* y)>;

inline double max_abs(const double* v, std::int64_t n) {
    double m = 0;
    for (std::int64_t i = 0; i < n; ++i) m = std::max(m, std::abs(v[i]));
    return m;
}

/// Diagonally preconditioned BiCGStab with a max-norm stopping test on the
/// true residual. Dot products stay serial so results are bit-reproducible.
inline KrylovResult bicgstab(std::int64_t n, const ApplyFn& apply, const double* rhs, double* x,
                             const double* inv_diag, double tol_abs, int max_iters) {
    KrylovResult res;
    std::vector<double> r(static_cast<size_t>(n)), r0(static_cast<size_t>(n)),
        p(static_cast<size_t>(n)), v(static_cast<size_t>(n)), s(static_cast<size_t>(n)),
        t(static_cast<size_t>(n)), phat(static_cast<size_t>(n)), shat(static_cast<size_t>(n)),
        ax(static_cast<size_t>(n));
    auto dot = [n](const std::vector<double>& a, const std::vector<double>& b) {
        double acc = 0;
        for (std::int64_t i = 0; i < n; ++i)
            acc += a[static_cast<size_t>(i)] * b[static_cast<size_t>(i)];
        return acc;
    };
    apply(x, ax.data());
    for (std::int64_t i = 0; i < n; ++i)
        r[static_cast<size_t>(i)] = rhs[i] - ax[static_cast<size_t>(i)];
    r0 = r;
    double rho = 1, alpha = 1, omega = 1;
    std::fill(p.begin(), p.end(), 0.0);
    std::fill(v.begin(), v.end(), 0.0);
    res.final_residual = max_abs(r.data(), n);
    res.history.push_back(res.final_residual);
    if (res.final_residual <= tol_abs) {
        res.converged = true;
        return res;
    }
    for (int it = 0; it < max_iters; ++it) {
        const double rho_new = dot(r0, r);
        if (std::abs(rho_new) < 1e-300) break;  // breakdown
        const double beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for (std::int64_t i = 0; i < n; ++i)
            p[static_cast<size_t>(i)] =
                r[static_cast<size_t>(i)] + beta * (p[static_cast<size_t>(i)] -
                                                    omega * v[static_cast<size_t>(i)]);
        for (std::int64_t i = 0; i < n; ++i)
            phat[static_cast<size_t>(i)] = p[static_cast<size_t>(i)] * inv_diag[i];
        apply(phat.data(), v.data());
        const double r0v = dot(r0, v);
        if (std::abs(r0v) < 1e-300) break;
        alpha = rho / r0v;
        for (std::int64_t i = 0; i < n; ++i)
            s[static_cast<size_t>(i)] = r[static_cast<size_t>(i)] - alpha * v[static_cast<size_t>(i)];
        if (max_abs(s.data(), n) <= tol_abs) {
            for (std::int64_t i = 0; i < n; ++i) x[i] += alpha * phat[static_cast<size_t>(i)];
            apply(x, ax.data());
            for (std::int64_t i = 0; i < n; ++i)
                r[static_cast<size_t>(i)] = rhs[i] - ax[static_cast<size_t>(i)];
            res.final_residual = max_abs(r.data(), n);
            res.history.push_back(res.final_residual);
            res.iters = it + 1;
            if (res.final_residual <= tol_abs) {
                res.converged = true;
                return res;
            }
            continue;
        }
        for (std::int64_t i = 0; i < n; ++i)
            shat[static_cast<size_t>(i)] = s[static_cast<size_t>(i)] * inv_diag[i];
        apply(shat.data(), t.data());
        const double tt = dot(t, t);
        if (tt < 1e-300) break;
        omega = dot(t, s) / tt;
        if (std::abs(omega) < 1e-300) break;
        for (std::int64_t i = 0; i < n; ++i)
            x[i] += alpha * phat[static_cast<size_t>(i)] + omega * shat[static_cast<size_t>(i)];
        for (std::int64_t i = 0; i < n; ++i)
            r[static_cast<size_t>(i)] = s[static_cast<size_t>(i)] - omega * t[static_cast<size_t>(i)];
        const double rn = max_abs(r.data(), n);
        res.history.push_back(rn);
        res.iters = it + 1;
        if (rn <= tol_abs) {
            // confirm against the true residual before declaring victory
            apply(x, ax.data());
            for (std::int64_t i = 0; i < n; ++i)
                r[static_cast<size_t>(i)] = rhs[i] - ax[static_cast<size_t>(i)];
            res.final_residual = max_abs(r.data(), n);
            if (res.final_residual <= tol_abs) {
                res.converged = true;
                return res;
            }
        }
    }
    apply(x, ax.data());
    for (std::int64_t i = 0; i < n; ++i)
        r[static_cast<size_t>(i)] = rhs[i] - ax[static_cast<size_t>(i)];
    res.final_residual = max_abs(r.data(), n);
    return res;
}

/// Damped Jacobi sweep fallback for M-matrix systems.
inline KrylovResult damped_jacobi(std::int64_t n, const ApplyFn& apply, const double* rhs,
                                  double* x, const double* inv_diag, double tol_abs,
                                  int max_iters, double damping = 0.8) {
    KrylovResult res;
    std::vector<double> ax(static_cast<size_t>(n));
    for (int it = 0; it < max_iters; ++it) {
        apply(x, ax.data());
        double rmax = 0;
        for (std::int64_t i = 0; i < n; ++i) {
            const double r = rhs[i] - ax[static_cast<size_t>(i)];
            rmax = std::max(rmax, std::abs(r));
            x[i] += damping * r * inv_diag[i];
        }
        res.iters = it + 1;
        res.final_residual = rmax;
        if ((it & 63) == 0 || rmax <= tol_abs) res.history.push_back(rmax);
        if (rmax <= tol_abs) {
            res.converged = true;
            return res;
        }
    }
    return res;
}

}  // namespace cmaflow
