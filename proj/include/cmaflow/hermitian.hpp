#pragma once

#include <array>
#include <complex>

#include "cmaflow/errors.hpp"
#include "cmaflow/vec.hpp"

namespace cmaflow {

using Cplx = std::complex<double>;

/// Dense n x n complex Hermitian matrix, n <= 3. Row-major, fixed capacity.
struct HermitianForm {
    int n = 0;
    std::array<Cplx, kMaxComplexDim * kMaxComplexDim> a{};

    HermitianForm() = default;
    explicit HermitianForm(int dim) : n(dim) {}

    Cplx& at(int i, int j) { return a[static_cast<size_t>(i * n + j)]; }
    Cplx at(int i, int j) const { return a[static_cast<size_t>(i * n + j)]; }

    static HermitianForm identity(int dim) {
        HermitianForm h(dim);
        for (int i = 0; i < dim; ++i) h.at(i, i) = 1.0;
        return h;
    }
    static HermitianForm diagonal(int dim, const double* d) {
        HermitianForm h(dim);
        for (int i = 0; i < dim; ++i) h.at(i, i) = d[i];
        return h;
    }

    /// Replace by (A + A*)/2 and force real diagonal.
    void symmetrize();

    /// max |A_ij - conj(A_ji)|
    double hermitian_defect() const;

    double trace_real() const {
        double s = 0;
        for (int i = 0; i < n; ++i) s += at(i, i).real();
        return s;
    }

    HermitianForm& operator+=(const HermitianForm& o);
    HermitianForm& operator*=(double c);
    friend HermitianForm operator+(HermitianForm x, const HermitianForm& y) { return x += y; }
    friend HermitianForm operator*(double c, HermitianForm x) { return x *= c; }
};

struct Cholesky {
    bool ok = false;
    double min_pivot = 0.0;  // smallest diagonal pivot encountered (estimate of min eig scale)
    int n = 0;
    std::array<Cplx, kMaxComplexDim * kMaxComplexDim> l{};  // lower triangular

    Cplx lat(int i, int j) const { return l[static_cast<size_t>(i * n + j)]; }
};

/// Attempt the Hermitian Cholesky factorization H = L L*.
/// Fails (ok=false) when a pivot drops below 1e-13 * (1 + max initial diagonal).
Cholesky cholesky(const HermitianForm& h);

/// log det H on the positive-definite cone. Throws NotPlurisubharmonic otherwise.
double log_det_pd(const HermitianForm& h);

/// det H via Cholesky; throws NotPlurisubharmonic on non-PD input.
double det_pd(const HermitianForm& h);

/// Hermitian inverse via Cholesky. Throws NotPlurisubharmonic on non-PD input.
HermitianForm inverse_pd(const HermitianForm& h);

/// The coefficient matrix (u^{ab}) of the linearized operator: the transpose of the
/// inverse of H. Satisfies H * result^T = I. Throws NotPlurisubharmonic on non-PD input.
HermitianForm linearization_coeffs(const HermitianForm& h);

/// tr(A^{-1} B) for Hermitian PD A; real by symmetry.
double trace_of_inverse_times(const HermitianForm& a, const HermitianForm& b);

/// Eigenvalues in ascending order (closed forms for n=1,2; trigonometric method for n=3).
std::array<double, kMaxComplexDim> hermitian_eigenvalues(const HermitianForm& h);

double min_eigenvalue(const HermitianForm& h);
double max_eigenvalue(const HermitianForm& h);

/// Checks n (det H1 / det H2)^{1/n} <= tr(H2^{-1} H1) <= n (det H1 / det H2) tr(H1^{-1} H2)^{n-1}
/// to the given relative tolerance. Both inputs must be PD.
bool trace_inequality_check(const HermitianForm& h1, const HermitianForm& h2,
                            double rel_tol = 1e-12);

/// Restriction of H to the complex-orthogonal complement of w (the holomorphic tangent
/// space when w = dbar rho). Result is (n-1) x (n-1); requires n >= 2 and w != 0.
HermitianForm restrict_to_complement(const HermitianForm& h, const std::array<Cplx, kMaxComplexDim>& w);

}  // namespace cmaflow
