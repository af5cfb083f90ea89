#pragma once

#include <array>
#include <cassert>
#include <cmath>
#include <complex>
#include <string>

namespace cmaflow {

inline constexpr int kMaxComplexDim = 3;
inline constexpr int kMaxRealDim = 2 * kMaxComplexDim;

/// Point or vector in R^{2n}, n <= 3. Fixed capacity, runtime dimension.
struct Vec {
    std::array<double, kMaxRealDim> v{};
    int dim = 0;

    Vec() = default;
    explicit Vec(int d) : dim(d) { assert(d >= 0 && d <= kMaxRealDim); }

    double& operator[](int i) {
        assert(i >= 0 && i < dim);
        return v[static_cast<size_t>(i)];
    }
    double operator[](int i) const {
        assert(i >= 0 && i < dim);
        return v[static_cast<size_t>(i)];
    }

    /// z_a = v[2a] + i v[2a+1]
    std::complex<double> z(int a) const {
        return {v[static_cast<size_t>(2 * a)], v[static_cast<size_t>(2 * a + 1)]};
    }

    double norm2() const {
        double s = 0;
        for (int i = 0; i < dim; ++i) s += v[static_cast<size_t>(i)] * v[static_cast<size_t>(i)];
        return s;
    }
    double norm() const { return std::sqrt(norm2()); }

    Vec& operator+=(const Vec& o) {
        for (int i = 0; i < dim; ++i) v[static_cast<size_t>(i)] += o.v[static_cast<size_t>(i)];
        return *this;
    }
    Vec& operator-=(const Vec& o) {
        for (int i = 0; i < dim; ++i) v[static_cast<size_t>(i)] -= o.v[static_cast<size_t>(i)];
        return *this;
    }
    Vec& operator*=(double c) {
        for (int i = 0; i < dim; ++i) v[static_cast<size_t>(i)] *= c;
        return *this;
    }

    friend Vec operator+(Vec a, const Vec& b) { return a += b; }
    friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
    friend Vec operator*(double c, Vec a) { return a *= c; }

    friend double dot(const Vec& a, const Vec& b) {
        double s = 0;
        for (int i = 0; i < a.dim; ++i) s += a.v[static_cast<size_t>(i)] * b.v[static_cast<size_t>(i)];
        return s;
    }
};

inline Vec axis_step(const Vec& p, int axis, double step) {
    Vec q = p;
    q[axis] += step;
    return q;
}

inline std::string to_string(const Vec& p) {
    std::string s = "(";
    for (int i = 0; i < p.dim; ++i) {
        if (i) s += ", ";
        s += std::to_string(p[i]);
    }
    return s + ")";
}

}  // namespace cmaflow
