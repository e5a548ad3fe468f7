#pragma once

// Fixed-size 4x4 real linear algebra: products, determinants, the third
// exterior power, singular values and eigenvalues. Everything here is
// allocation-free and works on values.

#include <array>
#include <complex>

#include "wildcycle/types.hpp"

namespace wildcycle {

struct Mat4 {
    std::array<double, 16> a{};  // row-major

    [[nodiscard]] constexpr double& operator()(int r, int c) { return a[4 * r + c]; }
    [[nodiscard]] constexpr double operator()(int r, int c) const { return a[4 * r + c]; }

    [[nodiscard]] static constexpr Mat4 identity() {
        Mat4 m;
        for (int i = 0; i < 4; ++i) m(i, i) = 1.0;
        return m;
    }
    [[nodiscard]] static constexpr Mat4 diag(double d0, double d1, double d2, double d3) {
        Mat4 m;
        m(0, 0) = d0;
        m(1, 1) = d1;
        m(2, 2) = d2;
        m(3, 3) = d3;
        return m;
    }

    [[nodiscard]] bool all_finite() const;
};

[[nodiscard]] Mat4 operator*(const Mat4& A, const Mat4& B);
[[nodiscard]] Vec4 operator*(const Mat4& A, const Vec4& v);
[[nodiscard]] Mat4 transpose(const Mat4& A);
[[nodiscard]] double det(const Mat4& A);
[[nodiscard]] double max_abs_diff(const Mat4& A, const Mat4& B);

/// Matrix of the induced map on the third exterior power in the ordered basis
/// (e1^e2^e3, e1^e2^e4, e1^e3^e4, e2^e3^e4). Entry (I, J) is the 3x3 minor of
/// A with rows from triple I and columns from triple J.
[[nodiscard]] Mat4 wedge3(const Mat4& A);

/// Singular values, non-increasing. One-sided Jacobi on the columns.
[[nodiscard]] std::array<double, 4> singular_values(const Mat4& A);

/// m(A) = min |Av| over unit v, i.e. the smallest singular value.
[[nodiscard]] double conorm(const Mat4& A);

/// Eigenvalues sorted by non-decreasing modulus plus the counters needed to
/// read off the index of a hyperbolic fixed point.
struct Spectrum4 {
    std::array<std::complex<double>, 4> values{};
    int inside_unit = 0;   // |mu| < 1
    int outside_unit = 0;  // |mu| > 1
    int real_count = 0;
    int nonreal_count = 0;

    [[nodiscard]] std::array<double, 4> moduli() const;
    [[nodiscard]] static bool is_nonreal(std::complex<double> mu);
    /// Dimension of the unstable direction (eigenvalues of modulus > 1).
    [[nodiscard]] int index() const { return outside_unit; }
    /// Smallest | |mu| - 1 | over the spectrum.
    [[nodiscard]] double hyperbolicity_gap() const;
};

[[nodiscard]] Spectrum4 spectrum(const Mat4& A);

}  // namespace wildcycle
