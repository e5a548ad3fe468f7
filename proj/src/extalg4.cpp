#include "wildcycle/extalg4.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace wildcycle {

namespace {

constexpr std::array<std::array<int, 3>, 4> kTriples{{{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}}};

double minor3(const Mat4& A, const std::array<int, 3>& r, const std::array<int, 3>& c) {
    auto m = [&](int i, int j) { return A(r[i], c[j]); };
    return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
           m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
           m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

}  // namespace

bool Mat4::all_finite() const {
    return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

Mat4 operator*(const Mat4& A, const Mat4& B) {
    Mat4 C;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            double s = 0.0;
            for (int k = 0; k < 4; ++k) s += A(i, k) * B(k, j);
            C(i, j) = s;
        }
    return C;
}

Vec4 operator*(const Mat4& A, const Vec4& v) {
    Vec4 r{};
    for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 4; ++k) r[i] += A(i, k) * v[k];
    return r;
}

Mat4 transpose(const Mat4& A) {
    Mat4 T;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) T(i, j) = A(j, i);
    return T;
}

double det(const Mat4& A) {
    // Laplace expansion along the first row.
    double d = 0.0;
    for (int j = 0; j < 4; ++j) {
        std::array<int, 3> cols{};
        for (int c = 0, n = 0; c < 4; ++c)
            if (c != j) cols[n++] = c;
        const double sign = (j % 2 == 0) ? 1.0 : -1.0;
        d += sign * A(0, j) * minor3(A, {1, 2, 3}, cols);
    }
    return d;
}

double max_abs_diff(const Mat4& A, const Mat4& B) {
    double m = 0.0;
    for (int i = 0; i < 16; ++i) m = std::max(m, std::abs(A.a[i] - B.a[i]));
    return m;
}

Mat4 wedge3(const Mat4& A) {
    Mat4 W;
    for (int I = 0; I < 4; ++I)
        for (int J = 0; J < 4; ++J) W(I, J) = minor3(A, kTriples[I], kTriples[J]);
    return W;
}

std::array<double, 4> singular_values(const Mat4& A) {
    // Hestenes one-sided Jacobi: orthogonalise the columns of U = A V by plane
    // rotations; the column norms converge to the singular values.
    std::array<double, 16> u = A.a;
    auto col = [&](int r, int c) -> double& { return u[4 * r + c]; };
    constexpr double eps = 1e-15;
    for (int sweep = 0; sweep < 60; ++sweep) {
        bool rotated = false;
        for (int p = 0; p < 3; ++p)
            for (int q = p + 1; q < 4; ++q) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (int r = 0; r < 4; ++r) {
                    alpha += col(r, p) * col(r, p);
                    beta += col(r, q) * col(r, q);
                    gamma += col(r, p) * col(r, q);
                }
                if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (int r = 0; r < 4; ++r) {
                    const double up = col(r, p), uq = col(r, q);
                    col(r, p) = c * up - s * uq;
                    col(r, q) = s * up + c * uq;
                }
            }
        if (!rotated) break;
    }
    std::array<double, 4> sv{};
    for (int c = 0; c < 4; ++c) {
        double s = 0.0;
        for (int r = 0; r < 4; ++r) s += col(r, c) * col(r, c);
        sv[c] = std::sqrt(s);
    }
    std::sort(sv.begin(), sv.end(), std::greater<>());
    return sv;
}

double conorm(const Mat4& A) { return singular_values(A)[3]; }

std::array<double, 4> Spectrum4::moduli() const {
    std::array<double, 4> m{};
    for (int i = 0; i < 4; ++i) m[i] = std::abs(values[i]);
    return m;
}

bool Spectrum4::is_nonreal(std::complex<double> mu) {
    return std::abs(mu.imag()) > 1e-9 * (1.0 + std::abs(mu));
}

double Spectrum4::hyperbolicity_gap() const {
    double g = kInf;
    for (const auto& mu : values) g = std::min(g, std::abs(std::abs(mu) - 1.0));
    return g;
}

Spectrum4 spectrum(const Mat4& A) {
    Eigen::Matrix4d M;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) M(i, j) = A(i, j);
    Eigen::EigenSolver<Eigen::Matrix4d> solver;
    solver.setMaxIterations(10000);
    solver.compute(M, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) throw ConvergenceError("eigenvalue iteration did not converge");

    Spectrum4 s;
    for (int i = 0; i < 4; ++i) s.values[i] = solver.eigenvalues()[i];
    std::stable_sort(s.values.begin(), s.values.end(), [](auto x, auto y) {
        if (std::abs(x) != std::abs(y)) return std::abs(x) < std::abs(y);
        return x.imag() < y.imag();
    });
    for (const auto& mu : s.values) {
        const double r = std::abs(mu);
        if (r < 1.0) ++s.inside_unit;
        if (r > 1.0) ++s.outside_unit;
        if (Spectrum4::is_nonreal(mu))
            ++s.nonreal_count;
        else
            ++s.real_count;
    }
    return s;
}

}  // namespace wildcycle
