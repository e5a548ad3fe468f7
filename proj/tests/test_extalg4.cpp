#include <gtest/gtest.h>

#include <Eigen/SVD>
#include <random>

#include "wildcycle/extalg4.hpp"

using namespace wildcycle;

namespace {

Mat4 random_mat(std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    Mat4 m;
    for (auto& v : m.a) v = n(rng);
    return m;
}

std::array<double, 4> eigen_singular_values(const Mat4& A) {
    Eigen::Matrix4d M;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) M(i, j) = A(i, j);
    Eigen::JacobiSVD<Eigen::Matrix4d> svd(M);
    std::array<double, 4> s{};
    for (int i = 0; i < 4; ++i) s[i] = svd.singularValues()[i];
    return s;
}

}  // namespace

TEST(Wedge3, DiagonalGivesTriples) {
    const Mat4 W = wedge3(Mat4::diag(2, 3, 5, 7));
    EXPECT_DOUBLE_EQ(W(0, 0), 30.0);
    EXPECT_DOUBLE_EQ(W(1, 1), 42.0);
    EXPECT_DOUBLE_EQ(W(2, 2), 70.0);
    EXPECT_DOUBLE_EQ(W(3, 3), 105.0);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            if (i != j) EXPECT_EQ(W(i, j), 0.0);
}

TEST(Wedge3, IdentityAndFunctoriality) {
    EXPECT_EQ(max_abs_diff(wedge3(Mat4::identity()), Mat4::identity()), 0.0);
    std::mt19937_64 rng(7);
    for (int k = 0; k < 200; ++k) {
        const Mat4 A = random_mat(rng), B = random_mat(rng);
        const Mat4 lhs = wedge3(A * B), rhs = wedge3(A) * wedge3(B);
        double scale = 0.0;
        for (double v : lhs.a) scale = std::max(scale, std::abs(v));
        EXPECT_LE(max_abs_diff(lhs, rhs), 1e-12 * std::max(1.0, scale));
    }
}

TEST(Wedge3, DeterminantIdentity) {
    // det of the third exterior power of a 4x4 matrix is det^3.
    std::mt19937_64 rng(11);
    for (int k = 0; k < 100; ++k) {
        const Mat4 A = random_mat(rng);
        const double d = det(A);
        EXPECT_NEAR(det(wedge3(A)), d * d * d, 1e-10 * std::max(1.0, std::abs(d * d * d)));
    }
}

TEST(Conorm, DiagonalAndOrthogonal) {
    EXPECT_DOUBLE_EQ(conorm(Mat4::diag(2, -3, 0.5, 7)), 0.5);
    EXPECT_NEAR(conorm(Mat4::identity()), 1.0, 1e-15);
    Mat4 R = Mat4::identity();
    const double c = std::cos(0.3), s = std::sin(0.3);
    R(0, 0) = c, R(0, 1) = -s, R(1, 0) = s, R(1, 1) = c;
    EXPECT_NEAR(conorm(R), 1.0, 1e-14);
}

TEST(SingularValues, MatchEigenOracle) {
    std::mt19937_64 rng(3);
    for (int k = 0; k < 500; ++k) {
        const Mat4 A = random_mat(rng, k % 2 ? 1.0 : 1e3);
        const auto ours = singular_values(A), ref = eigen_singular_values(A);
        for (int i = 0; i < 4; ++i) EXPECT_NEAR(ours[i], ref[i], 1e-12 * ref[0]);
    }
}

TEST(SingularValues, SmallestIsAccurateForIllConditioned) {
    const Mat4 A = Mat4::diag(1e6, 1.0, 1e-3, 1e-7);
    EXPECT_NEAR(conorm(A), 1e-7, 1e-20);
}

TEST(Conorm, WedgeIdentity) {
    // m(wedge3 M) = |det M| / sigma_max(M).
    std::mt19937_64 rng(5);
    for (int k = 0; k < 200; ++k) {
        const Mat4 A = random_mat(rng);
        const double expect = std::abs(det(A)) / singular_values(A)[0];
        EXPECT_NEAR(conorm(wedge3(A)), expect, 1e-10 * std::max(1.0, expect));
    }
}

TEST(Spectrum, DiagonalIndexAndGap) {
    const auto s = spectrum(Mat4::diag(0.1, 0.1, 10, 100));
    EXPECT_EQ(s.index(), 2);
    EXPECT_EQ(s.inside_unit, 2);
    EXPECT_EQ(s.real_count, 4);
    EXPECT_NEAR(s.values[0].real(), 0.1, 1e-14);
    EXPECT_NEAR(s.values[3].real(), 100.0, 1e-12);
    EXPECT_NEAR(s.hyperbolicity_gap(), 0.9, 1e-14);
}

TEST(Spectrum, RotationBlockIsNonReal) {
    Mat4 A = Mat4::diag(0.0, 0.0, 0.5, 3.0);
    A(0, 0) = 0.0, A(0, 1) = -2.0, A(1, 0) = 2.0, A(1, 1) = 0.0;
    const auto s = spectrum(A);
    EXPECT_EQ(s.nonreal_count, 2);
    EXPECT_EQ(s.real_count, 2);
    EXPECT_EQ(s.index(), 3);
    EXPECT_EQ(s.values[1].imag(), -s.values[2].imag());
}

TEST(Spectrum, ProductOfModuliIsAbsDet) {
    std::mt19937_64 rng(13);
    for (int k = 0; k < 200; ++k) {
        const Mat4 A = random_mat(rng);
        const auto s = spectrum(A);
        double p = 1.0;
        for (double m : s.moduli()) p *= m;
        const double d = std::abs(det(A));
        EXPECT_NEAR(p, d, 1e-8 * std::max(d, 1e-300));
        for (int i = 0; i + 1 < 4; ++i) EXPECT_LE(s.moduli()[i], s.moduli()[i + 1]);
    }
}

TEST(Spectrum, IdentityIsNotHyperbolic) {
    const auto s = spectrum(Mat4::identity());
    EXPECT_EQ(s.hyperbolicity_gap(), 0.0);
    EXPECT_EQ(s.inside_unit + s.outside_unit, 0);
}
