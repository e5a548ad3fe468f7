#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "wildcycle/maps4d.hpp"

using namespace wildcycle;

namespace {

constexpr double kLambda = 100.0;
const Vec4 kP{0, 0, 0, 0};
const Vec4 kQ{0, 10, 0, 0};
const std::array<Vec4, 4> kC{Vec4{0, 10, 5, 0}, Vec4{10, 10, 5, 0}, Vec4{10, 0, 5, 0}, Vec4{10, 0, 0, 0}};

struct Maps {
    std::shared_ptr<const FlowMap1D> F = build_F(kLambda);
    std::shared_ptr<const FlowMap1D> G = build_G(kLambda);
    std::shared_ptr<const AntiderivativeMap1D> H = build_H(kLambda);
    MapPtr theta = std::make_shared<ThetaMap>(ThetaParams{});
    MapPtr psi = std::make_shared<PsiMap>(F, G, H, kLambda);
    MapPtr upsilon = build_upsilon(kC);
    MapPtr phi = std::make_shared<ComposedMap>(std::vector<MapPtr>{psi, theta}, "phi");
    MapPtr omega = std::make_shared<ComposedMap>(std::vector<MapPtr>{psi, theta, upsilon}, "omega");
};

const Maps& maps() {
    static const Maps m;
    return m;
}

Vec4 random_in_box(std::mt19937_64& rng, const Vec4& center, double radius) {
    std::uniform_real_distribution<double> u(-radius, radius);
    return {center[0] + u(rng), center[1] + u(rng), center[2] + u(rng), center[3] + u(rng)};
}

// Central differences carry truncation error h^2 |f'''| and rounding error
// eps |f| / h; the scale argument bounds the second one.
void expect_jacobian_matches(const DiffeoMap4& m, const Vec4& X, double rel, double h = 1e-6) {
    const Mat4 J = m.jacobian(X), fd = fd_jacobian(m, X, h);
    const Vec4 Y = m.eval(X);
    const double rounding = 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, norm_inf(Y)) / h;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            EXPECT_NEAR(J(i, j), fd(i, j), rel * std::max(1.0, std::abs(fd(i, j))) + rounding)
                << m.tag() << " entry (" << i << ',' << j << ") at " << X[0] << ' ' << X[1] << ' ' << X[2] << ' '
                << X[3];
}

void expect_round_trip(const DiffeoMap4& m, const Vec4& X, double tol) {
    const Vec4 Y = m.eval(X);
    EXPECT_LE(dist_inf(m.inverse(Y), X), tol) << m.tag();
    EXPECT_LE(dist_inf(m.eval(m.inverse(X)), X), tol) << m.tag();
}

}  // namespace

TEST(Theta, QuarterTurnOnSmallBoxAroundP) {
    std::mt19937_64 rng(1);
    const auto& T = *maps().theta;
    for (int k = 0; k < 100; ++k) {
        const Vec4 X = random_in_box(rng, kP, 1.0 / 300.0);
        const Vec4 Y = T.eval(X);
        EXPECT_LE(dist_inf(Y, Vec4{X[0], -X[2], X[1], X[3]}), 1e-15);
    }
}

TEST(Theta, QuarterTurnsOnSmallBoxAroundQ) {
    std::mt19937_64 rng(2);
    const auto& T = *maps().theta;
    for (int k = 0; k < 100; ++k) {
        const Vec4 X = random_in_box(rng, kQ, 1.0 / 300.0);
        const double x = X[0], y = X[1] - 10.0, z = X[2], w = X[3];
        EXPECT_LE(dist_inf(T.eval(X), Vec4{-y, x + 10.0, -w, z}), 1e-15);
    }
}

TEST(Theta, FixesAxisAndPreservesPlanes) {
    const auto& T = *maps().theta;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0 / 200.0, 1.0 / 200.0);
    for (int k = 0; k < 1000; ++k) {
        const Vec4 onaxis{u(rng), 0, 0, 0};
        EXPECT_EQ(T.eval(onaxis), onaxis);
        const Vec4 yz = T.eval({0, u(rng), u(rng), 0});
        EXPECT_EQ(yz[0], 0.0);
        EXPECT_EQ(yz[3], 0.0);
        const Vec4 xy = T.eval({u(rng), 10 + u(rng), 0, 0});
        EXPECT_EQ(xy[2], 0.0);
        EXPECT_EQ(xy[3], 0.0);
        const Vec4 zw = T.eval({0, 10, u(rng), u(rng)});
        EXPECT_EQ(zw[0], 0.0);
        EXPECT_EQ(zw[1], 10.0);
    }
}

TEST(Theta, PreservesDistanceToCenters) {
    const auto& T = *maps().theta;
    std::mt19937_64 rng(4);
    for (const Vec4& c : {kP, kQ})
        for (int k = 0; k < 2000; ++k) {
            const Vec4 X = random_in_box(rng, c, 1.0 / 200.0);
            EXPECT_NEAR(dist_euclid(T.eval(X), c), dist_euclid(X, c), 1e-12);
        }
}

TEST(Theta, IdentityOutsideSupportBoxes) {
    const auto& T = *maps().theta;
    for (const Vec4& X : {Vec4{0, 10, 1, 0}, Vec4{0.0051, 0.001, 0.001, 0}, Vec4{0, 9.994, 0, 0.001}, Vec4{3, 3, 3, 3}})
        EXPECT_EQ(T.eval(X), X);
}

TEST(Theta, InverseAndJacobian) {
    const auto& T = *maps().theta;
    std::mt19937_64 rng(5);
    for (const Vec4& c : {kP, kQ})
        for (int k = 0; k < 500; ++k) {
            const Vec4 X = random_in_box(rng, c, 1.0 / 190.0);
            expect_round_trip(T, X, 1e-13);
            EXPECT_NEAR(det(T.jacobian(X)), 1.0, 1e-9);
            // The radial cut-off is steep; a smaller step keeps truncation error down.
            expect_jacobian_matches(T, X, 1e-5, 1e-8);
        }
}

TEST(Psi, ProductOnInnerCubeAndIdentityOutside) {
    const auto& m = maps();
    const auto& S = *m.psi;
    EXPECT_EQ(S.eval(kP), kP);
    const Vec4 Y = S.eval({0, 10, 0.3, -40});
    EXPECT_EQ(Y[0], 0.0);
    EXPECT_EQ(Y[1], 10.0);
    EXPECT_EQ(Y[2], (*m.H)(0.3));
    EXPECT_EQ(Y[3], (*m.H)(-40));
    const double l3 = kLambda * kLambda * kLambda;
    const Vec4 far{l3 + 2.0, 0, 0, 0};
    EXPECT_EQ(S.eval(far), far);
    const Vec4 X{3, -7, 0.5, 1234.5};
    const Vec4 Z = S.eval(X);
    EXPECT_EQ(Z[0], (*m.F)(3));
    EXPECT_EQ(Z[1], (*m.G)(-7));
    EXPECT_EQ(Z[3], (*m.H)(1234.5));
}

TEST(Psi, BlendShellInverseAndJacobian) {
    const auto& S = *maps().psi;
    const double l3 = kLambda * kLambda * kLambda;
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> shell(l3 + 0.05, l3 + 0.95), inner(-50.0, 50.0);
    for (int k = 0; k < 200; ++k) {
        Vec4 X{inner(rng), inner(rng), inner(rng), inner(rng)};
        X[k % 4] = shell(rng);
        expect_round_trip(S, X, 1e-8 * std::max(1.0, norm_inf(X)));
        expect_jacobian_matches(S, X, 1e-5, 1e-5);
    }
}

TEST(Psi, InverseOnTheTrappingBox) {
    const auto& S = *maps().psi;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> xy(-20.0, 20.0), zw(-kLambda * kLambda, kLambda * kLambda);
    for (int k = 0; k < 500; ++k) {
        const Vec4 X{xy(rng), xy(rng), zw(rng), zw(rng)};
        EXPECT_LE(dist_inf(S.inverse(S.eval(X)), X), 1e-9);
        expect_jacobian_matches(S, X, 1e-5, 1e-5);
    }
}

TEST(LegProfile, BoundaryConditionsAndCoefficients) {
    const LegProfile kappa(10.0, 0.9, 0.8);
    for (const auto& c : kappa.coefficients()) EXPECT_LE(std::abs(c.residual), 1e-10 * 10.9) << c.name;
    EXPECT_EQ(kappa(-0.9), -0.9);
    EXPECT_NEAR(kappa(10.9 - 1e-12), 10.9, 1e-9);
    EXPECT_EQ(kappa(0.3), 10.3);
    EXPECT_NEAR(integrate(kappa.density(), -0.9, -0.8), 10.1, 1e-9);
    EXPECT_NEAR(integrate(kappa.density(), 0.8, 10.9), 0.1, 1e-10);
    double prev = -kInf;
    for (double u = -1.0; u <= 11.0; u += 1e-3) {
        const double v = kappa(u);
        EXPECT_GT(v, prev);
        prev = v;
        EXPECT_NEAR(kappa.inverse(v), u, 1e-10);
    }
}

TEST(LegProfile, WorkedExampleCoefficient) {
    const LegProfile kappa(5.0, 0.3, 0.2);
    EXPECT_NEAR(kappa.margin(), 0.04, 1e-15);
    EXPECT_NEAR(integrate(kappa.density(), 0.2, 5.3), 0.1, 1e-10);
}

TEST(Chi, TranslatesSmallBoxAndFixesOutside) {
    const ChiMap chi(kC[0], kC[1], 1.0, 0.9, 0.8);
    EXPECT_EQ(chi.eval(kC[0]), kC[1]);
    std::mt19937_64 rng(8);
    for (int k = 0; k < 100; ++k) {
        const Vec4 X = random_in_box(rng, kC[0], 0.8);
        EXPECT_LE(dist_inf(chi.eval(X), X + (kC[1] - kC[0])), 1e-14);
    }
    EXPECT_EQ(chi.eval({5, 10, 6.01, 0}), (Vec4{5, 10, 6.01, 0}));
    EXPECT_EQ(chi.eval({-1.5, 10, 5, 0}), (Vec4{-1.5, 10, 5, 0}));
    EXPECT_THROW(ChiMap(kC[0], kC[2], 1.0, 0.9, 0.8), SpecError);
    EXPECT_THROW(ChiMap(kC[0], kC[1], 0.9, 0.9, 0.8), SpecError);
}

TEST(Chi, InverseAndJacobianAcrossTheTube) {
    for (int leg = 0; leg < 3; ++leg) {
        const double a = (11.0 - (3 * leg + 1)) / 10.0, b = a - 0.1, c = a - 0.2;
        const ChiMap chi(kC[leg], kC[leg + 1], a, b, c);
        const auto box = chi.support()[0];
        std::mt19937_64 rng(9 + leg);
        for (int k = 0; k < 300; ++k) {
            Vec4 X;
            for (int i = 0; i < 4; ++i)
                X[i] = std::uniform_real_distribution<double>(box.axes[i].lo - 0.05, box.axes[i].hi + 0.05)(rng);
            expect_round_trip(chi, X, 1e-10);
            expect_jacobian_matches(chi, X, 1e-5, 1e-6);
        }
    }
}

TEST(Upsilon, PlateauTranslationAndFixedPoints) {
    const auto& U = *maps().upsilon;
    EXPECT_LE(dist_inf(U.eval(kC[0]), kC[3]), 1e-14);
    std::mt19937_64 rng(10);
    const Vec4 shift{10, -10, -5, 0};
    for (int k = 0; k < 100; ++k) {
        const Vec4 X = random_in_box(rng, kC[0], 0.2);
        EXPECT_LE(dist_inf(U.eval(X) - X, shift), 1e-12);
    }
    EXPECT_EQ(U.eval(kQ), kQ);
    EXPECT_EQ(U.eval(kP), kP);
    EXPECT_LE(dist_inf(U.inverse({10, 0, 0, 0}), kC[0]), 1e-12);
}

TEST(Upsilon, InverseOverTheDetour) {
    const auto& U = *maps().upsilon;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> x(-1.2, 11.2), y(-1.2, 11.2), z(-0.6, 6.2), w(-1.1, 1.1);
    for (int k = 0; k < 500; ++k) {
        const Vec4 X{x(rng), y(rng), z(rng), w(rng)};
        expect_round_trip(U, X, 1e-9);
        expect_jacobian_matches(U, X, 1e-5, 1e-6);
    }
}

TEST(Phi, SpectrumAtP) {
    const auto s = spectrum(maps().phi->jacobian(kP));
    const auto mod = s.moduli();
    EXPECT_NEAR(mod[0], 0.1, 1e-12);
    EXPECT_NEAR(mod[1], std::sqrt(10.0 * kLambda), 1e-9);
    EXPECT_NEAR(mod[2], std::sqrt(10.0 * kLambda), 1e-9);
    EXPECT_NEAR(mod[3], kLambda, 1e-9);
    EXPECT_EQ(s.nonreal_count, 2);
    EXPECT_EQ(s.index(), 3);
}

TEST(Phi, SpectrumAtQ) {
    const auto s = spectrum(maps().phi->jacobian(kQ));
    const auto mod = s.moduli();
    EXPECT_NEAR(mod[0], std::sqrt(0.001), 1e-12);
    EXPECT_NEAR(mod[1], std::sqrt(0.001), 1e-12);
    EXPECT_NEAR(mod[2], kLambda, 1e-9);
    EXPECT_NEAR(mod[3], kLambda, 1e-9);
    EXPECT_EQ(s.nonreal_count, 4);
    EXPECT_EQ(s.index(), 2);
}

TEST(Omega, CompositionAndBackwardStepFromHeteroclinicPoint) {
    const auto& m = maps();
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> xy(-20.0, 20.0), zw(-50.0, 50.0);
    for (int k = 0; k < 100; ++k) {
        const Vec4 X{xy(rng), xy(rng), zw(rng), zw(rng)};
        EXPECT_EQ(m.omega->eval(X), m.upsilon->eval(m.theta->eval(m.psi->eval(X))));
    }
    const Vec4 pre = m.omega->inverse({10, 0, 0, 0});
    EXPECT_NEAR(pre[0], 0.0, 1e-12);
    EXPECT_NEAR(pre[1], 10.0, 1e-12);
    EXPECT_NEAR(pre[2], 5.0 / kLambda, 1e-14);
    EXPECT_NEAR(pre[3], 0.0, 1e-12);
    EXPECT_EQ(m.omega->eval(kP), kP);
    EXPECT_EQ(m.omega->eval(kQ), kQ);
}
