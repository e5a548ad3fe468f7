#include <gtest/gtest.h>

#include <random>

#include "wildcycle/scene.hpp"

using namespace wildcycle;

namespace {

// Brute-force tube distance: dense sampling of the segment parameter.
double tube_distance_oracle(const Vec4& X, const Vec4& from, const Vec4& to, double l, int samples = 20000) {
    double best = kInf;
    for (int k = 0; k <= samples; ++k) {
        const double t = double(k) / samples;
        Vec4 c;
        for (int i = 0; i < 4; ++i) c[i] = t * from[i] + (1 - t) * to[i];
        best = std::min(best, dist_inf(X, c));
    }
    return std::max(0.0, best - l);
}

std::string error_constraint(const std::function<void()>& f) {
    try {
        f();
    } catch (const SceneError& e) {
        return e.constraint;
    }
    return "";
}

}  // namespace

TEST(Scene, DefaultLedgerHolds) {
    const Scene s = make_scene(100.0);
    for (const auto& e : s.ledger()) EXPECT_TRUE(e.ok()) << e.id << " margin " << e.margin;
    const Vec4 shift = s.C[3] - s.C[0];
    EXPECT_EQ(shift, (Vec4{10, -10, -5, 0}));
    const Box4 d = s.D().bounds();
    EXPECT_DOUBLE_EQ(std::max({std::abs(d.axes[2].lo), d.axes[2].hi, std::abs(d.axes[3].lo), d.axes[3].hi}), 6.0);
    for (const auto& e : s.ledger())
        if (e.id == "D_disjoint_Bp") EXPECT_DOUBLE_EQ(e.margin, 1.0);
}

TEST(Scene, RejectsBrokenConstraints) {
    EXPECT_EQ(error_constraint([] { (void)make_scene(20.0); }), "lambda_min");
    Scene s;
    s.C[1] = {10, 10, 5, 1};
    EXPECT_EQ(error_constraint([&] { validate_scene(s); }), "leg1_axis_aligned");
    Scene t;
    t.C[3] = {10, 0, 0, 1};
    EXPECT_EQ(error_constraint([&] { validate_scene(t); }), "upsilon_shift");
    Scene u;
    u.bp_threshold = 5.5;
    EXPECT_EQ(error_constraint([&] { validate_scene(u); }), "D_disjoint_Bp");
    Scene v;
    v.zw_extent = 5.9;
    EXPECT_FALSE(error_constraint([&] { validate_scene(v); }).empty());
}

TEST(Region, DistancesToTheDetour) {
    const Scene s = make_scene(100.0);
    const Region D = s.D();
    EXPECT_DOUBLE_EQ(region_distance(D, s.Q), 4.0);
    EXPECT_DOUBLE_EQ(region_distance(D, {0, 10, 0.25, 0}), 3.75);
    EXPECT_DOUBLE_EQ(region_distance(D, s.P), 9.0);
    for (const Vec4& X : s.C) EXPECT_EQ(region_distance(D, X), 0.0);
    EXPECT_EQ(region_distance(D, {5, 10.9, 5.5, -0.9}), 0.0);
}

TEST(Region, ThresholdRegions) {
    const Scene s = make_scene(100.0);
    const Region B = s.B(), Bp = s.Bp(), A = s.A();
    EXPECT_TRUE(B.contains({0, 0, 1, 0}));
    EXPECT_TRUE(B.contains({0, 0, 0.2, -50}));
    EXPECT_FALSE(B.contains({0, 0, 0.5, 0.5}));
    EXPECT_DOUBLE_EQ(B.distance({0, 0, 0.5, 0.25}), 0.5);
    EXPECT_DOUBLE_EQ(Bp.distance({0, 0, 6, 0}), 1.0);
    EXPECT_DOUBLE_EQ(A.distance({25, 0, 0, 0}), 5.0);
    EXPECT_TRUE(s.Cregion().contains(s.P));
    EXPECT_TRUE(s.Cregion().contains(s.Q));
}

TEST(Region, MembershipMatchesDistanceAndOracle) {
    const Scene s = make_scene(100.0);
    const Region D = s.D();
    const Region slanted = Region::tube({0, 0, 0, 0}, {3, -1, 2, 0.5}, 0.7, "slanted");
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> x(-2, 12), y(-2, 12), z(-1, 7), w(-2, 2), c(-1.5, 4);
    int inside = 0;
    for (int k = 0; k < 100000; ++k) {
        const Vec4 X{x(rng), y(rng), z(rng), w(rng)};
        bool member = false;
        for (int i = 0; i < 3; ++i) member = member || Box4{D.parts()[i].bounds()}.contains(X);
        EXPECT_EQ(D.contains(X), member);
        EXPECT_EQ(D.distance(X) == 0.0, member);
        inside += member;
    }
    EXPECT_GT(inside, 1000);
    for (int k = 0; k < 300; ++k) {
        const Vec4 X{c(rng), c(rng), c(rng), c(rng)};
        const double oracle = tube_distance_oracle(X, {0, 0, 0, 0}, {3, -1, 2, 0.5}, 0.7);
        EXPECT_LE(slanted.distance(X), oracle + 1e-12);
        EXPECT_GE(slanted.distance(X), oracle - 3.0 / 20000 - 1e-12);
    }
    EXPECT_THROW((void)Region::tube({0, 0, 0, 0}, {0.1, 0, 0, 0}, 0.5), SpecError);
}

TEST(SceneJson, RoundTripAndSchemaErrors) {
    Scene s = make_scene(100.0);
    s.lambda0 = 400.0;
    s.solved_coefficients.push_back({"alpha0", 1.25, 3e-12, 10});
    const Scene back = scene_from_json(scene_to_json(s));
    EXPECT_EQ(back.lambda, s.lambda);
    EXPECT_EQ(back.C, s.C);
    EXPECT_EQ(back.lambda0, s.lambda0);
    EXPECT_FALSE(back.K.has_value());
    ASSERT_EQ(back.solved_coefficients.size(), 1u);
    EXPECT_EQ(back.solved_coefficients[0].value, 1.25);
    EXPECT_EQ(scene_to_json(back), scene_to_json(s));

    auto schema_message = [](const std::string& text) {
        try {
            (void)scene_from_json(text);
        } catch (const SceneError& e) {
            return e.constraint + ": " + e.what();
        }
        return std::string("accepted");
    };
    EXPECT_NE(schema_message(R"({"schema_version":1,"lambda":100,"points":{"C2":[1,2,3]}})").find("/points/C2"),
              std::string::npos);
    EXPECT_NE(schema_message(R"({"schema_version":1})").find("/lambda"), std::string::npos);
    EXPECT_NE(schema_message(R"({"schema_version":1,"lambda":100,"bogus":1})").find("/bogus"), std::string::npos);
    EXPECT_NE(schema_message(R"({"schema_version":2,"lambda":100})").find("schema_version"), std::string::npos);
    EXPECT_NE(schema_message(R"({"schema_version":1,"lambda":20})").find("lambda_min"), std::string::npos);
    EXPECT_EQ(schema_message(R"({"schema_version":1,"lambda":200,"upsilon_enabled":false})"), "accepted");
}

TEST(SceneMaps, BuildAndRecordCoefficients) {
    Scene s = make_scene(100.0);
    const SceneMaps m = build_maps(s);
    record_coefficients(s, m);
    ASSERT_EQ(s.solved_coefficients.size(), 8u);
    for (const auto& c : s.solved_coefficients) EXPECT_LE(std::abs(c.residual), 1e-10 * 1e6) << c.name;
    EXPECT_EQ(m.omega->eval(s.P), s.P);
    EXPECT_EQ(m.omega->eval(s.Q), s.Q);
    Scene off = s;
    off.upsilon_enabled = false;
    const SceneMaps n = build_maps(off);
    EXPECT_EQ(n.upsilon->eval(s.C[0]), s.C[0]);
}
