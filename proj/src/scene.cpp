#include "wildcycle/scene.hpp"

#include <fstream>
#include <json.hpp>
#include <numbers>
#include <sstream>

namespace wildcycle {

// ----------------------------------------------------------------------------
// Regions
// ----------------------------------------------------------------------------

Region Region::box(const Box4& b, std::string name) {
    Region r;
    r.kind_ = Kind::Box;
    r.box_ = b;
    r.name_ = std::move(name);
    return r;
}

Region Region::cube(const Vec4& center, double radius, std::string name) {
    if (!(radius >= 0.0)) throw SpecError("cube radius must be non-negative");
    return box(Box4::cube(center, radius), std::move(name));
}

Region Region::tube(const Vec4& X, const Vec4& Y, double radius, std::string name) {
    if (!(radius > 0.0) || !(radius < 2.0 * dist_inf(X, Y)))
        throw SpecError("tube " + name + " needs 0 < l < 2 d(X, Y)");
    Region r;
    r.kind_ = Kind::Tube;
    r.from_ = X;
    r.to_ = Y;
    r.radius_ = radius;
    r.name_ = std::move(name);
    return r;
}

Region Region::unite(std::vector<Region> parts, std::string name) {
    Region r;
    r.kind_ = Kind::Union;
    r.parts_ = std::move(parts);
    r.name_ = std::move(name);
    return r;
}

Region Region::box_minus_open_box(const Box4& outer, const Box4& hole, std::string name) {
    std::vector<Region> slabs;
    for (int i = 0; i < 4; ++i) {
        if (hole.axes[i].lo > outer.axes[i].lo) {
            Box4 s = outer;
            s.axes[i].hi = std::min(hole.axes[i].lo, outer.axes[i].hi);
            slabs.push_back(box(s, name + "/slab"));
        }
        if (hole.axes[i].hi < outer.axes[i].hi) {
            Box4 s = outer;
            s.axes[i].lo = std::max(hole.axes[i].hi, outer.axes[i].lo);
            slabs.push_back(box(s, name + "/slab"));
        }
    }
    return unite(std::move(slabs), std::move(name));
}

namespace {

// min over t in [0, 1] of max_i |a_i + t b_i|. The function is convex and
// piecewise linear; its minimum sits at an endpoint, a zero of one term or a
// crossing of two terms, so checking those candidates is exact.
double min_max_abs_affine(const Vec4& a, const Vec4& b) {
    auto g = [&](double t) {
        double m = 0.0;
        for (int i = 0; i < 4; ++i) m = std::max(m, std::abs(a[i] + t * b[i]));
        return m;
    };
    double best = std::min(g(0.0), g(1.0));
    auto consider = [&](double t) {
        if (t > 0.0 && t < 1.0) best = std::min(best, g(t));
    };
    for (int i = 0; i < 4; ++i) {
        if (b[i] != 0.0) consider(-a[i] / b[i]);
        for (int j = i + 1; j < 4; ++j) {
            if (b[i] != b[j]) consider((a[j] - a[i]) / (b[i] - b[j]));
            if (b[i] != -b[j]) consider(-(a[i] + a[j]) / (b[i] + b[j]));
        }
    }
    return best;
}

}  // namespace

double Region::distance(const Vec4& X) const {
    switch (kind_) {
        case Kind::Box:
            return box_.distance(X);
        case Kind::Tube: {
            // centre(t) = to + t (from - to)
            const Vec4 a = X - to_, b = to_ - from_;
            return std::max(0.0, min_max_abs_affine(a, b) - radius_);
        }
        case Kind::Union: {
            double d = kInf;
            for (const auto& p : parts_) d = std::min(d, p.distance(X));
            return d;
        }
    }
    return kInf;
}

Box4 Region::bounds() const {
    switch (kind_) {
        case Kind::Box:
            return box_;
        case Kind::Tube: {
            Box4 b;
            for (int i = 0; i < 4; ++i)
                b.axes[i] = {std::min(from_[i], to_[i]) - radius_, std::max(from_[i], to_[i]) + radius_};
            return b;
        }
        case Kind::Union: {
            Box4 b;
            for (auto& ax : b.axes) ax = {kInf, -kInf};
            for (const auto& p : parts_) {
                const Box4 pb = p.bounds();
                for (int i = 0; i < 4; ++i)
                    b.axes[i] = {std::min(b.axes[i].lo, pb.axes[i].lo), std::max(b.axes[i].hi, pb.axes[i].hi)};
            }
            return b;
        }
    }
    return {};
}

// ----------------------------------------------------------------------------
// Scene
// ----------------------------------------------------------------------------

std::array<double, 3> Scene::chi_radii(int leg) const {
    auto l = [](int n) { return (11.0 - n) / 10.0; };
    return {l(3 * leg + 1), l(3 * leg + 2), l(3 * leg + 3)};
}

Region Scene::A() const {
    Box4 b;
    b.axes = {Interval{-xy_extent, xy_extent}, Interval{-xy_extent, xy_extent}, Interval{-zw(), zw()},
              Interval{-zw(), zw()}};
    return Region::box(b, "A");
}

namespace {

Box4 zw_hole(double threshold) {
    Box4 h;
    h.axes = {Interval{-kInf, kInf}, Interval{-kInf, kInf}, Interval{-threshold, threshold},
              Interval{-threshold, threshold}};
    return h;
}

}  // namespace

Region Scene::B() const { return Region::box_minus_open_box(A().bounds(), zw_hole(b_threshold), "B"); }
Region Scene::Bp() const { return Region::box_minus_open_box(A().bounds(), zw_hole(bp_threshold), "B'"); }

Region Scene::Cregion() const {
    Box4 b = A().bounds();
    b.axes[2] = {-b_threshold, b_threshold};
    b.axes[3] = {-b_threshold, b_threshold};
    return Region::box(b, "C");
}

Region Scene::D() const {
    std::vector<Region> tubes;
    for (int i = 0; i < 3; ++i)
        tubes.push_back(Region::tube(C[i], C[i + 1], tube_radii[i], "C(C" + std::to_string(i + 1) + ",C" +
                                                                         std::to_string(i + 2) + ")"));
    return Region::unite(std::move(tubes), "D");
}

namespace {

// Gap between two boxes in the l-infinity metric; negative when they overlap.
double box_gap(const Box4& a, const Box4& b) {
    double gap = -kInf;
    for (int i = 0; i < 4; ++i)
        gap = std::max({gap, b.axes[i].lo - a.axes[i].hi, a.axes[i].lo - b.axes[i].hi});
    return gap;
}

// How far `inner` sits inside `outer` (negative when it sticks out).
double inward_margin(const Box4& inner, const Box4& outer) {
    double m = kInf;
    for (int i = 0; i < 4; ++i)
        m = std::min({m, inner.axes[i].lo - outer.axes[i].lo, outer.axes[i].hi - inner.axes[i].hi});
    return m;
}

double point_inward_margin(const Vec4& X, const Box4& box) {
    double m = kInf;
    for (int i = 0; i < 4; ++i) m = std::min({m, X[i] - box.axes[i].lo, box.axes[i].hi - X[i]});
    return m;
}

}  // namespace

std::vector<LedgerEntry> Scene::ledger() const {
    std::vector<LedgerEntry> out;
    auto add = [&](std::string id, std::string what, double margin, bool strict = true) {
        out.push_back({std::move(id), std::move(what), margin, strict});
    };

    add("lambda_min", "lambda >= " + std::to_string(int(kLambdaMin)), lambda - kLambdaMin, false);
    const Vec4 shift = C[3] - C[0];
    add("upsilon_shift", "C4 - C1 = (10, -10, -5, 0)", -dist_inf(shift, Vec4{10, -10, -5, 0}), false);

    for (int i = 0; i < 3; ++i) {
        const std::string leg = "leg" + std::to_string(i + 1);
        int moving = 0;
        for (int k = 0; k < 4; ++k) moving += C[i][k] != C[i + 1][k];
        add(leg + "_axis_aligned", "C" + std::to_string(i + 1) + " -> C" + std::to_string(i + 2) +
                                       " moves exactly one coordinate",
            moving == 1 ? 0.0 : -std::abs(moving - 1.0), false);
        const auto r = chi_radii(i);
        add(leg + "_length", "leg length exceeds twice its outer radius", dist_inf(C[i], C[i + 1]) - 2.0 * r[0]);
        add(leg + "_tube_radius", "tube radius covers the translation support", tube_radii[i] - r[0], false);
        add(leg + "_tube_shape", "tube radius below twice the leg length",
            2.0 * dist_inf(C[i], C[i + 1]) - tube_radii[i]);
    }

    const Box4 a = A().bounds();
    double d_zw = 0.0, d_inside = kInf, d_vs_blp = kInf, d_vs_blq = kInf;
    try {
        const Region d = D();
        for (const auto& tube : d.parts()) {
            const Box4 tb = tube.bounds();
            d_zw = std::max({d_zw, std::abs(tb.axes[2].lo), std::abs(tb.axes[2].hi), std::abs(tb.axes[3].lo),
                             std::abs(tb.axes[3].hi)});
            d_inside = std::min(d_inside, inward_margin(tb, a));
            d_vs_blp = std::min(d_vs_blp, box_gap(tb, Bl(P).bounds()));
            d_vs_blq = std::min(d_vs_blq, box_gap(tb, Bl(Q).bounds()));
        }
    } catch (const SpecError&) {
        // A malformed tube is already reported by its shape entry.
        d_zw = kInf;
        d_inside = d_vs_blp = d_vs_blq = -kInf;
    }
    add("D_disjoint_Bp", "max(|z|, |w|) over D stays below the B' threshold", bp_threshold - d_zw);
    add("D_inside_A", "D lies in the interior of A", d_inside);
    add("BlP_disjoint_D", "B_l(P) misses D", d_vs_blp);
    add("BlQ_disjoint_D", "B_l(Q) misses D", d_vs_blq);

    const Box4 c = Cregion().bounds();
    add("P_in_C", "P lies in the interior of C", point_inward_margin(P, c));
    add("Q_in_C", "Q lies in the interior of C", point_inward_margin(Q, c));
    add("theta_boxes_disjoint", "B_l(P) and B_l(Q) are disjoint", dist_inf(P, Q) - 2.0 * theta_large);
    add("theta_radii", "sqrt(2) * small radius stays below the large radius",
        theta_large - std::numbers::sqrt2 * theta_small);
    add("thresholds", "0 < B threshold < B' threshold < zw extent",
        std::min({b_threshold, bp_threshold - b_threshold, zw() - bp_threshold}));
    add("varpi_inside_A", "varpi lies in A", zw() - varpi_radius);
    return out;
}

void validate_scene(const Scene& scene) {
    for (const auto& e : scene.ledger())
        if (!e.ok()) {
            std::ostringstream os;
            os.precision(17);
            os << "scene '" << scene.name << "' violates " << e.id << " (" << e.description << "), margin "
               << e.margin;
            throw SceneError(e.id, os.str());
        }
}

Scene make_scene(double lambda) {
    Scene s;
    s.lambda = lambda;
    validate_scene(s);
    return s;
}

SceneMaps build_maps(const Scene& scene) {
    validate_scene(scene);
    SceneMaps m;
    m.F = build_F(scene.lambda);
    m.G = build_G(scene.lambda);
    m.H = build_H(scene.lambda);
    m.theta = std::make_shared<ThetaMap>(ThetaParams{scene.P, scene.Q, scene.theta_large, scene.theta_small});
    m.psi = std::make_shared<PsiMap>(m.F, m.G, m.H, scene.lambda);
    if (scene.upsilon_enabled) {
        std::vector<MapPtr> legs;
        for (int i = 0; i < 3; ++i) {
            const auto r = scene.chi_radii(i);
            legs.push_back(std::make_shared<ChiMap>(scene.C[i], scene.C[i + 1], r[0], r[1], r[2]));
        }
        m.upsilon = std::make_shared<ComposedMap>(std::move(legs), "upsilon");
    } else {
        m.upsilon = std::make_shared<IdentityMap4>();
    }
    m.phi = std::make_shared<ComposedMap>(std::vector<MapPtr>{m.psi, m.theta}, "phi");
    m.omega = std::make_shared<ComposedMap>(std::vector<MapPtr>{m.psi, m.theta, m.upsilon}, "omega");
    return m;
}

void record_coefficients(Scene& scene, const SceneMaps& maps) {
    scene.solved_coefficients = maps.H->coefficients();
    if (const auto* u = dynamic_cast<const ComposedMap*>(maps.upsilon.get())) {
        int leg = 1;
        for (const auto& f : u->factors()) {
            if (const auto* chi = dynamic_cast<const ChiMap*>(f.get()))
                for (auto c : chi->profile().coefficients()) {
                    c.name += "_leg" + std::to_string(leg);
                    scene.solved_coefficients.push_back(c);
                }
            ++leg;
        }
    }
}

// ----------------------------------------------------------------------------
// JSON
// ----------------------------------------------------------------------------

using nlohmann::json;

namespace {

json vec_json(const Vec4& v) { return json::array({v[0], v[1], v[2], v[3]}); }

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
    throw SceneError("schema", "scene file field " + path + ": " + what);
}

const json& field(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object()) schema_error(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) schema_error(path + "/" + key, "missing");
    return *it;
}

double number(const json& j, const std::string& path) {
    if (!j.is_number()) schema_error(path, "expected a number");
    return j.get<double>();
}

Vec4 vec(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 4) schema_error(path, "expected an array of 4 numbers");
    Vec4 v{};
    for (int i = 0; i < 4; ++i) v[i] = number(j[i], path + "/" + std::to_string(i));
    return v;
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& path) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : known) ok = ok || it.key() == k;
        if (!ok) schema_error(path + "/" + it.key(), "unknown field");
    }
}

}  // namespace

std::string scene_to_json(const Scene& s) {
    json j;
    j["schema_version"] = s.schema_version;
    j["name"] = s.name;
    j["lambda"] = s.lambda;
    j["points"] = {{"P", vec_json(s.P)},       {"Q", vec_json(s.Q)},       {"C1", vec_json(s.C[0])},
                   {"C2", vec_json(s.C[1])},   {"C3", vec_json(s.C[2])},   {"C4", vec_json(s.C[3])}};
    json chi = json::array();
    for (int i = 0; i < 3; ++i) {
        const auto r = s.chi_radii(i);
        chi.push_back({r[0], r[1], r[2]});
    }
    j["radii"] = {{"tubes", {s.tube_radii[0], s.tube_radii[1], s.tube_radii[2]}},
                  {"theta_large", s.theta_large},
                  {"theta_small", s.theta_small},
                  {"chi", chi}};
    j["regions"] = {{"A", {{"xy_extent", s.xy_extent}, {"zw_extent", s.zw()}}},
                    {"B", {{"threshold", s.b_threshold}}},
                    {"Bp", {{"threshold", s.bp_threshold}}},
                    {"l1", {{"half_length", s.l1_half_length}}},
                    {"varpi", {{"radius", s.varpi_radius}}}};
    j["upsilon_enabled"] = s.upsilon_enabled;
    json coeffs = json::array();
    for (const auto& c : s.solved_coefficients)
        coeffs.push_back({{"name", c.name}, {"value", c.value}, {"residual", c.residual}});
    j["solved_coefficients"] = coeffs;
    j["lambda0"] = s.lambda0 ? json(*s.lambda0) : json(nullptr);
    j["K"] = s.K ? json(*s.K) : json(nullptr);
    return j.dump(2) + "\n";
}

Scene scene_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SceneError("schema", std::string("scene file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) schema_error("", "expected an object");
    reject_unknown(j, {"schema_version", "name", "lambda", "points", "radii", "regions", "upsilon_enabled",
                       "solved_coefficients", "lambda0", "K"},
                   "");
    Scene s;
    const json& version = field(j, "schema_version", "");
    if (!version.is_number_integer() || version.get<int>() != 1) schema_error("/schema_version", "expected 1");
    if (j.contains("name")) {
        if (!j["name"].is_string()) schema_error("/name", "expected a string");
        s.name = j["name"].get<std::string>();
    }
    s.lambda = number(field(j, "lambda", ""), "/lambda");

    if (j.contains("points")) {
        const json& p = j["points"];
        if (!p.is_object()) schema_error("/points", "expected an object");
        reject_unknown(p, {"P", "Q", "C1", "C2", "C3", "C4"}, "/points");
        if (p.contains("P")) s.P = vec(p["P"], "/points/P");
        if (p.contains("Q")) s.Q = vec(p["Q"], "/points/Q");
        for (int i = 0; i < 4; ++i) {
            const std::string key = "C" + std::to_string(i + 1);
            if (p.contains(key)) s.C[i] = vec(p[key], "/points/" + key);
        }
    }
    if (j.contains("radii")) {
        const json& r = j["radii"];
        if (!r.is_object()) schema_error("/radii", "expected an object");
        reject_unknown(r, {"tubes", "theta_large", "theta_small", "chi"}, "/radii");
        if (r.contains("tubes")) {
            const json& t = r["tubes"];
            if (!t.is_array() || t.size() != 3) schema_error("/radii/tubes", "expected an array of 3 numbers");
            for (int i = 0; i < 3; ++i) s.tube_radii[i] = number(t[i], "/radii/tubes/" + std::to_string(i));
        }
        if (r.contains("theta_large")) s.theta_large = number(r["theta_large"], "/radii/theta_large");
        if (r.contains("theta_small")) s.theta_small = number(r["theta_small"], "/radii/theta_small");
        if (r.contains("chi")) {
            // Derived from l_n; accepted only when it agrees.
            const json& c = r["chi"];
            if (!c.is_array() || c.size() != 3) schema_error("/radii/chi", "expected 3 radius triples");
            for (int i = 0; i < 3; ++i) {
                const auto want = s.chi_radii(i);
                const std::string path = "/radii/chi/" + std::to_string(i);
                if (!c[i].is_array() || c[i].size() != 3) schema_error(path, "expected 3 numbers");
                for (int k = 0; k < 3; ++k)
                    if (number(c[i][k], path + "/" + std::to_string(k)) != want[k])
                        schema_error(path, "radii are fixed at l_n = 1.1 - 0.1 n");
            }
        }
    }
    if (j.contains("regions")) {
        const json& r = j["regions"];
        if (!r.is_object()) schema_error("/regions", "expected an object");
        reject_unknown(r, {"A", "B", "Bp", "l1", "varpi"}, "/regions");
        if (r.contains("A")) {
            reject_unknown(r["A"], {"xy_extent", "zw_extent"}, "/regions/A");
            if (r["A"].contains("xy_extent")) s.xy_extent = number(r["A"]["xy_extent"], "/regions/A/xy_extent");
            if (r["A"].contains("zw_extent")) s.zw_extent = number(r["A"]["zw_extent"], "/regions/A/zw_extent");
        }
        if (r.contains("B")) s.b_threshold = number(field(r["B"], "threshold", "/regions/B"), "/regions/B/threshold");
        if (r.contains("Bp"))
            s.bp_threshold = number(field(r["Bp"], "threshold", "/regions/Bp"), "/regions/Bp/threshold");
        if (r.contains("l1"))
            s.l1_half_length = number(field(r["l1"], "half_length", "/regions/l1"), "/regions/l1/half_length");
        if (r.contains("varpi"))
            s.varpi_radius = number(field(r["varpi"], "radius", "/regions/varpi"), "/regions/varpi/radius");
    }
    if (j.contains("upsilon_enabled")) {
        if (!j["upsilon_enabled"].is_boolean()) schema_error("/upsilon_enabled", "expected a boolean");
        s.upsilon_enabled = j["upsilon_enabled"].get<bool>();
    }
    if (j.contains("solved_coefficients")) {
        const json& c = j["solved_coefficients"];
        if (!c.is_array()) schema_error("/solved_coefficients", "expected an array");
        for (std::size_t i = 0; i < c.size(); ++i) {
            const std::string path = "/solved_coefficients/" + std::to_string(i);
            const json& name = field(c[i], "name", path);
            if (!name.is_string()) schema_error(path + "/name", "expected a string");
            s.solved_coefficients.push_back({name.get<std::string>(), number(field(c[i], "value", path), path + "/value"),
                                             number(field(c[i], "residual", path), path + "/residual"), 0});
        }
    }
    for (const char* key : {"lambda0", "K"}) {
        if (!j.contains(key) || j[key].is_null()) continue;
        const double v = number(j[key], std::string("/") + key);
        (std::string(key) == "K" ? s.K : s.lambda0) = v;
    }
    validate_scene(s);
    return s;
}

Scene load_scene(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read scene file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return scene_from_json(ss.str());
}

void save_scene(const Scene& scene, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write scene file " + path);
    out << scene_to_json(scene);
}

}  // namespace wildcycle
