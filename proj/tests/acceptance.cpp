// Acceptance harness: one pass/fail line per criterion, each timed against its
// runtime budget. Usage: acceptance [--only N] [--cli PATH] [--scenes DIR].

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "wildcycle/verifier.hpp"

using namespace wildcycle;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) pass = false;
        if (!detail.empty()) detail += "; ";
        detail += (ok ? "" : "NOT ") + what;
    }
};

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

std::string cli_path = "wildcycle";
std::string scenes_dir = "scenes";

double value_of(const ConditionReport& r, const std::string& key) {
    for (const auto& [k, v] : r.values)
        if (k == key) return v;
    return std::nan("");
}

// 1. Plateau bumps: exact 1 and 0, derivative against central differences.
Outcome bumps() {
    Outcome o;
    const std::vector<BumpSpec> fixtures{{-0.3, 0.4, -1.0, 2.5},
                                         {0.0, 1.0, -1.0, 2.0},
                                         {7.0 / 5.0, 8.0 / 5.0, 6.0 / 5.0, 9.0 / 5.0},
                                         {-kInf, 1.0, -kInf, 1.0001},
                                         {999998.0, kInf, 999997.0, kInf},
                                         {-0.005, 0.005, -0.0075, 0.0075}};
    std::mt19937_64 rng(1);
    double worst_plateau = 0.0, worst_rel = 0.0;
    std::size_t n = 0;
    for (const auto& f : fixtures) {
        const Bump b(f);
        // Sampling window: the support, extended by one unit past a missing
        // transition.
        const double lo = std::isfinite(f.c) ? f.c : f.b - 1.0, hi = std::isfinite(f.d) ? f.d : f.a + 1.0;
        const double width = hi - lo;
        std::uniform_real_distribution<double> u(lo - width, hi + width);
        for (int i = 0; i < 10000; ++i) {
            const double t = u(rng);
            ++n;
            if (t >= f.a && t <= f.b) worst_plateau = std::max(worst_plateau, std::abs(b(t) - 1.0));
            if (t <= f.c || t >= f.d) worst_plateau = std::max(worst_plateau, std::abs(b(t)));
        }
        // Five-point differences at a step of 2e-4 of the narrowest transition.
        // The relative error is taken against max(|fd|, 1e-3 max|rho'|) so
        // that it stays defined where rho' vanishes, after removing the
        // rounding of the arguments and values, which is absolute.
        double w = kInf;
        if (std::isfinite(f.c)) w = std::min(w, f.a - f.c);
        if (std::isfinite(f.d)) w = std::min(w, f.d - f.b);
        const double h = 2e-4 * w;
        std::vector<double> ts;
        std::uniform_real_distribution<double> tr(lo, hi);
        for (int i = 0; i < 10000; ++i) ts.push_back(tr(rng));
        double dmax = 0.0;
        for (double t : ts) dmax = std::max(dmax, std::abs(b.deriv(t)));
        for (double t : ts) {
            const double fd = (8.0 * (b(t + h) - b(t - h)) - (b(t + 2 * h) - b(t - 2 * h))) / (12.0 * h);
            const double eps = std::numeric_limits<double>::epsilon();
            const double noise = 3.0 * eps * (std::abs(t) * dmax + 1.0) / h;
            const double err = std::max(0.0, std::abs(b.deriv(t) - fd) - noise);
            const double rel = err / std::max(std::abs(fd), 1e-3 * dmax);
            worst_rel = std::max(worst_rel, rel);
        }
    }
    o.require(worst_plateau <= 1e-14, "plateau deviation " + fmt(worst_plateau) + " <= 1e-14 on " +
                                          std::to_string(n) + " samples");
    o.require(worst_rel <= 1e-6, "derivative relative error " + fmt(worst_rel) + " <= 1e-6");
    return o;
}

// 2. Scalar maps at lambda = 100.
Outcome scalar_suite() {
    Outcome o;
    const double L = 100.0, L2 = L * L;
    const auto F = build_F(L);
    const auto G = build_G(L);
    const auto H = build_H(L);
    o.require(std::abs((*F)(1.0) - 0.1) <= 1e-9, "F(1) = " + fmt((*F)(1.0)));
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-L2, L2);
    bool ratio_ok = true;
    for (int i = 0; i < 1000; ++i) {
        const double x = u(rng);
        const double r = (*F)(x) / x;
        ratio_ok = ratio_ok && r > 0.0 && r < 1.0 / 9.0;
    }
    o.require(ratio_ok, "0 < F(x)/x < 1/9 on 1000 samples");
    o.require(std::abs(G->deriv(0.0) - 10.0) <= 1e-5, "G'(0) = " + fmt(G->deriv(0.0)));
    o.require(std::abs(G->deriv(10.0) - 0.01) <= 1e-6, "G'(10) = " + fmt(G->deriv(10.0)));
    auto steps = [&](bool forward) {
        double x = 5.0;
        const double target = forward ? 10.0 : 0.0;
        for (int n = 0; n <= 500; ++n) {
            if (std::abs(x - target) <= 1e-8) return n;
            x = forward ? (*G)(x) : G->inverse(x);
        }
        return -1;
    };
    const int sf = steps(true), sb = steps(false);
    o.require(sf >= 0 && sb >= 0, "G-orbit of 5 reaches 10 in " + std::to_string(sf) + " and 0 in " +
                                      std::to_string(sb) + " steps");
    o.require((*H)(0.5) == 50.0, "H(0.5) = " + fmt((*H)(0.5)));
    o.require(std::abs((*H)(2.0) - 101.0) <= 1e-8, "H(2) - 101 = " + fmt((*H)(2.0) - 101.0));
    for (const auto& c : H->coefficients())
        o.require(std::abs(c.residual) <= 1e-10, c.name + " residual " + fmt(c.residual) + " <= 1e-10");
    return o;
}

// 3. Third exterior power against singular-value triples and functoriality.
Outcome exterior() {
    Outcome o;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 1.0);
    auto random = [&] {
        Mat4 m;
        for (double& x : m.a) x = g(rng);
        return m;
    };
    double worst_sv = 0.0, worst_fun = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const Mat4 A = random(), B = random();
        const auto s = singular_values(A);
        std::vector<double> triples{s[0] * s[1] * s[2], s[0] * s[1] * s[3], s[0] * s[2] * s[3], s[1] * s[2] * s[3]};
        std::sort(triples.rbegin(), triples.rend());
        const auto w = singular_values(wedge3(A));
        for (int i = 0; i < 4; ++i)
            worst_sv = std::max(worst_sv, std::abs(w[i] - triples[i]) / std::max(triples[0] * 1e-300, triples[i]));
        const Mat4 lhs = wedge3(A * B), rhs = wedge3(A) * wedge3(B);
        worst_fun = std::max(worst_fun, max_abs_diff(lhs, rhs));
    }
    o.require(worst_sv <= 1e-9, "singular values of wedge3 relative error " + fmt(worst_sv));
    o.require(worst_fun <= 1e-9, "wedge3(AB) - wedge3(A)wedge3(B) " + fmt(worst_fun));
    return o;
}

// 4. Spectra of dOmega at P and Q, lambda = 100.
Outcome spectra() {
    Outcome o;
    const Scene s = make_scene(100.0);
    const SceneMaps m = build_maps(s);
    auto check = [&](const std::string& name, const Vec4& X, std::array<double, 4> expect, int nonreal) {
        const FixedPointReport fp = fixed_point(*m.omega, X);
        const auto mod = fp.spectrum.moduli();
        double worst = 0.0;
        for (int i = 0; i < 4; ++i) worst = std::max(worst, std::abs(mod[i] - expect[i]) / expect[i]);
        o.require(worst <= 1e-4, name + " moduli relative error " + fmt(worst));
        o.require(fp.spectrum.nonreal_count == nonreal,
                  name + " non-real count " + std::to_string(fp.spectrum.nonreal_count));
        o.require(fp.residual <= 1e-12, name + " fixed-point residual " + fmt(fp.residual));
    };
    check("P", s.P, {0.1, 31.6228, 31.6228, 100.0}, 2);
    check("Q", s.Q, {0.0316228, 0.0316228, 100.0, 100.0}, 4);
    return o;
}

// 5. Upsilon translation plateau and identity outside D.
Outcome upsilon() {
    Outcome o;
    const Scene s = make_scene(100.0);
    const SceneMaps m = build_maps(s);
    const Vec4 shift{10.0, -10.0, -5.0, 0.0};
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-0.2, 0.2);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const Vec4 X = s.C[0] + Vec4{u(rng), u(rng), u(rng), u(rng)};
        worst = std::max(worst, dist_inf(m.upsilon->eval(X) - X, shift));
    }
    o.require(worst <= 1e-12, "plateau deviation " + fmt(worst) + " on 100 points");
    const Region D = s.D();
    const Box4 bb = D.bounds();
    std::uniform_real_distribution<double> e(-3.0, 3.0);
    double worst_id = 0.0;
    int probes = 0;
    while (probes < 100) {
        Vec4 X;
        for (int i = 0; i < 4; ++i) X[i] = 0.5 * (bb.axes[i].lo + bb.axes[i].hi) + e(rng) * bb.axes[i].length() / 2;
        if (D.contains(X)) continue;
        ++probes;
        worst_id = std::max(worst_id, dist_inf(m.upsilon->eval(X), X));
    }
    o.require(worst_id <= 1e-12, "identity deviation " + fmt(worst_id) + " at 100 exterior probes");
    return o;
}

// 6. Trapping of A and B for Omega and Phi.
Outcome trapping() {
    Outcome o;
    const Scene s = make_scene(100.0);
    VerificationConfig c;
    c.boundary_grid = 11;  // 8 * 11^3 = 10648 points per boundary
    Verifier v(s, c);
    for (const auto& [id, map, thr] : {std::tuple{"w2", v.maps().omega, s.b_threshold},
                                        std::tuple{"Phi2", v.maps().phi, s.bp_threshold}}) {
        const ConditionReport r = v.check_trapping(id, *map, thr);
        const double na = value_of(r, "samples_A"), nb = value_of(r, "samples_B");
        o.require(na >= 1e4 && nb >= 1e4, std::string(id) + " grid sizes " + fmt(na) + " and " + fmt(nb));
        o.require(value_of(r, "sampled_A") > 0 && value_of(r, "sampled_B") > 0,
                  std::string(id) + " sampled margins " + fmt(value_of(r, "sampled_A")) + ", " +
                      fmt(value_of(r, "sampled_B")));
        o.require(r.status == Status::Pass, std::string(id) + " margin " + fmt(r.margin));
        o.require(value_of(r, "structural_B") >= s.lambda - 7.0,
                  std::string(id) + " structural B margin " + fmt(value_of(r, "structural_B")) + " >= lambda - 7");
    }
    return o;
}

// 7. Cycle certificates and avoidance margins.
Outcome cycle() {
    Outcome o;
    const Scene s = make_scene(100.0);
    Verifier v(s, VerificationConfig{});
    const ConditionReport w4 = v.check_cycle("w4", *v.maps().omega);
    o.require(w4.status == Status::Pass, "four orbit certificates: " + w4.detail);
    for (const ConditionReport& r : v.phi_conditions()) {
        if (r.id != "Phi5" && r.id != "Phi6" && r.id != "Phi8" && r.id != "Phi9") continue;
        o.require(r.margin >= 0.5, r.id + " avoidance margin " + fmt(r.margin) + " >= 0.5");
    }
    return o;
}

// 8. Volume expansion on C with tuned lambda.
Outcome expansion() {
    Outcome o;
    VerificationConfig c;
    c.grid = 20;
    Verifier v(make_scene(100.0), c);
    const TuningResult t = v.auto_tune_lambda();
    o.require(t.lambda0.has_value(), t.lambda0 ? "lambda0 = " + fmt(*t.lambda0) : "no lambda0 <= 1e4: " + t.limiting);
    const ExpansionResult& e = t.last;
    o.require(e.direct.fine > 1.0, "direct minimum " + fmt(e.direct.fine) + " at lambda " + fmt(e.lambda));
    o.require(e.direct.agrees(), "grid refinements agree within 5% (" + fmt(e.direct.coarse) + " vs " +
                                     fmt(e.direct.fine) + ")");
    o.require(e.factorized > 1.0, "factorized bound " + fmt(e.factorized));
    return o;
}

// 9. Inverse and Jacobian plumbing on 1000 random points of A.
Outcome plumbing() {
    Outcome o;
    Verifier v(make_scene(100.0), VerificationConfig{});
    const ConditionReport inv = v.plumbing_inverse(1000);
    o.require(value_of(inv, "image_residual") <= 1e-8,
              "max |Omega(Omega^-1(Y)) - Y| = " + fmt(value_of(inv, "image_residual")) + " (" +
                  fmt(value_of(inv, "images_over_tolerance")) + " of 1000 over 1e-8)");
    const ConditionReport jac = v.plumbing_jacobian(1000);
    o.require(jac.status == Status::Pass, jac.detail);
    return o;
}

int run_command(const std::string& cmd) {
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// 10. Two identical verify runs give byte-identical reports.
Outcome determinism() {
    Outcome o;
    const std::string a = "acceptance_report_a.json", b = "acceptance_report_b.json";
    const std::string base = "\"" + cli_path + "\" verify --seed 7 --out ";
    const int ra = run_command(base + a + " > /dev/null 2>&1");
    const int rb = run_command("WILDCYCLE_THREADS=3 " + base + b + " > /dev/null 2>&1");
    o.require(ra == rb && (ra == 0 || ra == 1), "exit codes " + std::to_string(ra) + " and " + std::to_string(rb));
    const std::string ja = slurp(a), jb = slurp(b);
    o.require(!ja.empty() && ja == jb, "reports byte-identical (" + std::to_string(ja.size()) + " bytes)");
    std::remove(a.c_str());
    std::remove(b.c_str());
    return o;
}

// 11. Negative controls.
Outcome negative() {
    Outcome o;
    VerificationConfig c;
    const std::vector<std::string> base = run_all(make_scene(100.0), c).failed_ids();
    auto w_diff = [&](const std::vector<std::string>& failed) {
        std::string out;
        for (const auto& id : failed)
            if (id[0] == 'w' && std::find(base.begin(), base.end(), id) == base.end()) out += (out.empty() ? "" : ",") + id;
        return out;
    };
    auto join = [](const std::vector<std::string>& v) {
        std::string out;
        for (const auto& s : v) out += (out.empty() ? "" : ",") + s;
        return out;
    };
    for (const auto& [file, expect] : {std::pair{"broken_no_upsilon.json", "w4"}, std::pair{"a_too_small.json", "w2"}}) {
        const auto failed = run_all(load_scene(scenes_dir + "/fixtures/" + file), c).failed_ids();
        o.require(failed == std::vector<std::string>{expect},
                  std::string(file) + " fails exactly {" + expect + "}: failed {" + join(failed) +
                      "}, new local failures vs default {" + w_diff(failed) + "}");
    }
    std::string rejected;
    try {
        (void)load_scene(scenes_dir + "/fixtures/lambda20.json");
    } catch (const SceneError& e) {
        rejected = e.constraint;
    }
    o.require(rejected == "lambda_min", "lambda20.json rejected at validation (" +
                                            (rejected.empty() ? std::string("accepted") : rejected) + ")");
    return o;
}

struct Criterion {
    int number;
    const char* name;
    double budget;  // seconds; <= 0 means none
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--only" && i + 1 < argc)
            only = std::atoi(argv[++i]);
        else if (a == "--cli" && i + 1 < argc)
            cli_path = argv[++i];
        else if (a == "--scenes" && i + 1 < argc)
            scenes_dir = argv[++i];
        else {
            std::cerr << "usage: acceptance [--only N] [--cli PATH] [--scenes DIR]\n";
            return 2;
        }
    }
    const std::vector<Criterion> all{
        {1, "bump plateaus", 1.0, bumps},           {2, "scalar maps", 10.0, scalar_suite},
        {3, "exterior algebra", 5.0, exterior},     {4, "spectra", 1.0, spectra},
        {5, "upsilon plateau", 1.0, upsilon},       {6, "trapping", 60.0, trapping},
        {7, "cycle certificates", 30.0, cycle},     {8, "expansion", 300.0, expansion},
        {9, "inverse and jacobian", 30.0, plumbing}, {10, "determinism", 0.0, determinism},
        {11, "negative controls", 0.0, negative},
    };
    bool all_pass = true;
    for (const auto& c : all) {
        if (only && c.number != only) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.budget > 0.0) o.require(secs < c.budget, "runtime " + fmt(secs) + " s < " + fmt(c.budget) + " s");
        std::cout << "criterion " << c.number << " (" << c.name << "): " << (o.pass ? "PASS" : "FAIL") << ": "
                  << o.detail << std::endl;
        all_pass = all_pass && o.pass;
    }
    return all_pass ? 0 : 1;
}
