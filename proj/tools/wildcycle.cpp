// Command-line front end: verify, orbit, scan, spectrum, params.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "wildcycle/verifier.hpp"

using namespace wildcycle;
using ojson = nlohmann::ordered_json;

namespace {

constexpr int kOk = 0, kFailed = 1, kUsage = 2;

struct Common {
    std::string scene_path;
    std::string lambda;  // number or "auto"
    std::uint64_t seed = 1;
    int grid = 0;
    double tol = 0.0;
    std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--scene", c.scene_path, "scene JSON (default: built-in scene at lambda 100)");
    cmd->add_option("--lambda", c.lambda, "lambda override, a number or 'auto'");
    cmd->add_option("--seed", c.seed, "random seed");
    cmd->add_option("--grid", c.grid, "points per axis on 4D grids")->check(CLI::Range(2, 1000));
    cmd->add_option("--tol", c.tol, "exactness tolerance")->check(CLI::PositiveNumber);
    cmd->add_option("--out", c.out, "output path (default: stdout)");
}

struct Resolved {
    Scene scene;
    VerificationConfig config;
    std::string hash;
};

Resolved resolve(const Common& c) {
    Resolved r;
    r.scene = c.scene_path.empty() ? make_scene(100.0) : load_scene(c.scene_path);
    if (c.lambda == "auto") {
        r.config.auto_lambda = true;
    } else if (!c.lambda.empty()) {
        std::size_t used = 0;
        double L = 0.0;
        try {
            L = std::stod(c.lambda, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != c.lambda.size()) throw CLI::ValidationError("--lambda", "expected a number or 'auto'");
        r.config.lambda = L;
        r.scene.lambda = L;
        validate_scene(r.scene);
    }
    r.config.seed = c.seed;
    if (c.grid > 0) r.config.grid = c.grid;
    if (c.tol > 0.0) r.config.tol = c.tol;
    r.config.validate();
    r.hash = hex_hash(config_hash(r.config, r.scene));
    std::cerr << "config_hash=" << r.hash << "\n";
    return r;
}

/// Output stream on --out or stdout.
class Output {
public:
    explicit Output(const std::string& path) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw Error("cannot open " + path + " for writing");
        }
    }
    std::ostream& operator*() { return file_.is_open() ? file_ : std::cout; }
    void close(const std::string& path) {
        if (!file_.is_open()) {
            std::cout.flush();
            return;
        }
        file_.close();
        if (!file_) throw Error("error writing " + path);
    }

private:
    std::ofstream file_;
};

std::string num(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

ojson json_num(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

Vec4 parse_point(const std::vector<double>& v, const std::string& what) {
    if (v.size() != 4) throw CLI::ValidationError(what, "expected four coordinates");
    return {v[0], v[1], v[2], v[3]};
}

// ----------------------------------------------------------------------------
// verify
// ----------------------------------------------------------------------------

struct VerifyArgs {
    Common c;
    int boundary_grid = 0, line_samples = 0, support_samples = 0, plumbing_samples = 0, orbit_samples = 0;
    int orbit_max = 0;
    double orbit_tol = 0.0, lambda_cap = 0.0;
};

int cmd_verify(const VerifyArgs& a) {
    Resolved r = resolve(a.c);
    VerificationConfig& cfg = r.config;
    if (a.boundary_grid) cfg.boundary_grid = a.boundary_grid;
    if (a.line_samples) cfg.line_samples = a.line_samples;
    if (a.support_samples) cfg.support_samples = a.support_samples;
    if (a.plumbing_samples) cfg.plumbing_samples = a.plumbing_samples;
    if (a.orbit_samples) cfg.orbit_samples = a.orbit_samples;
    if (a.orbit_max) cfg.orbit_max = a.orbit_max;
    if (a.orbit_tol > 0.0) cfg.orbit_tol = a.orbit_tol;
    if (a.lambda_cap > 0.0) cfg.lambda_cap = a.lambda_cap;
    cfg.validate();
    r.hash = hex_hash(config_hash(cfg, r.scene));
    std::cerr << "config_hash=" << r.hash << " (verify)\n";

    const FullReport rep = run_all(r.scene, cfg);
    Output out(a.c.out);
    *out << report_to_json(rep);
    out.close(a.c.out);
    (a.c.out.empty() ? std::cerr : std::cout) << report_summary(rep);
    return rep.passed() ? kOk : kFailed;
}

// ----------------------------------------------------------------------------
// orbit
// ----------------------------------------------------------------------------

struct OrbitArgs {
    Common c;
    std::vector<double> start;
    std::string direction = "forward";
    int steps = 20;
};

int cmd_orbit(const OrbitArgs& a) {
    const Resolved r = resolve(a.c);
    const Vec4 X0 = parse_point(a.start, "--start");
    const SceneMaps maps = build_maps(r.scene);
    const OrbitResult o = trace_orbit(*maps.omega, X0, a.direction == "forward", a.steps);
    const Region D = r.scene.D();
    Output out(a.c.out);
    *out << "# config_hash=" << r.hash << "\n";
    *out << "n,x,y,z,w,distance_to_P,distance_to_Q,in_D\n";
    for (std::size_t n = 0; n < o.points.size(); ++n) {
        const Vec4& X = o.points[n];
        *out << n << "," << num(X[0]) << "," << num(X[1]) << "," << num(X[2]) << "," << num(X[3]) << ","
             << num(dist_inf(X, r.scene.P)) << "," << num(dist_inf(X, r.scene.Q)) << "," << (D.contains(X) ? 1 : 0)
             << "\n";
    }
    if (!o.note.empty()) *out << "# truncated: " << o.note << "\n";
    out.close(a.c.out);
    return kOk;
}

// ----------------------------------------------------------------------------
// scan
// ----------------------------------------------------------------------------

struct ScanArgs {
    Common c;
    std::string region = "C";
    std::string quantity = "conorm_wedge3";
    int resolution = 0;
};

/// Named region, "box:x0,x1,y0,y1,z0,z1,w0,w1" or "segment:x,y,z,w,x,y,z,w".
struct ScanDomain {
    bool segment = false;
    Box4 box{};
    Vec4 from{}, to{};
};

ScanDomain parse_region(const std::string& spec, const Scene& s) {
    auto numbers = [&](const std::string& body) {
        std::vector<double> v;
        std::stringstream ss(body);
        std::string item;
        while (std::getline(ss, item, ',')) {
            std::size_t used = 0;
            double x = 0.0;
            try {
                x = std::stod(item, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != item.size()) throw CLI::ValidationError("--region", "bad number '" + item + "'");
            v.push_back(x);
        }
        if (v.size() != 8) throw CLI::ValidationError("--region", "expected eight numbers");
        return v;
    };
    ScanDomain d;
    if (spec.rfind("box:", 0) == 0) {
        const auto v = numbers(spec.substr(4));
        for (int i = 0; i < 4; ++i) {
            if (!(v[2 * i] <= v[2 * i + 1])) throw CLI::ValidationError("--region", "box bounds out of order");
            d.box.axes[i] = {v[2 * i], v[2 * i + 1]};
        }
    } else if (spec.rfind("segment:", 0) == 0) {
        const auto v = numbers(spec.substr(8));
        d.segment = true;
        d.from = {v[0], v[1], v[2], v[3]};
        d.to = {v[4], v[5], v[6], v[7]};
    } else if (spec == "C") {
        d.box = s.Cregion().bounds();
    } else if (spec == "A") {
        d.box = s.A().bounds();
    } else if (spec == "Bl_P") {
        d.box = s.Bl(s.P).bounds();
    } else if (spec == "Bl_Q") {
        d.box = s.Bl(s.Q).bounds();
    } else if (spec == "D") {
        d.box = s.D().bounds();
    } else if (spec == "l2") {
        d.segment = true;
        d.from = s.P;
        d.to = s.Q;
    } else {
        throw CLI::ValidationError("--region", "unknown region '" + spec + "' (C, A, Bl_P, Bl_Q, D, l2, box:, segment:)");
    }
    return d;
}

int cmd_scan(const ScanArgs& a) {
    const Resolved r = resolve(a.c);
    const ScanDomain dom = parse_region(a.region, r.scene);
    const int n = a.resolution > 0 ? a.resolution : r.config.grid;
    if (n < 2) throw CLI::ValidationError("--resolution", "must be at least 2");
    const double count = dom.segment ? double(n) : std::pow(double(n), 4);
    if (count > 1e8) throw CLI::ValidationError("--resolution", "grid exceeds 1e8 points");

    const SceneMaps maps = build_maps(r.scene);
    const Region D = r.scene.D();
    std::function<double(const Vec4&)> q;
    if (a.quantity == "conorm_wedge3")
        q = [&](const Vec4& X) { return conorm(wedge3(maps.omega->jacobian(X))); };
    else if (a.quantity == "jacobian_norm")
        q = [&](const Vec4& X) { return singular_values(maps.omega->jacobian(X))[0]; };
    else if (a.quantity == "distance_to_D")
        q = [&](const Vec4& X) { return D.distance(X); };
    else
        throw CLI::ValidationError("--quantity", "expected conorm_wedge3, jacobian_norm or distance_to_D");

    auto point = [&](std::size_t i) {
        if (!dom.segment) return grid_point(dom.box, n, i);
        const double t = double(i) / (n - 1);
        Vec4 X;
        for (int k = 0; k < 4; ++k) X[k] = dom.from[k] + t * (dom.to[k] - dom.from[k]);
        return X;
    };

    Output out(a.c.out);
    *out << "# config_hash=" << r.hash << "\n";
    *out << "index,x,y,z,w," << a.quantity << "\n";
    const std::size_t total = static_cast<std::size_t>(count);
    const unsigned threads = thread_count();
    constexpr std::size_t chunk = 1 << 16;
    std::vector<double> vals;
    double lo = kInf;
    for (std::size_t base = 0; base < total; base += chunk) {
        const std::size_t m = std::min(chunk, total - base);
        vals.assign(m, 0.0);
        const ArgMin c = parallel_argmin(m, [&](std::size_t i) { return vals[i] = q(point(base + i)); }, threads);
        lo = std::min(lo, c.value);
        for (std::size_t i = 0; i < m; ++i) {
            const Vec4 X = point(base + i);
            *out << base + i << "," << num(X[0]) << "," << num(X[1]) << "," << num(X[2]) << "," << num(X[3]) << ","
                 << num(vals[i]) << "\n";
        }
    }
    out.close(a.c.out);
    std::cerr << "min " << a.quantity << " = " << num(lo) << " over " << total << " points\n";
    return kOk;
}

// ----------------------------------------------------------------------------
// spectrum and params
// ----------------------------------------------------------------------------

struct SpectrumArgs {
    Common c;
    std::vector<double> point;
};

int cmd_spectrum(const SpectrumArgs& a) {
    const Resolved r = resolve(a.c);
    const Vec4 X = a.point.empty() ? r.scene.P : parse_point(a.point, "--point");
    const SceneMaps maps = build_maps(r.scene);
    const FixedPointReport fp = fixed_point(*maps.omega, X);
    ojson j;
    j["config_hash"] = r.hash;
    j["point"] = {X[0], X[1], X[2], X[3]};
    j["fixed_point_residual"] = json_num(fp.residual);
    ojson J = ojson::array();
    for (int i = 0; i < 4; ++i) J.push_back({fp.jacobian(i, 0), fp.jacobian(i, 1), fp.jacobian(i, 2), fp.jacobian(i, 3)});
    j["jacobian"] = J;
    ojson ev = ojson::array();
    for (const auto& mu : fp.spectrum.values) ev.push_back({{"re", mu.real()}, {"im", mu.imag()}});
    j["eigenvalues"] = ev;
    const auto mod = fp.spectrum.moduli();
    j["moduli"] = {mod[0], mod[1], mod[2], mod[3]};
    j["index"] = fp.spectrum.index();
    j["stable"] = fp.spectrum.inside_unit;
    j["nonreal"] = fp.spectrum.nonreal_count;
    j["hyperbolic"] = fp.spectrum.inside_unit + fp.spectrum.outside_unit == 4;
    Output out(a.c.out);
    *out << j.dump(2) << "\n";
    out.close(a.c.out);
    return kOk;
}

int cmd_params(const Common& c) {
    Resolved r = resolve(c);
    const SceneMaps maps = build_maps(r.scene);
    r.scene.solved_coefficients.clear();
    record_coefficients(r.scene, maps);
    Output out(c.out);
    *out << scene_to_json(r.scene);
    out.close(c.out);
    for (const auto& e : r.scene.ledger())
        std::cerr << (e.ok() ? "ok   " : "FAIL ") << std::left << std::setw(24) << e.id << " margin " << e.margin
                  << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Construction and numerical certification of a wild heterodimensional cycle map on R^4"};
    app.require_subcommand(1);

    VerifyArgs va;
    auto* verify = app.add_subcommand("verify", "run every condition check; exit 1 when any fails");
    add_common(verify, va.c);
    verify->add_option("--boundary-grid", va.boundary_grid, "points per axis on facet grids")->check(CLI::Range(2, 200));
    verify->add_option("--line-samples", va.line_samples, "1D random samples")->check(CLI::Range(2, 100000000));
    verify->add_option("--support-samples", va.support_samples, "support probes")->check(CLI::Range(2, 100000000));
    verify->add_option("--plumbing-samples", va.plumbing_samples, "inverse and Jacobian diagnostics samples")
        ->check(CLI::Range(2, 100000000));
    verify->add_option("--orbit-samples", va.orbit_samples, "starts per segment")->check(CLI::Range(2, 100000));
    verify->add_option("--orbit-tol", va.orbit_tol, "orbit convergence tolerance")->check(CLI::PositiveNumber);
    verify->add_option("--orbit-max", va.orbit_max, "orbit step cap")->check(CLI::Range(1, 1000000));
    verify->add_option("--lambda-cap", va.lambda_cap, "largest lambda tried by --lambda auto");

    OrbitArgs oa;
    auto* orbit = app.add_subcommand("orbit", "CSV of an orbit of the map");
    add_common(orbit, oa.c);
    orbit->add_option("--start", oa.start, "start point x y z w")->expected(4)->required();
    orbit->add_option("--direction", oa.direction, "forward or backward")
        ->check(CLI::IsMember({"forward", "backward"}));
    orbit->add_option("--steps", oa.steps, "iterations")->check(CLI::Range(0, 100000));

    ScanArgs sa;
    auto* scan = app.add_subcommand("scan", "CSV of a quantity over a grid");
    add_common(scan, sa.c);
    scan->add_option("--region", sa.region, "C, A, Bl_P, Bl_Q, D, l2, box:x0,x1,..,w1 or segment:X,Y");
    scan->add_option("--quantity", sa.quantity, "conorm_wedge3, jacobian_norm or distance_to_D");
    scan->add_option("--resolution", sa.resolution, "points per axis (default: --grid)");

    SpectrumArgs pa;
    auto* spec = app.add_subcommand("spectrum", "JSON of the Jacobian and its eigenvalues at a point");
    add_common(spec, pa.c);
    spec->add_option("--point", pa.point, "point x y z w (default P)")->expected(4);

    Common ca;
    auto* params = app.add_subcommand("params", "write the validated scene with solved coefficients");
    add_common(params, ca);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }

    try {
        if (*verify) return cmd_verify(va);
        if (*orbit) return cmd_orbit(oa);
        if (*scan) return cmd_scan(sa);
        if (*spec) return cmd_spectrum(pa);
        if (*params) return cmd_params(ca);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const SceneError& e) {
        std::cerr << "scene error [" << e.constraint << "]: " << e.what() << "\n";
        return kUsage;
    } catch (const SpecError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailed;
    }
    return kUsage;
}
