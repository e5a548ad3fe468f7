#include "wildcycle/verifier.hpp"

#include <cstdlib>
#include <exception>
#include <iomanip>
#include <json.hpp>
#include <random>
#include <sstream>
#include <thread>

namespace wildcycle {

using ojson = nlohmann::ordered_json;

std::string to_string(Status s) {
    switch (s) {
        case Status::Pass:
            return "pass";
        case Status::Fail:
            return "fail";
        case Status::Evidence:
            return "evidence-only";
    }
    return "fail";
}

void VerificationConfig::validate() const {
    auto need = [](bool ok, const std::string& what) {
        if (!ok) throw SpecError("verification config: " + what);
    };
    need(!lambda || *lambda >= kLambdaMin, "lambda must be at least 100");
    need(lambda_cap >= kLambdaMin, "lambda cap must be at least 100");
    need(grid >= 2 && boundary_grid >= 2, "grid resolutions must be at least 2");
    need(line_samples >= 2 && support_samples >= 2 && plumbing_samples >= 2 && orbit_samples >= 2,
         "sample counts must be at least 2");
    need(orbit_tol > 0.0 && tol > 0.0, "tolerances must be positive");
    need(orbit_max >= 1, "orbit cap must be positive");
}

namespace {

ojson config_json(const VerificationConfig& c) {
    ojson j;
    j["lambda"] = c.lambda ? ojson(*c.lambda) : ojson(nullptr);
    j["auto_lambda"] = c.auto_lambda;
    j["lambda_cap"] = c.lambda_cap;
    j["seed"] = c.seed;
    j["grid"] = c.grid;
    j["boundary_grid"] = c.boundary_grid;
    j["line_samples"] = c.line_samples;
    j["support_samples"] = c.support_samples;
    j["plumbing_samples"] = c.plumbing_samples;
    j["orbit_samples"] = c.orbit_samples;
    j["orbit_tol"] = c.orbit_tol;
    j["orbit_max"] = c.orbit_max;
    j["tol"] = c.tol;
    return j;
}

std::uint64_t fnv1a(const std::string& text, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

std::uint64_t config_hash(const VerificationConfig& config, const Scene& scene) {
    return fnv1a(scene_to_json(scene), fnv1a(config_json(config).dump()));
}

std::string hex_hash(std::uint64_t h) {
    std::ostringstream os;
    os << "0x" << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

// ----------------------------------------------------------------------------
// Parallel reduction and sampling
// ----------------------------------------------------------------------------

unsigned thread_count(unsigned requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("WILDCYCLE_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

ArgMin parallel_argmin(std::size_t count, const std::function<double(std::size_t)>& f, unsigned threads) {
    const std::size_t parts = std::max<std::size_t>(1, std::min<std::size_t>(threads, count));
    std::vector<ArgMin> best(parts);
    std::vector<std::exception_ptr> errors(parts);
    auto work = [&](std::size_t t) {
        const std::size_t lo = count * t / parts, hi = count * (t + 1) / parts;
        ArgMin b;
        for (std::size_t i = lo; i < hi; ++i) {
            double v;
            try {
                v = f(i);
            } catch (...) {
                errors[t] = std::current_exception();
                return;
            }
            if (std::isnan(v)) v = -kInf;
            if (b.index == ArgMin{}.index || v < b.value) b = {v, i};
        }
        best[t] = b;
    };
    if (parts == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < parts; ++t) pool.emplace_back(work, t);
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    ArgMin out;
    for (const auto& b : best)
        if (b.index != ArgMin{}.index && (out.index == ArgMin{}.index || b.value < out.value)) out = b;
    return out;
}

Vec4 grid_point(const Box4& box, int n, std::size_t index) {
    Vec4 X;
    for (int i = 0; i < 4; ++i) {
        const std::size_t k = index % static_cast<std::size_t>(n);
        index /= static_cast<std::size_t>(n);
        const Interval& ax = box.axes[i];
        if (n == 1)
            X[i] = 0.5 * (ax.lo + ax.hi);
        else
            X[i] = k + 1 == static_cast<std::size_t>(n) ? ax.hi : ax.lo + (ax.hi - ax.lo) * double(k) / (n - 1);
    }
    return X;
}

Vec4 halton4(std::size_t index) {
    static constexpr int bases[4] = {2, 3, 5, 7};
    Vec4 u;
    for (int i = 0; i < 4; ++i) {
        double f = 1.0, r = 0.0;
        std::size_t k = index + 1;
        while (k > 0) {
            f /= bases[i];
            r += f * double(k % bases[i]);
            k /= bases[i];
        }
        u[i] = r;
    }
    return u;
}

namespace {

std::size_t pow4(int n) {
    const auto m = static_cast<std::size_t>(n);
    return m * m * m * m;
}

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> v(n);
    for (int k = 0; k < n; ++k) v[k] = k + 1 == n ? hi : lo + (hi - lo) * double(k) / (n - 1);
    return v;
}

bool finite(const Vec4& X) {
    return std::all_of(X.begin(), X.end(), [](double c) { return std::isfinite(c); });
}

ConditionReport make_report(std::string id, double margin, std::size_t samples, std::optional<Vec4> witness,
                            std::string detail, bool strict = true) {
    ConditionReport r;
    r.id = std::move(id);
    r.margin = margin;
    r.samples = samples;
    r.witness = witness;
    r.detail = std::move(detail);
    r.status = (strict ? margin > 0.0 : margin >= 0.0) ? Status::Pass : Status::Fail;
    return r;
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(6) << v;
    return os.str();
}

std::string fmt(const Vec4& X) {
    std::ostringstream os;
    os << std::setprecision(6) << "(" << X[0] << ", " << X[1] << ", " << X[2] << ", " << X[3] << ")";
    return os.str();
}

/// Exactness over an explicit point list: margin = tol - max deviation.
ConditionReport exactness(const std::string& id, const std::vector<Vec4>& points,
                          const std::function<double(const Vec4&)>& deviation, double tol, unsigned threads,
                          const std::string& what) {
    const ArgMin m = parallel_argmin(points.size(), [&](std::size_t i) { return tol - deviation(points[i]); },
                                     threads);
    const Vec4 w = points.at(m.index);
    return make_report(id, m.value, points.size(), w,
                       what + "; worst deviation " + fmt(tol - m.value) + " at " + fmt(w) + " (tolerance " +
                           fmt(tol) + ")",
                       false);
}

std::vector<Vec4> box_samples(const Box4& box, int n, int random, std::mt19937_64& rng) {
    std::vector<Vec4> pts;
    for (std::size_t i = 0; i < pow4(n); ++i) pts.push_back(grid_point(box, n, i));
    for (int k = 0; k < random; ++k) {
        Vec4 X;
        for (int i = 0; i < 4; ++i) X[i] = std::uniform_real_distribution<double>(box.axes[i].lo, box.axes[i].hi)(rng);
        pts.push_back(X);
    }
    return pts;
}

}  // namespace

// ----------------------------------------------------------------------------
// Orbits and domination
// ----------------------------------------------------------------------------

OrbitResult iterate_orbit(const DiffeoMap4& map, const Vec4& start, bool forward, const Vec4& target, double eps,
                          int nmax, const Region* trap) {
    OrbitResult r;
    r.points.push_back(start);
    Vec4 X = start;
    r.final_distance = dist_inf(X, target);
    if (r.final_distance <= eps) {
        r.converged = true;
        return r;
    }
    for (int n = 1; n <= nmax; ++n) {
        try {
            X = forward ? map.eval(X) : map.inverse(X);
        } catch (const Error& e) {
            r.note = "inversion failed at step " + std::to_string(n) + ": " + e.what();
            return r;
        }
        r.points.push_back(X);
        if (!finite(X)) {
            r.note = "non-finite iterate at step " + std::to_string(n);
            return r;
        }
        r.final_distance = dist_inf(X, target);
        if (trap && trap->distance(X) > 0.0) {
            r.escaped_at = n;
            r.note = "left the trapping region at step " + std::to_string(n);
            return r;
        }
        if (r.final_distance <= eps) {
            r.converged = true;
            r.steps = n;
            return r;
        }
    }
    r.steps = nmax;
    r.note = "not within tolerance after " + std::to_string(nmax) + " steps";
    return r;
}

OrbitResult trace_orbit(const DiffeoMap4& map, const Vec4& start, bool forward, int steps) {
    OrbitResult r;
    r.points.push_back(start);
    Vec4 X = start;
    for (int n = 1; n <= steps; ++n) {
        try {
            X = forward ? map.eval(X) : map.inverse(X);
        } catch (const Error& e) {
            r.note = "inversion failed at step " + std::to_string(n) + ": " + e.what();
            break;
        }
        r.points.push_back(X);
        r.steps = n;
    }
    return r;
}

DominationReport check_finite_domination(const std::vector<Mat4>& jacobians, int window, int k) {
    if (k < 1 || k > 3) throw SpecError("domination index must be in [1, 3]");
    if (window < 1 || static_cast<std::size_t>(window) > jacobians.size())
        throw SpecError("domination window exceeds the orbit length");
    DominationReport rep;
    for (std::size_t i = 0; i + window <= jacobians.size(); ++i) {
        Mat4 M = jacobians[i];
        for (int s = 1; s < window; ++s) M = jacobians[i + s] * M;
        // Descending singular values; the stable bundle has dimension k.
        const auto sv = singular_values(M);
        const double ratio = sv[3 - k] > 0.0 ? sv[4 - k] / sv[3 - k] : 1.0;
        if (rep.windows == 0 || ratio > rep.max_ratio) {
            rep.max_ratio = ratio;
            rep.worst_window = i;
        }
        ++rep.windows;
    }
    return rep;
}

// ----------------------------------------------------------------------------
// Generic checks
// ----------------------------------------------------------------------------

ConditionReport check_support(const std::string& id, const DiffeoMap4& map, const Region& claimed, int samples,
                              double tol, unsigned threads) {
    std::vector<Region> parts =
        claimed.kind() == Region::Kind::Union ? claimed.parts() : std::vector<Region>{claimed};
    std::vector<Vec4> pts;
    // Expanding shells: points at l-infinity distance delta outside each part.
    static constexpr double offsets[] = {1e-9, 1e-6, 1e-3, 1e-2, 0.1, 1.0, 10.0};
    const int per_part = std::max(1, samples / 2 / int(parts.size()));
    for (const auto& part : parts) {
        const Box4 b = part.bounds();
        double h = 0.0;
        for (const auto& ax : b.axes) h = std::max(h, 0.5 * ax.length());
        for (int s = 0; s < per_part; ++s) {
            const Vec4 u = halton4(static_cast<std::size_t>(s));
            const int axis = s % 4;
            const double side = (s / 4) % 2 == 0 ? 1.0 : -1.0;
            const double delta = offsets[s % std::size(offsets)] * std::max(h, 1.0);
            Vec4 X;
            for (int i = 0; i < 4; ++i) {
                const double c = 0.5 * (b.axes[i].lo + b.axes[i].hi), r = 0.5 * b.axes[i].length();
                const double v = i == axis ? side : 2.0 * u[i] - 1.0;
                X[i] = c + v * (r + (i == axis ? delta : 0.0));
            }
            pts.push_back(X);
        }
    }
    // Fill of the map's own declared support boxes, so motion outside the
    // claim is found wherever the map acts.
    const std::vector<Box4> declared = map.support();
    const int per_declared = declared.empty() ? 0 : samples / 4 / int(declared.size());
    for (const Box4& b : declared)
        for (int s = 0; s < per_declared; ++s) {
            const Vec4 u = halton4(static_cast<std::size_t>(s) + 104729);
            Vec4 X;
            for (int i = 0; i < 4; ++i) X[i] = b.axes[i].lo + u[i] * b.axes[i].length();
            pts.push_back(X);
        }
    // Halton fill of the doubled bounding box.
    const Box4 bb = claimed.bounds();
    const int rest = samples - per_part * int(parts.size()) - per_declared * int(declared.size());
    for (int s = 0; s < rest; ++s) {
        const Vec4 u = halton4(static_cast<std::size_t>(s) + 7919);
        Vec4 X;
        for (int i = 0; i < 4; ++i) {
            const double c = 0.5 * (bb.axes[i].lo + bb.axes[i].hi), r = bb.axes[i].length();
            X[i] = c + (2.0 * u[i] - 1.0) * (r + 1.0);
        }
        pts.push_back(X);
    }
    std::erase_if(pts, [&](const Vec4& X) { return claimed.distance(X) == 0.0; });
    if (pts.empty()) return make_report(id, -1.0, 0, std::nullopt, "no exterior samples");
    ConditionReport r = exactness(
        id, pts,
        [&](const Vec4& X) { return dist_inf(map.eval(X), X) / std::max(1.0, norm_inf(X)); }, tol, threads,
        "identity outside " + claimed.name());
    r.values.push_back({"exterior_samples", double(pts.size())});
    return r;
}

FixedPointReport fixed_point(const DiffeoMap4& map, const Vec4& X) {
    FixedPointReport r;
    r.residual = dist_inf(map.eval(X), X);
    r.jacobian = map.jacobian(X);
    r.spectrum = spectrum(r.jacobian);
    return r;
}

ConditionReport check_fixed_spectrum(const std::string& id, const DiffeoMap4& map, const Vec4& X, int index,
                                     int nonreal, double tol) {
    const FixedPointReport fp = fixed_point(map, X);
    const Spectrum4& sp = fp.spectrum;
    const auto mod = sp.moduli();
    ConditionReport r;
    double margin;
    std::ostringstream os;
    os << std::setprecision(6) << "moduli {" << mod[0] << ", " << mod[1] << ", " << mod[2] << ", " << mod[3]
       << "}, index " << sp.index() << ", " << sp.nonreal_count << " non-real";
    if (fp.residual > tol * std::max(1.0, norm_inf(X))) {
        margin = -fp.residual;
        os << "; not a fixed point (residual " << fp.residual << ")";
    } else if (sp.index() != index || sp.inside_unit + sp.outside_unit != 4) {
        margin = -std::max(1.0, std::abs(sp.index() - index) + 0.0);
        if (sp.inside_unit + sp.outside_unit != 4) margin = std::min(margin, -sp.hyperbolicity_gap());
        os << "; expected hyperbolic index " << index;
    } else {
        double im = kInf;
        if (nonreal >= 4) {
            for (const auto& mu : sp.values) im = std::min(im, std::abs(mu.imag()));
        } else {
            int taken = 0;
            for (const auto& mu : sp.values)
                if (std::abs(mu) > 1.0 && taken < nonreal) {
                    im = std::min(im, std::abs(mu.imag()));
                    ++taken;
                }
        }
        const bool all_nonreal = im > 0.0 && [&] {
            int taken = 0;
            for (const auto& mu : sp.values) {
                if (nonreal < 4 && !(std::abs(mu) > 1.0)) continue;
                if (taken++ >= nonreal) break;
                if (!Spectrum4::is_nonreal(mu)) return false;
            }
            return true;
        }();
        margin = all_nonreal ? std::min(sp.hyperbolicity_gap(), im) : -1.0;
        if (!all_nonreal) os << "; required eigenvalues are real";
    }
    r = make_report(id, margin, 1, X, os.str());
    for (int i = 0; i < 4; ++i) r.values.push_back({"modulus_" + std::to_string(i), mod[i]});
    r.values.push_back({"index", double(sp.index())});
    r.values.push_back({"nonreal", double(sp.nonreal_count)});
    r.values.push_back({"fixed_point_residual", fp.residual});
    return r;
}

std::vector<Vec4> facet_grid(const Box4& box, int m) {
    std::vector<Vec4> pts;
    pts.reserve(8 * std::size_t(m) * m * m);
    for (int axis = 0; axis < 4; ++axis)
        for (int side = 0; side < 2; ++side) {
            Box4 facet = box;
            const double v = side == 0 ? box.axes[axis].lo : box.axes[axis].hi;
            facet.axes[axis] = {v, v};
            // m^3 points: the fixed axis takes a single value.
            for (std::size_t i = 0; i < std::size_t(m) * m * m; ++i) {
                std::size_t k = i;
                Vec4 X;
                for (int j = 0; j < 4; ++j) {
                    if (j == axis) {
                        X[j] = v;
                        continue;
                    }
                    const std::size_t c = k % std::size_t(m);
                    k /= std::size_t(m);
                    const auto& ax = facet.axes[j];
                    X[j] = c + 1 == std::size_t(m) ? ax.hi : ax.lo + ax.length() * double(c) / (m - 1);
                }
                pts.push_back(X);
            }
        }
    return pts;
}

double inward_depth(const Vec4& Y, const Box4& box) {
    double d = kInf;
    for (int i = 0; i < 4; ++i) d = std::min({d, Y[i] - box.axes[i].lo, box.axes[i].hi - Y[i]});
    return d;
}

double threshold_depth(const Vec4& Y, const Box4& A, double threshold) {
    return std::min(inward_depth(Y, A), std::max(std::abs(Y[2]), std::abs(Y[3])) - threshold);
}

// ----------------------------------------------------------------------------
// Expansion grids
// ----------------------------------------------------------------------------

bool GridMin::agrees(double rel) const {
    if (!std::isfinite(fine) || !std::isfinite(coarse)) return fine == coarse;
    return std::abs(coarse - fine) <= rel * std::abs(fine);
}

GridMin wedge3_grid_min(const std::vector<Box4>& boxes, int n, const std::function<Mat4(const Vec4&)>& jacobian,
                        unsigned threads) {
    GridMin g;
    const int half = std::max(2, n / 2);
    for (const Box4& box : boxes) {
        for (int pass = 0; pass < 2; ++pass) {
            const int m = pass == 0 ? half : n;
            const ArgMin a = parallel_argmin(
                pow4(m), [&](std::size_t i) { return conorm(wedge3(jacobian(grid_point(box, m, i)))); }, threads);
            g.samples += pow4(m);
            if (pass == 0) g.coarse = std::min(g.coarse, a.value);
            if (a.value < g.fine) {
                g.fine = a.value;
                g.witness = grid_point(box, m, a.index);
            }
        }
    }
    return g;
}

GridMin wedge3_zoom_min(const std::vector<Box4>& boxes, int n, const std::function<Mat4(const Vec4&)>& jacobian,
                        unsigned threads, int candidates, int levels, double shrink) {
    auto value = [&](const Vec4& X) { return conorm(wedge3(jacobian(X))); };
    GridMin g;
    struct Cand {
        double v;
        Vec4 X;
        Box4 cell;
    };
    std::vector<Cand> cands;
    for (const Box4& box : boxes) {
        std::vector<double> vals(pow4(n));
        (void)parallel_argmin(vals.size(), [&](std::size_t i) { return vals[i] = value(grid_point(box, n, i)); },
                              threads);
        g.samples += vals.size();
        std::vector<std::size_t> order(vals.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        const std::size_t keep = std::min<std::size_t>(candidates, order.size());
        std::partial_sort(order.begin(), order.begin() + keep, order.end(),
                          [&](std::size_t a, std::size_t b) { return vals[a] < vals[b] || (vals[a] == vals[b] && a < b); });
        for (std::size_t k = 0; k < keep; ++k) {
            const Vec4 X = grid_point(box, n, order[k]);
            Box4 cell;
            for (int i = 0; i < 4; ++i) {
                const double h = box.axes[i].length() / (n - 1);
                cell.axes[i] = {std::max(box.axes[i].lo, X[i] - h), std::min(box.axes[i].hi, X[i] + h)};
            }
            cands.push_back({vals[order[k]], X, cell});
        }
    }
    auto best = [&] {
        const Cand* b = &cands.front();
        for (const auto& c : cands)
            if (c.v < b->v) b = &c;
        return *b;
    };
    if (cands.empty()) return g;
    g.fine = best().v;
    g.witness = best().X;
    g.coarse = g.fine;
    const int m = 7;
    for (int level = 0; level < levels; ++level) {
        g.coarse = g.fine;
        for (auto& c : cands) {
            const ArgMin a = parallel_argmin(pow4(m), [&](std::size_t i) { return value(grid_point(c.cell, m, i)); },
                                             threads);
            g.samples += pow4(m);
            const Vec4 X = grid_point(c.cell, m, a.index);
            if (a.value < c.v) c.v = a.value, c.X = X;
            const Box4 parent = c.cell;
            for (int i = 0; i < 4; ++i) {
                const double h = 0.5 * shrink * parent.axes[i].length();
                c.cell.axes[i] = {std::max(parent.axes[i].lo, c.X[i] - h), std::min(parent.axes[i].hi, c.X[i] + h)};
            }
        }
        const Cand b = best();
        g.fine = b.v;
        g.witness = b.X;
    }
    return g;
}

bool ExpansionResult::passes(double K) const { return direct.fine > K && direct.agrees(); }

// ----------------------------------------------------------------------------
// Full report
// ----------------------------------------------------------------------------

const std::vector<std::string>& condition_ids() {
    static const std::vector<std::string> ids = [] {
        std::vector<std::string> v;
        auto add = [&](const std::string& p, int n) {
            for (int i = 1; i <= n; ++i) v.push_back(p + std::to_string(i));
        };
        add("w", 7);
        add("Phi", 10);
        add("F", 5);
        add("G", 8);
        add("H", 5);
        add("Theta", 9);
        add("Psi", 2);
        add("Upsilon", 2);
        return v;
    }();
    return ids;
}

bool FullReport::passed() const {
    return std::none_of(conditions.begin(), conditions.end(),
                        [](const ConditionReport& c) { return c.status == Status::Fail; });
}

const ConditionReport* FullReport::find(const std::string& id) const {
    for (const auto& c : conditions)
        if (c.id == id) return &c;
    return nullptr;
}

std::vector<std::string> FullReport::failed_ids() const {
    std::vector<std::string> out;
    for (const auto& c : conditions)
        if (c.status == Status::Fail) out.push_back(c.id);
    return out;
}

// ----------------------------------------------------------------------------
// Verifier
// ----------------------------------------------------------------------------

Verifier::Verifier(Scene scene, VerificationConfig config)
    : scene_(std::move(scene)), config_(config), threads_(thread_count(config.threads)) {
    config_.validate();
    if (config_.lambda) scene_.lambda = *config_.lambda;
    validate_scene(scene_);
    maps_ = build_maps(scene_);
}

void Verifier::set_lambda(double lambda) {
    if (lambda == scene_.lambda) return;
    Scene s = scene_;
    s.lambda = lambda;
    validate_scene(s);
    maps_ = build_maps(s);
    scene_ = std::move(s);
}

std::uint64_t Verifier::salt(const std::string& id) const { return fnv1a(id, config_.seed * 0x9e3779b97f4a7c15ULL); }

std::vector<Vec4> Verifier::l1_samples() const {
    std::vector<Vec4> v;
    for (double x : linspace(-scene_.l1_half_length, scene_.l1_half_length, config_.orbit_samples))
        v.push_back(scene_.C[3] + Vec4{x, 0, 0, 0});
    return v;
}

std::vector<Vec4> Verifier::l2_samples() const {
    // l2 = P + t (Q - P) for t in the open interval (0, 1).
    std::vector<Vec4> v;
    const int n = config_.orbit_samples;
    for (int k = 0; k < n; ++k) {
        const double t = double(k + 1) / (n + 1);
        Vec4 X;
        for (int i = 0; i < 4; ++i) X[i] = scene_.P[i] + t * (scene_.Q[i] - scene_.P[i]);
        v.push_back(X);
    }
    return v;
}

std::vector<Vec4> Verifier::varpi_samples() const {
    std::vector<Vec4> v;
    const int m = std::max(2, int(std::ceil(std::sqrt(double(config_.orbit_samples)))));
    for (double z : linspace(-scene_.varpi_radius, scene_.varpi_radius, m))
        for (double w : linspace(-scene_.varpi_radius, scene_.varpi_radius, m))
            v.push_back(scene_.Q + Vec4{0, 0, z, w});
    return v;
}

GridMin Verifier::c_theta() {
    if (!c_theta_) {
        const auto& th = *maps_.theta;
        c_theta_ = wedge3_zoom_min({scene_.Bl(scene_.P).bounds(), scene_.Bl(scene_.Q).bounds()}, config_.grid,
                                   [&](const Vec4& X) { return th.jacobian(X); }, threads_);
    }
    return *c_theta_;
}

GridMin Verifier::c_upsilon() {
    if (!c_upsilon_) {
        std::vector<Box4> boxes;
        const Region D = scene_.D();
        for (const auto& t : D.parts()) boxes.push_back(t.bounds());
        const auto& up = *maps_.upsilon;
        c_upsilon_ = wedge3_zoom_min(boxes, config_.grid, [&](const Vec4& X) { return up.jacobian(X); }, threads_);
    }
    return *c_upsilon_;
}

namespace {

double min_deriv(const ScalarMap1D& f, double lo, double hi, int n) {
    double m = kInf;
    for (double x : linspace(lo, hi, n)) m = std::min(m, f.deriv(x));
    return m;
}

/// Preimage under the product map of a target box, clipped to `within`.
std::optional<Box4> product_preimage(const PsiMap& psi, const Box4& target, const Box4& within) {
    Box4 out;
    for (int i = 0; i < 4; ++i) {
        const ScalarMap1D& f = psi.component(i);
        const Interval w = within.axes[i], t = target.axes[i];
        const double flo = f(w.lo), fhi = f(w.hi);
        if (t.hi < flo || t.lo > fhi) return std::nullopt;
        out.axes[i] = {t.lo <= flo ? w.lo : f.inverse(t.lo), t.hi >= fhi ? w.hi : f.inverse(t.hi)};
        out.axes[i].lo = std::max(out.axes[i].lo, w.lo);
        out.axes[i].hi = std::min(out.axes[i].hi, w.hi);
    }
    return out;
}

}  // namespace

ExpansionResult Verifier::check_expansion(double lambda) {
    const GridMin ct = c_theta(), cu = c_upsilon();
    Scene s = scene_;
    s.lambda = lambda;
    const SceneMaps m = lambda == scene_.lambda ? maps_ : build_maps(s);
    const Box4 C = s.Cregion().bounds();
    std::vector<Box4> boxes{C};
    std::vector<Box4> targets{s.Bl(s.P).bounds(), s.Bl(s.Q).bounds()};
    const Region D = s.D();
    for (const auto& t : D.parts()) targets.push_back(t.bounds());
    for (const auto& t : targets)
        if (auto pre = product_preimage(*m.psi, t, C)) boxes.push_back(*pre);

    ExpansionResult e;
    e.lambda = lambda;
    e.direct = wedge3_grid_min(boxes, config_.grid, [&](const Vec4& X) { return m.omega->jacobian(X); }, threads_);
    e.phi = wedge3_grid_min(boxes, config_.grid, [&](const Vec4& X) { return m.phi->jacobian(X); }, threads_);
    const int n = 10 * config_.line_samples;
    e.fprime_min = min_deriv(*m.F, C.axes[0].lo, C.axes[0].hi, n);
    e.gprime_min = min_deriv(*m.G, C.axes[1].lo, C.axes[1].hi, n);
    e.c_theta = ct.fine;
    e.c_upsilon = cu.fine;
    const double L = lambda;
    e.factorized = e.c_upsilon * e.c_theta *
                   std::min({e.fprime_min * e.gprime_min * L, e.fprime_min * L * L, e.gprime_min * L * L});
    return e;
}

TuningResult Verifier::auto_tune_lambda() {
    TuningResult t;
    std::vector<double> candidates;
    for (double L = kLambdaMin; L < config_.lambda_cap; L *= 2.0) candidates.push_back(L);
    candidates.push_back(config_.lambda_cap);
    for (double L : candidates) {
        ExpansionResult e = check_expansion(L);
        t.steps.push_back({L, e.direct.fine, e.factorized, e.direct.agrees()});
        t.last = e;
        if (e.passes()) {
            t.lambda0 = L;
            t.K = e.direct.fine;
            return t;
        }
    }
    const ExpansionResult& e = t.last;
    t.K = e.direct.fine;
    std::ostringstream os;
    os << std::setprecision(6) << "cap " << config_.lambda_cap << " reached: direct minimum " << e.direct.fine
       << " at " << fmt(e.direct.witness) << "; factorized bound " << e.factorized << " with c_Upsilon "
       << e.c_upsilon << ", c_Theta " << e.c_theta << ", min F' " << e.fprime_min << ", min G' " << e.gprime_min;
    t.limiting = os.str();
    return t;
}

// ----------------------------------------------------------------------------
// Scalar maps
// ----------------------------------------------------------------------------

namespace {

struct Samples1D {
    std::vector<double> xs;
};

ConditionReport scalar_report(const std::string& id, double margin, std::size_t samples, double at,
                              std::string detail, bool strict = true) {
    return make_report(id, margin, samples, Vec4{at, 0, 0, 0}, std::move(detail), strict);
}

/// Identity beyond the declared support, which itself must sit in
/// [-bound, bound].
ConditionReport support_1d(const std::string& id, const ScalarMap1D& f, double bound, double tol) {
    const Interval sup = f.support();
    double worst = 0.0, at = 0.0;
    std::size_t n = 0;
    for (double side : {1.0, -1.0}) {
        const double edge = side > 0 ? sup.hi : sup.lo;
        for (int k = 0; k <= 60; ++k) {
            const double delta = std::pow(10.0, -6.0 + 0.2 * k) * std::max(1.0, std::abs(edge));
            const double x = edge + side * std::min(delta, 3.0 * bound);
            const double dev = std::abs(f(x) - x) / std::max(1.0, std::abs(x));
            ++n;
            if (dev > worst) worst = dev, at = x;
        }
    }
    const double structural = std::min(bound - sup.hi, sup.lo + bound);
    const double margin = worst <= tol ? structural : tol - worst;
    ConditionReport r = scalar_report(id, margin, n, at,
                                      "declared support [" + fmt(sup.lo) + ", " + fmt(sup.hi) + "] inside [-" +
                                          fmt(bound) + ", " + fmt(bound) + "]; worst exterior deviation " + fmt(worst),
                                      true);
    r.values.push_back({"support_hi", sup.hi});
    r.values.push_back({"worst_exterior_deviation", worst});
    return r;
}

/// min over the grid of bound - |f(x)| together with the monotone endpoint
/// bound.
ConditionReport maps_inside(const std::string& id, const ScalarMap1D& f, double bound, int n) {
    double worst = kInf, at = 0.0;
    for (double x : linspace(-bound, bound, n)) {
        const double m = bound - std::abs(f(x));
        if (m < worst) worst = m, at = x;
    }
    const double structural = bound - std::max(std::abs(f(-bound)), std::abs(f(bound)));
    ConditionReport r = scalar_report(id, std::min(worst, structural), std::size_t(n), at,
                                      "image of [-" + fmt(bound) + ", " + fmt(bound) + "] stays " +
                                          fmt(std::min(worst, structural)) + " inside");
    r.values.push_back({"sampled_margin", worst});
    r.values.push_back({"structural_margin", structural});
    return r;
}

struct ScalarOrbit {
    bool converged = false;
    int steps = 0;
};

ScalarOrbit scalar_orbit(const ScalarMap1D& f, double x, bool forward, double target, double eps, int nmax) {
    for (int n = 0; n <= nmax; ++n) {
        if (std::abs(x - target) <= eps) return {true, n};
        if (n == nmax) break;
        try {
            x = forward ? f(x) : f.inverse(x);
        } catch (const Error&) {
            break;
        }
    }
    return {false, nmax};
}

}  // namespace

std::vector<ConditionReport> Verifier::scalar_conditions() {
    const double L = scene_.lambda, L2 = L * L, L3 = L2 * L, xy = scene_.xy_extent;
    const ScalarMap1D &F = *maps_.F, &G = *maps_.G, &H = *maps_.H;
    const int n = 10 * config_.line_samples;
    const double tol = config_.tol;
    std::vector<ConditionReport> out;

    // F
    out.push_back(support_1d("F1", F, L3, tol));
    {
        std::mt19937_64 rng(salt("F2"));
        std::vector<double> xs;
        for (int k = 0; k < config_.line_samples; ++k) xs.push_back(std::uniform_real_distribution<double>(-L2, L2)(rng));
        for (double e = -12.0; e <= std::log10(L2); e += 0.5) {
            xs.push_back(std::min(std::pow(10.0, e), L2));
            xs.push_back(-std::min(std::pow(10.0, e), L2));
        }
        double worst = kInf, at = 0.0, rmin = kInf, rmax = -kInf;
        for (double x : xs) {
            if (x == 0.0) continue;
            const double r = F(x) / x;
            rmin = std::min(rmin, r), rmax = std::max(rmax, r);
            const double m = std::min(r, 1.0 / 9.0 - r);
            if (m < worst) worst = m, at = x;
        }
        auto r = scalar_report("F2", worst, xs.size(), at, "F(x)/x in [" + fmt(rmin) + ", " + fmt(rmax) + "]");
        r.values = {{"ratio_min", rmin}, {"ratio_max", rmax}};
        out.push_back(r);
    }
    {
        const double c1 = min_deriv(F, -L2, L2, n), c1C = min_deriv(F, -xy, xy, n);
        auto r = scalar_report("F3", c1, std::size_t(2 * n), 0.0, "c1 = min F' over [-lambda^2, lambda^2] = " + fmt(c1));
        r.values = {{"c1", c1}, {"c1_on_C", c1C}};
        out.push_back(r);
    }
    {
        const double f0 = F(0.0), d0 = F.deriv(0.0);
        out.push_back(scalar_report("F4", std::abs(f0) <= tol ? 1.0 - d0 : -std::abs(f0), 1, 0.0,
                                    "F(0) = " + fmt(f0) + ", F'(0) = " + fmt(d0)));
    }
    out.push_back(maps_inside("F5", F, L2, n));

    // G
    out.push_back(support_1d("G1", G, L3, tol));
    out.push_back(maps_inside("G2", G, L2, n));
    for (int which : {3, 4}) {
        const int m = std::max(1, config_.line_samples / 2);
        double worst = kInf, at = 0.0, rmin = kInf, rmax = -kInf;
        for (int k = 1; k <= m; ++k)
            for (double s : {1.0, -1.0}) {
                const double x = s * 0.01 * k / m;
                const double r = which == 3 ? G(x) / x : (G(x + 10.0) - 10.0) / x;
                rmin = std::min(rmin, r), rmax = std::max(rmax, r);
                const double mg = which == 3 ? std::min(r - 9.0, 10.0 - r) : std::min(r, 0.1 - r);
                if (mg < worst) worst = mg, at = x;
            }
        auto r = scalar_report("G" + std::to_string(which), worst, std::size_t(2 * m), at,
                               std::string(which == 3 ? "G(x)/x" : "(G(x+10)-10)/x") + " in [" + fmt(rmin) + ", " +
                                   fmt(rmax) + "] on [-1/100, 1/100]");
        r.values = {{"ratio_min", rmin}, {"ratio_max", rmax}};
        out.push_back(r);
    }
    {
        std::vector<double> starts{1e-3, 10.0 - 1e-3};
        for (int k = 1; k <= config_.orbit_samples; ++k) starts.push_back(10.0 * k / (config_.orbit_samples + 1));
        int worst = 0;
        double at = 0.0;
        bool ok = true;
        for (double x : starts)
            for (bool fwd : {true, false}) {
                const auto o = scalar_orbit(G, x, fwd, fwd ? 10.0 : 0.0, config_.orbit_tol, config_.orbit_max);
                if (!o.converged) ok = false;
                if (!o.converged || o.steps > worst) {
                    if (o.steps >= worst) at = x;
                    worst = std::max(worst, o.steps);
                }
            }
        out.push_back(scalar_report("G5", ok ? double(config_.orbit_max - worst) : -1.0, 2 * starts.size(), at,
                                    "forward orbits reach 10 and backward orbits reach 0 within " +
                                        fmt(config_.orbit_tol) + "; worst " + std::to_string(worst) + " steps"));
    }
    {
        const double c2 = min_deriv(G, -L2, L2, n), c2C = min_deriv(G, -xy, xy, n);
        auto r = scalar_report("G6", c2C, std::size_t(2 * n), xy,
                               "min G' over [-lambda^2, lambda^2] = " + fmt(c2) + " (not lambda-independent); over " +
                                   "the y-extent of C = " + fmt(c2C));
        r.status = Status::Evidence;
        r.values = {{"c2", c2}, {"c2_on_C", c2C}};
        out.push_back(r);
    }
    {
        const double g0 = G(0.0), d0 = G.deriv(0.0);
        out.push_back(scalar_report("G7", std::abs(g0) <= tol ? d0 - 1.0 : -std::abs(g0), 1, 0.0,
                                    "G(0) = " + fmt(g0) + ", G'(0) = " + fmt(d0)));
        const double g10 = G(10.0), d10 = G.deriv(10.0);
        out.push_back(scalar_report("G8", std::abs(g10 - 10.0) <= 10.0 * tol ? 1.0 - d10 : -std::abs(g10 - 10.0), 1,
                                    10.0, "G(10) - 10 = " + fmt(g10 - 10.0) + ", G'(10) = " + fmt(d10)));
    }

    // H
    {
        std::mt19937_64 rng(salt("H1"));
        std::vector<double> zs = linspace(0.0, 2.0 * L3, n);
        for (int k = 0; k < 100; ++k) zs.push_back(std::uniform_real_distribution<double>(0.0, 2.0 * L2)(rng));
        double worst = 0.0, at = 0.0;
        for (double z : zs) {
            const double dev = std::abs(H(-z) + H(z)) / std::max(1.0, std::abs(H(z)));
            if (dev > worst) worst = dev, at = z;
        }
        out.push_back(scalar_report("H1", tol - worst, zs.size(), at, "worst |H(-z) + H(z)| " + fmt(worst), false));
    }
    out.push_back(support_1d("H2", H, L3, tol));
    out.push_back(maps_inside("H3", H, L2, n));
    {
        double worst = kInf, at = 0.0;
        for (double z : linspace(0.5, L2, n)) {
            const double hz = H(z), m = std::min(hz - 7.0, L2 - hz);
            if (m < worst) worst = m, at = z;
        }
        const double structural = std::min(H(0.5) - 7.0, L2 - H(L2));
        auto r = scalar_report("H4", std::min(worst, structural), std::size_t(n), at,
                               "H([1/2, lambda^2]) inside (7, lambda^2) with margin " + fmt(std::min(worst, structural)));
        r.values = {{"sampled_margin", worst}, {"structural_margin", structural}};
        out.push_back(r);
    }
    {
        std::mt19937_64 rng(salt("H5"));
        std::vector<double> zs = linspace(0.0, 1.0, n);
        for (int k = 0; k < config_.line_samples; ++k) zs.push_back(std::uniform_real_distribution<double>(0.0, 1.0)(rng));
        double worst = 0.0, at = 0.0;
        for (double z : zs) {
            const double dev = std::abs(H(z) - L * z) / std::max(1.0, L * z);
            if (dev > worst) worst = dev, at = z;
        }
        const double d0 = H.deriv(0.0);
        const double margin = d0 > 1.0 ? tol - worst : -1.0;
        auto r = scalar_report("H5", margin, zs.size(), at,
                               "worst |H(z) - lambda z| relative " + fmt(worst) + "; H'(0) = " + fmt(d0), false);
        r.values = {{"worst_deviation", worst}, {"H_prime_0", d0}};
        out.push_back(r);
    }
    return out;
}

// ----------------------------------------------------------------------------
// Theta, Psi, Upsilon
// ----------------------------------------------------------------------------

std::vector<ConditionReport> Verifier::theta_conditions() {
    const ThetaMap& th = *maps_.theta;
    const Vec4 P = scene_.P, Q = scene_.Q;
    const double tol = config_.tol;
    const int n = config_.grid, nh = std::max(2, config_.grid / 2);
    std::vector<ConditionReport> out;

    out.push_back(check_support("Theta1", th, Region::unite({scene_.Bl(P), scene_.Bl(Q)}, "B_l(P) u B_l(Q)"),
                                config_.support_samples, tol, threads_));
    auto rel = [](double d, const Vec4& X) { return d / std::max(1.0, norm_inf(X)); };
    {
        std::mt19937_64 rng(salt("Theta2"));
        const auto pts = box_samples(scene_.Bs(P).bounds(), nh, 100, rng);
        out.push_back(exactness("Theta2", pts,
                                [&](const Vec4& X) {
                                    const Vec4 d = X - P;
                                    return rel(dist_inf(th.eval(X), P + Vec4{d[0], -d[2], d[1], d[3]}), X);
                                },
                                tol, threads_, "quarter turn (x, -z, y, w) on B_s(P)"));
    }
    {
        std::vector<Vec4> pts;
        for (double x : linspace(-1.0, 1.0, 10 * config_.line_samples)) pts.push_back(P + Vec4{x, 0, 0, 0});
        out.push_back(exactness("Theta3", pts, [&](const Vec4& X) { return rel(dist_inf(th.eval(X), X), X); }, tol,
                                threads_, "x-axis fixed"));
    }
    auto distance_kept = [&](const std::string& id, const Vec4& center) {
        std::mt19937_64 rng(salt(id));
        const auto pts = box_samples(scene_.Bl(center).bounds(), n, config_.line_samples, rng);
        return exactness(id, pts,
                         [&](const Vec4& X) {
                             return std::abs(dist_euclid(center, th.eval(X)) - dist_euclid(center, X)) /
                                    std::max(1.0, norm_inf(X));
                         },
                         tol, threads_, "Euclidean distance to the centre preserved on B_l");
    };
    auto plane_kept = [&](const std::string& id, const Vec4& center, int a, int b, int c, int d, bool keep_value) {
        // Points of the (a, b) plane through `center`; coordinates c, d of the
        // image must equal those of the centre.
        std::vector<Vec4> pts;
        const double l = scene_.theta_large;
        const int m = 4 * n;
        for (double s : linspace(-l, l, m))
            for (double t : linspace(-l, l, m)) {
                Vec4 X = center;
                X[a] += s;
                X[b] += t;
                pts.push_back(X);
            }
        (void)keep_value;
        return exactness(id, pts,
                         [&, c, d](const Vec4& X) {
                             const Vec4 Y = th.eval(X);
                             return rel(std::max(std::abs(Y[c] - center[c]), std::abs(Y[d] - center[d])), X);
                         },
                         tol, threads_, "plane preserved");
    };
    out.push_back(distance_kept("Theta4", P));
    out.push_back(plane_kept("Theta5", P, 1, 2, 0, 3, true));
    {
        std::mt19937_64 rng(salt("Theta6"));
        const auto pts = box_samples(scene_.Bs(Q).bounds(), nh, 100, rng);
        out.push_back(exactness("Theta6", pts,
                                [&](const Vec4& X) {
                                    const Vec4 d = X - Q;
                                    return rel(dist_inf(th.eval(X), Q + Vec4{-d[1], d[0], -d[3], d[2]}), X);
                                },
                                tol, threads_, "(x, y+10, z, w) -> (-y, x+10, -w, z) on B_s(Q)"));
    }
    out.push_back(distance_kept("Theta7", Q));
    out.push_back(plane_kept("Theta8", Q, 0, 1, 2, 3, true));
    out.push_back(plane_kept("Theta9", Q, 2, 3, 0, 1, true));
    return out;
}

std::vector<ConditionReport> Verifier::psi_conditions() {
    const PsiMap& psi = *maps_.psi;
    const double L3 = std::pow(scene_.lambda, 3);
    const double tol = config_.tol;
    std::vector<ConditionReport> out;
    Box4 outer, inner;
    for (int i = 0; i < 4; ++i) {
        outer.axes[i] = {-L3 - 1.0, L3 + 1.0};
        inner.axes[i] = {-L3, L3};
    }
    out.push_back(check_support("Psi1", psi, Region::box(outer, "[-lambda^3-1, lambda^3+1]^4"),
                                config_.support_samples, tol, threads_));
    std::mt19937_64 rng(salt("Psi2"));
    std::vector<Vec4> pts = box_samples(inner, 3, config_.line_samples, rng);
    Box4 core;
    for (int i = 0; i < 4; ++i) core.axes[i] = {-20.0, 20.0};
    for (const auto& X : box_samples(core, 0, config_.line_samples, rng)) pts.push_back(X);
    out.push_back(exactness(
        "Psi2", pts,
        [&](const Vec4& X) {
            const Vec4 prod{psi.component(0)(X[0]), psi.component(1)(X[1]), psi.component(2)(X[2]),
                            psi.component(3)(X[3])};
            return dist_inf(psi.eval(X), prod) / std::max(1.0, norm_inf(prod));
        },
        tol, threads_, "product map on [-lambda^3, lambda^3]^4"));
    return out;
}

std::vector<ConditionReport> Verifier::upsilon_conditions() {
    const DiffeoMap4& up = *maps_.upsilon;
    std::vector<ConditionReport> out;
    out.push_back(check_support("Upsilon1", up, scene_.D(), config_.support_samples, config_.tol, threads_));
    std::mt19937_64 rng(salt("Upsilon2"));
    const auto pts = box_samples(Box4::cube(scene_.C[0], 0.2), 3, 100, rng);
    const Vec4 shift{10.0, -10.0, -5.0, 0.0};
    out.push_back(exactness(
        "Upsilon2", pts,
        [&](const Vec4& X) { return dist_inf(up.eval(X) - X, shift) / std::max(1.0, norm_inf(X)); }, config_.tol,
        threads_, "translation by (10, -10, -5, 0) on B(C1, 0.2)"));
    return out;
}

// ----------------------------------------------------------------------------
// Phi and Omega
// ----------------------------------------------------------------------------

ConditionReport Verifier::check_trapping(const std::string& id, const DiffeoMap4& map, double image_threshold) {
    const Box4 A = scene_.A().bounds();
    const std::vector<Vec4> a_pts = facet_grid(A, config_.boundary_grid);
    std::vector<Vec4> b_pts;
    const Region B = scene_.B();
    for (const auto& slab : B.parts())
        for (const auto& X : facet_grid(slab.bounds(), config_.boundary_grid)) b_pts.push_back(X);

    const ArgMin sa = parallel_argmin(a_pts.size(), [&](std::size_t i) { return inward_depth(map.eval(a_pts[i]), A); },
                                      threads_);
    const ArgMin sb = parallel_argmin(
        b_pts.size(), [&](std::size_t i) { return threshold_depth(map.eval(b_pts[i]), A, image_threshold); },
        threads_);

    // Structural: on A the product map acts coordinate-wise by increasing
    // maps, so the image box is exact; Theta and Upsilon move points only
    // inside their supports, which lie in int(A) and away from B'.
    const ScalarMap1D &F = *maps_.F, &G = *maps_.G, &H = *maps_.H;
    const double xy = scene_.xy_extent, zw = scene_.zw();
    double structural_A = std::min({xy - std::max(std::abs(F(-xy)), std::abs(F(xy))),
                                    xy - std::max(std::abs(G(-xy)), std::abs(G(xy))), zw - H(zw)});
    for (const Vec4& c : {scene_.P, scene_.Q}) {
        const Box4 bl = scene_.Bl(c).bounds();
        for (int i = 0; i < 4; ++i)
            structural_A = std::min({structural_A, bl.axes[i].lo - A.axes[i].lo, A.axes[i].hi - bl.axes[i].hi});
    }
    double d_inside = kInf, d_vs_bp = kInf;
    const Region D = scene_.D();
    for (const auto& t : D.parts()) {
        const Box4 tb = t.bounds();
        for (int i = 0; i < 4; ++i)
            d_inside = std::min({d_inside, tb.axes[i].lo - A.axes[i].lo, A.axes[i].hi - tb.axes[i].hi});
        d_vs_bp = std::min(d_vs_bp, scene_.bp_threshold - std::max({std::abs(tb.axes[2].lo), std::abs(tb.axes[2].hi),
                                                                     std::abs(tb.axes[3].lo), std::abs(tb.axes[3].hi)}));
    }
    structural_A = std::min(structural_A, d_inside);
    // B goes to max(|z|, |w|) >= H(threshold), which clears B' by this much;
    // Upsilon is the identity there because D misses B'.
    const double structural_B = std::min(H(scene_.b_threshold) - image_threshold, d_vs_bp > 0 ? kInf : d_vs_bp);

    const double margin = std::min({sa.value, sb.value, structural_A, structural_B});
    const bool a_worst = sa.value <= sb.value;
    const Vec4 w = a_worst ? a_pts[sa.index] : b_pts[sb.index];
    ConditionReport r = make_report(
        id, margin, a_pts.size() + b_pts.size(), w,
        "A boundary maps " + fmt(sa.value) + " inside A; B boundary maps " + fmt(sb.value) +
            " inside the target (threshold " + fmt(image_threshold) + "); structural margins A " + fmt(structural_A) +
            ", B " + fmt(structural_B));
    r.values = {{"sampled_A", sa.value},
                {"sampled_B", sb.value},
                {"structural_A", structural_A},
                {"structural_B", structural_B},
                {"samples_A", double(a_pts.size())},
                {"samples_B", double(b_pts.size())}};
    return r;
}

ConditionReport Verifier::check_cycle(const std::string& id, const DiffeoMap4& map) {
    const Region A = scene_.A();
    struct Leg {
        const char* name;
        Vec4 start;
        bool forward;
        Vec4 target;
    };
    const Vec4 mid = scene_.P + Vec4{0.5 * (scene_.Q[0] - scene_.P[0]), 0.5 * (scene_.Q[1] - scene_.P[1]),
                                     0.5 * (scene_.Q[2] - scene_.P[2]), 0.5 * (scene_.Q[3] - scene_.P[3])};
    const std::vector<Leg> legs{{"forward_l2_to_Q", mid, true, scene_.Q},
                                {"backward_l2_to_P", mid, false, scene_.P},
                                {"forward_C4_to_P", scene_.C[3], true, scene_.P},
                                {"backward_C4_to_Q", scene_.C[3], false, scene_.Q}};
    double margin = kInf;
    std::optional<Vec4> witness;
    std::string detail;
    NamedValues values;
    std::size_t samples = 0;
    for (const auto& leg : legs) {
        const OrbitResult o =
            iterate_orbit(map, leg.start, leg.forward, leg.target, config_.orbit_tol, config_.orbit_max, &A);
        samples += o.points.size();
        const double m = o.converged ? double(config_.orbit_max - o.steps) : -1.0;
        values.push_back({std::string(leg.name) + "_steps", o.converged ? double(o.steps) : -1.0});
        values.push_back({std::string(leg.name) + "_final_distance", o.final_distance});
        if (!detail.empty()) detail += "; ";
        detail += std::string(leg.name) + (o.converged ? " converged in " + std::to_string(o.steps) + " steps"
                                                       : " failed: " + o.note);
        if (m < margin) {
            margin = m;
            witness = leg.start;
        }
    }
    return make_report(id, margin, samples, witness, detail);
}

ConditionReport Verifier::check_avoidance(const std::string& id, const std::vector<Vec4>& starts, bool forward,
                                          const Vec4& target, int first_n) {
    const Region A = scene_.A(), D = scene_.D();
    const DiffeoMap4& phi = *maps_.phi;
    std::vector<OrbitResult> orbits(starts.size());
    const ArgMin worst = parallel_argmin(
        starts.size(),
        [&](std::size_t i) {
            orbits[i] = iterate_orbit(phi, starts[i], forward, target, config_.orbit_tol, config_.orbit_max, &A);
            if (!orbits[i].converged) return -1.0;
            double d = kInf;
            for (std::size_t n = first_n; n < orbits[i].points.size(); ++n)
                d = std::min(d, region_distance(D, orbits[i].points[n]));
            return d;
        },
        threads_);
    std::size_t samples = 0;
    int max_steps = 0;
    bool all = true;
    for (const auto& o : orbits) {
        samples += o.points.size();
        max_steps = std::max(max_steps, o.steps);
        all = all && o.converged;
    }
    const OrbitResult& wo = orbits[worst.index];
    std::string detail = std::string(forward ? "forward" : "backward") + " iterates from n = " +
                         std::to_string(first_n) + " stay " + fmt(worst.value) + " from D; slowest orbit " +
                         std::to_string(max_steps) + " steps";
    if (!all) detail += "; an orbit failed to converge: " + wo.note;
    ConditionReport r = make_report(id, worst.value, samples, starts[worst.index], detail);
    r.values = {{"min_distance_to_D", all ? worst.value : -1.0},
                {"max_steps", double(max_steps)},
                {"starts", double(starts.size())}};
    return r;
}

std::vector<ConditionReport> Verifier::phi_conditions() {
    const DiffeoMap4& phi = *maps_.phi;
    const double L3 = std::pow(scene_.lambda, 3);
    std::vector<ConditionReport> out;
    Box4 outer;
    for (auto& ax : outer.axes) ax = {-L3 - 1.0, L3 + 1.0};
    out.push_back(check_support("Phi1", phi, Region::box(outer, "[-lambda^3-1, lambda^3+1]^4"),
                                config_.support_samples, config_.tol, threads_));
    out.push_back(check_trapping("Phi2", phi, scene_.bp_threshold));
    {
        const double rp = dist_inf(phi.eval(scene_.P), scene_.P), rq = dist_inf(phi.eval(scene_.Q), scene_.Q);
        const double tol = config_.tol * std::max(1.0, norm_inf(scene_.Q));
        out.push_back(make_report("Phi3", tol - std::max(rp, rq), 2, rp >= rq ? scene_.P : scene_.Q,
                                  "residuals P " + fmt(rp) + ", Q " + fmt(rq), false));
    }
    out.push_back(check_fixed_spectrum("Phi4", phi, scene_.P, 3, 2, config_.tol));
    out.push_back(check_avoidance("Phi5", l1_samples(), true, scene_.P, 1));
    out.push_back(check_avoidance("Phi6", l2_samples(), false, scene_.P, 0));
    out.push_back(check_fixed_spectrum("Phi7", phi, scene_.Q, 2, 4, config_.tol));
    out.push_back(check_avoidance("Phi8", l2_samples(), true, scene_.Q, 0));
    out.push_back(check_avoidance("Phi9", varpi_samples(), false, scene_.Q, 1));
    return out;
}

std::vector<ConditionReport> Verifier::local_conditions() {
    const DiffeoMap4& omega = *maps_.omega;
    const double L3 = std::pow(scene_.lambda, 3);
    std::vector<ConditionReport> out;
    Box4 outer;
    for (auto& ax : outer.axes) ax = {-L3 - 1.0, L3 + 1.0};
    out.push_back(check_support("w1", omega, Region::unite({Region::box(outer, "Psi box"), scene_.D()}, "supp"),
                                config_.support_samples, config_.tol, threads_));
    out.push_back(check_trapping("w2", omega, scene_.b_threshold));
    {
        const double rp = dist_inf(omega.eval(scene_.P), scene_.P), rq = dist_inf(omega.eval(scene_.Q), scene_.Q);
        const double tol = config_.tol * std::max(1.0, norm_inf(scene_.Q));
        const Box4 C = scene_.Cregion().bounds();
        const double inside = std::min(inward_depth(scene_.P, C), inward_depth(scene_.Q, C));
        const double margin = std::max(rp, rq) <= tol ? inside : -std::max(rp, rq);
        out.push_back(make_report("w3", margin, 2, rp >= rq ? scene_.P : scene_.Q,
                                  "residuals P " + fmt(rp) + ", Q " + fmt(rq) + "; depth in C " + fmt(inside)));
    }
    out.push_back(check_cycle("w4", omega));
    out.push_back(check_fixed_spectrum("w5", omega, scene_.P, 3, 2, config_.tol));
    out.push_back(check_fixed_spectrum("w6", omega, scene_.Q, 2, 4, config_.tol));
    return out;
}

// ----------------------------------------------------------------------------
// Plumbing diagnostics
// ----------------------------------------------------------------------------

ConditionReport Verifier::plumbing_inverse(int samples) {
    const DiffeoMap4& omega = *maps_.omega;
    std::mt19937_64 rng(salt("inverse"));
    const Box4 A = scene_.A().bounds();
    std::vector<Vec4> pts;
    for (int k = 0; k < samples; ++k) {
        Vec4 Y;
        for (int i = 0; i < 4; ++i) Y[i] = std::uniform_real_distribution<double>(A.axes[i].lo, A.axes[i].hi)(rng);
        pts.push_back(Y);
    }
    const double tol = 1e-8;
    auto residual = [&](std::size_t i, bool image_side) {
        try {
            const Vec4& X = pts[i];
            return image_side ? dist_inf(omega.eval(omega.inverse(X)), X) : dist_inf(omega.inverse(omega.eval(X)), X);
        } catch (const Error&) {
            return kInf;
        }
    };
    const ArgMin img = parallel_argmin(pts.size(), [&](std::size_t i) { return tol - residual(i, true); }, threads_);
    const ArgMin pre = parallel_argmin(pts.size(), [&](std::size_t i) { return tol - residual(i, false); }, threads_);
    std::size_t over = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) over += residual(i, true) > tol;
    const bool img_worst = img.value <= pre.value;
    const Vec4 w = pts[img_worst ? img.index : pre.index];
    ConditionReport r = make_report("inverse_residual", std::min(img.value, pre.value), 2 * pts.size(), w,
                                    "worst |Omega(Omega^-1(Y)) - Y| = " + fmt(tol - img.value) +
                                        ", worst |Omega^-1(Omega(X)) - X| = " + fmt(tol - pre.value) + " at " +
                                        fmt(w) + " (tolerance 1e-8); " + std::to_string(over) + " of " +
                                        std::to_string(pts.size()) + " images over tolerance",
                                    false);
    r.values = {{"image_residual", tol - img.value},
                {"preimage_residual", tol - pre.value},
                {"images_over_tolerance", double(over)}};
    return r;
}

ConditionReport Verifier::plumbing_jacobian(int samples) {
    const DiffeoMap4& omega = *maps_.omega;
    std::mt19937_64 rng(salt("jacobian"));
    const Box4 b = scene_.A().bounds();
    std::vector<Vec4> pts;
    for (int k = 0; k < samples; ++k) {
        Vec4 X;
        for (int i = 0; i < 4; ++i) X[i] = std::uniform_real_distribution<double>(b.axes[i].lo, b.axes[i].hi)(rng);
        pts.push_back(X);
    }
    const double tol = 1e-5;
    const ArgMin m = parallel_argmin(
        pts.size(),
        [&](std::size_t i) {
            const Mat4 J = omega.jacobian(pts[i]), Jfd = fd_jacobian(omega, pts[i], 1e-6);
            double scale = 0.0;
            for (double v : J.a) scale = std::max(scale, std::abs(v));
            return tol - max_abs_diff(J, Jfd) / std::max(scale, 1e-300);
        },
        threads_);
    return make_report("jacobian_fd", m.value, pts.size(), pts[m.index],
                       "worst relative Jacobian difference " + fmt(tol - m.value) + " at " + fmt(pts[m.index]) +
                           " (tolerance 1e-5)",
                       false);
}

// ----------------------------------------------------------------------------
// run_all
// ----------------------------------------------------------------------------

FullReport Verifier::run_all() {
    FullReport rep;
    rep.config = config_;
    rep.hash = config_hash(config_, scene_);

    ExpansionResult e;
    if (config_.auto_lambda) {
        TuningResult t = auto_tune_lambda();
        set_lambda(t.lambda0.value_or(config_.lambda_cap));
        e = t.last;
        if (t.lambda0) scene_.lambda0 = t.lambda0;
        rep.tuning = std::move(t);
    } else {
        e = check_expansion(scene_.lambda);
    }
    scene_.K = e.direct.fine;
    scene_.solved_coefficients.clear();
    record_coefficients(scene_, maps_);

    std::vector<ConditionReport> all;
    for (auto group : {&Verifier::local_conditions, &Verifier::phi_conditions, &Verifier::scalar_conditions,
                       &Verifier::theta_conditions, &Verifier::psi_conditions, &Verifier::upsilon_conditions})
        for (auto& c : (this->*group)()) all.push_back(std::move(c));

    {
        const double rel = e.direct.fine > 0 ? std::abs(e.direct.coarse - e.direct.fine) / e.direct.fine : kInf;
        double margin = e.direct.fine - 1.0;
        if (!e.direct.agrees()) margin = std::min(margin, 0.05 - rel);
        std::string detail = "min m(Lambda^3 dOmega) over C = " + fmt(e.direct.fine) + " at lambda " +
                             fmt(e.lambda) + " (coarse grid " + fmt(e.direct.coarse) + ", refinement change " +
                             fmt(rel) + "); factorized bound " + fmt(e.factorized);
        if (rep.tuning && !rep.tuning->lambda0) detail += "; tuning: " + rep.tuning->limiting;
        ConditionReport r = make_report("w7", margin, e.direct.samples, e.direct.witness, detail);
        r.values = {{"lambda", e.lambda},         {"K", e.direct.fine},         {"coarse_min", e.direct.coarse},
                    {"factorized", e.factorized}, {"c_upsilon", e.c_upsilon},   {"c_theta", e.c_theta},
                    {"fprime_min", e.fprime_min}, {"gprime_min", e.gprime_min}, {"refinement_change", rel}};
        all.push_back(std::move(r));
    }
    {
        // On C, |z| and |w| stay in the plateau of H where H' = lambda, so
        // m(Lambda^3 dPhi) >= c_Theta lambda min(F'G', F', G') with F' and G'
        // independent of lambda there. The direct grid must respect the bound.
        const GridMin ct = c_theta();
        const double c_direct = e.phi.fine / e.lambda;
        const double c_fact = e.c_theta * std::min({e.fprime_min * e.gprime_min, e.fprime_min, e.gprime_min});
        const double rel_theta = ct.fine > 0 ? std::abs(ct.coarse - ct.fine) / ct.fine : kInf;
        double margin = c_fact;
        if (!ct.agrees()) margin = std::min(margin, 0.05 - rel_theta);
        if (c_direct < c_fact * (1.0 - 1e-9)) margin = std::min(margin, c_direct - c_fact);
        ConditionReport r = make_report("Phi10", margin, e.phi.samples + ct.samples, e.phi.witness,
                                        "c_Phi = c_Theta min(F'G', F', G') = " + fmt(c_fact) + " (c_Theta " +
                                            fmt(e.c_theta) + ", refinement change " + fmt(rel_theta) +
                                            "); sampled min m(Lambda^3 dPhi) / lambda over C = " + fmt(c_direct));
        r.values = {{"c_phi_direct", c_direct}, {"c_phi_factorized", c_fact}, {"c_theta_refinement_change", rel_theta}};
        all.push_back(std::move(r));
    }

    for (const auto& id : condition_ids()) {
        auto it = std::find_if(all.begin(), all.end(), [&](const ConditionReport& c) { return c.id == id; });
        if (it == all.end()) throw Error("internal: condition " + id + " was not produced");
        rep.conditions.push_back(*it);
    }
    if (all.size() != condition_ids().size()) throw Error("internal: duplicate condition reports");

    auto value_of = [&](const std::string& id, const std::string& key) {
        for (const auto& [k, v] : rep.find(id)->values)
            if (k == key) return v;
        return std::nan("");
    };
    rep.constants = {{"lambda", scene_.lambda},
                     {"c1", value_of("F3", "c1")},
                     {"c1_on_C", value_of("F3", "c1_on_C")},
                     {"c2", value_of("G6", "c2")},
                     {"c2_on_C", value_of("G6", "c2_on_C")},
                     {"c_theta", e.c_theta},
                     {"c_upsilon", e.c_upsilon},
                     {"c_phi_direct", value_of("Phi10", "c_phi_direct")},
                     {"c_phi_factorized", value_of("Phi10", "c_phi_factorized")},
                     {"K", e.direct.fine}};

    // Evidence-only diagnostics.
    for (const auto& [name, X, k] : {std::tuple{"domination_P", scene_.P, 1}, std::tuple{"domination_Q", scene_.Q, 2}}) {
        const auto d = check_finite_domination({maps_.omega->jacobian(X)}, 1, k);
        ConditionReport r = make_report(name, 0.5 - d.max_ratio, d.windows, X,
                                        "singular-gap surrogate s_" + std::to_string(k) + "/s_" + std::to_string(k + 1) +
                                            " (ascending) = " + fmt(d.max_ratio) +
                                            " for the period-1 orbit (window 1)");
        r.status = Status::Evidence;
        r.values = {{"ratio", d.max_ratio}, {"index", double(k)}};
        rep.diagnostics.push_back(r);
    }
    for (auto r : {plumbing_inverse(config_.plumbing_samples), plumbing_jacobian(config_.plumbing_samples)}) {
        r.status = Status::Evidence;
        rep.diagnostics.push_back(std::move(r));
    }
    rep.scene = scene_;
    return rep;
}

FullReport run_all(const Scene& scene, const VerificationConfig& config) {
    Verifier v(scene, config);
    return v.run_all();
}

// ----------------------------------------------------------------------------
// Serialization
// ----------------------------------------------------------------------------

namespace {

ojson number(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

ojson condition_json(const ConditionReport& c, const std::string& hash) {
    ojson j;
    j["condition_id"] = c.id;
    j["status"] = to_string(c.status);
    j["margin"] = number(c.margin);
    j["witness"] = c.witness ? ojson::array({number((*c.witness)[0]), number((*c.witness)[1]),
                                             number((*c.witness)[2]), number((*c.witness)[3])})
                             : ojson(nullptr);
    j["samples"] = c.samples;
    j["config_hash"] = hash;
    j["detail"] = c.detail;
    ojson v = ojson::object();
    for (const auto& [k, x] : c.values) v[k] = number(x);
    j["values"] = v;
    return j;
}

}  // namespace

std::string report_to_json(const FullReport& r) {
    const std::string hash = hex_hash(r.hash);
    ojson j;
    j["schema_version"] = 1;
    j["config_hash"] = hash;
    j["config"] = config_json(r.config);
    j["lambda"] = r.scene.lambda;
    j["lambda0"] = r.scene.lambda0 ? ojson(*r.scene.lambda0) : ojson(nullptr);
    j["K"] = r.scene.K ? number(*r.scene.K) : ojson(nullptr);
    j["passed"] = r.passed();
    j["conditions"] = ojson::array();
    for (const auto& c : r.conditions) j["conditions"].push_back(condition_json(c, hash));
    ojson consts = ojson::object();
    for (const auto& [k, v] : r.constants) consts[k] = number(v);
    j["constants"] = consts;
    j["diagnostics"] = ojson::array();
    for (const auto& c : r.diagnostics) j["diagnostics"].push_back(condition_json(c, hash));
    if (r.tuning) {
        ojson t;
        t["lambda0"] = r.tuning->lambda0 ? ojson(*r.tuning->lambda0) : ojson(nullptr);
        t["K"] = number(r.tuning->K);
        t["limiting"] = r.tuning->limiting;
        t["steps"] = ojson::array();
        for (const auto& s : r.tuning->steps)
            t["steps"].push_back({{"lambda", s.lambda},
                                  {"direct_min", number(s.direct_min)},
                                  {"factorized", number(s.factorized)},
                                  {"refinements_agree", s.agrees}});
        j["tuning"] = t;
    } else {
        j["tuning"] = nullptr;
    }
    j["scene"] = ojson::parse(scene_to_json(r.scene));
    return j.dump(2) + "\n";
}

std::string report_summary(const FullReport& r) {
    std::ostringstream os;
    os << "config hash " << hex_hash(r.hash) << ", lambda " << r.scene.lambda;
    if (r.scene.lambda0) os << " (tuned)";
    os << "\n";
    std::size_t fails = 0;
    for (const auto& c : r.conditions) {
        const std::string s = c.status == Status::Pass ? "PASS" : c.status == Status::Fail ? "FAIL" : "INFO";
        fails += c.status == Status::Fail;
        os << std::left << std::setw(5) << s << std::setw(9) << c.id << " margin " << std::setw(13)
           << std::setprecision(6) << c.margin << " " << c.detail << "\n";
    }
    for (const auto& c : r.diagnostics)
        os << "INFO " << std::left << std::setw(17) << c.id << " " << c.detail << "\n";
    os << (fails == 0 ? "all conditions pass" : std::to_string(fails) + " condition(s) fail") << "\n";
    return os.str();
}

}  // namespace wildcycle
