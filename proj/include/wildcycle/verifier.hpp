#pragma once

// Numerical certification of every checkable condition of the construction:
// sampled grids plus refinement, exact structural margins where the maps
// factor coordinate-wise, orbit certificates for the cycle, and the tuning of
// lambda against the volume-expansion requirement.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wildcycle/extalg4.hpp"
#include "wildcycle/maps4d.hpp"
#include "wildcycle/scene.hpp"

namespace wildcycle {

enum class Status { Pass, Fail, Evidence };
[[nodiscard]] std::string to_string(Status s);

using NamedValues = std::vector<std::pair<std::string, double>>;

struct ConditionReport {
    std::string id;
    Status status = Status::Fail;
    double margin = 0.0;  // positive (or zero for non-strict checks) means pass
    std::size_t samples = 0;
    std::optional<Vec4> witness;  // worst sample; always set on failure
    std::string detail;
    NamedValues values;  // auxiliary measurements, in a fixed order
};

struct VerificationConfig {
    std::optional<double> lambda;  // overrides the scene's lambda
    bool auto_lambda = false;
    double lambda_cap = 1e4;
    std::uint64_t seed = 1;
    int grid = 20;            // points per axis on the 4D sub-grids
    int boundary_grid = 11;   // points per axis on each 3D facet
    int line_samples = 1000;  // random samples for 1D ratio checks; grids use ten times as many
    int support_samples = 4096;
    int plumbing_samples = 1000;  // inverse and Jacobian diagnostics
    int orbit_samples = 33;       // parameter grid per segment
    double orbit_tol = 1e-8;
    int orbit_max = 500;
    double tol = 1e-12;   // exactness tolerance, relative to max(1, |X|)
    unsigned threads = 0;  // 0: WILDCYCLE_THREADS, else hardware concurrency

    /// Throws SpecError on a non-positive tolerance or a resolution below 2.
    void validate() const;
};

/// FNV-1a 64 over the canonical JSON of the config (threads excluded) and the
/// scene.
[[nodiscard]] std::uint64_t config_hash(const VerificationConfig& config, const Scene& scene);
[[nodiscard]] std::string hex_hash(std::uint64_t h);

// ----------------------------------------------------------------------------
// Deterministic data-parallel reduction
// ----------------------------------------------------------------------------

/// Threads to use: `requested` if non-zero, else WILDCYCLE_THREADS, else the
/// hardware concurrency.
[[nodiscard]] unsigned thread_count(unsigned requested = 0);

struct ArgMin {
    double value = kInf;
    std::size_t index = static_cast<std::size_t>(-1);
};

/// min over i < count of f(i); ties go to the lowest index and NaN counts as
/// -inf, so the result does not depend on the thread count. The first
/// exception (lowest index) is rethrown.
[[nodiscard]] ArgMin parallel_argmin(std::size_t count, const std::function<double(std::size_t)>& f,
                                     unsigned threads);

/// Point `index` of the n^4 grid over `box` (endpoints included).
[[nodiscard]] Vec4 grid_point(const Box4& box, int n, std::size_t index);

/// Halton point in [0, 1)^4 (bases 2, 3, 5, 7).
[[nodiscard]] Vec4 halton4(std::size_t index);

// ----------------------------------------------------------------------------
// Orbits
// ----------------------------------------------------------------------------

struct OrbitResult {
    std::vector<Vec4> points;  // points[0] is the start
    bool converged = false;
    int steps = 0;  // iterations until within tolerance of the target
    double final_distance = kInf;
    std::optional<int> escaped_at;  // first index outside the trapping region
    std::string note;
};

/// Iterates map (or its inverse) until within `eps` of `target`, for at most
/// nmax steps. Stops when an iterate leaves `trap` or an inversion fails.
[[nodiscard]] OrbitResult iterate_orbit(const DiffeoMap4& map, const Vec4& start, bool forward, const Vec4& target,
                                        double eps, int nmax, const Region* trap = nullptr);

/// Runs exactly `steps` iterations; stops early only when an inversion fails.
[[nodiscard]] OrbitResult trace_orbit(const DiffeoMap4& map, const Vec4& start, bool forward, int steps);

struct DominationReport {
    double max_ratio = 0.0;  // max over windows of the k-th over the (k+1)-th smallest singular value
    std::size_t windows = 0;
    std::size_t worst_window = 0;
};

/// Singular-gap surrogate for an l-dominated splitting with a k-dimensional
/// contracting bundle along a finite orbit: jacobians[i] = df(x_i), windows M_i = df(x_{i+l-1}) ... df(x_i).
/// Throws SpecError when the window exceeds the orbit or k is outside [1, 3].
[[nodiscard]] DominationReport check_finite_domination(const std::vector<Mat4>& jacobians, int window, int k);

// ----------------------------------------------------------------------------
// Generic checks
// ----------------------------------------------------------------------------

/// map(X) = X to tol * max(1, |X|) at exterior points of `claimed`: expanding
/// shells around each part, a fill of the map's declared support boxes and a
/// Halton fill of the enlarged bounding box.
[[nodiscard]] ConditionReport check_support(const std::string& id, const DiffeoMap4& map, const Region& claimed,
                                            int samples, double tol, unsigned threads);

struct FixedPointReport {
    double residual = kInf;
    Spectrum4 spectrum;
    Mat4 jacobian;
};
[[nodiscard]] FixedPointReport fixed_point(const DiffeoMap4& map, const Vec4& X);

/// Index `index` with the `nonreal` smallest-modulus unstable eigenvalues
/// non-real (all four when nonreal == 4). Margin: min of the hyperbolicity gap
/// and the smallest |Im| among the eigenvalues required to be non-real;
/// negative when the index is wrong.
[[nodiscard]] ConditionReport check_fixed_spectrum(const std::string& id, const DiffeoMap4& map, const Vec4& X,
                                                   int index, int nonreal, double tol);

/// Boundary grid of a box: m^3 points on each of the 8 facets.
[[nodiscard]] std::vector<Vec4> facet_grid(const Box4& box, int m);

/// Inward l-infinity depth of Y in the box (negative outside).
[[nodiscard]] double inward_depth(const Vec4& Y, const Box4& box);

/// Depth of Y in the interior of A minus the open threshold box
/// max(|z|, |w|) < threshold.
[[nodiscard]] double threshold_depth(const Vec4& Y, const Box4& A, double threshold);

// ----------------------------------------------------------------------------
// Expansion and tuning
// ----------------------------------------------------------------------------

struct GridMin {
    double coarse = kInf;  // (n/2)-point grids
    double fine = kInf;    // min over both grids, hence non-increasing
    Vec4 witness{};
    std::size_t samples = 0;
    [[nodiscard]] bool agrees(double rel = 0.05) const;
};

/// Minimum of m(Lambda^3(J(X))) over the union of n^4 grids on the boxes,
/// together with the (n/2)^4 grids.
[[nodiscard]] GridMin wedge3_grid_min(const std::vector<Box4>& boxes, int n,
                                      const std::function<Mat4(const Vec4&)>& jacobian, unsigned threads);

/// Grid minimum followed by zoom refinement: the `candidates` lowest points of
/// the n^4 grids are re-gridded on boxes that shrink by `shrink` per level, for
/// `levels` levels. `coarse` is the minimum before the last level, `fine` the
/// final one.
[[nodiscard]] GridMin wedge3_zoom_min(const std::vector<Box4>& boxes, int n,
                                      const std::function<Mat4(const Vec4&)>& jacobian, unsigned threads,
                                      int candidates = 8, int levels = 8, double shrink = 0.25);

struct ExpansionResult {
    double lambda = 0.0;
    GridMin direct;    // m(Lambda^3 dOmega) over C, uniform plus preimage-targeted boxes
    GridMin phi;       // same for dPhi
    double fprime_min = 0.0;  // over the x-extent of C
    double gprime_min = 0.0;  // over the y-extent of C
    double c_theta = 0.0;
    double c_upsilon = 0.0;
    double factorized = 0.0;  // c_Upsilon c_Theta min(F'G' lambda, F' lambda^2, G' lambda^2)
    [[nodiscard]] bool passes(double K = 1.0) const;
};

struct TuningStep {
    double lambda;
    double direct_min;
    double factorized;
    bool agrees;
};

struct TuningResult {
    std::optional<double> lambda0;
    double K = 0.0;  // measured direct minimum at lambda0 (or at the cap)
    std::vector<TuningStep> steps;
    std::string limiting;  // what kept the last candidate below 1
    ExpansionResult last;
};

// ----------------------------------------------------------------------------
// Full run
// ----------------------------------------------------------------------------

struct FullReport {
    VerificationConfig config;
    std::uint64_t hash = 0;
    Scene scene;  // lambda actually used; lambda0, K and coefficients recorded
    std::vector<ConditionReport> conditions;
    NamedValues constants;
    std::vector<ConditionReport> diagnostics;  // evidence-only extras outside the condition list
    std::optional<TuningResult> tuning;

    [[nodiscard]] bool passed() const;
    [[nodiscard]] const ConditionReport* find(const std::string& id) const;
    [[nodiscard]] std::vector<std::string> failed_ids() const;
};

/// Every condition identifier, in report order.
[[nodiscard]] const std::vector<std::string>& condition_ids();

class Verifier {
public:
    Verifier(Scene scene, VerificationConfig config);

    [[nodiscard]] FullReport run_all();

    // Condition groups at the current lambda, exposed for the tests and the
    // acceptance harness.
    [[nodiscard]] std::vector<ConditionReport> scalar_conditions();
    [[nodiscard]] std::vector<ConditionReport> theta_conditions();
    [[nodiscard]] std::vector<ConditionReport> psi_conditions();
    [[nodiscard]] std::vector<ConditionReport> upsilon_conditions();
    [[nodiscard]] std::vector<ConditionReport> phi_conditions();
    [[nodiscard]] std::vector<ConditionReport> local_conditions();

    /// Phi(A) in int(A) and Phi(B) in int(B') (Omega: int(B)), sampled on the
    /// facet grids and derived exactly from the coordinate-wise images.
    [[nodiscard]] ConditionReport check_trapping(const std::string& id, const DiffeoMap4& map, double image_threshold);
    /// Four orbit certificates for the cycle of `map` between P and Q.
    [[nodiscard]] ConditionReport check_cycle(const std::string& id, const DiffeoMap4& map);
    /// Avoidance of D by the iterates of a segment family, with convergence.
    [[nodiscard]] ConditionReport check_avoidance(const std::string& id, const std::vector<Vec4>& starts,
                                                  bool forward, const Vec4& target, int first_n);
    [[nodiscard]] ExpansionResult check_expansion(double lambda);
    [[nodiscard]] TuningResult auto_tune_lambda();

    /// |Omega(Omega^-1(Y)) - Y|_inf and |Omega^-1(Omega(X)) - X|_inf against
    /// 1e-8 on random points of A.
    [[nodiscard]] ConditionReport plumbing_inverse(int samples);
    /// Analytic Jacobian of Omega against central differences (step 1e-6)
    /// against 1e-5 relative, on random points of A.
    [[nodiscard]] ConditionReport plumbing_jacobian(int samples);

    [[nodiscard]] std::vector<Vec4> l1_samples() const;
    [[nodiscard]] std::vector<Vec4> l2_samples() const;
    [[nodiscard]] std::vector<Vec4> varpi_samples() const;

    [[nodiscard]] const Scene& scene() const { return scene_; }
    [[nodiscard]] const SceneMaps& maps() const { return maps_; }
    [[nodiscard]] const VerificationConfig& config() const { return config_; }
    /// Rebuilds the maps at a new lambda.
    void set_lambda(double lambda);

    /// lambda-independent constants, measured once.
    [[nodiscard]] GridMin c_theta();
    [[nodiscard]] GridMin c_upsilon();

private:
    [[nodiscard]] std::uint64_t salt(const std::string& id) const;

    Scene scene_;
    VerificationConfig config_;
    SceneMaps maps_;
    unsigned threads_;
    std::optional<GridMin> c_theta_;
    std::optional<GridMin> c_upsilon_;
};

[[nodiscard]] FullReport run_all(const Scene& scene, const VerificationConfig& config);

[[nodiscard]] std::string report_to_json(const FullReport& report);
[[nodiscard]] std::string report_summary(const FullReport& report);

}  // namespace wildcycle
