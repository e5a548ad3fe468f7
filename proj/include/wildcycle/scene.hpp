#pragma once

// Named points, regions and constants of the construction, the constraint
// ledger that makes them consistent, and JSON persistence.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wildcycle/maps4d.hpp"
#include "wildcycle/smooth1d.hpp"
#include "wildcycle/types.hpp"

namespace wildcycle {

/// Closed-form region with exact membership and l-infinity distance.
class Region {
public:
    enum class Kind { Box, Tube, Union };

    [[nodiscard]] static Region box(const Box4& b, std::string name = "box");
    /// B(X, l): the closed l-infinity ball.
    [[nodiscard]] static Region cube(const Vec4& center, double radius, std::string name = "cube");
    /// C(X, Y, l): union of the balls B(tX + (1-t)Y, l), 0 <= t <= 1.
    [[nodiscard]] static Region tube(const Vec4& X, const Vec4& Y, double radius, std::string name = "tube");
    [[nodiscard]] static Region unite(std::vector<Region> parts, std::string name = "union");
    /// outer minus an open box, stored as the closed slabs that remain.
    [[nodiscard]] static Region box_minus_open_box(const Box4& outer, const Box4& hole, std::string name);

    [[nodiscard]] bool contains(const Vec4& X) const { return distance(X) == 0.0; }
    [[nodiscard]] double distance(const Vec4& X) const;
    /// Smallest box containing the region.
    [[nodiscard]] Box4 bounds() const;
    [[nodiscard]] Kind kind() const { return kind_; }
    [[nodiscard]] const std::string& name() const { return name_; }
    [[nodiscard]] const std::vector<Region>& parts() const { return parts_; }

private:
    Kind kind_ = Kind::Box;
    std::string name_;
    Box4 box_{};
    Vec4 from_{}, to_{};
    double radius_ = 0.0;
    std::vector<Region> parts_;
};

/// One machine-checked consistency constraint. Strict constraints need a
/// positive margin, the others a non-negative one.
struct LedgerEntry {
    std::string id;
    std::string description;
    double margin = 0.0;
    bool strict = true;
    [[nodiscard]] bool ok() const { return strict ? margin > 0.0 : margin >= 0.0; }
};

struct Scene {
    int schema_version = 1;
    double lambda = 100.0;
    Vec4 P{0, 0, 0, 0};
    Vec4 Q{0, 10, 0, 0};
    std::array<Vec4, 4> C{Vec4{0, 10, 5, 0}, Vec4{10, 10, 5, 0}, Vec4{10, 0, 5, 0}, Vec4{10, 0, 0, 0}};
    std::array<double, 3> tube_radii{1.0, 0.7, 0.4};
    double theta_large = 1.0 / 200.0;
    double theta_small = 1.0 / 300.0;
    double xy_extent = 20.0;            // A = [-xy, xy]^2 x [-zw, zw]^2
    std::optional<double> zw_extent;    // defaults to lambda^2
    double b_threshold = 1.0;           // B: max(|z|, |w|) >= b_threshold
    double bp_threshold = 7.0;          // B': max(|z|, |w|) >= bp_threshold
    double l1_half_length = 0.4;        // l1 = (10 + x, 0, 0, 0), |x| <= this
    double varpi_radius = 6.0;          // varpi = (0, 10, z, w), max(|z|, |w|) <= this
    bool upsilon_enabled = true;
    std::vector<SolvedCoefficient> solved_coefficients;
    std::optional<double> lambda0;
    std::optional<double> K;
    std::string name = "default";

    [[nodiscard]] double zw() const { return zw_extent.value_or(lambda * lambda); }
    /// Radii (a, b, c) of leg i (0-based): l_n = 1.1 - 0.1 n.
    [[nodiscard]] std::array<double, 3> chi_radii(int leg) const;

    [[nodiscard]] Region A() const;
    [[nodiscard]] Region B() const;
    [[nodiscard]] Region Bp() const;
    /// A \ B, taken closed.
    [[nodiscard]] Region Cregion() const;
    [[nodiscard]] Region D() const;
    [[nodiscard]] Region Bl(const Vec4& center) const { return Region::cube(center, theta_large, "B_l"); }
    [[nodiscard]] Region Bs(const Vec4& center) const { return Region::cube(center, theta_small, "B_s"); }

    /// Every constraint, satisfied or not.
    [[nodiscard]] std::vector<LedgerEntry> ledger() const;
};

/// Default scene for lambda with the ledger validated. Throws SceneError
/// naming the first violated constraint.
[[nodiscard]] Scene make_scene(double lambda);
void validate_scene(const Scene& scene);

/// Distance between a point and a region, 0 inside.
[[nodiscard]] inline double region_distance(const Region& region, const Vec4& X) { return region.distance(X); }

/// Maps built from a scene.
struct SceneMaps {
    std::shared_ptr<const FlowMap1D> F;
    std::shared_ptr<const FlowMap1D> G;
    std::shared_ptr<const AntiderivativeMap1D> H;
    std::shared_ptr<const ThetaMap> theta;
    std::shared_ptr<const PsiMap> psi;
    MapPtr upsilon;  // identity when the scene disables it
    MapPtr phi;
    MapPtr omega;
};

[[nodiscard]] SceneMaps build_maps(const Scene& scene);
/// Copies the solved coefficients of the maps into the scene.
void record_coefficients(Scene& scene, const SceneMaps& maps);

/// JSON text of the scene (keys sorted, full precision).
[[nodiscard]] std::string scene_to_json(const Scene& scene);
/// Throws SceneError("schema", ...) naming the offending field path, then
/// validates the ledger.
[[nodiscard]] Scene scene_from_json(const std::string& text);
[[nodiscard]] Scene load_scene(const std::string& path);
void save_scene(const Scene& scene, const std::string& path);

}  // namespace wildcycle
