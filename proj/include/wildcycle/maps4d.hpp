#pragma once

// Diffeomorphisms of R^4 with evaluation, analytic Jacobian and inverse:
// the rotation blend Theta, the blended product map Psi, the box translation
// chi along an axis-aligned leg, and compositions of these.

#include <memory>
#include <string>
#include <vector>

#include "wildcycle/extalg4.hpp"
#include "wildcycle/smooth1d.hpp"
#include "wildcycle/types.hpp"

namespace wildcycle {

/// Product of four closed intervals.
struct Box4 {
    std::array<Interval, 4> axes{};

    [[nodiscard]] static Box4 cube(const Vec4& center, double radius);
    [[nodiscard]] bool contains(const Vec4& X) const;
    /// l-infinity distance from X to the box, 0 inside.
    [[nodiscard]] double distance(const Vec4& X) const;
};

class DiffeoMap4 {
public:
    virtual ~DiffeoMap4() = default;

    [[nodiscard]] virtual Vec4 eval(const Vec4& X) const = 0;
    [[nodiscard]] virtual Mat4 jacobian(const Vec4& X) const = 0;
    /// Preimage of Y. Throws ConvergenceError when an inner solve fails.
    [[nodiscard]] virtual Vec4 inverse(const Vec4& Y) const = 0;
    /// Boxes whose union contains the closure of {X : map(X) != X}.
    [[nodiscard]] virtual std::vector<Box4> support() const = 0;
    [[nodiscard]] virtual std::string tag() const = 0;
};

using MapPtr = std::shared_ptr<const DiffeoMap4>;

class IdentityMap4 final : public DiffeoMap4 {
public:
    [[nodiscard]] Vec4 eval(const Vec4& X) const override { return X; }
    [[nodiscard]] Mat4 jacobian(const Vec4&) const override { return Mat4::identity(); }
    [[nodiscard]] Vec4 inverse(const Vec4& Y) const override { return Y; }
    [[nodiscard]] std::vector<Box4> support() const override { return {}; }
    [[nodiscard]] std::string tag() const override { return "identity"; }
};

/// Rotation blend around the two fixed points. Near P the (y,z) pair turns by
/// omega_P; near Q both (x, y-10) and (z, w) turn by omega_Q. The angles are
/// built from bumps of the rotation-invariant radii, so each rotation keeps
/// its own angle and the inverse is the rotation by minus the same angle.
struct ThetaParams {
    Vec4 P{0.0, 0.0, 0.0, 0.0};
    Vec4 Q{0.0, 10.0, 0.0, 0.0};
    double large = 1.0 / 200.0;  // support box radius
    double small = 1.0 / 300.0;  // exact quarter-turn box radius
};

class ThetaMap final : public DiffeoMap4 {
public:
    explicit ThetaMap(ThetaParams params);

    [[nodiscard]] Vec4 eval(const Vec4& X) const override;
    [[nodiscard]] Mat4 jacobian(const Vec4& X) const override;
    [[nodiscard]] Vec4 inverse(const Vec4& Y) const override;
    [[nodiscard]] std::vector<Box4> support() const override;
    [[nodiscard]] std::string tag() const override { return "theta"; }

    /// Angle fields and their gradients.
    [[nodiscard]] double omega_P(const Vec4& X, Vec4* grad = nullptr) const;
    [[nodiscard]] double omega_Q(const Vec4& X, Vec4* grad = nullptr) const;
    [[nodiscard]] const ThetaParams& params() const { return p_; }

private:
    [[nodiscard]] Vec4 rotate(const Vec4& X, double sign) const;

    ThetaParams p_;
    Bump axis_;    // coordinate cut-off, plateau `small`, support `large`
    Bump radial_;  // radius cut-off, plateau sqrt(2) * `small`, support `large`
};

/// Psi_i = R_i F_i(x_i) + (1 - R_i) x_i with R_i the product of the box
/// cut-off over the other three coordinates.
class PsiMap final : public DiffeoMap4 {
public:
    PsiMap(std::shared_ptr<const ScalarMap1D> F, std::shared_ptr<const ScalarMap1D> G,
           std::shared_ptr<const ScalarMap1D> H, double lambda);

    [[nodiscard]] Vec4 eval(const Vec4& X) const override;
    [[nodiscard]] Mat4 jacobian(const Vec4& X) const override;
    [[nodiscard]] Vec4 inverse(const Vec4& Y) const override;
    [[nodiscard]] std::vector<Box4> support() const override;
    [[nodiscard]] std::string tag() const override { return "psi"; }

    [[nodiscard]] const ScalarMap1D& component(int i) const { return *comp_[i]; }
    [[nodiscard]] double inner_radius() const { return inner_; }

private:
    std::array<std::shared_ptr<const ScalarMap1D>, 4> comp_;
    double inner_;  // lambda^3
    Bump cut_;
};

/// Increasing map of the line that is the identity off [-b, zeta + b] and the
/// translation by zeta on [-c, c]: kappa(u) = -b + int_{-b}^u eta.
class LegProfile {
public:
    LegProfile(double zeta, double b, double c);

    [[nodiscard]] double operator()(double u) const;
    [[nodiscard]] double deriv(double u) const;
    [[nodiscard]] double inverse(double v) const;
    [[nodiscard]] const SmoothFn1D& density() const { return eta_; }
    [[nodiscard]] const std::vector<SolvedCoefficient>& coefficients() const { return coefficients_; }
    [[nodiscard]] double zeta() const { return zeta_; }
    [[nodiscard]] double margin() const { return e_; }

private:
    double zeta_, b_, c_, e_;
    SmoothFn1D eta_;
    std::vector<double> knots_;
    std::vector<double> cum_;  // kappa at each knot
    std::vector<SolvedCoefficient> coefficients_;
};

/// Box translation moving B(Y, c) exactly onto B(Z, c), supported in the tube
/// of radius a around the segment. Y and Z must differ in one coordinate.
class ChiMap final : public DiffeoMap4 {
public:
    ChiMap(const Vec4& Y, const Vec4& Z, double a, double b, double c);

    [[nodiscard]] Vec4 eval(const Vec4& X) const override;
    [[nodiscard]] Mat4 jacobian(const Vec4& X) const override;
    [[nodiscard]] Vec4 inverse(const Vec4& Y) const override;
    [[nodiscard]] std::vector<Box4> support() const override;
    [[nodiscard]] std::string tag() const override;

    [[nodiscard]] const LegProfile& profile() const { return kappa_; }
    [[nodiscard]] int axis() const { return axis_; }

private:
    [[nodiscard]] double blend(const Vec4& X, Vec4* grad = nullptr) const;

    Vec4 Y_, Z_;
    double a_, b_, c_;
    int axis_ = 0;
    double sign_ = 1.0;
    Bump cross_;
    LegProfile kappa_;
};

/// maps[0] is applied first.
class ComposedMap final : public DiffeoMap4 {
public:
    ComposedMap(std::vector<MapPtr> maps, std::string tag);

    [[nodiscard]] Vec4 eval(const Vec4& X) const override;
    [[nodiscard]] Mat4 jacobian(const Vec4& X) const override;
    [[nodiscard]] Vec4 inverse(const Vec4& Y) const override;
    [[nodiscard]] std::vector<Box4> support() const override;
    [[nodiscard]] std::string tag() const override { return tag_; }

    [[nodiscard]] const std::vector<MapPtr>& factors() const { return maps_; }

private:
    std::vector<MapPtr> maps_;
    std::string tag_;
};

/// The three-leg detour through C1..C4 with radii 1.1 - 0.1 n.
[[nodiscard]] std::shared_ptr<const ComposedMap> build_upsilon(const std::array<Vec4, 4>& C);

/// Central differences of `map` at X with step h.
[[nodiscard]] Mat4 fd_jacobian(const DiffeoMap4& map, const Vec4& X, double h = 1e-6);

}  // namespace wildcycle
