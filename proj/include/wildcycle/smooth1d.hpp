#pragma once

// Scalar ingredients: plateau bumps rho[a,b,c,d], smooth densities assembled
// from them, and the three diffeomorphisms of the line used by the product
// map (F, G as time-1 maps of compactly supported fields, H as an odd
// antiderivative of a positive density).

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wildcycle/types.hpp"

namespace wildcycle {

/// s(t) = e(t) / (e(t) + e(1 - t)) with e(t) = exp(-1/t) for t > 0, else 0.
[[nodiscard]] double smooth_step(double t);
[[nodiscard]] double smooth_step_deriv(double t);

/// Plateau [a,b] inside support [c,d]; c and d may be infinite.
struct BumpSpec {
    double a = 0.0;
    double b = 0.0;
    double c = -kInf;
    double d = kInf;
};

/// rho[a,b,c,d]: 1 on [a,b], 0 off [c,d], smooth transitions in between.
/// An infinite c (resp. d) means there is no left (resp. right) transition.
class Bump {
public:
    Bump() = default;
    explicit Bump(const BumpSpec& spec);

    [[nodiscard]] double operator()(double t) const {
        if (t < spec_.a) {
            if (left_width_ == 0.0) return 1.0;
            return t <= spec_.c ? 0.0 : smooth_step((t - spec_.c) / left_width_);
        }
        if (t > spec_.b) {
            if (right_width_ == 0.0) return 1.0;
            return t >= spec_.d ? 0.0 : smooth_step((spec_.d - t) / right_width_);
        }
        return 1.0;
    }

    [[nodiscard]] double deriv(double t) const {
        if (t < spec_.a) {
            if (left_width_ == 0.0 || t <= spec_.c) return 0.0;
            return smooth_step_deriv((t - spec_.c) / left_width_) / left_width_;
        }
        if (t > spec_.b) {
            if (right_width_ == 0.0 || t >= spec_.d) return 0.0;
            return -smooth_step_deriv((spec_.d - t) / right_width_) / right_width_;
        }
        return 0.0;
    }

    [[nodiscard]] const BumpSpec& spec() const { return spec_; }
    [[nodiscard]] Interval plateau() const { return {spec_.a, spec_.b}; }
    [[nodiscard]] Interval support() const { return {spec_.c, spec_.d}; }
    /// Finite a, b, c, d values: the points where the formula changes regime.
    [[nodiscard]] std::vector<double> knots() const;
    /// True when [lo, hi] avoids both transition zones.
    [[nodiscard]] bool constant_on(double lo, double hi) const;

private:
    BumpSpec spec_{};
    double left_width_ = 0.0;   // a - c, or 0 when there is no left transition
    double right_width_ = 0.0;  // d - b, or 0 when there is no right transition
};

struct Plateau {
    Interval where;
    double value = 0.0;
};

/// A smooth scalar function with exact value and derivative evaluation plus
/// the knot/plateau structure that makes quadrature exact on constant pieces.
class SmoothFn1D {
public:
    using Fn = std::function<double(double)>;

    SmoothFn1D(Fn value, Fn deriv, Interval support, std::vector<Plateau> plateaus,
               std::vector<double> knots);

    [[nodiscard]] double operator()(double t) const { return value_(t); }
    [[nodiscard]] double deriv(double t) const { return deriv_(t); }
    [[nodiscard]] const Interval& support() const { return support_; }
    [[nodiscard]] const std::vector<Plateau>& plateaus() const { return plateaus_; }
    [[nodiscard]] const std::vector<double>& knots() const { return knots_; }

    /// Plateau value if [lo, hi] lies inside a declared plateau.
    [[nodiscard]] std::optional<double> constant_on(double lo, double hi) const;

private:
    Fn value_;
    Fn deriv_;
    Interval support_;
    std::vector<Plateau> plateaus_;
    std::vector<double> knots_;
};

[[nodiscard]] SmoothFn1D build_bump(const BumpSpec& spec);

/// One weighted bump inside a density.
struct BumpTerm {
    double weight = 1.0;
    Bump bump;
};

/// sum_i w_i rho_i(t) + offset, optionally passed through exp(). Plateaus are
/// derived from the knots: a knot interval on which every term is constant is
/// a plateau of the result.
[[nodiscard]] SmoothFn1D bump_sum(std::vector<BumpTerm> terms, double offset, bool exponentiate = false);

/// Same function, but returning the given values verbatim on the given
/// intervals. Used where a plateau value is known exactly and the floating
/// point sum of the terms would round it.
[[nodiscard]] SmoothFn1D with_exact_plateaus(const SmoothFn1D& f, std::vector<Plateau> exact);

/// Integral over [lo, hi]: exact on plateau pieces, adaptive Gauss-Kronrod on
/// the rest. Throws QuadratureError when the error estimate stays above
/// rel_tol * max(1, |piece|).
[[nodiscard]] double integrate(const SmoothFn1D& f, double lo, double hi, double rel_tol = 1e-12);

struct SolvedCoefficient {
    std::string name;
    double value = 0.0;
    double residual = 0.0;  // integral - target
    int iterations = 0;
};

/// Find alpha with integral_{interval} family(alpha) = target, assuming the
/// integral is continuous and monotone in alpha. Expands the bracket by
/// doubling (at most 200 times) when none is given, then bisects to full
/// precision. |residual| <= 1e-10 * max(1, |target|) is guaranteed on return.
[[nodiscard]] SolvedCoefficient solve_monotone_coefficient(const std::function<SmoothFn1D(double)>& family,
                                                          double target, Interval interval,
                                                          std::optional<Interval> bracket = std::nullopt,
                                                          std::string name = "coefficient");

// ============================================================================
// Diffeomorphisms of the line
// ============================================================================

/// Smooth compactly supported odd field x' = f(x). The edge forms give f and
/// f' at x = support.hi - s directly from the distance s, which keeps full
/// relative precision near the edge where |x| is large.
struct FlowField1D {
    std::function<double(double)> f;
    std::function<double(double)> fprime;
    std::function<double(double)> f_edge;
    std::function<double(double)> fprime_edge;
    double lipschitz = 0.0;  // analytic upper bound on |f'|
    Interval support;
};

class ScalarMap1D {
public:
    virtual ~ScalarMap1D() = default;

    [[nodiscard]] virtual double operator()(double x) const = 0;
    [[nodiscard]] virtual double deriv(double x) const = 0;
    [[nodiscard]] virtual double inverse(double y) const = 0;
    /// Closed interval outside of which the map is the identity.
    [[nodiscard]] virtual Interval support() const = 0;
    [[nodiscard]] virtual std::string descriptor() const = 0;
    [[nodiscard]] virtual std::vector<SolvedCoefficient> coefficients() const { return {}; }
};

/// Closed-form flow of the unmodified field on the core |x| <= core_radius,
/// where the cut-off bump is identically 1.
class CoreFlow {
public:
    virtual ~CoreFlow() = default;
    [[nodiscard]] virtual double advance(double x, double t) const = 0;
    [[nodiscard]] virtual double advance_dx(double x, double t) const = 0;
    /// Backward time needed for the orbit of y to reach |x| = radius, or +inf.
    [[nodiscard]] virtual double backward_exit_time(double y, double radius) const = 0;
};

/// x' = -rate * x.
class LinearCoreFlow final : public CoreFlow {
public:
    explicit LinearCoreFlow(double rate) : rate_(rate) {}
    [[nodiscard]] double advance(double x, double t) const override;
    [[nodiscard]] double advance_dx(double x, double t) const override;
    [[nodiscard]] double backward_exit_time(double y, double radius) const override;

private:
    double rate_;
};

/// y' = -k (y^3 - s^2 y); u = y^2 follows a logistic law with limit s^2.
class CubicCoreFlow final : public CoreFlow {
public:
    CubicCoreFlow(double k, double sink) : k_(k), s2_(sink * sink) {}
    [[nodiscard]] double advance(double x, double t) const override;
    [[nodiscard]] double advance_dx(double x, double t) const override;
    [[nodiscard]] double backward_exit_time(double y, double radius) const override;

private:
    double k_;
    double s2_;
};

/// Time-1 map of an odd field that agrees with a closed-form flow on the core
/// and is cut off by a bump on the shell core_radius < |x| < outer_radius.
/// Shell travel times are integrated with adaptive Dormand-Prince steps in the
/// distance to the outer edge.
class FlowMap1D final : public ScalarMap1D {
public:
    FlowMap1D(std::string name, FlowField1D field, std::shared_ptr<const CoreFlow> core, double core_radius,
              double outer_radius);

    [[nodiscard]] double operator()(double x) const override;
    [[nodiscard]] double deriv(double x) const override;
    [[nodiscard]] double inverse(double y) const override;
    [[nodiscard]] Interval support() const override { return {-outer_, outer_}; }
    [[nodiscard]] std::string descriptor() const override;

    [[nodiscard]] const FlowField1D& field() const { return field_; }
    [[nodiscard]] double core_radius() const { return core_; }

    /// exp(int_0^1 f'(phi_t(x)) dt), integrated along the orbit.
    [[nodiscard]] double variational_deriv(double x) const;

private:
    // Shell orbits are parametrised by the distance s = outer - |x| to the
    // edge. The field has no zero strictly inside the shell, so
    // tau(s) = int_s^width ds' / |f| is the time an orbit needs to fall from
    // distance s to the core boundary.
    [[nodiscard]] double time_from_core(double s) const;
    /// Inverse of time_from_core: the distance reached after falling for tau.
    [[nodiscard]] double distance_at_time(double tau) const;
    /// int f'/f dx between the positions at distances s0 and s1.
    [[nodiscard]] double log_deriv_integral(double s0, double s1) const;
    [[nodiscard]] double at_distance(double s, double sign) const { return std::copysign(outer_ - s, sign); }

    std::string name_;
    FlowField1D field_;
    std::shared_ptr<const CoreFlow> core_flow_;
    double core_;
    double outer_;
};

/// H(z) = int_0^z h for z >= 0, extended oddly. Cumulative integrals at the
/// density's knots are cached so evaluation is exact on constant pieces.
class AntiderivativeMap1D final : public ScalarMap1D {
public:
    AntiderivativeMap1D(std::string name, SmoothFn1D density, double identity_from,
                        std::vector<SolvedCoefficient> coefficients);

    [[nodiscard]] double operator()(double z) const override;
    [[nodiscard]] double deriv(double z) const override { return density_(std::abs(z)); }
    [[nodiscard]] double inverse(double y) const override;
    [[nodiscard]] Interval support() const override { return {-identity_from_, identity_from_}; }
    [[nodiscard]] std::string descriptor() const override;
    [[nodiscard]] std::vector<SolvedCoefficient> coefficients() const override { return coefficients_; }

    [[nodiscard]] const SmoothFn1D& density() const { return density_; }

private:
    [[nodiscard]] double eval_nonneg(double z) const;
    [[nodiscard]] double inverse_nonneg(double y) const;

    std::string name_;
    SmoothFn1D density_;
    double identity_from_;
    std::vector<double> knots_;  // sorted, starts at 0
    std::vector<double> cum_;    // integral from 0 to knots_[i]
    std::vector<std::optional<double>> piece_const_;
    std::vector<SolvedCoefficient> coefficients_;
};

inline constexpr double kLambdaMin = 100.0;

/// Time-1 map of x' = -log(10) x rho(x), rho the cut-off at lambda^3 - 2 / lambda^3 - 1.
[[nodiscard]] std::shared_ptr<const FlowMap1D> build_F(double lambda);
/// Time-1 map of y' = -(log(10)/100)(y^3 - 100 y) rho(y), same cut-off.
[[nodiscard]] std::shared_ptr<const FlowMap1D> build_G(double lambda);
/// Odd antiderivative of the density with plateaus lambda on [0,1],
/// lambda^-2 on [2, lambda^2] and 1 beyond lambda^3 - 1.
[[nodiscard]] std::shared_ptr<const AntiderivativeMap1D> build_H(double lambda);

/// Inverse through the map's own inverse contract; kept as a free function
/// for symmetry with the other operations.
[[nodiscard]] inline double scalar_inverse(const ScalarMap1D& map, double y) { return map.inverse(y); }

}  // namespace wildcycle
