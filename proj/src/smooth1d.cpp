#include "wildcycle/smooth1d.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <numbers>
#include <sstream>

namespace wildcycle {

double smooth_step(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return 1.0 / (1.0 + std::exp(1.0 / t - 1.0 / (1.0 - t)));
}

double smooth_step_deriv(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    const double arg = 1.0 / t - 1.0 / (1.0 - t);
    if (std::abs(arg) > 700.0) return 0.0;
    const double e = std::exp(arg);
    // s (1 - s) = e / (1 + e)^2, written to stay accurate at both ends.
    return e / ((1.0 + e) * (1.0 + e)) * (1.0 / (t * t) + 1.0 / ((1.0 - t) * (1.0 - t)));
}

// ----------------------------------------------------------------------------
// Bump
// ----------------------------------------------------------------------------

Bump::Bump(const BumpSpec& s) : spec_(s) {
    if (std::isnan(s.a) || std::isnan(s.b) || std::isnan(s.c) || std::isnan(s.d))
        throw SpecError("bump parameters must not be NaN");
    if (s.a > s.b) throw SpecError("bump plateau is malformed (a > b)");
    if (s.c > s.a) throw SpecError("bump support starts after the plateau (c > a)");
    if (s.d < s.b) throw SpecError("bump support ends before the plateau (d < b)");
    if (std::isfinite(s.c)) {
        if (!(s.a > s.c)) throw SpecError("bump needs a left transition of positive width");
        left_width_ = s.a - s.c;
    } else if (std::isfinite(s.a)) {
        left_width_ = 0.0;
    }
    if (std::isfinite(s.d)) {
        if (!(s.d > s.b)) throw SpecError("bump needs a right transition of positive width");
        right_width_ = s.d - s.b;
    }
}

std::vector<double> Bump::knots() const {
    std::vector<double> k;
    for (double v : {spec_.c, spec_.a, spec_.b, spec_.d})
        if (std::isfinite(v)) k.push_back(v);
    return k;
}

bool Bump::constant_on(double lo, double hi) const {
    const bool left_free = left_width_ == 0.0;
    const bool right_free = right_width_ == 0.0;
    // Constant pieces: (-inf, c], [a, b], [d, inf), merged when a side has no transition.
    const double plateau_lo = left_free ? -kInf : spec_.a;
    const double plateau_hi = right_free ? kInf : spec_.b;
    if (lo >= plateau_lo && hi <= plateau_hi) return true;
    if (!left_free && hi <= spec_.c) return true;
    if (!right_free && lo >= spec_.d) return true;
    return false;
}

// ----------------------------------------------------------------------------
// SmoothFn1D
// ----------------------------------------------------------------------------

SmoothFn1D::SmoothFn1D(Fn value, Fn deriv, Interval support, std::vector<Plateau> plateaus,
                       std::vector<double> knots)
    : value_(std::move(value)),
      deriv_(std::move(deriv)),
      support_(support),
      plateaus_(std::move(plateaus)),
      knots_(std::move(knots)) {
    std::sort(knots_.begin(), knots_.end());
    knots_.erase(std::unique(knots_.begin(), knots_.end()), knots_.end());
}

std::optional<double> SmoothFn1D::constant_on(double lo, double hi) const {
    for (const auto& p : plateaus_)
        if (p.where.lo <= lo && hi <= p.where.hi) return p.value;
    return std::nullopt;
}

SmoothFn1D build_bump(const BumpSpec& spec) {
    Bump b(spec);
    std::vector<Plateau> plateaus{{b.plateau(), 1.0}};
    if (std::isfinite(spec.c)) plateaus.push_back({{-kInf, spec.c}, 0.0});
    if (std::isfinite(spec.d)) plateaus.push_back({{spec.d, kInf}, 0.0});
    if (!std::isfinite(spec.c) && std::isfinite(spec.a)) plateaus[0].where.lo = -kInf;
    return SmoothFn1D([b](double t) { return b(t); }, [b](double t) { return b.deriv(t); }, b.support(),
                      std::move(plateaus), b.knots());
}

SmoothFn1D bump_sum(std::vector<BumpTerm> terms, double offset, bool exponentiate) {
    auto shared = std::make_shared<const std::vector<BumpTerm>>(std::move(terms));
    auto inner = [shared, offset](double t) {
        double s = offset;
        for (const auto& term : *shared) {
            const double v = term.bump(t);
            if (v != 0.0) s += term.weight * v;
        }
        return s;
    };
    auto inner_deriv = [shared](double t) {
        double s = 0.0;
        for (const auto& term : *shared) s += term.weight * term.bump.deriv(t);
        return s;
    };

    std::vector<double> knots;
    for (const auto& term : *shared)
        for (double k : term.bump.knots()) knots.push_back(k);
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

    SmoothFn1D::Fn value, deriv;
    if (exponentiate) {
        value = [inner](double t) { return std::exp(inner(t)); };
        deriv = [inner, inner_deriv](double t) { return std::exp(inner(t)) * inner_deriv(t); };
    } else {
        value = inner;
        deriv = inner_deriv;
    }

    // Walk the knot intervals; where every term is constant the sum is a plateau.
    std::vector<Plateau> plateaus;
    std::vector<double> edges{-kInf};
    edges.insert(edges.end(), knots.begin(), knots.end());
    edges.push_back(kInf);
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        const double lo = edges[i], hi = edges[i + 1];
        const bool flat = std::all_of(shared->begin(), shared->end(),
                                      [&](const BumpTerm& term) { return term.bump.constant_on(lo, hi); });
        if (!flat) continue;
        double probe;
        if (std::isfinite(lo) && std::isfinite(hi))
            probe = 0.5 * (lo + hi);
        else if (std::isfinite(lo))
            probe = lo + 1.0;
        else if (std::isfinite(hi))
            probe = hi - 1.0;
        else
            probe = 0.0;
        const double v = value(probe);
        if (!plateaus.empty() && plateaus.back().where.hi == lo && plateaus.back().value == v)
            plateaus.back().where.hi = hi;
        else
            plateaus.push_back({{lo, hi}, v});
    }

    Interval support{-kInf, kInf};
    if (!exponentiate && offset == 0.0 && !shared->empty()) {
        support = {kInf, -kInf};
        for (const auto& term : *shared) {
            support.lo = std::min(support.lo, term.bump.support().lo);
            support.hi = std::max(support.hi, term.bump.support().hi);
        }
    }
    return SmoothFn1D(std::move(value), std::move(deriv), support, std::move(plateaus), std::move(knots));
}

SmoothFn1D with_exact_plateaus(const SmoothFn1D& f, std::vector<Plateau> exact) {
    auto table = std::make_shared<const std::vector<Plateau>>(exact);
    auto value = [f, table](double t) {
        for (const auto& p : *table)
            if (p.where.contains(t)) return p.value;
        return f(t);
    };
    auto deriv = [f, table](double t) {
        for (const auto& p : *table)
            if (p.where.contains(t)) return 0.0;
        return f.deriv(t);
    };
    std::vector<Plateau> plateaus = f.plateaus();
    for (auto& p : plateaus)
        for (const auto& e : exact)
            if (e.where.lo <= p.where.lo && p.where.hi <= e.where.hi) p.value = e.value;
    for (const auto& e : exact) {
        bool covered = false;
        for (const auto& p : plateaus) covered = covered || (p.where.lo <= e.where.lo && e.where.hi <= p.where.hi);
        if (!covered) plateaus.push_back(e);
    }
    return SmoothFn1D(value, deriv, f.support(), std::move(plateaus), f.knots());
}

// ----------------------------------------------------------------------------
// Quadrature and coefficient solving
// ----------------------------------------------------------------------------

namespace {

double composite_gk(const SmoothFn1D& f, double lo, double hi, int panels) {
    using GK = boost::math::quadrature::gauss_kronrod<double, 21>;
    const double h = (hi - lo) / panels;
    double sum = 0.0;
    for (int i = 0; i < panels; ++i) {
        const double a = lo + i * h, b = i + 1 == panels ? hi : lo + (i + 1) * h;
        sum += GK::integrate([&f](double t) { return f(t); }, a, b, 0);
    }
    return sum;
}

// Composite 21-point Kronrod with panel doubling; the error estimate is the
// change between successive refinements.
double integrate_piece(const SmoothFn1D& f, double lo, double hi, double rel_tol) {
    if (lo == hi) return 0.0;
    if (auto v = f.constant_on(lo, hi)) return *v * (hi - lo);
    double prev = composite_gk(f, lo, hi, 1);
    double err = kInf;
    // Far from the origin the abscissae themselves carry rounding of order
    // eps * |t|, which bounds what any refinement can achieve.
    const double floor = 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lo), std::abs(hi)) /
                         (hi - lo);
    // The floor is accepted only once refinement stops paying off.
    for (int panels = 2; panels <= 4096; panels *= 2) {
        const double cur = composite_gk(f, lo, hi, panels);
        const double last_err = err;
        err = std::abs(cur - prev);
        prev = cur;
        if (!std::isfinite(cur)) break;
        const double scale = std::max(1.0, std::abs(cur));
        if (err <= rel_tol * scale) return cur;
        if (err <= (rel_tol + floor) * scale && err > 0.5 * last_err) return cur;
    }
    std::ostringstream os;
    os << "quadrature did not converge on [" << lo << ", " << hi << "], error estimate " << err;
    throw QuadratureError(os.str());
}

}  // namespace

double integrate(const SmoothFn1D& f, double lo, double hi, double rel_tol) {
    if (lo > hi) return -integrate(f, hi, lo, rel_tol);
    const auto& knots = f.knots();
    double total = 0.0;
    double cursor = lo;
    for (auto it = std::upper_bound(knots.begin(), knots.end(), lo); it != knots.end() && *it < hi; ++it) {
        total += integrate_piece(f, cursor, *it, rel_tol);
        cursor = *it;
    }
    total += integrate_piece(f, cursor, hi, rel_tol);
    return total;
}

SolvedCoefficient solve_monotone_coefficient(const std::function<SmoothFn1D(double)>& family, double target,
                                             Interval interval, std::optional<Interval> bracket, std::string name) {
    int evaluations = 0;
    auto J = [&](double alpha) {
        ++evaluations;
        return integrate(family(alpha), interval.lo, interval.hi) - target;
    };

    double lo = bracket ? bracket->lo : -1.0;
    double hi = bracket ? bracket->hi : 1.0;
    double jlo = J(lo), jhi = J(hi);
    if (std::isnan(jlo) || std::isnan(jhi)) throw QuadratureError("coefficient integral is NaN at the bracket");
    const bool increasing = jhi >= jlo;
    auto below = [&](double j) { return increasing ? j < 0.0 : j > 0.0; };

    int doublings = 0;
    while (below(jhi) || (!below(jlo) && jlo != 0.0)) {
        if (bracket) throw BracketError(name + ": the supplied bracket does not straddle the target");
        if (++doublings > 200) throw BracketError(name + ": target unreachable after 200 bracket doublings");
        const double width = hi - lo;
        if (below(jhi)) {
            lo = hi;
            jlo = jhi;
            hi += 2.0 * width;
            jhi = J(hi);
        } else {
            hi = lo;
            jhi = jlo;
            lo -= 2.0 * width;
            jlo = J(lo);
        }
        if (std::isnan(jlo) || std::isnan(jhi)) throw QuadratureError(name + ": integral became NaN");
    }

    double best = std::abs(jlo) <= std::abs(jhi) ? lo : hi;
    double best_res = std::min(std::abs(jlo), std::abs(jhi));
    for (int it = 0; it < 200 && best_res > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double jm = J(mid);
        if (std::abs(jm) < best_res) {
            best_res = std::abs(jm);
            best = mid;
        }
        if (below(jm))
            lo = mid;
        else
            hi = mid;
    }
    // At the last ulps the computed integral is not monotone; a nearby
    // representable coefficient can round closer to the target.
    for (int k = 1, dir = 1; k <= 64 && best_res > 0.0; dir = -dir, k += dir > 0) {
        double c = best;
        for (int s = 0; s < k; ++s) c = std::nextafter(c, dir > 0 ? kInf : -kInf);
        const double jc = std::abs(J(c));
        if (jc < best_res) best_res = jc, best = c;
    }
    const double residual = J(best);
    if (std::abs(residual) > 1e-10 * std::max(1.0, std::abs(target)))
        throw ConvergenceError(name + ": bisection stalled above the residual tolerance");
    return {std::move(name), best, residual, evaluations};
}

// ----------------------------------------------------------------------------
// Core flows
// ----------------------------------------------------------------------------

double LinearCoreFlow::advance(double x, double t) const {
    if (t == 1.0 && rate_ == std::numbers::ln10) return x / 10.0;
    return x * std::exp(-rate_ * t);
}

double LinearCoreFlow::advance_dx(double, double t) const {
    if (t == 1.0 && rate_ == std::numbers::ln10) return 0.1;
    return std::exp(-rate_ * t);
}

double LinearCoreFlow::backward_exit_time(double y, double radius) const {
    if (std::abs(y) >= radius) return 0.0;
    if (y == 0.0) return kInf;
    return std::log(radius / std::abs(y)) / rate_;
}

double CubicCoreFlow::advance(double x, double t) const {
    if (x == 0.0) return 0.0;
    const double u0 = x * x;
    const double E = std::exp(2.0 * k_ * s2_ * t);
    const double den = s2_ + u0 * (E - 1.0);
    if (!(den > 0.0)) throw IntegrationError("cubic flow leaves every bounded set", x);
    return std::copysign(std::sqrt(s2_ * u0 * E / den), x);
}

double CubicCoreFlow::advance_dx(double x, double t) const {
    const double u0 = x * x;
    const double E = std::exp(2.0 * k_ * s2_ * t);
    const double den = s2_ + u0 * (E - 1.0);
    if (!(den > 0.0)) throw IntegrationError("cubic flow leaves every bounded set", x);
    return s2_ * std::sqrt(s2_) * std::sqrt(E) / (den * std::sqrt(den));
}

double CubicCoreFlow::backward_exit_time(double y, double radius) const {
    const double u0 = y * y, R2 = radius * radius;
    if (u0 >= R2) return 0.0;
    if (u0 <= s2_) return kInf;
    const double E = R2 * (u0 - s2_) / (u0 * (R2 - s2_));
    return -std::log(E) / (2.0 * k_ * s2_);
}

// ----------------------------------------------------------------------------
// FlowMap1D
// ----------------------------------------------------------------------------

FlowMap1D::FlowMap1D(std::string name, FlowField1D field, std::shared_ptr<const CoreFlow> core, double core_radius,
                     double outer_radius)
    : name_(std::move(name)),
      field_(std::move(field)),
      core_flow_(std::move(core)),
      core_(core_radius),
      outer_(outer_radius) {
    if (!(core_radius > 0.0 && outer_radius > core_radius)) throw SpecError("flow map needs 0 < core < outer");
}

namespace {

namespace ode = boost::numeric::odeint;
using Scalar = std::array<double, 1>;

}  // namespace

double FlowMap1D::time_from_core(double s) const {
    const double width = outer_ - core_;
    if (s >= width) return 0.0;
    const auto& fe = field_.f_edge;
    if (fe(s) == 0.0) return kInf;
    Scalar tau{0.0};
    auto rhs = [&](const Scalar&, Scalar& d, double r) { d[0] = 1.0 / fe(r); };
    ode::integrate_adaptive(ode::make_controlled(1e-300, 1e-13, ode::runge_kutta_dopri5<Scalar>()), rhs, tau, width,
                            s, -std::min(1e-3, width - s));
    return tau[0];
}

double FlowMap1D::distance_at_time(double target) const {
    const double width = outer_ - core_;
    if (target <= 0.0) return width;
    const auto& fe = field_.f_edge;
    auto rhs = [&](const Scalar&, Scalar& d, double r) { d[0] = 1.0 / fe(r); };
    auto stepper = ode::make_controlled(1e-300, 1e-13, ode::runge_kutta_dopri5<Scalar>());

    Scalar tau{0.0};
    double s = width, h = -1e-3;
    for (long n = 0; n < 1'000'000; ++n) {
        if (s + h <= 0.0) h = -0.5 * s;
        Scalar trial = tau;
        double st = s, ht = h;
        if (stepper.try_step(rhs, trial, st, ht) == ode::fail) {
            if (std::abs(ht) < 1e-300) throw IntegrationError(name_ + ": step size fell below the floor", target);
            h = ht;
            continue;
        }
        if (std::isfinite(trial[0]) && trial[0] < target) {
            tau = trial;
            s = st;
            h = ht;
            continue;
        }
        // The target time is reached inside the accepted step [st, s]; locate
        // it by re-integrating the partial step under error control.
        double lo = 0.0, hi = s - st;
        while (hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * s) {
            const double mid = 0.5 * (lo + hi);
            Scalar probe = tau;
            ode::integrate_adaptive(stepper, rhs, probe, s, s - mid, -mid);
            if (std::isfinite(probe[0]) && probe[0] < target)
                lo = mid;
            else
                hi = mid;
        }
        return s - lo;
    }
    throw IntegrationError(name_ + ": step budget exhausted", target);
}

double FlowMap1D::log_deriv_integral(double s0, double s1) const {
    if (s0 == s1) return 0.0;
    const auto& fe = field_.f_edge;
    const auto& fpe = field_.fprime_edge;
    Scalar acc{0.0};
    // dx = -ds
    auto rhs = [&](const Scalar&, Scalar& d, double r) { d[0] = -fpe(r) / fe(r); };
    ode::integrate_adaptive(ode::make_controlled(1e-14, 1e-13, ode::runge_kutta_dopri5<Scalar>()), rhs, acc, s0, s1,
                            std::copysign(std::min(1e-3, std::abs(s1 - s0)), s1 - s0));
    return acc[0];
}

double FlowMap1D::operator()(double x) const {
    const double a = std::abs(x);
    if (a >= outer_) return x;
    if (a <= core_) return core_flow_->advance(x, 1.0);
    const double s = outer_ - a;
    const double tau = time_from_core(s);
    if (!std::isfinite(tau)) return x;
    if (tau <= 1.0) return core_flow_->advance(std::copysign(core_, x), 1.0 - tau);
    return at_distance(distance_at_time(tau - 1.0), x);
}

double FlowMap1D::variational_deriv(double x) const {
    const double a = std::abs(x);
    if (a >= outer_) return 1.0;
    if (a <= core_) return core_flow_->advance_dx(x, 1.0);
    const double s = outer_ - a, width = outer_ - core_;
    const double tau = time_from_core(s);
    if (!std::isfinite(tau)) return 1.0;
    if (tau <= 1.0) return std::exp(log_deriv_integral(s, width)) * core_flow_->advance_dx(core_, 1.0 - tau);
    return std::exp(log_deriv_integral(s, distance_at_time(tau - 1.0)));
}

double FlowMap1D::deriv(double x) const {
    const double a = std::abs(x);
    if (a >= outer_) return 1.0;
    if (a <= core_) return core_flow_->advance_dx(x, 1.0);
    const double s = outer_ - a;
    const double fx = field_.f_edge(s);
    if (std::abs(fx) < 1e-8) return variational_deriv(x);
    const double y = (*this)(x);
    const double ay = std::abs(y);
    const double fy = ay > core_ ? field_.f_edge(outer_ - ay) : field_.f(ay);
    return fy / fx;
}

double FlowMap1D::inverse(double y) const {
    const double a = std::abs(y);
    if (a >= outer_) return y;
    double x;
    if (a <= core_) {
        const double theta = core_flow_->backward_exit_time(y, core_);
        if (theta >= 1.0) return core_flow_->advance(y, -1.0);
        x = at_distance(distance_at_time(1.0 - theta), y);
    } else {
        const double tau = time_from_core(outer_ - a);
        if (!std::isfinite(tau)) return y;
        x = at_distance(distance_at_time(tau + 1.0), y);
    }
    // One Newton step on the forward map, kept only if it helps; the residual
    // is ultimately limited by ulp(x) * F'(x).
    const double res = (*this)(x) - y;
    if (res != 0.0) {
        const double d = deriv(x);
        const double cand = x - res / d;
        if (d > 0.0 && std::isfinite(d) && std::abs(cand) < outer_ && std::abs(cand) > core_ &&
            std::abs((*this)(cand) - y) < std::abs(res))
            x = cand;
    }
    // The map is increasing, so walk neighbouring doubles while that shrinks
    // the residual. Matters where F' is so large that Newton lands ulps away.
    double best = std::abs((*this)(x) - y);
    for (int step = 0; step < 64 && best > 0.0; ++step) {
        const double dir = (*this)(x) > y ? -kInf : kInf;
        const double nb = std::nextafter(x, dir);
        const double r = std::abs((*this)(nb) - y);
        if (!(r < best)) break;
        x = nb;
        best = r;
    }
    return x;
}

std::string FlowMap1D::descriptor() const {
    std::ostringstream os;
    os.precision(17);
    os << "flow:" << name_ << " core=" << core_ << " outer=" << outer_ << " lipschitz=" << field_.lipschitz;
    return os.str();
}

// ----------------------------------------------------------------------------
// AntiderivativeMap1D
// ----------------------------------------------------------------------------

AntiderivativeMap1D::AntiderivativeMap1D(std::string name, SmoothFn1D density, double identity_from,
                                         std::vector<SolvedCoefficient> coefficients)
    : name_(std::move(name)),
      density_(std::move(density)),
      identity_from_(identity_from),
      coefficients_(std::move(coefficients)) {
    knots_.push_back(0.0);
    for (double k : density_.knots())
        if (k > 0.0) knots_.push_back(k);
    cum_.push_back(0.0);
    for (std::size_t i = 0; i < knots_.size(); ++i) {
        const double hi = i + 1 < knots_.size() ? knots_[i + 1] : kInf;
        piece_const_.push_back(density_.constant_on(knots_[i], hi));
        if (i + 1 < knots_.size()) cum_.push_back(cum_.back() + integrate(density_, knots_[i], hi));
    }
    if (!piece_const_.back()) throw SpecError(name_ + ": density must be constant beyond its last knot");
    for (std::size_t i = 0; i < knots_.size(); ++i) {
        const bool positive = piece_const_[i] ? *piece_const_[i] > 0.0 : true;
        if (!positive) throw SpecError(name_ + ": density must be positive");
    }
}

double AntiderivativeMap1D::eval_nonneg(double z) const {
    const auto i = static_cast<std::size_t>(std::upper_bound(knots_.begin(), knots_.end(), z) - knots_.begin()) - 1;
    if (piece_const_[i]) return cum_[i] + *piece_const_[i] * (z - knots_[i]);
    return cum_[i] + integrate(density_, knots_[i], z);
}

double AntiderivativeMap1D::operator()(double z) const { return z < 0.0 ? -eval_nonneg(-z) : eval_nonneg(z); }

double AntiderivativeMap1D::inverse_nonneg(double y) const {
    const auto i = static_cast<std::size_t>(std::upper_bound(cum_.begin(), cum_.end(), y) - cum_.begin()) - 1;
    const double k = knots_[i];
    if (piece_const_[i]) return k + (y - cum_[i]) / *piece_const_[i];

    // Bracketed Newton on a bump piece.
    double lo = k, hi = knots_[i + 1];
    double x = lo + (hi - lo) * (y - cum_[i]) / (cum_[i + 1] - cum_[i]);
    const double tol = 1e-14 * std::max(1.0, std::abs(y));
    for (int it = 0; it < 200; ++it) {
        const double r = cum_[i] + integrate(density_, k, x) - y;
        if (std::abs(r) <= tol) return x;
        if (r > 0.0)
            hi = x;
        else
            lo = x;
        double next = x - r / density_(x);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (next == x || hi - lo <= 2.0 * std::numeric_limits<double>::epsilon() * std::abs(hi)) return next;
        x = next;
    }
    throw ConvergenceError(name_ + ": inverse did not converge");
}

double AntiderivativeMap1D::inverse(double y) const { return y < 0.0 ? -inverse_nonneg(-y) : inverse_nonneg(y); }

std::string AntiderivativeMap1D::descriptor() const {
    std::ostringstream os;
    os.precision(17);
    os << "antiderivative:" << name_;
    for (const auto& c : coefficients_) os << ' ' << c.name << '=' << c.value;
    return os.str();
}

// ----------------------------------------------------------------------------
// F, G, H
// ----------------------------------------------------------------------------

namespace {

void require_lambda(double lambda) {
    if (!std::isfinite(lambda) || lambda < kLambdaMin)
        throw SpecError("lambda must be finite and at least " + std::to_string(kLambdaMin));
}

Bump shell_cutoff(double lambda) {
    const double l3 = lambda * lambda * lambda;
    return Bump({-(l3 - 2.0), l3 - 2.0, -(l3 - 1.0), l3 - 1.0});
}

}  // namespace

std::shared_ptr<const FlowMap1D> build_F(double lambda) {
    require_lambda(lambda);
    const double l3 = lambda * lambda * lambda;
    const Bump rho = shell_cutoff(lambda);
    const double L = std::numbers::ln10;
    FlowField1D field;
    const double outer = l3 - 1.0;
    field.f = [rho, L](double x) { return -L * x * rho(x); };
    field.fprime = [rho, L](double x) { return -L * (rho(x) + x * rho.deriv(x)); };
    field.f_edge = [outer, L](double s) { return -L * (outer - s) * smooth_step(s); };
    // rho'(x) = -s'(outer - x) on the positive shell.
    field.fprime_edge = [outer, L](double s) { return -L * (smooth_step(s) - (outer - s) * smooth_step_deriv(s)); };
    field.lipschitz = L * (1.0 + 2.0 * (l3 - 1.0));
    field.support = {-(l3 - 1.0), l3 - 1.0};
    return std::make_shared<const FlowMap1D>("F", std::move(field), std::make_shared<LinearCoreFlow>(L), l3 - 2.0,
                                             l3 - 1.0);
}

std::shared_ptr<const FlowMap1D> build_G(double lambda) {
    require_lambda(lambda);
    const double l3 = lambda * lambda * lambda;
    const Bump rho = shell_cutoff(lambda);
    const double k = std::numbers::ln10 / 100.0;
    FlowField1D field;
    const double R = l3 - 1.0;
    field.f = [rho, k](double y) { return -k * (y * y * y - 100.0 * y) * rho(y); };
    field.fprime = [rho, k](double y) {
        return -k * ((3.0 * y * y - 100.0) * rho(y) + (y * y * y - 100.0 * y) * rho.deriv(y));
    };
    field.f_edge = [R, k](double s) {
        const double y = R - s;
        return -k * (y * y * y - 100.0 * y) * smooth_step(s);
    };
    field.fprime_edge = [R, k](double s) {
        const double y = R - s;
        return -k * ((3.0 * y * y - 100.0) * smooth_step(s) - (y * y * y - 100.0 * y) * smooth_step_deriv(s));
    };
    field.lipschitz = k * (3.0 * R * R + 100.0 + 2.0 * (R * R * R + 100.0 * R));
    field.support = {-R, R};
    return std::make_shared<const FlowMap1D>("G", std::move(field), std::make_shared<CubicCoreFlow>(k, 10.0),
                                             l3 - 2.0, l3 - 1.0);
}

std::shared_ptr<const AntiderivativeMap1D> build_H(double lambda) {
    require_lambda(lambda);
    const double l3 = lambda * lambda * lambda;
    const double lm2 = 1.0 / (lambda * lambda);

    auto density = [=](double alpha, double beta) {
        std::vector<BumpTerm> terms{
            {lambda - lm2, Bump({-kInf, 1.0, -kInf, 1.0 + lm2})},
            {alpha, Bump({7.0 / 5.0, 8.0 / 5.0, 6.0 / 5.0, 9.0 / 5.0})},
            {1.0 - lm2, Bump({l3 - 1.0, kInf, l3 - 2.0, kInf})},
            {beta, Bump({l3 - 8.0 / 5.0, l3 - 7.0 / 5.0, l3 - 9.0 / 5.0, l3 - 6.0 / 5.0})},
        };
        return with_exact_plateaus(bump_sum(std::move(terms), lm2),
                                   {{{-1.0, 1.0}, lambda}, {{2.0, l3 - 2.0}, lm2}, {{l3 - 1.0, kInf}, 1.0}});
    };

    auto alpha0 = solve_monotone_coefficient([&](double a) { return density(a, 0.0); }, 1.0, {1.0, 2.0},
                                             std::nullopt, "alpha0");
    auto beta0 = solve_monotone_coefficient([&](double b) { return density(alpha0.value, b); }, l3 - 1.0,
                                            {0.0, l3 - 1.0}, std::nullopt, "beta0");
    const double b0 = beta0.value;
    return std::make_shared<const AntiderivativeMap1D>("H", density(alpha0.value, b0), l3 - 1.0,
                                                       std::vector<SolvedCoefficient>{alpha0, beta0});
}

}  // namespace wildcycle
