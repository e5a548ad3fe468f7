#include "wildcycle/maps4d.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace wildcycle {

namespace {

constexpr double kQuarter = std::numbers::pi / 2.0;

// (c, s) for the angle, exact at the quarter turn so the plateau boxes
// rotate without rounding.
std::pair<double, double> cos_sin(double angle) {
    if (angle == kQuarter) return {0.0, 1.0};
    if (angle == -kQuarter) return {0.0, -1.0};
    return {std::cos(angle), std::sin(angle)};
}

// Rotates (X[i], X[j]) about (ci, cj) and adds the chain-rule rows for the
// angle gradient to J.
void rotate_pair(const Vec4& X, Vec4& out, Mat4* J, int i, int j, double ci, double cj, double angle,
                 const Vec4& grad) {
    const auto [c, s] = cos_sin(angle);
    const double u = X[i] - ci, v = X[j] - cj;
    out[i] = ci + (c * u - s * v);
    out[j] = cj + (s * u + c * v);
    if (!J) return;
    Mat4& M = *J;
    M(i, i) = c, M(i, j) = -s;
    M(j, i) = s, M(j, j) = c;
    // d/d(angle) of the rotated vector.
    const double di = -s * u - c * v, dj = c * u - s * v;
    for (int k = 0; k < 4; ++k) {
        M(i, k) += di * grad[k];
        M(j, k) += dj * grad[k];
    }
}

// Safeguarded Newton for an increasing g on [lo, hi] with g(lo) <= 0 <= g(hi).
template <class G, class D>
double solve_increasing(G&& g, D&& dg, double lo, double hi, double x, const char* what) {
    for (int it = 0; it < 200; ++it) {
        const double r = g(x);
        if (r == 0.0) return x;
        if (r > 0.0)
            hi = x;
        else
            lo = x;
        const double d = dg(x);
        double next = d > 0.0 && std::isfinite(d) ? x - r / d : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (next == x || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x)))
            return std::abs(g(next)) < std::abs(r) ? next : x;
        x = next;
    }
    throw ConvergenceError(std::string(what) + ": monotone solve did not converge");
}

}  // namespace

// ----------------------------------------------------------------------------
// Box4
// ----------------------------------------------------------------------------

Box4 Box4::cube(const Vec4& center, double radius) {
    Box4 b;
    for (int i = 0; i < 4; ++i) b.axes[i] = {center[i] - radius, center[i] + radius};
    return b;
}

bool Box4::contains(const Vec4& X) const {
    for (int i = 0; i < 4; ++i)
        if (!axes[i].contains(X[i])) return false;
    return true;
}

double Box4::distance(const Vec4& X) const {
    double d = 0.0;
    for (int i = 0; i < 4; ++i) d = std::max({d, axes[i].lo - X[i], X[i] - axes[i].hi});
    return d;
}

// ----------------------------------------------------------------------------
// Theta
// ----------------------------------------------------------------------------

ThetaMap::ThetaMap(ThetaParams params) : p_(params) {
    if (!(p_.small > 0.0) || !(std::numbers::sqrt2 * p_.small < p_.large))
        throw SpecError("theta radii need 0 < sqrt(2) * small < large");
    if (dist_inf(p_.P, p_.Q) <= 2.0 * p_.large) throw SpecError("theta support boxes overlap");
    axis_ = Bump({-p_.small, p_.small, -p_.large, p_.large});
    const double r = std::numbers::sqrt2 * p_.small;
    radial_ = Bump({-r, r, -p_.large, p_.large});
}

double ThetaMap::omega_P(const Vec4& X, Vec4* grad) const {
    const double x = X[0] - p_.P[0], y = X[1] - p_.P[1], z = X[2] - p_.P[2], w = X[3] - p_.P[3];
    const double r = std::hypot(y, z);
    const double ax = axis_(x), aw = axis_(w), ar = radial_(r);
    if (grad) {
        const double dr = radial_.deriv(r);
        *grad = {kQuarter * axis_.deriv(x) * aw * ar, r > 0.0 ? kQuarter * ax * aw * dr * y / r : 0.0,
                 r > 0.0 ? kQuarter * ax * aw * dr * z / r : 0.0, kQuarter * ax * axis_.deriv(w) * ar};
    }
    return kQuarter * ax * aw * ar;
}

double ThetaMap::omega_Q(const Vec4& X, Vec4* grad) const {
    const double x = X[0] - p_.Q[0], y = X[1] - p_.Q[1], z = X[2] - p_.Q[2], w = X[3] - p_.Q[3];
    const double r1 = std::hypot(x, y), r2 = std::hypot(z, w);
    const double a1 = radial_(r1), a2 = radial_(r2);
    if (grad) {
        const double g1 = r1 > 0.0 ? kQuarter * radial_.deriv(r1) * a2 / r1 : 0.0;
        const double g2 = r2 > 0.0 ? kQuarter * a1 * radial_.deriv(r2) / r2 : 0.0;
        *grad = {g1 * x, g1 * y, g2 * z, g2 * w};
    }
    return kQuarter * a1 * a2;
}

Vec4 ThetaMap::rotate(const Vec4& X, double sign) const {
    Vec4 out = X;
    const Vec4 zero{};
    if (const double a = omega_P(X); a != 0.0) rotate_pair(X, out, nullptr, 1, 2, p_.P[1], p_.P[2], sign * a, zero);
    if (const double a = omega_Q(X); a != 0.0) {
        rotate_pair(X, out, nullptr, 0, 1, p_.Q[0], p_.Q[1], sign * a, zero);
        rotate_pair(X, out, nullptr, 2, 3, p_.Q[2], p_.Q[3], sign * a, zero);
    }
    return out;
}

Vec4 ThetaMap::eval(const Vec4& X) const { return rotate(X, 1.0); }

// Each rotation keeps the radii its angle depends on, so the image carries
// the same angle and turning back by it undoes the map.
Vec4 ThetaMap::inverse(const Vec4& Y) const { return rotate(Y, -1.0); }

Mat4 ThetaMap::jacobian(const Vec4& X) const {
    Mat4 J = Mat4::identity();
    Vec4 out = X, grad{};
    if (const double a = omega_P(X, &grad); a != 0.0 || norm_inf(grad) != 0.0)
        rotate_pair(X, out, &J, 1, 2, p_.P[1], p_.P[2], a, grad);
    if (const double a = omega_Q(X, &grad); a != 0.0 || norm_inf(grad) != 0.0) {
        rotate_pair(X, out, &J, 0, 1, p_.Q[0], p_.Q[1], a, grad);
        rotate_pair(X, out, &J, 2, 3, p_.Q[2], p_.Q[3], a, grad);
    }
    return J;
}

std::vector<Box4> ThetaMap::support() const { return {Box4::cube(p_.P, p_.large), Box4::cube(p_.Q, p_.large)}; }

// ----------------------------------------------------------------------------
// Psi
// ----------------------------------------------------------------------------

PsiMap::PsiMap(std::shared_ptr<const ScalarMap1D> F, std::shared_ptr<const ScalarMap1D> G,
               std::shared_ptr<const ScalarMap1D> H, double lambda)
    : comp_{std::move(F), std::move(G), H, H}, inner_(lambda * lambda * lambda) {
    for (const auto& c : comp_)
        if (!c) throw SpecError("psi needs all three scalar maps");
    cut_ = Bump({-inner_, inner_, -inner_ - 1.0, inner_ + 1.0});
}

Vec4 PsiMap::eval(const Vec4& X) const {
    std::array<double, 4> r{};
    for (int i = 0; i < 4; ++i) r[i] = cut_(X[i]);
    Vec4 out{};
    for (int i = 0; i < 4; ++i) {
        double R = 1.0;
        for (int j = 0; j < 4; ++j)
            if (j != i) R *= r[j];
        if (R == 1.0)
            out[i] = (*comp_[i])(X[i]);
        else if (R == 0.0)
            out[i] = X[i];
        else
            out[i] = R * (*comp_[i])(X[i]) + (1.0 - R) * X[i];
    }
    return out;
}

Mat4 PsiMap::jacobian(const Vec4& X) const {
    std::array<double, 4> r{}, dr{};
    for (int i = 0; i < 4; ++i) r[i] = cut_(X[i]), dr[i] = cut_.deriv(X[i]);
    Mat4 J;
    for (int i = 0; i < 4; ++i) {
        double R = 1.0;
        for (int j = 0; j < 4; ++j)
            if (j != i) R *= r[j];
        J(i, i) = R == 1.0 ? comp_[i]->deriv(X[i]) : R * comp_[i]->deriv(X[i]) + (1.0 - R);
        for (int j = 0; j < 4; ++j) {
            if (j == i || dr[j] == 0.0) continue;
            double others = dr[j];
            for (int k = 0; k < 4; ++k)
                if (k != i && k != j) others *= r[k];
            J(i, j) = others * ((*comp_[i])(X[i]) - X[i]);
        }
    }
    return J;
}

// Coordinates beyond lambda^3 are fixed by every component and stay there;
// the blend weights of the others only see those fixed coordinates, so the
// preimage splits into four independent monotone scalar solves.
Vec4 PsiMap::inverse(const Vec4& Y) const {
    std::array<double, 4> r{};
    for (int i = 0; i < 4; ++i) r[i] = std::abs(Y[i]) > inner_ ? cut_(Y[i]) : 1.0;
    Vec4 X = Y;
    for (int i = 0; i < 4; ++i) {
        if (std::abs(Y[i]) > inner_) continue;
        double R = 1.0;
        for (int j = 0; j < 4; ++j)
            if (j != i) R *= r[j];
        const ScalarMap1D& f = *comp_[i];
        if (R == 1.0) {
            X[i] = f.inverse(Y[i]);
        } else if (R != 0.0) {
            auto g = [&](double x) { return R * f(x) + (1.0 - R) * x - Y[i]; };
            auto dg = [&](double x) { return R * f.deriv(x) + (1.0 - R); };
            X[i] = solve_increasing(g, dg, -inner_, inner_, Y[i], "psi inverse");
        }
    }
    return X;
}

std::vector<Box4> PsiMap::support() const { return {Box4::cube({0, 0, 0, 0}, inner_ + 1.0)}; }

// ----------------------------------------------------------------------------
// Leg profile and chi
// ----------------------------------------------------------------------------

LegProfile::LegProfile(double zeta, double b, double c) : zeta_(zeta), b_(b), c_(c), e_(0.4 * (b - c)),
    eta_(bump_sum({}, 0.0, true)) {
    if (!(b > c && c > 0.0 && zeta > 0.0)) throw SpecError("leg profile needs zeta > 0 and b > c > 0");
    auto family = [&](double alpha, double beta) {
        return bump_sum({{alpha, Bump({-b + e_, -c - e_, -b, -c})}, {beta, Bump({c + e_, zeta + b - e_, c, zeta + b})}},
                        0.0, true);
    };
    auto alpha = solve_monotone_coefficient([&](double a) { return family(a, 0.0); }, zeta + b - c, {-b, -c},
                                            std::nullopt, "alpha1");
    auto beta = solve_monotone_coefficient([&](double v) { return family(alpha.value, v); }, b - c,
                                           {c, zeta + b}, std::nullopt, "beta1");
    coefficients_ = {alpha, beta};
    eta_ = family(alpha.value, beta.value);

    knots_.push_back(-b);
    for (double k : eta_.knots())
        if (k > -b && k < zeta + b) knots_.push_back(k);
    knots_.push_back(zeta + b);
    cum_.push_back(-b);
    for (std::size_t i = 0; i + 1 < knots_.size(); ++i) cum_.push_back(cum_.back() + integrate(eta_, knots_[i], knots_[i + 1]));
}

double LegProfile::operator()(double u) const {
    if (u <= -b_ || u >= zeta_ + b_) return u;
    if (-c_ <= u && u <= c_) return u + zeta_;
    const auto i = static_cast<std::size_t>(std::upper_bound(knots_.begin(), knots_.end(), u) - knots_.begin()) - 1;
    return cum_[i] + integrate(eta_, knots_[i], u);
}

double LegProfile::deriv(double u) const { return u <= -b_ || u >= zeta_ + b_ ? 1.0 : eta_(u); }

double LegProfile::inverse(double v) const {
    if (v <= -b_ || v >= zeta_ + b_) return v;
    if (zeta_ - c_ <= v && v <= zeta_ + c_) return v - zeta_;
    const auto i = static_cast<std::size_t>(std::upper_bound(cum_.begin(), cum_.end(), v) - cum_.begin()) - 1;
    const std::size_t j = std::min(i, knots_.size() - 2);
    const double lo = knots_[j], hi = knots_[j + 1];
    const double guess = lo + (hi - lo) * (v - cum_[j]) / (cum_[j + 1] - cum_[j]);
    auto g = [&](double u) { return cum_[j] + integrate(eta_, lo, u) - v; };
    auto dg = [&](double u) { return eta_(u); };
    return solve_increasing(g, dg, lo, hi, std::clamp(guess, lo, hi), "leg profile inverse");
}

namespace {

int leg_axis(const Vec4& Y, const Vec4& Z) {
    int axis = -1;
    for (int i = 0; i < 4; ++i) {
        if (Y[i] == Z[i]) continue;
        if (axis >= 0) throw SpecError("box translation needs endpoints that differ in one coordinate");
        axis = i;
    }
    if (axis < 0) throw SpecError("box translation needs distinct endpoints");
    return axis;
}

}  // namespace

ChiMap::ChiMap(const Vec4& Y, const Vec4& Z, double a, double b, double c)
    : Y_(Y), Z_(Z), a_(a), b_(b), c_(c), axis_(leg_axis(Y, Z)), sign_(Z[axis_] > Y[axis_] ? 1.0 : -1.0),
      kappa_(std::abs(Z[axis_] - Y[axis_]), b, c) {
    if (!(a > b && b > c && c > 0.0)) throw SpecError("box translation needs a > b > c > 0");
    if (!(dist_inf(Y, Z) > 2.0 * a)) throw SpecError("box translation needs d(Y, Z) > 2a");
    cross_ = Bump({-c, c, -b, b});
}

double ChiMap::blend(const Vec4& X, Vec4* grad) const {
    std::array<double, 4> r{}, dr{};
    for (int j = 0; j < 4; ++j) {
        if (j == axis_) continue;
        r[j] = cross_(X[j] - Y_[j]);
        if (grad) dr[j] = cross_.deriv(X[j] - Y_[j]);
    }
    double R = 1.0;
    for (int j = 0; j < 4; ++j)
        if (j != axis_) R *= r[j];
    if (grad) {
        *grad = {};
        for (int j = 0; j < 4; ++j) {
            if (j == axis_ || dr[j] == 0.0) continue;
            double g = dr[j];
            for (int k = 0; k < 4; ++k)
                if (k != axis_ && k != j) g *= r[k];
            (*grad)[j] = g;
        }
    }
    return R;
}

Vec4 ChiMap::eval(const Vec4& X) const {
    const double u = sign_ * (X[axis_] - Y_[axis_]);
    if (u <= -b_ || u >= kappa_.zeta() + b_) return X;
    const double R = blend(X);
    if (R == 0.0) return X;
    Vec4 out = X;
    const double moved = R == 1.0 ? kappa_(u) : R * kappa_(u) + (1.0 - R) * u;
    out[axis_] = Y_[axis_] + sign_ * moved;
    return out;
}

Mat4 ChiMap::jacobian(const Vec4& X) const {
    Mat4 J = Mat4::identity();
    const double u = sign_ * (X[axis_] - Y_[axis_]);
    if (u <= -b_ || u >= kappa_.zeta() + b_) return J;
    Vec4 grad{};
    const double R = blend(X, &grad);
    J(axis_, axis_) = R * kappa_.deriv(u) + (1.0 - R);
    if (norm_inf(grad) != 0.0) {
        const double shift = kappa_(u) - u;
        for (int j = 0; j < 4; ++j)
            if (j != axis_) J(axis_, j) = sign_ * grad[j] * shift;
    }
    return J;
}

Vec4 ChiMap::inverse(const Vec4& Yv) const {
    const double v = sign_ * (Yv[axis_] - Y_[axis_]);
    if (v <= -b_ || v >= kappa_.zeta() + b_) return Yv;
    const double R = blend(Yv);
    if (R == 0.0) return Yv;
    double u;
    if (R == 1.0) {
        u = kappa_.inverse(v);
    } else {
        auto g = [&](double t) { return R * kappa_(t) + (1.0 - R) * t - v; };
        auto dg = [&](double t) { return R * kappa_.deriv(t) + (1.0 - R); };
        u = solve_increasing(g, dg, -b_, kappa_.zeta() + b_, v, "box translation inverse");
    }
    Vec4 X = Yv;
    X[axis_] = Y_[axis_] + sign_ * u;
    return X;
}

std::vector<Box4> ChiMap::support() const {
    Box4 box;
    for (int j = 0; j < 4; ++j) box.axes[j] = {Y_[j] - b_, Y_[j] + b_};
    box.axes[axis_] = {std::min(Y_[axis_], Z_[axis_]) - b_, std::max(Y_[axis_], Z_[axis_]) + b_};
    return {box};
}

std::string ChiMap::tag() const {
    std::ostringstream os;
    os << "chi(axis=" << axis_ << ",zeta=" << kappa_.zeta() << ",radii=" << a_ << '/' << b_ << '/' << c_ << ')';
    return os.str();
}

// ----------------------------------------------------------------------------
// Composition
// ----------------------------------------------------------------------------

ComposedMap::ComposedMap(std::vector<MapPtr> maps, std::string tag) : maps_(std::move(maps)), tag_(std::move(tag)) {
    for (const auto& m : maps_)
        if (!m) throw SpecError("composition with a null factor");
}

Vec4 ComposedMap::eval(const Vec4& X) const {
    Vec4 Y = X;
    for (const auto& m : maps_) Y = m->eval(Y);
    return Y;
}

Mat4 ComposedMap::jacobian(const Vec4& X) const {
    Mat4 J = Mat4::identity();
    Vec4 Y = X;
    for (const auto& m : maps_) {
        J = m->jacobian(Y) * J;
        Y = m->eval(Y);
    }
    return J;
}

Vec4 ComposedMap::inverse(const Vec4& Y) const {
    Vec4 X = Y;
    for (auto it = maps_.rbegin(); it != maps_.rend(); ++it) X = (*it)->inverse(X);
    return X;
}

std::vector<Box4> ComposedMap::support() const {
    std::vector<Box4> out;
    for (const auto& m : maps_) {
        auto s = m->support();
        out.insert(out.end(), s.begin(), s.end());
    }
    return out;
}

std::shared_ptr<const ComposedMap> build_upsilon(const std::array<Vec4, 4>& C) {
    auto l = [](int n) { return (11.0 - n) / 10.0; };
    std::vector<MapPtr> legs;
    for (int i = 1; i <= 3; ++i)
        legs.push_back(std::make_shared<ChiMap>(C[i - 1], C[i], l(3 * i - 2), l(3 * i - 1), l(3 * i)));
    return std::make_shared<ComposedMap>(std::move(legs), "upsilon");
}

Mat4 fd_jacobian(const DiffeoMap4& map, const Vec4& X, double h) {
    Mat4 J;
    for (int j = 0; j < 4; ++j) {
        Vec4 a = X, b = X;
        a[j] += h;
        b[j] -= h;
        const Vec4 fa = map.eval(a), fb = map.eval(b);
        const double step = a[j] - b[j];
        for (int i = 0; i < 4; ++i) J(i, j) = (fa[i] - fb[i]) / step;
    }
    return J;
}

}  // namespace wildcycle
