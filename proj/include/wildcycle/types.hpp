#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

namespace wildcycle {

using Vec4 = std::array<double, 4>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Closed interval on the extended real line.
struct Interval {
    double lo = -kInf;
    double hi = kInf;

    [[nodiscard]] constexpr bool contains(double t) const { return lo <= t && t <= hi; }
    [[nodiscard]] constexpr double length() const { return hi - lo; }
};

// ----------------------------------------------------------------------------
// Error hierarchy. Construction and evaluation failures throw; verification
// outcomes never throw, they are reported.
// ----------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input to a constructor (bump ordering, radii, ...).
class SpecError : public Error {
public:
    using Error::Error;
};

/// Adaptive integrator gave up (step floor or step budget) at a given point.
class IntegrationError : public Error {
public:
    IntegrationError(const std::string& what, double at) : Error(what), point(at) {}
    double point;
};

class QuadratureError : public Error {
public:
    using Error::Error;
};

/// Bracket expansion for a monotone coefficient never reached the target.
class BracketError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// A constraint of the scene ledger is violated.
class SceneError : public Error {
public:
    SceneError(std::string constraint_id, const std::string& what)
        : Error(what), constraint(std::move(constraint_id)) {}
    std::string constraint;
};

[[nodiscard]] inline double norm_inf(const Vec4& v) {
    double m = 0.0;
    for (double c : v) m = std::max(m, std::abs(c));
    return m;
}

[[nodiscard]] inline double dist_inf(const Vec4& a, const Vec4& b) {
    double m = 0.0;
    for (int i = 0; i < 4; ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

[[nodiscard]] inline double dist_euclid(const Vec4& a, const Vec4& b) {
    double s = 0.0;
    for (int i = 0; i < 4; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

[[nodiscard]] inline Vec4 operator+(const Vec4& a, const Vec4& b) {
    return {a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]};
}

[[nodiscard]] inline Vec4 operator-(const Vec4& a, const Vec4& b) {
    return {a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]};
}

}  // namespace wildcycle
