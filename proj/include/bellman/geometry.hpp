#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "bellman/errors.hpp"
#include "bellman/roots.hpp"

namespace bellman {

struct Params {
    double p;
    double tau;

    Params(double p_, double tau_) : p(p_), tau(std::abs(tau_)) {
        if (!(p > 1.0 + 1e-9 && p < 2.0 - 1e-9))
            throw DomainError("p must lie in (1,2), got " + std::to_string(p_));
        if (!std::isfinite(tau))
            throw DomainError("tau must be finite");
    }

    // Abscissa where the left-fan segments turn vertical.
    [[nodiscard]] double yp() const { return -1.0 + 2.0 / p; }
    [[nodiscard]] bool burkholder() const { return tau == 0.0; }
};

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct CurvePoint {
    double s = kNaN;
    double g = kNaN, g1 = kNaN, g2 = kNaN, g3 = kNaN;
    double f = kNaN, f1 = kNaN, f2 = kNaN, f3 = kNaN;
};

namespace detail {
inline void check_s(double s) {
    if (!(s >= -1.0 && s <= 1.0))
        throw DomainError("s must lie in [-1,1], got " + std::to_string(s));
}
}  // namespace detail

// g(s) = (1-s)^p and derivatives up to order 3.
[[nodiscard]] inline double g_d(const Params& q, double s, int order = 0) {
    const double p = q.p, w = 1.0 - s;
    switch (order) {
        case 0: return std::pow(w, p);
        case 1: return -p * std::pow(w, p - 1);
        case 2:
            if (w <= 0) throw SingularityError("g'' diverges at s=1");
            return p * (p - 1) * std::pow(w, p - 2);
        case 3:
            if (w <= 0) throw SingularityError("g''' diverges at s=1");
            return -p * (p - 1) * (p - 2) * std::pow(w, p - 3);
        default: throw DomainError("derivative order must be 0..3");
    }
}

// f(s) = Q^{p/2}, Q = (1+s)^2 + tau^2 (1-s)^2.
[[nodiscard]] inline double f_d(const Params& q, double s, int order = 0) {
    const double t2 = q.tau * q.tau, h = 0.5 * q.p;
    const double Q = (1 + s) * (1 + s) + t2 * (1 - s) * (1 - s);
    const double Q1 = 2 * (1 + s) - 2 * t2 * (1 - s);
    const double Q2 = 2 + 2 * t2;
    switch (order) {
        case 0: return std::pow(Q, h);
        case 1: return Q == 0.0 ? 0.0 : h * std::pow(Q, h - 1) * Q1;
        case 2: return h * (h - 1) * std::pow(Q, h - 2) * Q1 * Q1 + h * std::pow(Q, h - 1) * Q2;
        case 3:
            return h * (h - 1) * (h - 2) * std::pow(Q, h - 3) * Q1 * Q1 * Q1 +
                   3 * h * (h - 1) * std::pow(Q, h - 2) * Q1 * Q2;
        default: throw DomainError("derivative order must be 0..3");
    }
}

[[nodiscard]] inline CurvePoint curve_eval(const Params& q, double s, int order = 3) {
    detail::check_s(s);
    if (order < 0 || order > 3) throw DomainError("derivative order must be 0..3");
    CurvePoint c;
    c.s = s;
    c.g = g_d(q, s, 0);
    c.f = f_d(q, s, 0);
    if (order >= 1) { c.g1 = g_d(q, s, 1); c.f1 = f_d(q, s, 1); }
    if (order >= 2) { c.g2 = g_d(q, s, 2); c.f2 = f_d(q, s, 2); }
    if (order >= 3) { c.g3 = g_d(q, s, 3); c.f3 = f_d(q, s, 3); }
    return c;
}

// f''/g'', the curvature ratio that the force function compares against.
[[nodiscard]] inline double curvature_ratio(const Params& q, double s) {
    return f_d(q, s, 2) / g_d(q, s, 2);
}

[[nodiscard]] inline double u_of_z(const Params& q, double z) {
    if (!(z >= 0)) throw DomainError("u(z) needs z >= 0");
    const double p = q.p, t = q.tau;
    const double lead = (t == 0.0) ? 0.0 : std::pow(t, p) * (p - 1) * std::pow(t * t + z * z, (2 - p) / 2);
    return lead - t * t * (p - 1) + std::pow(1 + z, 2 - p) - z * (2 - p) - 1;
}

// u along the boundary parameter, z = (1+s)/(1-s).
[[nodiscard]] inline double u_of_s(const Params& q, double s) {
    return u_of_z(q, (1 + s) / (1 - s));
}

struct TorsionPoly {
    std::array<double, 4> coef{};  // v(t) = coef[0] + coef[1] t + coef[2] t^2 + coef[3] t^3
    double c = kNaN;

    [[nodiscard]] double operator()(double t) const {
        return ((coef[3] * t + coef[2]) * t + coef[1]) * t + coef[0];
    }
    [[nodiscard]] double derivative(double t) const {
        return (3 * coef[3] * t + 2 * coef[2]) * t + coef[1];
    }
};

[[nodiscard]] inline std::array<double, 4> torsion_coefficients(const Params& q) {
    const double p = q.p, t2 = q.tau * q.tau, t4 = t2 * t2;
    return {-p + 5 * t4 + 2 * t2 * p - t4 * p - 10 * t2 + 1,
            2 * t2 * p - 9 * t4 + t4 * p + 3 - 3 * p - 6 * t2,
            (1 + t2) * (3 * t2 + t2 * p + 3 - 3 * p),
            -(1 + t2) * (1 + t2) * (p - 1)};
}

// Unique sign change of v on [-1,1].  For tau = 0 the cubic degenerates to
// -(p-1)(t+1)^3 and the root sits at the corner t = -1.
[[nodiscard]] inline TorsionPoly torsion_root(const Params& q) {
    TorsionPoly v;
    v.coef = torsion_coefficients(q);
    if (q.burkholder()) { v.c = -1.0; return v; }
    const double vl = v(-1.0), vr = v(1.0);
    if (!(vl > 0) || !(vr < 0))
        throw BracketError("torsion polynomial does not change sign on [-1,1]");
    v.c = bracket_root([&](double t) { return v(t); }, -1.0, 1.0, vl, vr, "torsion root");
    return v;
}

[[nodiscard]] inline int torsion_sign(const TorsionPoly& v, double s, double tol = 1e-12) {
    const double x = v(s);
    if (std::abs(x) <= tol) return 0;
    return x > 0 ? 1 : -1;
}

// End of the left-fan segment on the edge y2 = -1.
[[nodiscard]] inline double h_of_s(const Params& q, double s) {
    const double yp = q.yp();
    if (!(s < yp)) throw DomainError("h(s) needs s < y_p");
    if (s < -1.0) throw DomainError("h(s) needs s >= -1");
    return 2.0 * g_d(q, s) / (q.p * (yp - s));
}

}  // namespace bellman
