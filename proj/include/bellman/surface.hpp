#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <optional>
#include <string>

#include "bellman/cup.hpp"
#include "bellman/errors.hpp"
#include "bellman/geometry.hpp"
#include "bellman/roots.hpp"

namespace bellman {

enum class Region { Cup, Ang, LeftFan, Vertical, Boundary };

[[nodiscard]] inline const char* to_string(Region r) {
    switch (r) {
        case Region::Cup: return "Cup";
        case Region::Ang: return "Ang";
        case Region::LeftFan: return "LeftFan";
        case Region::Vertical: return "Vertical";
        case Region::Boundary: return "Boundary";
    }
    return "?";
}

struct SurfaceEval {
    Region region;
    Region family;  // foliation family even when region == Boundary
    double s;
    double value;
    double t1, t2;
};

struct NEval {
    double value;
    std::array<double, 3> grad;
};

// Case selector: true iff u(1/(p-1)) <= 0, i.e. the cup ends left of y_p.
[[nodiscard]] inline bool is_case_i(const Params& q, double tol = 1e-12) {
    if (q.burkholder()) return true;
    return u_of_z(q, 1.0 / (q.p - 1)) <= tol;
}

// Left-fan gradient: the edge condition on y2 = -1 solved for t2.
[[nodiscard]] inline double fan_t2(const Params& q, double s) {
    const double d = s - q.yp();
    return (f_d(q, s) - d * f_d(q, s, 1)) / (g_d(q, s) - d * g_d(q, s, 1));
}

class Surface {
public:
    double band = 1e-10;  // region-boundary tolerance
    bool flip_t2 = false; // test hook: negate t2 everywhere (falsifiability probe)

    explicit Surface(const Params& q, CupOptions opt = {}) : q_(q) {
        case_i_ = is_case_i(q);
        yp_ = q.yp();
        if (q.burkholder()) {
            c_ = s0_ = -1.0;  // no cup and no angle; t2_ang stays NaN
        } else {
            cup_ = std::make_shared<const CupProfile>(build_cup(q, opt));
            c_ = cup_->c;
            s0_ = cup_->s0;
            t2_ang_ = cup_->t2_s0();
        }
        if (cup_) t1_ang_ = f_d(q, s0_, 1) - t2_ang_ * g_d(q, s0_, 1);
        if (case_i_) {
            t2_vert_ = f_d(q, yp_) / g_d(q, yp_);
            h0_ = (s0_ < yp_) ? h_of_s(q, s0_) : kNaN;
        } else {
            t2_vert_ = t2_ang_;
        }
    }

    [[nodiscard]] const Params& params() const { return q_; }
    [[nodiscard]] bool case_i() const { return case_i_; }
    [[nodiscard]] const CupProfile* cup() const { return cup_.get(); }
    [[nodiscard]] double c() const { return c_; }
    [[nodiscard]] double s0() const { return s0_; }
    [[nodiscard]] double yp() const { return yp_; }
    [[nodiscard]] double h0() const { return h0_; }
    [[nodiscard]] double t2_ang() const { return t2_ang_; }
    [[nodiscard]] double t1_ang() const { return t1_ang_; }
    [[nodiscard]] double t2_vertical() const { return t2_vert_; }
    // lim B(y2, y3)/y3 as y3 -> infinity.
    [[nodiscard]] double t2_infinity() const { return t2_vert_; }

    [[nodiscard]] SurfaceEval eval(double y2, double y3) const {
        if (!(y2 >= -1.0 && y2 <= 1.0)) throw DomainError("y2 must lie in [-1,1]");
        const double gy = g_d(q_, y2);
        if (!(y3 >= gy - 1e-13 * std::max(1.0, gy))) throw DomainError("point below the boundary y3 = g(y2)");
        y3 = std::max(y3, gy);
        SurfaceEval e = classify_and_eval(y2, y3);
        e.family = e.region;
        if (y3 - gy <= 1e-14 * std::max(1.0, y3)) {
            e.region = Region::Boundary;
            e.value = f_d(q_, y2);
        }
        return e;
    }

    [[nodiscard]] double B(double y2, double y3) const { return eval(y2, y3).value; }

    [[nodiscard]] NEval eval_N(double y1, double y2, double y3) const {
        const double p = q_.p;
        const double lo = std::pow(std::abs(y1 - y2), p);
        if (!(y3 >= lo - 1e-12 * std::max(1.0, lo))) throw DomainError("point outside the domain y3 >= |y1-y2|^p");
        const double m = std::max(std::abs(y1), std::abs(y2));
        if (m == 0.0) return {y3 * t2_vert_, {0.0, 0.0, t2_vert_}};
        if (m < 1e-300) throw DegenerateScale("max(|y1|,|y2|) below 1e-300");
        const bool swap = std::abs(y2) > std::abs(y1);
        if (swap) std::swap(y1, y2);
        const bool neg = y1 < 0;
        if (neg) { y1 = -y1; y2 = -y2; }
        const double z2 = std::clamp(y2 / y1, -1.0, 1.0);
        const double scale = std::pow(y1, p);
        const double z3 = std::max(y3 / scale, g_d(q_, z2));
        const auto e = eval(z2, z3);
        const double k = std::pow(y1, p - 1);
        double n1 = k * (p * e.value - e.t1 * z2 - p * e.t2 * z3);
        double n2 = k * e.t1;
        if (neg) { n1 = -n1; n2 = -n2; }
        if (swap) std::swap(n1, n2);
        return {scale * e.value, {n1, n2, e.t2}};
    }

    [[nodiscard]] double N(double y1, double y2, double y3) const { return eval_N(y1, y2, y3).value; }

    [[nodiscard]] NEval eval_H(double x1, double x2, double x3) const {
        const double lo = std::pow(std::abs(x1), q_.p);
        if (!(x3 >= lo - 1e-12 * std::max(1.0, lo))) throw DomainError("point outside the domain x3 >= |x1|^p");
        auto n = eval_N(0.5 * (x1 + x2), 0.5 * (x2 - x1), std::max(x3, lo));
        return {n.value, {0.5 * (n.grad[0] - n.grad[1]), 0.5 * (n.grad[0] + n.grad[1]), n.grad[2]}};
    }

    [[nodiscard]] double H(double x1, double x2, double x3) const { return eval_H(x1, x2, x3).value; }

    // Orientation of (y2,y3) with respect to the cup chord ending at s:
    // positive above the chord.
    [[nodiscard]] double cup_orientation(double s, double y2, double y3) const {
        const double a = cup_->a(s);
        const double dx = s - a, dy = g_d(q_, s) - g_d(q_, a);
        const double vx = y2 - a, vy = y3 - g_d(q_, a);
        return (dx * vy - dy * vx) / std::hypot(dx, dy);
    }

    // Orientation with respect to the fan segment from (s,g(s)) towards
    // (-1,h(s)).  (-1-s, h(s)-g(s)) is parallel to (-(y_p-s), g(s)), which
    // stays finite at s = y_p and nondegenerate at s = -1.
    [[nodiscard]] double fan_orientation(double s, double y2, double y3) const {
        const double gs = g_d(q_, s);
        const double dx = -(yp_ - s), dy = gs;
        const double vx = y2 - s, vy = y3 - gs;
        return (dx * vy - dy * vx) / std::hypot(dx, dy);
    }

    [[nodiscard]] SurfaceEval on_cup(double s, double y2, double y3) const {
        const double t2 = cup_->t2(s);
        return affine(Region::Cup, s, t2, y2, y3);
    }
    [[nodiscard]] SurfaceEval on_fan(double s, double y2, double y3) const {
        return affine(Region::LeftFan, s, fan_t2(q_, s), y2, y3);
    }
    [[nodiscard]] SurfaceEval on_ang(double y2, double y3) const {
        return affine(Region::Ang, s0_, t2_ang_, y2, y3);
    }
    [[nodiscard]] SurfaceEval on_vertical(double y2, double y3) const {
        return affine(Region::Vertical, y2, t2_vert_, y2, y3);
    }

    // Signed distance above the last cup chord (-1,g(-1)) -- (s0,g(s0)).
    [[nodiscard]] double above_last_chord(double y2, double y3) const {
        const double gm = g_d(q_, -1.0), g0 = g_d(q_, s0_);
        const double dx = s0_ + 1, dy = g0 - gm;
        return (dx * (y3 - gm) - dy * (y2 + 1)) / std::hypot(dx, dy);
    }
    // Signed distance below the first fan segment (s0,g(s0)) -- (-1,h(s0)).
    [[nodiscard]] double below_first_fan(double y2, double y3) const {
        return fan_orientation(s0_, y2, y3);
    }

private:
    Params q_;
    std::shared_ptr<const CupProfile> cup_;
    bool case_i_ = true;
    double c_ = kNaN, s0_ = kNaN, yp_ = kNaN, h0_ = kNaN;
    double t2_ang_ = kNaN, t1_ang_ = kNaN, t2_vert_ = kNaN;

    [[nodiscard]] SurfaceEval affine(Region r, double s, double t2, double y2, double y3) const {
        if (flip_t2) t2 = -t2;
        const double t1 = f_d(q_, s, 1) - t2 * g_d(q_, s, 1);
        return {r, r, s, f_d(q_, s) + t1 * (y2 - s) + t2 * (y3 - g_d(q_, s)), t1, t2};
    }

    [[nodiscard]] double fan_parameter(double lo, double y2, double y3) const {
        auto fn = [&](double s) { return fan_orientation(s, y2, y3); };
        const double flo = fn(lo), fhi = fn(yp_);
        if (flo >= 0) return lo;
        if (!(fhi > 0)) throw ClassifyAmbiguity("left-fan orientation does not change sign");
        return bracket_root(fn, lo, yp_, flo, fhi, "left-fan parameter");
    }

    [[nodiscard]] SurfaceEval classify_and_eval(double y2, double y3) const {
        if (case_i_) {
            if (y2 >= yp_) return on_vertical(y2, y3);
            if (!cup_) return on_fan(fan_parameter(-1.0, y2, y3), y2, y3);
            if (y2 >= s0_) return on_fan(fan_parameter(y2, y2, y3), y2, y3);
        } else if (y2 >= s0_) {
            return on_vertical(y2, y3);
        }
        const double above = above_last_chord(y2, y3);
        if (above < -band) {
            auto fn = [&](double s) { return cup_orientation(s, y2, y3); };
            const double lo = cup_->s_min(), hi = s0_;
            const double flo = fn(lo), fhi = fn(hi);
            if (flo <= 0) return on_cup(lo, y2, y3);  // tip band
            if (!(fhi < 0)) throw ClassifyAmbiguity("cup orientation does not change sign");
            return on_cup(bracket_root(fn, lo, hi, flo, fhi, "cup parameter"), y2, y3);
        }
        if (!case_i_) return on_ang(y2, y3);
        if (below_first_fan(y2, y3) >= -band) return on_ang(y2, y3);
        return on_fan(fan_parameter(s0_, y2, y3), y2, y3);
    }
};

}  // namespace bellman
