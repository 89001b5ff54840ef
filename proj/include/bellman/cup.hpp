#pragma once

#include <boost/math/interpolators/cubic_hermite.hpp>
#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "bellman/errors.hpp"
#include "bellman/geometry.hpp"
#include "bellman/roots.hpp"

namespace bellman {

// 3x3 cup determinant with columns (1, g'(a), f'(a)), (1, g'(b), f'(b)),
// (a-b, g(a)-g(b), f(a)-f(b)).
[[nodiscard]] inline double cup_determinant(const Params& q, double a, double b) {
    detail::check_s(a);
    detail::check_s(b);
    const double ga1 = g_d(q, a, 1), gb1 = g_d(q, b, 1), fa1 = f_d(q, a, 1), fb1 = f_d(q, b, 1);
    const double dx = a - b, dg = g_d(q, a) - g_d(q, b), df = f_d(q, a) - f_d(q, b);
    return 1.0 * (gb1 * df - dg * fb1) - 1.0 * (ga1 * df - dg * fa1) + dx * (ga1 * fb1 - gb1 * fa1);
}

// Product of the column norms: the natural scale of the determinant.
[[nodiscard]] inline double cup_determinant_scale(const Params& q, double a, double b) {
    const double ga1 = g_d(q, a, 1), gb1 = g_d(q, b, 1), fa1 = f_d(q, a, 1), fb1 = f_d(q, b, 1);
    const double dx = a - b, dg = g_d(q, a) - g_d(q, b), df = f_d(q, a) - f_d(q, b);
    return std::sqrt(1 + ga1 * ga1 + fa1 * fa1) * std::sqrt(1 + gb1 * gb1 + fb1 * fb1) *
           std::sqrt(dx * dx + dg * dg + df * df);
}

// Integrals of f'' and g'' over [a,b], plain and weighted by (b-x).
// A0/B0 is the chord gradient t2; the cup equation is A1/B1 = A0/B0.
struct ChordMoments {
    double A0, B0, A1, B1;
};

inline constexpr double kQuadratureChord = 0.05;

[[nodiscard]] inline ChordMoments chord_moments(const Params& q, double a, double b) {
    const double L = b - a;
    if (L >= kQuadratureChord) {
        const double fa = f_d(q, a), fb = f_d(q, b), fa1 = f_d(q, a, 1), fb1 = f_d(q, b, 1);
        const double ga = g_d(q, a), gb = g_d(q, b), ga1 = g_d(q, a, 1), gb1 = g_d(q, b, 1);
        return {fb1 - fa1, gb1 - ga1, fb - fa - fa1 * L, gb - ga - ga1 * L};
    }
    using GL = boost::math::quadrature::gauss<double, 30>;
    const auto& x = GL::abscissa();
    const auto& w = GL::weights();
    const double mid = 0.5 * (a + b), half = 0.5 * L;
    ChordMoments m{0, 0, 0, 0};
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (double sgn : {-1.0, 1.0}) {
            const double xi = mid + sgn * half * x[i];
            const double wi = half * w[i];
            const double f2 = f_d(q, xi, 2), g2 = g_d(q, xi, 2);
            m.A0 += wi * f2;
            m.B0 += wi * g2;
            m.A1 += wi * (b - xi) * f2;
            m.B1 += wi * (b - xi) * g2;
        }
    }
    return m;
}

// Mean of g' over [a,b], i.e. the slope of the chord of g.
[[nodiscard]] inline double chord_slope(const Params& q, double a, double b) {
    const double L = b - a;
    if (L >= kQuadratureChord) return (g_d(q, b) - g_d(q, a)) / L;
    using GL = boost::math::quadrature::gauss<double, 30>;
    const auto& x = GL::abscissa();
    const auto& w = GL::weights();
    double acc = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        acc += w[i] * (g_d(q, 0.5 * (a + b) + 0.5 * L * x[i], 1) + g_d(q, 0.5 * (a + b) - 0.5 * L * x[i], 1));
    return 0.5 * acc;
}

// Cauchy mean-value form of the cup equation.  Same zero set as the
// determinant, but well conditioned for short chords.
[[nodiscard]] inline double cup_residual(const Params& q, double a, double b) {
    const auto m = chord_moments(q, a, b);
    return m.A1 / m.B1 - m.A0 / m.B0;
}

struct CupPartials {
    double D, Da, Db;
};

[[nodiscard]] inline CupPartials cup_partials(const Params& q, double a, double b) {
    const auto m = chord_moments(q, a, b);
    const double r1 = m.A1 / m.B1, r0 = m.A0 / m.B0;
    const double ga2 = g_d(q, a, 2), gb2 = g_d(q, b, 2);
    const double ra = f_d(q, a, 2) / ga2, rb = f_d(q, b, 2) / gb2;
    const double Da = (b - a) * ga2 / m.B1 * (r1 - ra) - ga2 / m.B0 * (r0 - ra);
    const double Db = (m.B0 / m.B1) * (r0 - r1) - gb2 / m.B0 * (rb - r0);
    return {r1 - r0, Da, Db};
}

[[nodiscard]] inline double chord_t2(const Params& q, double a, double b) {
    const auto m = chord_moments(q, a, b);
    if (std::abs(m.B0) < 1e-14) throw DegenerateChord("chord too short near the cup tip");
    return m.A0 / m.B0;
}

// Right end of the cup: root of u((1+s)/(1-s)) on (c,1).
[[nodiscard]] inline double solve_s0(const Params& q, double c) {
    const double hi = 1.0 - 1e-12;
    const double ul = u_of_s(q, c), uh = u_of_s(q, hi);
    return bracket_root([&](double s) { return u_of_s(q, s); }, c, hi, ul, uh, "cup endpoint s0");
}

struct CupNode {
    double s, a, da, t1, t2, force;
};

struct CupOptions {
    double pc_tol = 1e-6;          // accepted predictor/corrector gap in a
    double max_step_frac = 1.0 / 400;
    double tip_rel = 1e-7;         // tabulate down to c + tip_rel (s0 - c)
    double model_rel = 1e-4;       // below c + model_rel (s0 - c) use the tip model
    int model_nodes = 40;
    bool refine = true;            // repeat on a finer grid until a(s) settles
    double refine_tol = 1e-9;
};

class CupProfile {
public:
    Params params;
    double c = kNaN;
    double s0 = kNaN;
    double delta = kNaN;        // tip band width
    double tip_k = 0;           // (c - a)/(s - c) = 1 + tip_k (s - c) in the tip band
    double s_model = kNaN;
    double refinement_diff = kNaN;
    std::vector<CupNode> nodes;  // ordered by decreasing s, nodes.front().s == s0

    explicit CupProfile(const Params& q) : params(q) {}

    [[nodiscard]] double s_min() const { return nodes.back().s; }

    [[nodiscard]] double a(double s) const {
        if (s >= s0) return -1.0;
        if (s <= s_model) return c - (s - c) * (1 + tip_k * (s - c));
        return (*interp_)(s);
    }

    [[nodiscard]] double da(double s) const {
        if (s >= s0) return nodes.front().da;
        if (s <= s_model) return -(1 + 2 * tip_k * (s - c));
        return interp_->prime(s);
    }

    [[nodiscard]] double t2(double s) const {
        if (s >= s0) return t2_s0();
        return chord_t2(params, a(s), s);
    }
    [[nodiscard]] double t1(double s) const {
        return f_d(params, s, 1) - t2(s) * g_d(params, s, 1);
    }
    [[nodiscard]] double force(double s) const { return curvature_ratio(params, s) - t2(s); }

    // Gradient at the last chord, (-1, g(-1)) -- (s0, g(s0)).
    [[nodiscard]] double t2_s0() const {
        return (f_d(params, -1, 1) - f_d(params, s0, 1)) / (g_d(params, -1, 1) - g_d(params, s0, 1));
    }

    // d t2 / ds along the cup.
    [[nodiscard]] double dt2(double s) const {
        const double av = a(s);
        const auto m = chord_moments(params, av, s);
        const double t = m.A0 / m.B0;
        const double ga2 = g_d(params, av, 2), gb2 = g_d(params, s, 2);
        return gb2 / m.B0 * (f_d(params, s, 2) / gb2 - t) + da(s) * ga2 / m.B0 * (t - f_d(params, av, 2) / ga2);
    }

    void finalize() {
        std::vector<double> x, y, dy;
        for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) {
            x.push_back(it->s);
            y.push_back(it->a);
            dy.push_back(it->da);
        }
        interp_ = std::make_shared<Interp>(std::move(x), std::move(y), std::move(dy));
    }

private:
    using Interp = boost::math::interpolators::cubic_hermite<std::vector<double>>;
    std::shared_ptr<const Interp> interp_;
};

namespace detail {

inline CupNode make_node(const Params& q, double s, double a, double da) {
    CupNode n{s, a, da, 0, 0, 0};
    n.t2 = (a == -1.0 && s > -1.0)
               ? (f_d(q, -1, 1) - f_d(q, s, 1)) / (g_d(q, -1, 1) - g_d(q, s, 1))
               : chord_t2(q, a, s);
    n.t1 = f_d(q, s, 1) - n.t2 * g_d(q, s, 1);
    n.force = curvature_ratio(q, s) - n.t2;
    return n;
}

inline CupProfile build_cup_once(const Params& q, const CupOptions& opt) {
    CupProfile prof(q);
    prof.c = torsion_root(q).c;
    prof.s0 = solve_s0(q, prof.c);
    const double c = prof.c, s0 = prof.s0, L = s0 - c;
    prof.delta = opt.tip_rel * L;
    const double s_switch = c + opt.model_rel * L;

    auto corrector = [&](double s, double a_guess, bool& ok) {
        auto fdf = [&](double a) {
            const auto d = cup_partials(q, a, s);
            return std::pair<double, double>{d.D, d.Da};
        };
        return safe_newton(fdf, -1.0, c, std::clamp(a_guess, -1.0, c), 1e-15, 0.0, 50, ok);
    };

    auto slope = [&](double s, double a) {
        const auto d = cup_partials(q, a, s);
        return -d.Db / d.Da;
    };

    // At s0 the chord ends in the corner; the implicit-function slope there
    // is taken from the first interior solve.
    double s = s0, a = -1.0;
    const double h_cap = opt.max_step_frac * L;
    double h = 0.1 * h_cap;
    {
        bool ok = false;
        const double s1 = s0 - 1e-6 * L;
        const double a1 = corrector(s1, -1.0 + 1e-6 * L, ok);
        if (!ok) throw ContinuationStall("cup continuation could not start at s0");
        prof.nodes.push_back(make_node(q, s0, -1.0, slope(s1, a1)));
    }
    double da = prof.nodes.back().da;

    while (s - h_cap * 1e-9 > s_switch) {
        double step = std::min({h, h_cap, 0.25 * (s - c)});
        if (s - step < s_switch) step = s - s_switch;
        int halvings = 0;
        for (;;) {
            const double sn = s - step;
            const double ap = a - step * da;
            bool ok = false;
            const double ac = corrector(sn, ap, ok);
            const double err = std::abs(ac - ap);
            if (ok && err <= opt.pc_tol) {
                s = sn;
                a = ac;
                da = slope(s, a);
                prof.nodes.push_back(make_node(q, s, a, da));
                const double grow = err > 0 ? 0.9 * std::sqrt(opt.pc_tol / err) : 2.0;
                h = step * std::clamp(grow, 0.2, 2.0);
                break;
            }
            if (++halvings > 40)
                throw ContinuationStall("cup continuation stalled at s=" + std::to_string(sn));
            step *= 0.5;
        }
    }

    // Tip model: the chord becomes symmetric about c as it shrinks.
    prof.s_model = s;
    prof.tip_k = ((c - a) / (s - c) - 1.0) / (s - c);
    const double lo = c + prof.delta;
    if (s > lo) {
        const double r = std::pow((lo - c) / (s - c), 1.0 / opt.model_nodes);
        double d = s - c;
        for (int i = 0; i < opt.model_nodes; ++i) {
            d *= r;
            const double sn = (i + 1 == opt.model_nodes) ? lo : c + d;
            const double an = c - (sn - c) * (1 + prof.tip_k * (sn - c));
            prof.nodes.push_back(make_node(q, sn, an, -(1 + 2 * prof.tip_k * (sn - c))));
        }
    }
    for (const auto& n : prof.nodes) {
        if (n.force > 1e-10)
            throw ContinuationStall("positive force on the cup at s=" + std::to_string(n.s));
    }
    prof.finalize();
    return prof;
}

}  // namespace detail

[[nodiscard]] inline CupProfile build_cup(const Params& q, CupOptions opt = {}) {
    if (q.burkholder()) throw DomainError("no cup for tau = 0");
    auto prof = detail::build_cup_once(q, opt);
    if (!opt.refine) return prof;
    for (int round = 0; round < 4; ++round) {
        CupOptions fine = opt;
        fine.pc_tol /= 4;
        fine.max_step_frac /= 2;
        auto next = detail::build_cup_once(q, fine);
        double diff = 0;
        for (const auto& n : next.nodes) diff = std::max(diff, std::abs(prof.a(n.s) - n.a));
        next.refinement_diff = diff;
        if (diff <= opt.refine_tol) {
            prof.refinement_diff = diff;
            return prof;
        }
        prof = std::move(next);
        opt = fine;
    }
    return prof;
}

// Chord direction from (s, g(s)) towards (a, g(a)): cos(theta) and
// K = g'(s) cos(theta) - sin(theta).  K L = -(int_a^s (r-a) g''(r) dr)
// is evaluated from the moments so its sign survives short chords.
struct ChordFrame {
    double cos_theta, K;
};

[[nodiscard]] inline ChordFrame chord_frame(const Params& q, double a, double s) {
    const double L0 = s - a;
    const double L = L0 * std::hypot(1.0, chord_slope(q, a, s));
    const auto m = chord_moments(q, a, s);
    return {-L0 / L, -(L0 * m.B0 - m.B1) / L};
}

[[nodiscard]] inline double cup_K(const CupProfile& prof, double s) {
    return chord_frame(prof.params, prof.a(s), s).K;
}

// Residual of F' + F (cos(theta)/K) g'' - (f''/g'')' = 0 at interior node i.
// F' is a central difference of the interpolated profile; node spacing
// alone is too coarse for a 1e-6 residual.
[[nodiscard]] inline double force_ode_residual(const CupProfile& prof, std::size_t i, double h = 1e-6) {
    const auto& n = prof.nodes;
    if (i == 0 || i + 1 >= n.size()) throw DomainError("force ODE residual needs an interior node");
    const Params& q = prof.params;
    const double s = n[i].s;
    h = std::min({h, 0.5 * (n[i - 1].s - s), 0.5 * (s - n[i + 1].s)});
    const double dF = (prof.force(s + h) - prof.force(s - h)) / (2 * h);
    const auto fr = chord_frame(q, n[i].a, s);
    const double g2 = g_d(q, s, 2), g3 = g_d(q, s, 3);
    const double dratio = (f_d(q, s, 3) * g2 - f_d(q, s, 2) * g3) / (g2 * g2);
    return dF + n[i].force * fr.cos_theta / fr.K * g2 - dratio;
}

}  // namespace bellman
