#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "bellman/parallel.hpp"
#include "bellman/surface.hpp"

namespace bellman {

struct VerifyOptions {
    int n_y2 = 200;
    int n_y3 = 200;
    double y3_max = 20.0;
    double fd_step = 1e-5;     // Hessian steps, relative to the local scale
    double diag_step = 1e-3;   // second differences of H
    double margin = 1e-4;      // exclusion band at region boundaries
    double glue_offset = 1e-9;
    int n_interface = 200;
    unsigned threads = 0;      // 0: worker_count()
};

struct CheckResult {
    std::string name;
    double worst = 0;       // max residual, or min value for lower-bound checks
    double tol = 0;
    bool lower_bound = false;  // pass iff worst >= -tol
    bool pass = true;
    double y2 = kNaN, y3 = kNaN;
    std::size_t count = 0;
};

struct VerificationReport {
    std::vector<CheckResult> checks;
    double seconds = 0;

    [[nodiscard]] bool pass() const {
        return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
    }
    [[nodiscard]] const CheckResult* find(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }
};

namespace detail {

struct Tracker {
    CheckResult r;
    Tracker(std::string name, double tol, bool lower) {
        r.name = std::move(name);
        r.tol = tol;
        r.lower_bound = lower;
        r.worst = lower ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    }
    void add(double v, double y2, double y3) {
        ++r.count;
        const bool worse = r.lower_bound ? (v < r.worst) : (v > r.worst);
        if (worse || std::isnan(v)) {
            r.worst = v;
            r.y2 = y2;
            r.y3 = y3;
        }
    }
    CheckResult done() {
        if (r.count == 0) r.worst = 0;
        r.pass = r.lower_bound ? (r.worst >= -r.tol) : (r.worst <= r.tol);
        if (std::isnan(r.worst)) r.pass = false;
        return r;
    }
};

// True if (y2,y3) lies at least `m` inside the region of its foliation family.
inline bool well_inside(const Surface& S, const SurfaceEval& e, double y2, double y3, double m) {
    const double yp = S.yp(), s0 = S.s0();
    switch (e.family) {
        case Region::Cup:
            return e.s - S.c() > m && s0 - e.s > m;
        case Region::Ang:
            if (S.above_last_chord(y2, y3) <= m || y2 + 1 <= m) return false;
            if (S.case_i()) return S.below_first_fan(y2, y3) > m;
            return s0 - y2 > m;
        case Region::LeftFan:
            return e.s - s0 > m && yp - e.s > m && y2 + 1 > m;
        case Region::Vertical:
            return y2 - (S.case_i() ? yp : s0) > m && 1 - y2 > m;
        default:
            return false;
    }
}

inline std::optional<SurfaceEval> try_eval(const Surface& S, double y2, double y3) {
    try {
        return S.eval(y2, y3);
    } catch (const DomainError&) {
        return std::nullopt;
    }
}

inline std::optional<NEval> try_N(const Surface& S, double y1, double y2, double y3) {
    try {
        return S.eval_N(y1, y2, y3);
    } catch (const DomainError&) {
        return std::nullopt;
    }
}

struct PointOut {
    bool hess = false;
    double det = 0, trace = 0;
    bool block = false;
    double block_det = 0, n33 = 0;
    bool diag = false;
    double diag_max = -std::numeric_limits<double>::infinity();
};

}  // namespace detail

[[nodiscard]] inline std::vector<std::array<double, 2>> verification_grid(const Surface& S, const VerifyOptions& o) {
    std::vector<std::array<double, 2>> pts;
    const Params& q = S.params();
    for (int i = 0; i < o.n_y2; ++i) {
        const double y2 = -1.0 + 2.0 * (i + 0.5) / o.n_y2;
        const double gy = g_d(q, y2);
        for (int j = 0; j < o.n_y3; ++j) {
            const double y3 = gy + (o.y3_max - gy) * (j + 0.5) / o.n_y3;
            if (y3 > gy) pts.push_back({y2, y3});
        }
    }
    return pts;
}

[[nodiscard]] inline VerificationReport verify_surface(const Surface& S, const VerifyOptions& o = {}) {
    using detail::Tracker;
    const auto t0 = std::chrono::steady_clock::now();
    const Params& q = S.params();
    const double p = q.p;
    const auto pts = verification_grid(S, o);
    std::vector<detail::PointOut> out(pts.size());

    parallel_for(pts.size(), [&](std::size_t k) {
        const double y2 = pts[k][0], y3 = pts[k][1];
        auto& r = out[k];
        const auto e = S.eval(y2, y3);

        // Diagonal concavity of H at x = (1-y2, 1+y2, y3).
        {
            const double x1 = 1 - y2, x2 = 1 + y2, x3 = y3;
            const double s2 = std::sqrt(0.5);
            const std::array<std::array<double, 3>, 7> dirs{{{s2, -s2, 0}, {s2, s2, 0}, {0, 0, 1},
                                                            {0.5, -0.5, s2}, {0.5, -0.5, -s2},
                                                            {0.5, 0.5, s2}, {0.5, 0.5, -s2}}};
            const double h = o.diag_step, Hc = S.H(x1, x2, x3);
            for (const auto& d : dirs) {
                const double a1 = x1 + h * d[0], a2 = x2 + h * d[1], a3 = x3 + h * d[2];
                const double b1 = x1 - h * d[0], b2 = x2 - h * d[1], b3 = x3 - h * d[2];
                if (a3 < std::pow(std::abs(a1), p) || b3 < std::pow(std::abs(b1), p)) continue;
                const double dd = (S.H(a1, a2, a3) - 2 * Hc + S.H(b1, b2, b3)) / (h * h);
                r.diag = true;
                r.diag_max = std::max(r.diag_max, dd);
            }
        }

        if (!detail::well_inside(S, e, y2, y3, o.margin)) return;
        const double h2 = o.fd_step, h3 = o.fd_step * std::max(1.0, y3);
        const auto ep2 = detail::try_eval(S, y2 + h2, y3), em2 = detail::try_eval(S, y2 - h2, y3);
        const auto ep3 = detail::try_eval(S, y2, y3 + h3), em3 = detail::try_eval(S, y2, y3 - h3);
        for (const auto* x : {&ep2, &em2, &ep3, &em3})
            if (!*x || (*x)->region != e.region) return;
        const double H11 = (ep2->t1 - em2->t1) / (2 * h2);
        const double H22 = (ep3->t2 - em3->t2) / (2 * h3);
        const double H12 = 0.5 * ((ep3->t1 - em3->t1) / (2 * h3) + (ep2->t2 - em2->t2) / (2 * h2));
        const double det = H11 * H22 - H12 * H12;
        r.hess = true;
        r.det = std::abs(det) / std::max(1.0, H11 * H11 + H22 * H22 + 2 * H12 * H12);
        r.trace = H11 + H22;

        // Concavity of N in (y1, y3) at fixed y2, at the point (1, y2, y3).
        const double k1 = o.fd_step;
        const auto n1p = detail::try_N(S, 1 + k1, y2, y3), n1m = detail::try_N(S, 1 - k1, y2, y3);
        const auto n3p = detail::try_N(S, 1, y2, y3 + h3), n3m = detail::try_N(S, 1, y2, y3 - h3);
        if (!n1p || !n1m || !n3p || !n3m) return;
        for (double y1 : {1 + k1, 1 - k1}) {
            const double z2 = y2 / y1, z3 = y3 / std::pow(y1, p);
            const auto ez = detail::try_eval(S, z2, z3);
            if (!ez || ez->region != e.region) return;
        }
        const double N11 = (n1p->grad[0] - n1m->grad[0]) / (2 * k1);
        const double N33 = (n3p->grad[2] - n3m->grad[2]) / (2 * h3);
        const double N13 = 0.5 * ((n3p->grad[0] - n3m->grad[0]) / (2 * h3) + (n1p->grad[2] - n1m->grad[2]) / (2 * k1));
        r.block = true;
        r.block_det = N11 * N33 - N13 * N13;
        r.n33 = N33;
    }, o.threads ? o.threads : worker_count());

    Tracker ma("monge_ampere", 1e-4, false), tr("trace", 1e-6, false), dg("diagonal_concavity", 1e-6, false);
    Tracker bd("block_det", 1e-6, true), b33("block_n33", 1e-6, false);
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const auto& r = out[k];
        const double y2 = pts[k][0], y3 = pts[k][1];
        if (r.diag) dg.add(r.diag_max, y2, y3);
        if (r.hess) {
            ma.add(r.det, y2, y3);
            tr.add(r.trace, y2, y3);
        }
        if (r.block) {
            bd.add(r.block_det, y2, y3);
            b33.add(r.n33, y2, y3);
        }
    }

    // C^1 gluing across region interfaces.
    Tracker gl("c1_gluing", 1e-6, false);
    auto glue = [&](double y2, double y3, double nx, double ny) {
        const double off = o.glue_offset;
        const auto a = detail::try_eval(S, y2 + off * nx, y3 + off * ny);
        const auto b = detail::try_eval(S, y2 - off * nx, y3 - off * ny);
        if (!a || !b) return;
        gl.add(std::max(std::abs(a->t1 - b->t1), std::abs(a->t2 - b->t2)), y2, y3);
    };
    const double gm = g_d(q, -1.0), g0 = g_d(q, S.s0());
    const int ni = o.n_interface;
    if (S.cup()) {
        const double dx = S.s0() + 1, dy = g0 - gm, L = std::hypot(dx, dy);
        for (int i = 0; i < ni; ++i) {
            const double lam = (i + 0.5) / ni;
            glue(-1 + lam * dx, gm + lam * dy, -dy / L, dx / L);
        }
        if (S.case_i()) {
            const double dx2 = -1 - S.s0(), dy2 = S.h0() - g0, L2 = std::hypot(dx2, dy2);
            for (int i = 0; i < ni; ++i) {
                const double lam = (i + 0.5) / ni;
                glue(S.s0() + lam * dx2, g0 + lam * dy2, -dy2 / L2, dx2 / L2);
            }
        } else {
            for (int i = 0; i < ni; ++i) {
                const double y3 = g0 + (o.y3_max - g0) * (i + 0.5) / ni;
                glue(S.s0(), y3, 1, 0);
            }
        }
    }
    if (S.case_i()) {
        const double gyp = g_d(q, S.yp());
        for (int i = 0; i < ni; ++i) {
            const double y3 = gyp + (o.y3_max - gyp) * (i + 0.5) / ni;
            glue(S.yp(), y3, 1, 0);
        }
    }

    // Edge conditions on y2 = -1 and y2 = 1, from analytic gradients.
    Tracker nl("neumann_left", 1e-6, false), nr("neumann_right", 1e-6, false);
    // The corner (-1, g(-1)) is skipped: for tau = 0 the gradient blows up there.
    for (int j = 0; j <= o.n_y3; ++j) {
        if (j > 0) {
            const double y3 = gm + (o.y3_max - gm) * j / o.n_y3;
            const auto e = S.eval(-1.0, y3);
            nl.add(std::abs(p * e.value + 2 * e.t1 - p * y3 * e.t2), -1.0, y3);
        }
        const double y3r = o.y3_max * j / o.n_y3;
        const auto er = S.eval(1.0, y3r);
        nr.add(std::abs(p * er.value - 2 * er.t1 - p * y3r * er.t2), 1.0, y3r);
    }

    VerificationReport rep;
    for (auto* t : {&ma, &tr, &gl, &dg, &nl, &nr, &bd, &b33}) rep.checks.push_back(t->done());
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

}  // namespace bellman
