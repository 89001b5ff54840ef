#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "bellman/cup.hpp"
#include "bellman/errors.hpp"
#include "bellman/geometry.hpp"
#include "bellman/parallel.hpp"
#include "bellman/roots.hpp"
#include "bellman/sharp_constant.hpp"
#include "bellman/surface.hpp"

namespace bellman {

// Node of a dyadic martingale tree.  Internal nodes carry the split
// fraction alpha of the left child; children always sit at larger
// indices than their parent and node 0 is the root.
struct MNode {
    double F = 0, G = 0;
    double alpha = 0;
    std::int32_t left = -1, right = -1;

    [[nodiscard]] bool leaf() const { return left < 0; }
};

struct PsiStats {
    double psi = 0, ef = 0, eg = 0, efp = 0;
};

struct LeafInterval {
    double left, right, F, G;
};

class MartingalePair {
public:
    std::vector<MNode> nodes;

    MartingalePair() = default;
    MartingalePair(double F, double G) { nodes.push_back({F, G, 0, -1, -1}); }

    [[nodiscard]] std::size_t size() const { return nodes.size(); }
    [[nodiscard]] const MNode& root() const { return nodes.front(); }

    // Appends two children under node i and returns their indices.
    std::pair<std::int32_t, std::int32_t> split(std::int32_t i, double alpha, double FL, double GL, double FR, double GR) {
        const auto l = static_cast<std::int32_t>(nodes.size());
        nodes.push_back({FL, GL, 0, -1, -1});
        nodes.push_back({FR, GR, 0, -1, -1});
        nodes[i].alpha = alpha;
        nodes[i].left = l;
        nodes[i].right = l + 1;
        return {l, l + 1};
    }

    // Absolute measure of every node.
    [[nodiscard]] std::vector<double> masses() const {
        std::vector<double> m(nodes.size(), 0.0);
        if (nodes.empty()) return m;
        m[0] = 1.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const auto& n = nodes[i];
            if (n.leaf()) continue;
            m[n.left] = m[i] * n.alpha;
            m[n.right] = m[i] * (1 - n.alpha);
        }
        return m;
    }

    // Leaves as consecutive subintervals of [0,1], left child first.
    [[nodiscard]] std::vector<LeafInterval> leaf_intervals() const {
        std::vector<LeafInterval> out;
        std::vector<std::pair<std::int32_t, double>> stack{{0, 0.0}};
        const auto m = masses();
        while (!stack.empty()) {
            auto [i, x] = stack.back();
            stack.pop_back();
            const auto& n = nodes[i];
            if (n.leaf()) {
                out.push_back({x, x + m[i], n.F, n.G});
                continue;
            }
            stack.push_back({n.right, x + m[n.left]});
            stack.push_back({n.left, x});
        }
        return out;
    }

    // Throws if the tree breaks the index order, the martingale averages
    // or |dG| = |dF| at any split.
    void validate(double rtol = 1e-10) const {
        if (nodes.empty()) throw TransformViolation("empty tree");
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const auto& n = nodes[i];
            if (n.leaf()) {
                if (n.right >= 0) throw TransformViolation("node with a single child");
                continue;
            }
            if (n.left <= static_cast<std::int32_t>(i) || n.right <= static_cast<std::int32_t>(i) ||
                n.left >= static_cast<std::int32_t>(nodes.size()) || n.right >= static_cast<std::int32_t>(nodes.size()))
                throw TransformViolation("child index out of order at node " + std::to_string(i));
            if (!(n.alpha > 0 && n.alpha < 1)) throw TransformViolation("split fraction outside (0,1)");
            const auto& L = nodes[n.left];
            const auto& R = nodes[n.right];
            const double scale = std::max({1.0, std::abs(n.F), std::abs(n.G), std::abs(L.F), std::abs(L.G),
                                           std::abs(R.F), std::abs(R.G)});
            const double tol = rtol * scale;
            if (std::abs(n.alpha * L.F + (1 - n.alpha) * R.F - n.F) > tol ||
                std::abs(n.alpha * L.G + (1 - n.alpha) * R.G - n.G) > tol)
                throw TransformViolation("martingale average broken at node " + std::to_string(i));
            if (std::abs(std::abs(L.G - n.G) - std::abs(L.F - n.F)) > tol ||
                std::abs(std::abs(R.G - n.G) - std::abs(R.F - n.F)) > tol)
                throw TransformViolation("|dG| != |dF| at node " + std::to_string(i));
        }
    }
};

// Bottom-up reduction, so that concatenation is exactly additive.
[[nodiscard]] inline PsiStats psi(const Params& q, const MartingalePair& m) {
    std::vector<PsiStats> v(m.nodes.size());
    const double p = q.p, t2 = q.tau * q.tau;
    for (std::size_t k = m.nodes.size(); k-- > 0;) {
        const auto& n = m.nodes[k];
        if (n.leaf()) {
            v[k] = {std::pow(n.G * n.G + t2 * n.F * n.F, p / 2), n.F, n.G, std::pow(std::abs(n.F), p)};
        } else {
            const auto &L = v[n.left], &R = v[n.right];
            const double a = n.alpha, b = 1 - n.alpha;
            v[k] = {a * L.psi + b * R.psi, a * L.ef + b * R.ef, a * L.eg + b * R.eg, a * L.efp + b * R.efp};
        }
    }
    return v.front();
}

// The pair (1-s, 1+s): a single leaf at the boundary point (s, g(s)).
[[nodiscard]] inline MartingalePair constant_pair(double s) {
    detail::check_s(s);
    return MartingalePair(1 - s, 1 + s);
}

[[nodiscard]] inline MartingalePair concatenate(const MartingalePair& left, const MartingalePair& right, double alpha,
                                                double rtol = 1e-10) {
    if (!(alpha > 0 && alpha < 1)) throw DomainError("alpha must lie in (0,1)");
    const auto& L = left.root();
    const auto& R = right.root();
    MartingalePair out;
    out.nodes.reserve(1 + left.size() + right.size());
    out.nodes.push_back({alpha * L.F + (1 - alpha) * R.F, alpha * L.G + (1 - alpha) * R.G, alpha, 1,
                         static_cast<std::int32_t>(1 + left.size())});
    auto append = [&](const MartingalePair& src, std::int32_t off) {
        for (auto n : src.nodes) {
            if (!n.leaf()) {
                n.left += off;
                n.right += off;
            }
            out.nodes.push_back(n);
        }
    };
    append(left, 1);
    append(right, static_cast<std::int32_t>(1 + left.size()));
    const auto& r = out.nodes.front();
    const double scale = std::max({1.0, std::abs(L.F), std::abs(L.G), std::abs(R.F), std::abs(R.G)});
    if (std::abs(std::abs(L.G - r.G) - std::abs(L.F - r.F)) > rtol * scale)
        throw TransformViolation("concatenation breaks |dG| = |dF| at the new root");
    return out;
}

[[nodiscard]] inline MartingalePair scaled(MartingalePair m, double lambda) {
    for (auto& n : m.nodes) {
        n.F *= lambda;
        n.G *= lambda;
    }
    return m;
}

[[nodiscard]] inline MartingalePair reflected_F(MartingalePair m) {
    for (auto& n : m.nodes) n.F = -n.F;
    return m;
}

[[nodiscard]] inline MartingalePair reflected_G(MartingalePair m) {
    for (auto& n : m.nodes) n.G = -n.G;
    return m;
}

struct Extremizer {
    MartingalePair pair;
    PsiStats stats;
    double target = kNaN;   // B(-1, y3)
    double eps = kNaN;      // step actually used
    std::size_t steps = 0;  // recursion levels or iterations
    double truncated_mass = 0;

    [[nodiscard]] double rel_gap() const { return (target - stats.psi) / target; }
};

// w0 = 1 + s with h(s) = y3: the eps -> 0 limit of the vertical split.
[[nodiscard]] inline double vertical_w0(const Params& q, double y3) {
    const double yp = q.yp();
    auto fn = [&](double s) { return h_of_s(q, s) - y3; };
    const double lo = -1.0, hi = yp - 1e-12;
    const double flo = fn(lo), fhi = fn(hi);
    if (!(flo <= 0 && fhi > 0)) throw NoSolution("y3 outside the range of h on [-1, y_p)");
    return 1 + bracket_root(fn, lo, hi, flo, fhi, "w0");
}

// B(-1, y3) on the left fan: (2/p) f(s)/(y_p - s) with h(s) = y3.
[[nodiscard]] inline double vertical_target(const Params& q, double y3) {
    const double s = vertical_w0(q, y3) - 1;
    return 2 / q.p * f_d(q, s) / (q.yp() - s);
}

// Self-similar pair at (-1, y3) in case (i): an eps-leaf on each side and a
// gamma-rescaled copy of itself in the middle, truncated once the middle
// mass weighted by |F|^p falls below eps^2.
[[nodiscard]] inline Extremizer vertical_extremizer(const Params& q, double y3, double eps) {
    if (!(eps > 0 && eps <= 0.1)) throw DomainError("eps must lie in (0, 0.1]");
    if (!is_case_i(q)) throw CaseMismatch("vertical extremizer needs s0 < y_p");
    const double p = q.p;
    if (!q.burkholder()) {
        Surface S(q);
        if (y3 < S.h0()) throw DomainError("vertical extremizer needs y3 >= h(s0)");
    }
    struct Parts {
        double gam, dm, dp, den;
    };
    auto parts = [&](double w) {
        const double gam = 1 + eps * w / (1 - eps);
        return Parts{gam, 2 - w, 2 * gam - w, 1 - (1 - 2 * eps) * std::pow(gam, p)};
    };
    auto Y = [&](double w) {
        const auto P = parts(w);
        return eps * (std::pow(P.dp, p) + std::pow(P.dm, p)) / P.den;
    };
    double whi;
    try {
        whi = bracket_root([&](double w) { return parts(w).den; }, 0.0, 2.0, "vertical split limit");
    } catch (const BracketError&) {
        throw NoSolution("vertical split has no admissible w");
    }
    const double w_top = whi * (1 - 1e-13);
    if (!(Y(0.0) < y3 && Y(w_top) > y3)) throw NoSolution("vertical split: y3 not bracketed");
    const double w = bracket_root([&](double x) { return Y(x) - y3; }, 0.0, w_top, "vertical w");
    const auto P = parts(w);
    const double ratio = (1 - 2 * eps) * std::pow(P.gam, p);

    Extremizer ex;
    ex.eps = eps;
    ex.target = vertical_target(q, y3);
    auto& m = ex.pair;
    m.nodes.emplace_back(MNode{2, 0, 0, -1, -1});
    std::int32_t cur = 0;
    double sigma = 1, weight = 1;
    const double r_mid = (1 - 2 * eps) / (1 - eps);
    while (weight >= eps * eps) {
        auto [l, r] = m.split(cur, eps, sigma * P.dm, sigma * w, sigma * (1 + P.gam), -sigma * (P.gam - 1));
        (void)l;
        auto [mid, rl] = m.split(r, r_mid, sigma * 2 * P.gam, 0.0, sigma * P.dp, -sigma * w);
        (void)rl;
        cur = mid;
        sigma *= P.gam;
        weight *= ratio;
        ++ex.steps;
    }
    ex.truncated_mass = weight;
    ex.stats = psi(q, m);
    if (!std::isfinite(ex.stats.psi) || !std::isfinite(ex.stats.efp))
        throw NoSolution("leaf values leave the double range; lower y3 or raise eps");
    return ex;
}

// Limit value f(-1) + (y3 - g(-1)) t2(s0), with t2(s0) written as in the
// iterative construction.
[[nodiscard]] inline double iterative_target(const Params& q, double s0, double y3) {
    const double d0 = q.p + q.p * s0 - 2;
    const double slope = (f_d(q, -1) + 2 * f_d(q, s0) / d0) / (g_d(q, -1) + 2 * g_d(q, s0) / d0);
    return f_d(q, -1) + (y3 - g_d(q, -1)) * slope;
}

namespace detail {

inline Extremizer iterative_once(const Params& q, double s0, double y3, double eps) {
    const double p = q.p, gs = g_d(q, s0), gm = g_d(q, -1);
    std::vector<double> steps;
    double y = y3;
    for (;;) {
        auto next = [&](double e, double* w2 = nullptr, double* w3 = nullptr) {
            const double W3 = (y - e * gs) * std::pow(1 - e, p - 1) / std::pow(1 + e * s0, p);
            if (w2) *w2 = -(1 - e) / (1 + e * s0);
            if (w3) *w3 = W3;
            const double d = e / (1 + e * s0);
            return (W3 - d * gs) / (1 - d);
        };
        double W2, W3;
        double e = eps;
        const double yn = next(e);
        const bool last = yn <= gm;
        if (last) e = bracket_root([&](double x) { return next(x) - gm; }, 0.0, eps, y - gm, yn - gm, "last step");
        (void)next(e, &W2, &W3);
        if (W3 < g_d(q, W2)) throw StepTooLarge("intermediate point leaves the domain");
        steps.push_back(e);
        if (last) break;
        y = yn;
        if (steps.size() > 50'000'000) throw StepTooLarge("iteration does not reach g(-1)");
    }

    // Unroll: each step puts (1-s0, 1+s0) on mass e, then, inside the
    // rescaled and G-reflected remainder, on mass d.
    Extremizer ex;
    ex.eps = eps;
    ex.steps = steps.size();
    ex.target = iterative_target(q, s0, y3);
    auto& m = ex.pair;
    m.nodes.reserve(4 * steps.size() + 1);
    m.nodes.emplace_back(MNode{2, 0, 0, -1, -1});
    std::int32_t cur = 0;
    double sigma = 1, sg = 1;  // current frame: (F, G) -> (sigma F, sg sigma G)
    for (double e : steps) {
        const double lam = (1 + e * s0) / (1 - e), d = e / (1 + e * s0);
        const double FR = (2 - e * (1 - s0)) / (1 - e), GR = -e * (1 + s0) / (1 - e);
        auto [l, r] = m.split(cur, e, sigma * (1 - s0), sg * sigma * (1 + s0), sigma * FR, sg * sigma * GR);
        (void)l;
        // Remainder = lam * (F', -G') with (F', G') at y2 = -1/lam.
        const double sigma2 = sigma * lam, sg2 = -sg;
        auto [l2, r2] = m.split(r, d, sigma2 * (1 - s0), sg2 * sigma2 * (1 + s0), sigma2 * 2, 0.0);
        (void)l2;
        cur = r2;
        sigma = sigma2;
        sg = sg2;
    }
    ex.stats = psi(q, m);
    return ex;
}

}  // namespace detail

// Case (ii) pair at (-1, y3): repeated splitting off of the boundary point
// (s0, g(s0)) until the remainder reaches (-1, g(-1)).  Retries once with
// eps/2 if a step leaves the domain.
[[nodiscard]] inline Extremizer iterative_extremizer(const Params& q, double s0, double y3, double eps) {
    if (!(eps > 0 && eps <= 0.1)) throw DomainError("eps must lie in (0, 0.1]");
    if (is_case_i(q)) throw CaseMismatch("iterative extremizer needs s0 > y_p");
    if (!(y3 > g_d(q, -1))) throw DomainError("iterative extremizer needs y3 > g(-1)");
    try {
        return detail::iterative_once(q, s0, y3, eps);
    } catch (const StepTooLarge&) {
        return detail::iterative_once(q, s0, y3, eps / 2);
    }
}

[[nodiscard]] inline Extremizer iterative_extremizer(const CupProfile& prof, double y3, double eps) {
    return iterative_extremizer(prof.params, prof.s0, y3, eps);
}

// 64-bit FNV-1a over the raw bytes of every node.
[[nodiscard]] inline std::uint64_t tree_digest(const MartingalePair& m) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](const void* data, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ull;
        }
    };
    for (const auto& n : m.nodes) {
        mix(&n.F, sizeof n.F);
        mix(&n.G, sizeof n.G);
        mix(&n.alpha, sizeof n.alpha);
        mix(&n.left, sizeof n.left);
        mix(&n.right, sizeof n.right);
    }
    return h;
}

struct AdversaryOptions {
    std::uint64_t seed = 1;
    std::size_t trials = 100000;
    int max_depth = 12;
    double split_prob = 0.7;
    double jitter = 1.0;     // step size at the root
    double jitter_decay = 0.7;
    unsigned threads = 0;
};

struct AdversaryReport {
    std::uint64_t seed = 0;
    std::size_t trials = 0;
    double max_ratio = 0;
    std::size_t argmax_trial = 0;
    std::uint64_t argmax_tree_digest = 0;
    double argmax_beta = kNaN;
    // min of H(EF,EG,E|F|^p) - psi over all trials, if a surface was given
    std::optional<double> min_majorization_slack;
};

// Random admissible tree for one trial; the stream depends only on
// (seed, trial).
[[nodiscard]] inline MartingalePair random_pair(std::uint64_t seed, std::size_t trial, const AdversaryOptions& o) {
    std::seed_seq ss{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                     static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32)};
    std::mt19937_64 rng(ss);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    MartingalePair m(1.0, -3.0 + 6.0 * U(rng));
    std::vector<std::pair<std::int32_t, int>> stack{{0, 0}};
    while (!stack.empty()) {
        auto [i, depth] = stack.back();
        stack.pop_back();
        if (depth >= o.max_depth || (depth > 0 && U(rng) > o.split_prob)) continue;
        const double alpha = 0.1 + 0.8 * U(rng);
        const double sign = U(rng) < 0.5 ? -1.0 : 1.0;
        const double d = o.jitter * std::pow(o.jitter_decay, depth) * (2 * U(rng) - 1);
        const double dR = -alpha * d / (1 - alpha);
        const double F = m.nodes[i].F, G = m.nodes[i].G;
        auto [l, r] = m.split(i, alpha, F + d, G + sign * d, F + dR, G + sign * dR);
        stack.push_back({r, depth + 1});
        stack.push_back({l, depth + 1});
    }
    return m;
}

[[nodiscard]] inline AdversaryReport random_adversary(const Params& q, const AdversaryOptions& o,
                                                      const Surface* surface = nullptr) {
    if (o.max_depth < 0 || o.max_depth > 16) throw DomainError("max_depth must lie in [0,16]");
    ConstantSolver cs(q);
    if (!cs.case_i()) (void)cs.s_star();  // build shared state before going parallel
    struct Slot {
        double ratio = 0, beta = kNaN, slack = kNaN;
    };
    std::vector<Slot> slots(o.trials);
    parallel_for(o.trials, [&](std::size_t t) {
        const auto m = random_pair(o.seed, t, o);
        const auto st = psi(q, m);
        auto& s = slots[t];
        if (surface) s.slack = surface->H(st.ef, st.eg, st.efp) - st.psi;
        if (st.ef == 0.0 || st.efp == 0.0) return;
        s.beta = std::abs(st.eg / st.ef);
        s.ratio = st.psi / (cs(s.beta).C_power * st.efp);
    }, o.threads ? o.threads : worker_count());

    AdversaryReport rep;
    rep.seed = o.seed;
    rep.trials = o.trials;
    for (std::size_t t = 0; t < slots.size(); ++t) {
        if (slots[t].ratio > rep.max_ratio) {
            rep.max_ratio = slots[t].ratio;
            rep.argmax_trial = t;
            rep.argmax_beta = slots[t].beta;
        }
        if (surface && (!rep.min_majorization_slack || slots[t].slack < *rep.min_majorization_slack))
            rep.min_majorization_slack = slots[t].slack;
    }
    if (o.trials > 0) rep.argmax_tree_digest = tree_digest(random_pair(o.seed, rep.argmax_trial, o));
    return rep;
}

// Local-optimality probe: greedily split leaves of `start` with small
// transform-preserving steps, keeping a split when it raises
// psi - H(EF, EG, E|F|^p).  Returns the total improvement.
[[nodiscard]] inline double hill_climb(const Surface& S, const MartingalePair& start, std::uint64_t seed,
                                       int iters, double step) {
    const Params& q = S.params();
    const double p = q.p, t2 = q.tau * q.tau;
    auto phi = [&](double F, double G) { return std::pow(G * G + t2 * F * F, p / 2); };
    auto st = psi(q, start);
    const auto mass = start.masses();
    std::vector<std::size_t> leaves;
    for (std::size_t i = 0; i < start.nodes.size(); ++i)
        if (start.nodes[i].leaf()) leaves.push_back(i);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const double score0 = st.psi - S.H(st.ef, st.eg, st.efp);
    double score = score0;
    for (int it = 0; it < iters && !leaves.empty(); ++it) {
        const std::size_t k = static_cast<std::size_t>(U(rng) * leaves.size()) % leaves.size();
        const std::size_t i = leaves[k];
        const auto& n = start.nodes[i];
        const double alpha = 0.1 + 0.8 * U(rng), sign = U(rng) < 0.5 ? -1.0 : 1.0;
        const double d = step * std::max(1.0, std::abs(n.F)) * (2 * U(rng) - 1), dR = -alpha * d / (1 - alpha);
        const double dpsi = mass[i] * (alpha * phi(n.F + d, n.G + sign * d) +
                                       (1 - alpha) * phi(n.F + dR, n.G + sign * dR) - phi(n.F, n.G));
        const double dfp = mass[i] * (alpha * std::pow(std::abs(n.F + d), p) +
                                      (1 - alpha) * std::pow(std::abs(n.F + dR), p) - std::pow(std::abs(n.F), p));
        const double cand = st.psi + dpsi - S.H(st.ef, st.eg, st.efp + dfp);
        if (cand > score) {
            score = cand;
            st.psi += dpsi;
            st.efp += dfp;
            leaves[k] = leaves.back();  // a split leaf is no longer a leaf
            leaves.pop_back();
        }
    }
    return score - score0;
}

}  // namespace bellman
