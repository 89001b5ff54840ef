#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "bellman/martingale.hpp"
#include "bellman/surface.hpp"

using namespace bellman;

namespace {

const Surface& surface(double p, double tau) {
    static std::map<std::pair<double, double>, Surface> cache;
    auto key = std::make_pair(p, tau);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, Surface(Params(p, tau))).first;
    return it->second;
}

MartingalePair two_level() {
    MartingalePair m(2.0, 0.0);
    auto [l, r] = m.split(0, 0.5, 1.0, 1.0, 3.0, -1.0);
    m.split(l, 0.3, 1.7, 0.3, 0.7, 1.3);
    m.split(r, 0.6, 2.5, -0.5, 3.75, -1.75);
    return m;
}

}  // namespace

TEST(Pair, ConstantPairs) {
    const Params q(1.5, 1.0);
    auto st = psi(q, constant_pair(0.0));
    EXPECT_EQ(st.ef, 1.0);
    EXPECT_EQ(st.eg, 1.0);
    EXPECT_EQ(st.efp, 1.0);
    st = psi(q, constant_pair(-1.0));
    EXPECT_EQ(st.ef, 2.0);
    EXPECT_EQ(st.eg, 0.0);
    EXPECT_NEAR(st.efp, std::pow(2.0, 1.5), 1e-15);
    st = psi(q, constant_pair(1.0));
    EXPECT_EQ(st.ef, 0.0);
    EXPECT_EQ(st.eg, 2.0);
    EXPECT_EQ(st.efp, 0.0);
    for (double s : {-0.7, 0.2, 0.9}) EXPECT_NEAR(psi(Params(1.3, 2.0), constant_pair(s)).psi, f_d(Params(1.3, 2.0), s), 1e-13);
    EXPECT_THROW((void)constant_pair(1.5), DomainError);
}

TEST(Pair, SymmetricSplit) {
    for (double t : {0.5, 1.0, 3.0}) {
        const Params q(1.5, t);
        MartingalePair m(2.0, 0.0);
        m.split(0, 0.5, 1.0, 1.0, 3.0, -1.0);
        m.validate();
        const double want = 0.5 * (std::pow(1 + t * t, 0.75) + std::pow(1 + 9 * t * t, 0.75));
        EXPECT_NEAR(psi(q, m).psi, want, 1e-13 * want);
    }
}

TEST(Pair, ValidateCatchesBrokenTrees) {
    auto m = two_level();
    EXPECT_NO_THROW(m.validate());
    auto bad_avg = m;
    bad_avg.nodes[1].F += 0.1;
    EXPECT_THROW(bad_avg.validate(), TransformViolation);
    MartingalePair bad_jump(0.0, 0.0);
    bad_jump.split(0, 0.5, 1.0, 0.5, -1.0, -0.5);
    EXPECT_THROW(bad_jump.validate(), TransformViolation);
    auto bad_alpha = m;
    bad_alpha.nodes[0].alpha = 1.0;
    EXPECT_THROW(bad_alpha.validate(), TransformViolation);
}

TEST(Pair, LeafIntervalsTileTheUnitInterval) {
    const auto m = two_level();
    const auto leaves = m.leaf_intervals();
    ASSERT_EQ(leaves.size(), 4u);
    EXPECT_EQ(leaves.front().left, 0.0);
    for (std::size_t i = 1; i < leaves.size(); ++i) EXPECT_DOUBLE_EQ(leaves[i].left, leaves[i - 1].right);
    EXPECT_NEAR(leaves.back().right, 1.0, 1e-15);
    const auto mass = m.masses();
    double total = 0;
    for (std::size_t i = 0; i < m.size(); ++i)
        if (m.nodes[i].leaf()) total += mass[i];
    EXPECT_NEAR(total, 1.0, 1e-15);
}

TEST(Pair, JensenForMoments) {
    const Params q(1.5, 1.0);
    const auto st = psi(q, two_level());
    EXPECT_GE(st.efp, std::pow(std::abs(st.ef), q.p));
}

TEST(Pair, ConcatenationIsExactlyAdditive) {
    const Params q(1.5, 3.0);
    const auto L = two_level();
    const auto R = scaled(reflected_G(two_level()), 1.3);
    // Shift R so that the root jump is diagonal: its root moves to (2.3, 0.3).
    auto Rs = R;
    for (auto& n : Rs.nodes) {
        n.F -= 0.3;
        n.G += 0.3;
    }
    const auto m = concatenate(L, Rs, 0.37);
    m.validate();
    const auto a = psi(q, L), b = psi(q, Rs), c = psi(q, m);
    EXPECT_EQ(c.psi, 0.37 * a.psi + (1 - 0.37) * b.psi);
    EXPECT_EQ(c.efp, 0.37 * a.efp + (1 - 0.37) * b.efp);
}

TEST(Pair, ConcatenationChecksTheRootJump) {
    EXPECT_THROW((void)concatenate(MartingalePair(1.0, 0.0), MartingalePair(0.0, 0.0), 0.5), TransformViolation);
    EXPECT_THROW((void)concatenate(constant_pair(0.0), constant_pair(0.0), 1.0), DomainError);
    const Params q(1.5, 1.0);
    const auto m = concatenate(constant_pair(0.3), constant_pair(0.3), 0.5);
    const auto a = psi(q, m), b = psi(q, constant_pair(0.3));
    EXPECT_EQ(a.ef, b.ef);
    EXPECT_EQ(a.eg, b.eg);
    EXPECT_EQ(a.psi, b.psi);
}

TEST(Pair, ChordConcatenationHitsTheSurface) {
    const auto& S = surface(1.5, 1.0);
    const Params& q = S.params();
    const auto& prof = *S.cup();
    for (std::size_t i = 10; i < prof.nodes.size(); i += 40) {
        const auto& n = prof.nodes[i];
        if (n.s <= prof.s_model) continue;
        for (double w : {0.2, 0.6}) {
            const auto m = concatenate(constant_pair(n.a), constant_pair(n.s), w);
            const auto st = psi(q, m);
            EXPECT_NEAR(st.psi, w * f_d(q, n.a) + (1 - w) * f_d(q, n.s), 1e-13);
            EXPECT_NEAR(st.psi, S.H(st.ef, st.eg, st.efp), 1e-9 * st.psi);
        }
    }
}

TEST(Pair, ScalingAndReflection) {
    const Params q(1.5, 3.0);
    const auto m = two_level();
    const double base = psi(q, m).psi;
    for (double lam : {-2.5, -0.3, 0.7, 4.0}) {
        const double v = psi(q, scaled(m, lam)).psi;
        EXPECT_LE(std::abs(v - std::pow(std::abs(lam), q.p) * base), 1e-12 * v);
        scaled(m, lam).validate();
    }
    EXPECT_EQ(psi(q, reflected_F(m)).psi, base);
    EXPECT_EQ(psi(q, reflected_G(m)).psi, base);
    reflected_F(m).validate();
}

TEST(Vertical, InvertsFanEnd) {
    const Params q(1.5, 1.0);
    for (double s : {-0.5, 0.0, 0.25, 0.3}) EXPECT_NEAR(vertical_w0(q, h_of_s(q, s)), 1 + s, 1e-6);
    EXPECT_THROW((void)vertical_w0(q, 1.0), NoSolution);
}

TEST(Vertical, TargetIsTheSurfaceValue) {
    const auto& S = surface(1.5, 1.0);
    for (double y3 : {10.0, 15.0, 20.0}) EXPECT_NEAR(vertical_target(S.params(), y3), S.B(-1.0, y3), 1e-9 * y3);
}

TEST(Vertical, SharpnessCertificate) {
    const auto& S = surface(1.5, 1.0);
    const Params& q = S.params();
    for (double y3 : {10.0, 15.0, 20.0}) {
        double prev_gap = INFINITY;
        for (double eps : {1e-2, 1e-3}) {
            const auto ex = vertical_extremizer(q, y3, eps);
            ex.pair.validate();
            EXPECT_NEAR(ex.stats.ef, 2.0, 1e-12);
            EXPECT_NEAR(ex.stats.eg, 0.0, 1e-10);
            EXPECT_NEAR(ex.stats.efp, y3, 10 * eps * y3);
            EXPECT_GE(ex.stats.psi, ex.target * (1 - 5 * eps));
            EXPECT_LE(ex.stats.psi, S.H(ex.stats.ef, ex.stats.eg, ex.stats.efp) + 1e-8);
            const double gap = ex.rel_gap();
            EXPECT_LT(gap, prev_gap);
            prev_gap = gap;
        }
    }
}

TEST(Vertical, Preconditions) {
    EXPECT_THROW((void)vertical_extremizer(Params(1.5, 1.0), 10.0, 0.2), DomainError);
    EXPECT_THROW((void)vertical_extremizer(Params(1.5, 1.0), 10.0, 0.0), DomainError);
    EXPECT_THROW((void)vertical_extremizer(Params(1.5, 3.0), 10.0, 1e-2), CaseMismatch);
    EXPECT_THROW((void)vertical_extremizer(Params(1.5, 1.0), 1.0, 1e-2), Error);
}

TEST(Vertical, HillClimbFindsNoImprovement) {
    const auto& S = surface(1.5, 1.0);
    const auto ex = vertical_extremizer(S.params(), 15.0, 1e-2);
    const double gain = hill_climb(S, ex.pair, 1, 2000, 1e-2);
    EXPECT_GE(gain, 0.0);
    EXPECT_LE(gain, 1e-2 * ex.target);
}

TEST(Iterative, LimitSlopeMatchesLastChord) {
    auto& S = surface(1.5, 3.0);
    const Params& q = S.params();
    const double s0 = S.s0(), d0 = q.p + q.p * s0 - 2;
    ASSERT_GT(d0, 0.0);
    const double slope = (f_d(q, -1) + 2 * f_d(q, s0) / d0) / (g_d(q, -1) + 2 * g_d(q, s0) / d0);
    EXPECT_NEAR(slope, S.t2_ang(), 1e-9 * slope);
    for (double y3 : {5.0, 20.0, 100.0}) EXPECT_NEAR(iterative_target(q, s0, y3), S.B(-1.0, y3), 1e-9 * y3);
}

TEST(Iterative, SharpnessCertificate) {
    const auto& S = surface(1.5, 3.0);
    for (double y3 : {5.0, 20.0, 100.0}) {
        double prev_gap = INFINITY;
        for (double eps : {1e-2, 1e-3}) {
            const auto ex = iterative_extremizer(*S.cup(), y3, eps);
            ex.pair.validate();
            EXPECT_NEAR(ex.stats.ef, 2.0, 1e-9);
            EXPECT_NEAR(ex.stats.eg, 0.0, 1e-9);
            EXPECT_NEAR(ex.stats.efp, y3, 1e-9 * y3);
            EXPECT_GE(ex.stats.psi, ex.target * (1 - 5 * eps));
            EXPECT_LE(ex.stats.psi, S.H(ex.stats.ef, ex.stats.eg, ex.stats.efp) + 1e-8);
            const double gap = ex.rel_gap();
            EXPECT_GT(gap, 0.0);
            EXPECT_LT(gap, prev_gap);
            prev_gap = gap;
        }
    }
    EXPECT_EQ(iterative_extremizer(*S.cup(), 20.0, 1e-2).steps, 219u);
}

TEST(Iterative, Preconditions) {
    EXPECT_THROW((void)iterative_extremizer(Params(1.5, 1.0), 0.2, 10.0, 1e-2), CaseMismatch);
    const auto& S = surface(1.5, 3.0);
    EXPECT_THROW((void)iterative_extremizer(*S.cup(), 2.0, 1e-2), DomainError);
    EXPECT_THROW((void)iterative_extremizer(*S.cup(), 10.0, 0.5), DomainError);
}

TEST(Adversary, RatioBoundAndMajorization) {
    for (auto [p, t] : {std::pair{1.5, 1.0}, {1.5, 3.0}, {1.2, 0.822}}) {
        const auto& S = surface(p, t);
        AdversaryOptions o;
        o.trials = 5000;
        const auto r = random_adversary(S.params(), o, &S);
        EXPECT_LE(r.max_ratio, 1 + 1e-9);
        EXPECT_GT(r.max_ratio, 0.5);
        ASSERT_TRUE(r.min_majorization_slack.has_value());
        EXPECT_GE(*r.min_majorization_slack, -1e-8);
    }
}

TEST(Adversary, Deterministic) {
    const Params q(1.5, 3.0);
    AdversaryOptions o;
    o.trials = 3000;
    o.seed = 42;
    o.threads = 1;
    const auto a = random_adversary(q, o);
    o.threads = 4;
    const auto b = random_adversary(q, o);
    EXPECT_EQ(a.max_ratio, b.max_ratio);
    EXPECT_EQ(a.argmax_trial, b.argmax_trial);
    EXPECT_EQ(a.argmax_tree_digest, b.argmax_tree_digest);
    o.seed = 43;
    EXPECT_NE(random_adversary(q, o).argmax_tree_digest, a.argmax_tree_digest);
}

TEST(Adversary, GeneratedPairsAreAdmissible) {
    AdversaryOptions o;
    for (std::size_t t = 0; t < 200; ++t) random_pair(7, t, o).validate(1e-9);
    EXPECT_EQ(tree_digest(random_pair(7, 3, o)), tree_digest(random_pair(7, 3, o)));
}

TEST(Adversary, DepthLimit) {
    AdversaryOptions o;
    o.max_depth = 17;
    EXPECT_THROW((void)random_adversary(Params(1.5, 1.0), o), DomainError);
}
