#include <gtest/gtest.h>

#include <sstream>

#include "bellman/verify.hpp"

using namespace bellman;

namespace {

struct Pt {
    double p, tau;
};

class VerifyAt : public ::testing::TestWithParam<Pt> {};

VerifyOptions coarse() {
    VerifyOptions o;
    o.n_y2 = 100;
    o.n_y3 = 100;
    o.n_interface = 100;
    return o;
}

}  // namespace

TEST_P(VerifyAt, AllChecksPass) {
    Surface S(Params(GetParam().p, GetParam().tau));
    const auto r = verify_surface(S, coarse());
    for (const auto& c : r.checks) {
        EXPECT_TRUE(c.pass) << c.name << " worst=" << c.worst << " at (" << c.y2 << ", " << c.y3 << ")";
    }
    EXPECT_TRUE(r.pass());
    for (const char* name : {"monge_ampere", "trace", "diagonal_concavity", "neumann_left", "neumann_right",
                             "block_det", "block_n33"}) {
        ASSERT_NE(r.find(name), nullptr) << name;
        EXPECT_GT(r.find(name)->count, 0u) << name;
    }
}

INSTANTIATE_TEST_SUITE_P(Params, VerifyAt,
                         ::testing::Values(Pt{1.5, 1.0}, Pt{1.5, 3.0}, Pt{1.2, 0.822}, Pt{1.5, 0.0}, Pt{1.8, 2.0}),
                         [](const auto& info) {
                             std::ostringstream os;
                             os << "p" << info.param.p * 10 << "_tau" << info.param.tau * 1000;
                             return os.str();
                         });

TEST(Verify, GluingChecksRunWhenACupExists) {
    Surface S(Params(1.5, 1.0));
    const auto r = verify_surface(S, coarse());
    ASSERT_NE(r.find("c1_gluing"), nullptr);
    EXPECT_GT(r.find("c1_gluing")->count, 0u);
}

TEST(Verify, FlippedGradientIsCaught) {
    Surface S(Params(1.5, 3.0));
    S.flip_t2 = true;
    const auto r = verify_surface(S, coarse());
    EXPECT_FALSE(r.pass());
    for (const char* name : {"monge_ampere", "trace", "diagonal_concavity", "neumann_left"}) {
        ASSERT_NE(r.find(name), nullptr);
        EXPECT_FALSE(r.find(name)->pass) << name;
    }
}

TEST(Verify, ReportIsScheduleIndependent) {
    Surface S(Params(1.5, 3.0));
    auto o = coarse();
    o.n_y2 = o.n_y3 = 40;
    o.threads = 1;
    const auto a = verify_surface(S, o);
    o.threads = 4;
    const auto b = verify_surface(S, o);
    ASSERT_EQ(a.checks.size(), b.checks.size());
    for (std::size_t i = 0; i < a.checks.size(); ++i) {
        EXPECT_EQ(a.checks[i].worst, b.checks[i].worst) << a.checks[i].name;
        EXPECT_EQ(a.checks[i].count, b.checks[i].count);
        EXPECT_EQ(a.checks[i].y2, b.checks[i].y2);
    }
}

TEST(Verify, GridStaysInsideTheDomain) {
    Surface S(Params(1.5, 1.0));
    auto o = coarse();
    o.n_y2 = o.n_y3 = 30;
    for (const auto& pt : verification_grid(S, o)) {
        EXPECT_GT(pt[0], -1.0);
        EXPECT_LT(pt[0], 1.0);
        EXPECT_GT(pt[1], g_d(S.params(), pt[0]));
        EXPECT_LE(pt[1], o.y3_max);
    }
}
