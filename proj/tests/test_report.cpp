#include <gtest/gtest.h>

#include <algorithm>
#include <locale>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "bellman/report.hpp"

using namespace bellman;

namespace {

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace

TEST(Format, SeventeenDigitsRoundTrip) {
    for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 7.227599637257686, 1e22}) EXPECT_EQ(std::stod(fmt(x)), x);
    EXPECT_EQ(fmt(0.5), "0.5");
    EXPECT_EQ(fmt(NAN), "nan");
    EXPECT_EQ(fmt(INFINITY), "inf");
    EXPECT_EQ(fmt(-INFINITY), "-inf");
}

namespace {
struct CommaDecimal : std::numpunct<char> {
    char do_decimal_point() const override { return ','; }
};
}  // namespace

TEST(Format, IgnoresGlobalLocale) {
    const std::locale saved = std::locale::global(std::locale(std::locale::classic(), new CommaDecimal));
    std::ostringstream probe;
    probe << 1.25;
    EXPECT_EQ(probe.str(), "1,25");
    EXPECT_EQ(fmt(1.25), "1.25");
    EXPECT_EQ(to_json(sharp_constant(Params(1.5, 0.0), 0.0)).dump().find("2,"), std::string::npos);
    std::locale::global(saved);
}

TEST(Json, ConstantReport) {
    const auto j = to_json(sharp_constant(Params(1.5, 3.0), 0.0));
    EXPECT_EQ(j["schema"], 1);
    EXPECT_EQ(j["case"], "CaseII_LowBeta");
    EXPECT_NEAR(j["s0"].get<double>(), 0.9257015964556096, 1e-11);
    EXPECT_TRUE(j["s1"].is_null());
    EXPECT_NEAR(j["C_power"].get<double>(), 7.227599637257686, 1e-9);
    EXPECT_TRUE(j.contains("residuals"));
    const auto k = to_json(sharp_constant(Params(1.5, 1.0), INFINITY));
    EXPECT_EQ(k["C_power"], "inf");
    EXPECT_TRUE(k["s0"].is_null());
}

TEST(Json, VerificationReport) {
    Surface S(Params(1.5, 3.0));
    VerifyOptions o;
    o.n_y2 = o.n_y3 = o.n_interface = 20;
    const auto j = to_json(verify_surface(S, o));
    EXPECT_EQ(j["schema"], 1);
    EXPECT_TRUE(j["pass"].get<bool>());
    ASSERT_TRUE(j["checks"].is_array());
    EXPECT_EQ(j["checks"].size(), 8u);
    EXPECT_TRUE(j["checks"][0].contains("worst"));
    EXPECT_EQ(j["checks"][0]["at"].size(), 2u);
}

TEST(Json, AdversaryReport) {
    AdversaryOptions o;
    o.trials = 100;
    const auto j = to_json(random_adversary(Params(1.5, 1.0), o));
    EXPECT_EQ(j["seed"], 1);
    EXPECT_EQ(j["trials"], 100);
    EXPECT_EQ(j["argmax_tree_digest"].get<std::string>().size(), 16u);
    EXPECT_FALSE(j.contains("min_majorization_slack"));
}

TEST(Json, Extremizer) {
    const auto j = to_json(vertical_extremizer(Params(1.5, 1.0), 10.0, 1e-2));
    EXPECT_EQ(j["schema"], 1);
    EXPECT_GT(j["nodes"].get<int>(), 1);
    EXPECT_GT(j["psi"].get<double>(), 0.0);
}

TEST(Csv, SurfaceDump) {
    Surface S(Params(1.5, 1.0));
    std::ostringstream a, b;
    write_surface_csv(a, S, 21, 11, 20.0);
    write_surface_csv(b, S, 21, 11, 20.0);
    EXPECT_EQ(a.str(), b.str());
    const auto rows = parse_csv(a.str());
    ASSERT_EQ(rows.size(), 1u + 21 * 11);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"y2", "y3", "region", "s", "B", "t1", "t2"}));
    for (std::size_t r = 1; r < rows.size(); ++r) {
        ASSERT_EQ(rows[r].size(), 7u);
        const double y2 = std::stod(rows[r][0]), y3 = std::stod(rows[r][1]);
        if ((r - 1) % 11 == 0) {
            EXPECT_EQ(rows[r][2], "Boundary");
            EXPECT_NEAR(std::stod(rows[r][4]), f_d(S.params(), y2), 1e-12 * f_d(S.params(), y2));
            EXPECT_NEAR(y3, g_d(S.params(), y2), 1e-15);
        }
    }
    EXPECT_EQ(rows[1][0], "-1");
    EXPECT_EQ(rows.back()[0], "1");
    EXPECT_EQ(rows.back()[1], "20");
}

// Midpoints of a coarse y3 grid, interpolated with a 4-point Lagrange
// stencil (one-sided at the ends), against the doubled grid.  B bends
// sharply in y3 right above the boundary, so linear interpolation on the
// default 200-point grid is off by about 1e-3 in the first cell.
TEST(Csv, RefinementStudy) {
    const int n = 801, rows = 11;
    for (double t : {1.0, 3.0}) {
        Surface S(Params(1.5, t));
        std::ostringstream coarse, fine;
        write_surface_csv(coarse, S, rows, n, 20.0);
        write_surface_csv(fine, S, rows, 2 * n - 1, 20.0);
        const auto c = parse_csv(coarse.str()), f = parse_csv(fine.str());
        double worst = 0;
        for (int i = 0; i < rows; ++i) {
            auto B = [&](int j) { return std::stod(c[1 + i * n + j][4]); };
            for (int j = 0; j + 1 < n; ++j) {
                const int k = std::clamp(j - 1, 0, n - 4);
                const double x = j + 0.5 - k;  // position inside the stencil k..k+3
                double v = 0;
                for (int a = 0; a < 4; ++a) {
                    double w = 1;
                    for (int b = 0; b < 4; ++b)
                        if (b != a) w *= (x - b) / (a - b);
                    v += w * B(k + a);
                }
                const double mid = std::stod(f[1 + i * (2 * n - 1) + 2 * j + 1][4]);
                worst = std::max(worst, std::abs(v - mid) / std::max(1.0, std::abs(mid)));
                EXPECT_EQ(c[1 + i * n + j][4], f[1 + i * (2 * n - 1) + 2 * j][4]);
            }
        }
        EXPECT_LE(worst, 1e-4) << t;
    }
}

TEST(Csv, Leaves) {
    std::ostringstream os;
    const auto ex = vertical_extremizer(Params(1.5, 1.0), 10.0, 1e-2);
    write_leaves_csv(os, ex.pair);
    const auto rows = parse_csv(os.str());
    EXPECT_EQ(rows[0], (std::vector<std::string>{"left", "right", "F", "G"}));
    EXPECT_EQ(std::stod(rows[1][0]), 0.0);
    EXPECT_NEAR(std::stod(rows.back()[1]), 1.0, 1e-12);
}
