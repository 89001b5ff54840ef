#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bellman/cup.hpp"
#include "bellman/martingale.hpp"
#include "bellman/sharp_constant.hpp"
#include "bellman/surface.hpp"
#include "bellman/verify.hpp"

namespace bellman {

inline constexpr int kJsonSchema = 1;

// 17 significant digits, '.' separator, independent of the global locale.
[[nodiscard]] inline std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
    return std::string(buf, r.ptr);
}

namespace detail {
inline nlohmann::json num(double x) {
    if (std::isfinite(x)) return x;
    return fmt(x);
}
inline nlohmann::json opt(const std::optional<double>& x) {
    if (!x) return nullptr;
    return num(*x);
}
}  // namespace detail

[[nodiscard]] inline nlohmann::json to_json(const ConstantReport& r) {
    return {{"schema", kJsonSchema},
            {"case", to_string(r.kase)},
            {"beta", detail::num(r.beta)},
            {"beta_prime", detail::num(r.beta_prime)},
            {"s0", detail::opt(r.s0)},
            {"s_star", detail::opt(r.s_star)},
            {"s1", detail::opt(r.s1)},
            {"C_power", detail::num(r.C_power)},
            {"C_norm", detail::num(r.C_norm)},
            {"residuals",
             {{"s_star", detail::num(r.star_residual)},
              {"closed_form", detail::num(r.closed_form_gap)},
              {"R", detail::num(r.r_residual)}}}};
}

[[nodiscard]] inline nlohmann::json to_json(const CheckResult& c) {
    return {{"name", c.name}, {"worst", detail::num(c.worst)}, {"tol", c.tol},
            {"lower_bound", c.lower_bound}, {"pass", c.pass}, {"count", c.count},
            {"at", {detail::num(c.y2), detail::num(c.y3)}}};
}

[[nodiscard]] inline nlohmann::json to_json(const VerificationReport& r) {
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : r.checks) checks.push_back(to_json(c));
    return {{"schema", kJsonSchema}, {"pass", r.pass()}, {"checks", checks}};
}

[[nodiscard]] inline nlohmann::json to_json(const AdversaryReport& r) {
    char digest[17];
    std::snprintf(digest, sizeof digest, "%016llx", static_cast<unsigned long long>(r.argmax_tree_digest));
    nlohmann::json j{{"schema", kJsonSchema},
                     {"seed", r.seed},
                     {"trials", r.trials},
                     {"max_ratio", detail::num(r.max_ratio)},
                     {"argmax_trial", r.argmax_trial},
                     {"argmax_beta", detail::num(r.argmax_beta)},
                     {"argmax_tree_digest", digest}};
    if (r.min_majorization_slack) j["min_majorization_slack"] = detail::num(*r.min_majorization_slack);
    return j;
}

[[nodiscard]] inline nlohmann::json to_json(const Extremizer& e) {
    return {{"schema", kJsonSchema}, {"psi", detail::num(e.stats.psi)}, {"ef", detail::num(e.stats.ef)},
            {"eg", detail::num(e.stats.eg)}, {"efp", detail::num(e.stats.efp)},
            {"target", detail::num(e.target)}, {"rel_gap", detail::num(e.rel_gap())},
            {"eps", detail::num(e.eps)}, {"steps", e.steps}, {"nodes", e.pair.size()}};
}

inline void write_surface_csv(std::ostream& os, const Surface& S, int n_y2, int n_y3, double y3_max) {
    os << "y2,y3,region,s,B,t1,t2\n";
    const Params& q = S.params();
    for (int i = 0; i < n_y2; ++i) {
        const double y2 = n_y2 == 1 ? 0.0 : -1.0 + 2.0 * i / (n_y2 - 1);
        const double gy = g_d(q, y2);
        for (int j = 0; j < n_y3; ++j) {
            const double y3 = n_y3 == 1 ? gy : gy + (y3_max - gy) * j / (n_y3 - 1);
            const auto e = S.eval(y2, y3);
            os << fmt(y2) << ',' << fmt(y3) << ',' << to_string(e.region) << ',' << fmt(e.s) << ','
               << fmt(e.value) << ',' << fmt(e.t1) << ',' << fmt(e.t2) << '\n';
        }
    }
}

inline void write_profile_csv(std::ostream& os, const CupProfile& prof) {
    os << "s,a,t1,t2,force\n";
    for (const auto& n : prof.nodes)
        os << fmt(n.s) << ',' << fmt(n.a) << ',' << fmt(n.t1) << ',' << fmt(n.t2) << ',' << fmt(n.force) << '\n';
}

inline void write_leaves_csv(std::ostream& os, const MartingalePair& m) {
    os << "left,right,F,G\n";
    for (const auto& l : m.leaf_intervals())
        os << fmt(l.left) << ',' << fmt(l.right) << ',' << fmt(l.F) << ',' << fmt(l.G) << '\n';
}

}  // namespace bellman
