#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>

#include "bellman/cup.hpp"
#include "bellman/errors.hpp"
#include "bellman/geometry.hpp"
#include "bellman/roots.hpp"
#include "bellman/surface.hpp"

namespace bellman {

enum class ConstantCase { CaseI, CaseII_HighBeta, CaseII_LowBeta, CaseII_Middle };

[[nodiscard]] inline const char* to_string(ConstantCase c) {
    switch (c) {
        case ConstantCase::CaseI: return "CaseI";
        case ConstantCase::CaseII_HighBeta: return "CaseII_HighBeta";
        case ConstantCase::CaseII_LowBeta: return "CaseII_LowBeta";
        case ConstantCase::CaseII_Middle: return "CaseII_Middle";
    }
    return "?";
}

struct ConstantReport {
    ConstantCase kase = ConstantCase::CaseI;
    double beta = kNaN;
    double beta_prime = kNaN;
    std::optional<double> s0, s_star, s1;
    double C_power = kNaN;
    double C_norm = kNaN;
    // |star_function(s*)|, relative gap between the two low-branch
    // formulas, and |R(s1, beta')|; NaN where not computed.
    double star_residual = kNaN;
    double closed_form_gap = kNaN;
    double r_residual = kNaN;
};

[[nodiscard]] inline double beta_prime_of(double beta) {
    if (std::isinf(beta)) return 1.0;
    return (beta - 1) / (beta + 1);
}

// true for case (i).
[[nodiscard]] inline bool select_case(const Params& q) { return is_case_i(q); }

inline void check_beta(double beta) {
    if (std::isnan(beta) || beta < 0) throw DomainError("beta must be >= 0");
}

[[nodiscard]] inline ConstantReport constant_case_i(const Params& q, double beta) {
    check_beta(beta);
    if (!select_case(q)) throw CaseMismatch("case (i) formula requested but u(1/(p-1)) > 0");
    ConstantReport r;
    r.kase = ConstantCase::CaseI;
    r.beta = beta;
    r.beta_prime = beta_prime_of(beta);
    const double m = std::max(beta, 1.0 / (q.p - 1));
    r.C_norm = std::sqrt(q.tau * q.tau + m * m);
    r.C_power = std::pow(r.C_norm, q.p);
    return r;
}

// Closed form of t2(s0) valid when u((1+s0)/(1-s0)) = 0.
[[nodiscard]] inline double closed_form_low(const Params& q, double s0) {
    const double p = q.p, w = 1 - s0;
    const double den = (q.tau * q.tau + 1) * (p - 1) * w + 2 * (2 - p);
    return std::pow(q.tau, p) / (1 - std::pow(2.0, 2 - p) * std::pow(w, p - 1) / den);
}

// s in (c, s0] with a(s) = z, for z in [-1, c).
[[nodiscard]] inline double cup_inverse(const CupProfile& prof, double z) {
    if (z <= -1.0) return prof.s0;
    const double lo = prof.s_min();
    auto fn = [&](double s) { return prof.a(s) - z; };
    const double flo = fn(lo);
    if (flo <= 0) return lo;
    return bracket_root(fn, lo, prof.s0, flo, fn(prof.s0), "cup inverse");
}

// Left end of the s-range of chords meeting the line y2 = z.
[[nodiscard]] inline double r_lower(const CupProfile& prof, double z) {
    if (z >= prof.c) return std::max(z, prof.s_min());
    return cup_inverse(prof, z);
}

[[nodiscard]] inline double R_of(const CupProfile& prof, double s, double z) {
    if (!(z >= -1.0 && z <= prof.s0)) throw DomainError("R(s,z) needs z in [-1, s0]");
    const double lo = r_lower(prof, z);
    if (!(s >= lo - 1e-12 && s <= prof.s0)) throw DomainError("R(s,z) needs s in [max(alpha(z),z), s0]");
    const Params& q = prof.params;
    return -f_d(q, s) - prof.t1(s) * (z - s) + prof.t2(s) * g_d(q, s);
}

// R on the lower edge of its domain, divided by g(z).  For z >= c this is
// t2(z) - f(z)/g(z); below c the edge chord is the one leaving (z, g(z)).
[[nodiscard]] inline double star_function(const CupProfile& prof, double z) {
    const Params& q = prof.params;
    return prof.t2(r_lower(prof, z)) - f_d(q, z) / g_d(q, z);
}

[[nodiscard]] inline double solve_s_star(const CupProfile& prof) {
    return bracket_root([&](double z) { return star_function(prof, z); }, prof.params.yp(), prof.s0, "s*");
}

[[nodiscard]] inline ConstantReport constant_case_ii(const CupProfile& prof, double s_star, double beta) {
    check_beta(beta);
    const Params& q = prof.params;
    if (select_case(q)) throw CaseMismatch("case (ii) formula requested but u(1/(p-1)) <= 0");
    if (std::isinf(beta)) throw DomainError("beta = infinity has no finite constant in case (ii)");
    ConstantReport r;
    r.beta = beta;
    r.beta_prime = beta_prime_of(beta);
    r.s0 = prof.s0;
    r.s_star = s_star;
    r.star_residual = std::abs(star_function(prof, s_star));
    const double bp = r.beta_prime;
    if (bp > s_star) {
        r.kase = ConstantCase::CaseII_HighBeta;
        r.C_power = std::pow(q.tau * q.tau + beta * beta, q.p / 2);
    } else if (bp <= q.yp()) {
        r.kase = ConstantCase::CaseII_LowBeta;
        const double chord = prof.t2_s0(), closed = closed_form_low(q, prof.s0);
        r.closed_form_gap = std::abs(chord - closed) / std::abs(closed);
        if (r.closed_form_gap > 1e-9)
            throw NoSolution("closed form and chord slope at s0 disagree: " + std::to_string(r.closed_form_gap));
        r.C_power = closed;
    } else {
        r.kase = ConstantCase::CaseII_Middle;
        auto fn = [&](double s) { return R_of(prof, s, bp); };
        const double lo = r_lower(prof, bp) + 1e-12, hi = prof.s0 - 1e-12;
        const double flo = fn(lo), fhi = fn(hi);
        double s1;
        if (flo <= 0) s1 = lo;
        else if (fhi >= 0) s1 = prof.s0;
        else s1 = bracket_root(fn, lo, hi, flo, fhi, "s1");
        r.s1 = s1;
        r.r_residual = std::abs(R_of(prof, s1, bp));
        r.C_power = prof.t2(s1);
    }
    r.C_norm = std::pow(r.C_power, 1 / q.p);
    return r;
}

// Caches the cup profile and s* across beta queries.
class ConstantSolver {
public:
    explicit ConstantSolver(const Params& q, CupOptions opt = {}) : q_(q), opt_(opt), case_i_(select_case(q)) {}

    [[nodiscard]] const Params& params() const { return q_; }
    [[nodiscard]] bool case_i() const { return case_i_; }

    [[nodiscard]] const CupProfile& profile() {
        if (!prof_) prof_ = std::make_shared<const CupProfile>(build_cup(q_, opt_));
        return *prof_;
    }
    [[nodiscard]] double s_star() {
        if (!s_star_) s_star_ = solve_s_star(profile());
        return *s_star_;
    }

    [[nodiscard]] ConstantReport operator()(double beta) {
        if (case_i_) return constant_case_i(q_, beta);
        return constant_case_ii(profile(), s_star(), beta);
    }

private:
    Params q_;
    CupOptions opt_;
    bool case_i_;
    std::shared_ptr<const CupProfile> prof_;
    std::optional<double> s_star_;
};

[[nodiscard]] inline ConstantReport sharp_constant(const Params& q, double beta) {
    return ConstantSolver(q)(beta);
}

}  // namespace bellman
