#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>

#include "bellman/martingale.hpp"
#include "bellman/report.hpp"
#include "bellman/sharp_constant.hpp"
#include "bellman/surface.hpp"
#include "bellman/verify.hpp"

namespace {

using namespace bellman;

enum Exit { kOk = 0, kFail = 1, kDomain = 2, kIo = 3 };

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct JobConfig {
    double p = 1.5;
    double tau = 3.0;
    double beta = 0.0;
    int grid_y2 = 200;
    int grid_y3 = 200;
    double y3_max = 20.0;
    double eps = 1e-2;
    double y3 = 20.0;
    std::uint64_t seed = 1;
    std::size_t trials = 100000;
    int depth = 12;
    int samples = 0;
    std::string kind = "auto";
    std::string out;
    std::string format = "json";
    std::vector<double> p_list, tau_list, beta_list;
    std::string p_range, tau_range, beta_range;
};

// Writes to --out if given, stdout otherwise.
void emit(const JobConfig& cfg, const std::string& text) {
    if (cfg.out.empty()) {
        std::cout << text;
        std::cout.flush();
        if (!std::cout) throw IoError("cannot write to stdout");
        return;
    }
    std::ofstream f(cfg.out, std::ios::binary);
    if (!f) throw IoError("cannot open " + cfg.out);
    f << text;
    f.close();
    if (!f) throw IoError("write failed: " + cfg.out);
}

std::vector<double> expand(std::vector<double> list, const std::string& range, const char* name) {
    if (!range.empty()) {
        double lo, hi;
        int n;
        char c1, c2;
        std::istringstream is(range);
        is.imbue(std::locale::classic());
        if (!(is >> lo >> c1 >> hi >> c2 >> n) || c1 != ':' || c2 != ':' || n < 0)
            throw DomainError(std::string(name) + " range must look like lo:hi:n");
        for (int i = 0; i < n; ++i) list.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
    }
    return list;
}

int cmd_constant(const JobConfig& cfg) {
    const auto r = sharp_constant(Params(cfg.p, cfg.tau), cfg.beta);
    if (cfg.format == "csv") {
        emit(cfg, "beta,beta_prime,case,C_power,C_norm\n" + fmt(r.beta) + "," + fmt(r.beta_prime) + "," +
                      to_string(r.kase) + "," + fmt(r.C_power) + "," + fmt(r.C_norm) + "\n");
    } else {
        emit(cfg, to_json(r).dump(2) + "\n");
    }
    return kOk;
}

int cmd_surface(const JobConfig& cfg) {
    if (cfg.grid_y2 < 1 || cfg.grid_y3 < 1) throw DomainError("grid sizes must be >= 1");
    const Params q(cfg.p, cfg.tau);
    if (!(cfg.y3_max >= g_d(q, -1.0))) throw DomainError("y3-max must be >= g(-1) = 2^p");
    Surface S(q);
    std::ostringstream os;
    write_surface_csv(os, S, cfg.grid_y2, cfg.grid_y3, cfg.y3_max);
    emit(cfg, os.str());
    return kOk;
}

int cmd_verify(const JobConfig& cfg) {
    const Params q(cfg.p, cfg.tau);
    Surface S(q);
    VerifyOptions vo;
    vo.n_y2 = cfg.samples > 0 ? cfg.samples : cfg.grid_y2;
    vo.n_y3 = cfg.samples > 0 ? cfg.samples : cfg.grid_y3;
    vo.n_interface = cfg.samples > 0 ? cfg.samples : vo.n_interface;
    vo.y3_max = cfg.y3_max;
    const auto vr = verify_surface(S, vo);
    AdversaryOptions ao;
    ao.seed = cfg.seed;
    ao.trials = cfg.samples > 0 ? static_cast<std::size_t>(cfg.samples) * cfg.samples : cfg.trials;
    ao.max_depth = cfg.depth;
    const auto ar = random_adversary(q, ao, &S);
    const bool adv_ok = ar.max_ratio <= 1 + 1e-9 && (!ar.min_majorization_slack || *ar.min_majorization_slack >= -1e-8);
    auto j = to_json(vr);
    j["adversary"] = to_json(ar);
    j["adversary"]["pass"] = adv_ok;
    j["pass"] = vr.pass() && adv_ok;
    emit(cfg, j.dump(2) + "\n");
    for (const auto& c : vr.checks)
        if (!c.pass) std::cerr << "FAIL " << c.name << " worst=" << fmt(c.worst) << " tol=" << fmt(c.tol) << "\n";
    if (!adv_ok) std::cerr << "FAIL adversary max_ratio=" << fmt(ar.max_ratio) << "\n";
    return (vr.pass() && adv_ok) ? kOk : kFail;
}

int cmd_sweep(const JobConfig& cfg) {
    auto ps = expand(cfg.p_list, cfg.p_range, "p");
    auto ts = expand(cfg.tau_list, cfg.tau_range, "tau");
    auto bs = expand(cfg.beta_list, cfg.beta_range, "beta");
    std::sort(ps.begin(), ps.end());
    std::sort(ts.begin(), ts.end());
    std::sort(bs.begin(), bs.end());
    struct Row {
        double p, tau, beta;
        ConstantReport r;
        std::string error;
    };
    std::vector<std::pair<double, double>> pt;
    for (double p : ps)
        for (double t : ts) pt.emplace_back(p, t);
    std::vector<std::vector<Row>> rows(pt.size());
    parallel_for(pt.size(), [&](std::size_t k) {
        auto [p, t] = pt[k];
        std::optional<ConstantSolver> cs;
        std::string setup_error;
        try {
            cs.emplace(Params(p, t));
        } catch (const std::exception& e) {
            setup_error = e.what();
        }
        for (double b : bs) {
            Row row{p, t, b, {}, setup_error};
            if (cs) {
                try {
                    row.r = (*cs)(b);
                } catch (const std::exception& e) {
                    row.error = e.what();
                }
            }
            rows[k].push_back(std::move(row));
        }
    });
    std::ostringstream os;
    os << "p,tau,beta,beta_prime,case,C_power,C_norm,error\n";
    for (std::size_t k = 0; k < rows.size(); ++k) {
        for (const auto& row : rows[k]) {
            os << fmt(row.p) << ',' << fmt(row.tau) << ',' << fmt(row.beta) << ',';
            if (row.error.empty()) {
                os << fmt(row.r.beta_prime) << ',' << to_string(row.r.kase) << ',' << fmt(row.r.C_power) << ','
                   << fmt(row.r.C_norm) << ",\n";
            } else {
                std::string e = row.error;
                std::replace(e.begin(), e.end(), ',', ';');
                std::replace(e.begin(), e.end(), '\n', ' ');
                os << ",,,," << e << '\n';
            }
        }
    }
    // The case is expected to flip at most once along tau at fixed p.
    for (double p : ps) {
        int flips = 0;
        std::optional<bool> prev;
        for (std::size_t k = 0; k < pt.size(); ++k) {
            if (pt[k].first != p || rows[k].empty() || !rows[k].front().error.empty()) continue;
            const bool ci = rows[k].front().r.kase == ConstantCase::CaseI;
            if (prev && *prev != ci) ++flips;
            prev = ci;
        }
        if (flips > 1) std::cerr << "note: case flips " << flips << " times along tau at p=" << fmt(p) << "\n";
    }
    emit(cfg, os.str());
    return kOk;
}

int cmd_extremizer(const JobConfig& cfg) {
    const Params q(cfg.p, cfg.tau);
    std::string kind = cfg.kind;
    if (kind == "auto") kind = is_case_i(q) ? "vertical" : "iterative";
    Extremizer ex;
    if (kind == "vertical") {
        ex = vertical_extremizer(q, cfg.y3, cfg.eps);
    } else if (kind == "iterative") {
        ex = iterative_extremizer(build_cup(q), cfg.y3, cfg.eps);
    } else {
        throw DomainError("kind must be auto, vertical or iterative");
    }
    if (cfg.format == "csv") {
        std::ostringstream os;
        write_leaves_csv(os, ex.pair);
        emit(cfg, os.str());
    } else {
        emit(cfg, to_json(ex).dump(2) + "\n");
    }
    return kOk;
}

void add_common(CLI::App* sub, JobConfig& cfg) {
    sub->add_option("--p", cfg.p, "exponent in (1,2)");
    sub->add_option("--tau", cfg.tau, "perturbation weight");
    sub->add_option("--out", cfg.out, "output file (default stdout)");
}

}  // namespace

int main(int argc, char** argv) {
    std::locale::global(std::locale::classic());
    JobConfig cfg;
    CLI::App app{"Sharp constants and Bellman surfaces for the perturbed martingale transform"};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);

    auto* constant = app.add_subcommand("constant", "sharp constant for (p, tau, beta)");
    add_common(constant, cfg);
    constant->add_option("--beta", cfg.beta, "ratio bound |EG| <= beta |EF|");
    constant->add_option("--format", cfg.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

    auto* surface = app.add_subcommand("surface", "CSV dump of B on a grid");
    add_common(surface, cfg);
    surface->add_option("--grid-y2", cfg.grid_y2, "points in y2, including both ends");
    surface->add_option("--grid-y3", cfg.grid_y3, "points in y3 from g(y2) to y3-max");
    surface->add_option("--y3-max", cfg.y3_max, "top of the y3 range");

    auto* verify = app.add_subcommand("verify", "residual suite and random adversary");
    add_common(verify, cfg);
    verify->add_option("--grid-y2", cfg.grid_y2, "grid points in y2");
    verify->add_option("--grid-y3", cfg.grid_y3, "grid points in y3");
    verify->add_option("--y3-max", cfg.y3_max, "top of the y3 range");
    verify->add_option("--seed", cfg.seed, "adversary seed");
    verify->add_option("--trials", cfg.trials, "adversary trials");
    verify->add_option("--depth", cfg.depth, "max tree depth, at most 16");
    verify->add_option("--samples", cfg.samples, "shorthand: N x N grid and N^2 trials");

    auto* sweep = app.add_subcommand("sweep", "constants over a (p, tau, beta) grid");
    sweep->add_option("--p", cfg.p_list, "values of p");
    sweep->add_option("--tau", cfg.tau_list, "values of tau");
    sweep->add_option("--beta", cfg.beta_list, "values of beta");
    sweep->add_option("--p-range", cfg.p_range, "lo:hi:n");
    sweep->add_option("--tau-range", cfg.tau_range, "lo:hi:n");
    sweep->add_option("--beta-range", cfg.beta_range, "lo:hi:n");
    sweep->add_option("--out", cfg.out, "output file (default stdout)");

    auto* extremizer = app.add_subcommand("extremizer", "near-extremal martingale pair at (-1, y3)");
    add_common(extremizer, cfg);
    extremizer->add_option("--y3", cfg.y3, "third coordinate of the target point (-1, y3)");
    extremizer->add_option("--eps", cfg.eps, "step size in (0, 0.1]");
    extremizer->add_option("--kind", cfg.kind, "auto, vertical or iterative");
    extremizer->add_option("--format", cfg.format, "json summary or csv leaves")->check(CLI::IsMember({"json", "csv"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kDomain;
    }

    try {
        if (*constant) return cmd_constant(cfg);
        if (*surface) return cmd_surface(cfg);
        if (*verify) return cmd_verify(cfg);
        if (*sweep) return cmd_sweep(cfg);
        if (*extremizer) return cmd_extremizer(cfg);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIo;
    } catch (const bellman::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDomain;
    }
    return kDomain;
}
