#pragma once

#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "bellman/errors.hpp"

namespace bellman {

// Bracketed root of a continuous function, iterated to full double
// precision.  The endpoint values are passed in when already known.
template <class F>
double bracket_root(F&& fn, double lo, double hi, double flo, double fhi,
                    const char* what = "root") {
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0) == (fhi > 0))
        throw BracketError(std::string(what) + ": no sign change on [" +
                           std::to_string(lo) + ", " + std::to_string(hi) + "]");
    std::uintmax_t iters = 200;
    auto tol = [](double a, double b) {
        return std::abs(b - a) <= 4 * std::numeric_limits<double>::epsilon() *
                                      std::max(1.0, std::abs(a));
    };
    auto r = boost::math::tools::toms748_solve(fn, lo, hi, flo, fhi, tol, iters);
    return 0.5 * (r.first + r.second);
}

template <class F>
double bracket_root(F&& fn, double lo, double hi, const char* what = "root") {
    return bracket_root(fn, lo, hi, fn(lo), fn(hi), what);
}

// Newton iteration that keeps a sign bracket [lo, hi] and bisects whenever
// the Newton step leaves it.  fdf(x) returns {f, f'}.
template <class FDF>
double safe_newton(FDF&& fdf, double lo, double hi, double x0, double xtol,
                   double ftol, int max_iter, bool& converged) {
    auto [flo, dlo] = fdf(lo);
    (void)dlo;
    double x = x0;
    converged = false;
    for (int it = 0; it < max_iter; ++it) {
        auto [fx, dfx] = fdf(x);
        if (fx == 0.0) { converged = true; return x; }
        if ((fx > 0) == (flo > 0)) { lo = x; flo = fx; } else { hi = x; }
        double xn = (dfx != 0.0) ? x - fx / dfx : 0.5 * (lo + hi);
        const double a = std::min(lo, hi), b = std::max(lo, hi);
        if (!(xn > a && xn < b)) xn = 0.5 * (lo + hi);
        const double step = std::abs(xn - x);
        x = xn;
        if (step <= xtol || std::abs(fx) <= ftol) { converged = true; return x; }
    }
    return x;
}

}  // namespace bellman
