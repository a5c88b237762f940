#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "wiener_sampling/analytic.hpp"

namespace wsamp {

class SolverError : public std::runtime_error {
public:
    enum class Kind { bracket_sign, no_convergence, non_monotone };
    SolverError(Kind k, const std::string& what) : std::runtime_error(what), kind_(k) {}
    [[nodiscard]] Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

struct OptimalSolution {
    double gamma_star = 0.0;
    double nu_star = 0.0;
    double tau_sq_star = 0.0;        ///< 3 (gamma* + nu*)
    double frame_length_star = 0.0;  ///< l(tau_sq_star)
    double mse_opt = 0.0;            ///< gamma* + D_bar
    double residual = 0.0;           ///< |g_bar_{nu*}(gamma*)|
    double cs_residual = 0.0;        ///< nu* (l* - 1/f_max)
    double f_max = std::numeric_limits<double>::infinity();

    [[nodiscard]] double tau_star() const { return std::sqrt(tau_sq_star); }
};

struct SolverOptions {
    double residual_rel = 1e-9;  ///< |g_bar| <= residual_rel * max(1, M)
    double outer_rel = 1e-8;     ///< |l* - 1/f_max| <= outer_rel / f_max
    int max_iter = 400;
};

namespace detail {

inline double problem_scale(const AnalyticContext& ctx) {
    return std::max(1.0, ctx.model().moments().second);
}

// Root of the strictly decreasing gamma -> g_bar_nu(gamma) on [lo, hi].
inline double bisect_decreasing(const AnalyticContext& ctx, double nu, double lo, double hi,
                                double tol, int max_iter) {
    double g_lo = g_bar(ctx, lo, nu);
    if (std::abs(g_lo) <= tol) return lo;
    double g_hi = g_bar(ctx, hi, nu);
    if (std::abs(g_hi) <= tol) return hi;
    if (!(g_lo > 0.0) || !(g_hi < 0.0))
        throw SolverError(SolverError::Kind::bracket_sign,
                          "g_bar does not change sign on [" + std::to_string(lo) + ", " +
                              std::to_string(hi) + "]");
    for (int it = 0; it < max_iter; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double g = g_bar(ctx, mid, nu);
        if (std::abs(g) <= tol) return mid;
        (g > 0.0 ? lo : hi) = mid;
        (g > 0.0 ? g_lo : g_hi) = g;
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
    }
    const double best = std::abs(g_lo) < std::abs(g_hi) ? lo : hi;
    if (std::abs(g_bar(ctx, best, nu)) > tol)
        throw SolverError(SolverError::Kind::no_convergence, "bisection on g_bar did not converge");
    return best;
}

// gamma*(nu) for nu > 0: g_bar_nu(0) > 0, and g_bar_nu -> -inf, so expand the
// upper end by doubling.
inline double inner_root(const AnalyticContext& ctx, double nu, double tol, int max_iter) {
    if (nu == 0.0) {
        const auto br = gamma_bracket(ctx.model(), std::numeric_limits<double>::infinity());
        return bisect_decreasing(ctx, 0.0, br.lo, br.hi, tol, max_iter);
    }
    const auto br = gamma_bracket(ctx.model(), std::numeric_limits<double>::infinity());
    double hi = std::max({br.hi, nu, 1e-12});
    for (int i = 0; i < 200 && g_bar(ctx, hi, nu) >= 0.0; ++i) hi *= 2.0;
    return bisect_decreasing(ctx, nu, 0.0, hi, tol, max_iter);
}

inline OptimalSolution assemble(const AnalyticContext& ctx, double gamma, double nu, double f_max) {
    OptimalSolution s;
    s.gamma_star = gamma;
    s.nu_star = nu;
    s.tau_sq_star = 3.0 * (gamma + nu);
    s.frame_length_star = expected_frame_length(ctx, s.tau_sq_star);
    s.mse_opt = gamma + ctx.model().mean();
    s.residual = std::abs(g_bar(ctx, gamma, nu));
    s.f_max = f_max;
    s.cs_residual = std::isinf(f_max) ? 0.0 : nu * (s.frame_length_star - 1.0 / f_max);
    return s;
}

}  // namespace detail

/// Root of g_bar_0(gamma) = 0 by bisection on the a-priori bracket
/// [D_bar/6, M/(2 D_bar)], on which g_bar_0 is strictly decreasing.
inline OptimalSolution solve_unconstrained(const AnalyticContext& ctx, const SolverOptions& opt = {}) {
    const double tol = opt.residual_rel * detail::problem_scale(ctx);
    const double gamma = detail::inner_root(ctx, 0.0, tol, opt.max_iter);
    return detail::assemble(ctx, gamma, 0.0, std::numeric_limits<double>::infinity());
}

/// Optimal (gamma*, nu*) under the sampling-frequency limit f_max.
///
/// If the unconstrained threshold already gives frames of mean length
/// >= 1/f_max, nu* = 0. Otherwise nu* is found by bisection on the outer map
/// nu -> l(3(gamma*(nu) + nu)), each evaluation solving g_bar_nu(gamma) = 0 with
/// a tolerance ten times tighter than the reported residual bound. The outer
/// map is checked for monotonicity as the bisection proceeds.
inline OptimalSolution solve_constrained(const AnalyticContext& ctx, double f_max,
                                         const SolverOptions& opt = {}) {
    if (!(f_max > 0.0)) throw std::invalid_argument("solve_constrained: f_max must be > 0");
    auto base = solve_unconstrained(ctx, opt);
    if (std::isinf(f_max)) return base;
    const double target = 1.0 / f_max;
    if (base.frame_length_star >= target) {
        base.f_max = f_max;
        return base;
    }

    const double tol = 0.1 * opt.residual_rel * detail::problem_scale(ctx);
    auto outer = [&](double nu, double& gamma) {
        gamma = detail::inner_root(ctx, nu, tol, opt.max_iter);
        return expected_frame_length(ctx, 3.0 * (gamma + nu)) - target;
    };

    double lo = 0.0;
    double f_lo = base.frame_length_star - target;
    double hi = target / 3.0;
    double gamma_hi = 0.0;
    double f_hi = outer(hi, gamma_hi);
    for (int i = 0; i < 200 && f_hi < 0.0; ++i) {
        lo = hi, f_lo = f_hi;
        hi *= 2.0;
        f_hi = outer(hi, gamma_hi);
    }
    if (f_hi < 0.0)
        throw SolverError(SolverError::Kind::no_convergence, "could not bracket nu*");

    const double ftol = opt.outer_rel * target;
    double gamma = gamma_hi;
    double nu = hi;
    double f = f_hi;
    for (int it = 0; it < opt.max_iter && std::abs(f) > ftol; ++it) {
        nu = 0.5 * (lo + hi);
        f = outer(nu, gamma);
        const double slack = 10.0 * ftol;
        if (f < f_lo - slack || f > f_hi + slack)
            throw SolverError(SolverError::Kind::non_monotone,
                              "nu -> l(3(gamma*(nu)+nu)) is not monotone near nu = " +
                                  std::to_string(nu));
        if (f < 0.0) {
            lo = nu, f_lo = f;
        } else {
            hi = nu, f_hi = f;
        }
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
    }
    if (std::abs(f) > ftol)
        throw SolverError(SolverError::Kind::no_convergence, "outer bisection on nu did not converge");
    return detail::assemble(ctx, gamma, nu, f_max);
}

/// Perturbation width for the two-point construction around Uniform[0, 1]:
/// min{1 - 3 gamma_uni*, 1/3, p_w / 2}, with p_w the waiting probability of
/// the optimal threshold policy under Uniform[0, 1] delay.
inline double lecam_delta_from_uniform(const AnalyticOptions& aopt = {}) {
    AnalyticContext ctx(DelayModel::uniform(0.0, 1.0), aopt);
    const auto sol = solve_unconstrained(ctx);
    const double pw = waiting_probability(ctx, sol.tau_sq_star);
    return std::min({1.0 - 3.0 * sol.gamma_star, 1.0 / 3.0, 0.5 * pw});
}

}  // namespace wsamp
