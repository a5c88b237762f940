#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wiener_sampling/analytic.hpp"
#include "wiener_sampling/delay_models.hpp"
#include "wiener_sampling/offline_solver.hpp"
#include "wiener_sampling/policies.hpp"
#include "wiener_sampling/running_stats.hpp"
#include "wiener_sampling/simulator.hpp"
#include "wiener_sampling/stochastic_kernels.hpp"

namespace wsamp {

struct CheckResult {
    std::string name;
    bool passed = false;
    double value = 0.0;  ///< measured statistic
    double bound = 0.0;  ///< what it was compared against
    std::string detail;
};

struct ValidationReport {
    std::vector<CheckResult> checks;

    [[nodiscard]] bool all_passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
    }
};

inline nlohmann::json to_json(const ValidationReport& r) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : r.checks)
        arr.push_back({{"name", c.name}, {"passed", c.passed}, {"value", c.value}, {"bound", c.bound},
                       {"detail", c.detail}});
    return {{"all_passed", r.all_passed()}, {"checks", arr}};
}

struct ValidateOptions {
    std::string kernel_model = "det:1";
    std::string analytic_model = "lognormal:0.8,1.2";
    std::size_t kernel_frames = 200'000;
    std::size_t trace_frames = 20'000;
    std::uint64_t seed = 7;
    double z_limit = 4.0;  ///< allowed |difference| in standard errors for MC checks
};

namespace detail {

inline CheckResult z_check(std::string name, double a, double b, double se, double z) {
    const double d = std::abs(a - b);
    CheckResult c{std::move(name), d <= z * se, d, z * se, {}};
    c.detail = "lhs=" + std::to_string(a) + " rhs=" + std::to_string(b) + " se=" + std::to_string(se);
    return c;
}

inline void kernel_checks(ValidationReport& rep, const ValidateOptions& o) {
    const auto model = parse_delay_spec(o.kernel_model);
    const auto sol = solve_unconstrained(AnalyticContext(model));
    const double tau = sol.tau_star();
    const double h = tau > 0.0 ? default_step(tau) : 1e-3;

    RunningStats wald_diff, stop_diff, len_h, len_h2, cross;
    RngStream dr(o.seed, 0, 1), dl(o.seed, 0, 2), wt(o.seed, 0, 3);
    ExitOptions ex;
    ex.step = h;
    ExitOptions ex2 = ex;
    ex2.step = 0.5 * h;
    RngStream dr2(o.seed, 1, 1), dl2(o.seed, 1, 2), wt2(o.seed, 1, 3);
    for (std::size_t i = 0; i < o.kernel_frames; ++i) {
        const double d = model.sample(dr);
        const auto s = first_exit_after_delay(dl, wt, d, tau, ex);
        const double len = d + s.wait_time;
        const double z2 = s.exit_value * s.exit_value;
        wald_diff.add(z2 - len);
        stop_diff.add(s.path_integral_2 - z2 * z2 / 6.0);
        cross.add(s.delay_integral_1);
        len_h.add(len);
        const double d2 = model.sample(dr2);
        const auto s2 = first_exit_after_delay(dl2, wt2, d2, tau, ex2);
        len_h2.add(d2 + s2.wait_time);
    }
    rep.checks.push_back(z_check("kernel.wald_identity", wald_diff.mean(), 0.0, wald_diff.stderr_(), o.z_limit));
    rep.checks.push_back(
        z_check("kernel.stopping_identity", stop_diff.mean(), 0.0, stop_diff.stderr_(), o.z_limit));
    rep.checks.push_back(z_check("kernel.step_halving", len_h.mean(), len_h2.mean(),
                                 std::hypot(len_h.stderr_(), len_h2.stderr_()), o.z_limit));
    rep.checks.push_back(z_check("kernel.cross_term_mean_zero", cross.mean(), 0.0, cross.stderr_(), o.z_limit));
    rep.checks.push_back(z_check("kernel.frame_length_vs_analytic", len_h.mean(), sol.frame_length_star,
                                 len_h.stderr_(), o.z_limit));

    // A step comparable to tau^2 must be reported as imprecise.
    ExitOptions coarse;
    coarse.step = tau > 0.0 ? 0.5 * tau * tau : 1.0;
    RngStream w(o.seed, 2, 0);
    const auto s = first_exit_after_delay(w, w, 0.0, tau > 0.0 ? tau : 1.0, coarse);
    rep.checks.push_back({"kernel.coarse_step_warning", s.precision_warning, s.precision_warning ? 1.0 : 0.0,
                          1.0, "step=" + std::to_string(coarse.step)});
}

inline void analytic_checks(ValidationReport& rep, const ValidateOptions& o) {
    const auto model = parse_delay_spec(o.analytic_model);
    const AnalyticContext ctx(model);
    const auto sol = solve_unconstrained(ctx);
    const double gs = sol.gamma_star;
    const double scale = std::max(1.0, model.moments().second);
    const double l_star = sol.frame_length_star;

    const std::size_t n = 200;
    const double top = 3.0 * std::max(gs, 1e-3);
    const double dg = top / n;
    std::vector<double> g(n + 1);
    for (std::size_t i = 0; i <= n; ++i) g[i] = g_bar(ctx, i * dg, 0.0);

    double worst_rise = -1e300, lo_curv = 1e300, hi_curv = -1e300, worst_deriv = 0.0, worst_assembly = 0.0,
           worst_iii = -1e300;
    for (std::size_t i = 0; i < n; ++i) worst_rise = std::max(worst_rise, g[i + 1] - g[i]);
    for (std::size_t i = 1; i < n; ++i) {
        const double c = (g[i + 1] - 2.0 * g[i] + g[i - 1]) / (dg * dg);
        lo_curv = std::min(lo_curv, c);
        hi_curv = std::max(hi_curv, c);
    }
    for (std::size_t i = 1; i <= n; ++i) {
        const double gm = i * dg;
        const double e = 1e-4 * std::max(gm, 1e-3);
        const double fd = (g_bar(ctx, gm + e, 0.0) - g_bar(ctx, gm - e, 0.0)) / (2.0 * e);
        const double l = expected_frame_length(ctx, 3.0 * gm);
        worst_deriv = std::max(worst_deriv, std::abs(fd + l) / l);

        const auto m = ctx.frame_moments(3.0 * gm);
        worst_assembly = std::max(worst_assembly, std::abs(g[i] - (m.quartic - gm * m.length)) / scale);

        // Below gamma* the tangent at gamma* lies above the concave g_bar_0, so
        // the curvature constant there is l(3 gamma), not l(3 gamma*).
        const double lc = gm < gs ? l : l_star;
        if (std::abs(gm - gs) > 1e-9 * gs)
            worst_iii = std::max(worst_iii, (gm - gs) * g[i] + lc * (gm - gs) * (gm - gs));
    }
    rep.checks.push_back({"lemma7.monotone_decreasing", worst_rise < 0.0, worst_rise, 0.0, "max forward difference"});
    rep.checks.push_back({"lemma7.curvature_band", lo_curv >= -3.0 - 1e-3 && hi_curv <= 1e-3, lo_curv, -3.0,
                          "second differences in [" + std::to_string(lo_curv) + ", " + std::to_string(hi_curv) +
                              "]"});
    rep.checks.push_back({"lemma7.derivative_identity", worst_deriv <= 1e-4, worst_deriv, 1e-4,
                          "max relative |g_bar' + l(3 gamma)| / l"});
    rep.checks.push_back({"lemma7.descent_inequality", worst_iii <= 1e-9 * scale, worst_iii, 0.0,
                          "max (g-g*) g_bar(g) + l(3 max(g, g*)) (g-g*)^2"});
    rep.checks.push_back({"analytic.two_way_assembly", worst_assembly <= 1e-12, worst_assembly, 1e-12,
                          "g_bar vs q - gamma l"});
    rep.checks.push_back({"solver.mse_lower_bound", sol.mse_opt >= 7.0 / 6.0 * model.mean(), sol.mse_opt,
                          7.0 / 6.0 * model.mean(), "mse_opt >= (7/6) D_bar"});

    // Condition 1: tau^2 = 3(gamma* + nu*) minimizes q(a) - (gamma* + nu*) l(a).
    auto argmin_check = [&](const OptimalSolution& s, const std::string& tag) {
        const double c = s.gamma_star + s.nu_star;
        const double a_star = s.tau_sq_star;
        const std::size_t m = 400;
        const double da = 2.0 * a_star / m;
        double best = 1e300, arg = 0.0;
        for (std::size_t i = 0; i <= m; ++i) {
            const double a = i * da;
            const auto fm = ctx.frame_moments(a);
            const double v = fm.quartic - c * fm.length;
            if (v < best) best = v, arg = a;
        }
        rep.checks.push_back({"condition1.grid_argmin" + tag, std::abs(arg - a_star) <= da, arg, a_star,
                              "grid spacing " + std::to_string(da)});
        // q* - gamma* l* = 0, so the renewal ratio (q* + D_bar l*) / l* equals mse_opt.
        const auto fm = ctx.frame_moments(a_star);
        const double ratio = (fm.quartic + model.mean() * fm.length) / fm.length;
        const double gap = std::abs(ratio - s.mse_opt) / s.mse_opt;
        rep.checks.push_back({"solver.zero_duality_gap" + tag, gap <= 1e-8, gap, 1e-8,
                              "relative gap of the renewal ratio"});
    };
    argmin_check(sol, "");
    const auto csol = solve_constrained(ctx, 1.0 / (10.0 * model.mean()));
    argmin_check(csol, ".constrained");
    rep.checks.push_back({"solver.complementary_slackness", std::abs(csol.cs_residual) <= 1e-6 * scale,
                          csol.cs_residual, 1e-6 * scale, "nu* (l* - 1/f_max)"});
}

inline void trace_checks(ValidationReport& rep, const ValidateOptions& o) {
    const auto model = parse_delay_spec(o.kernel_model);
    const auto sol = solve_unconstrained(AnalyticContext(model));
    OnlineParams p;
    p.mean_delay_lb = default_mean_lower_bound(model).value_or(1.0);
    const auto tr = run_trace(model, OnlinePolicy{initial_state(p)}, "online", o.trace_frames, o.seed, 0, {},
                              sol.mse_opt);
    bool nu_zero = true, in_flight = true;
    for (std::size_t i = 0; i < tr.size(); ++i) {
        nu_zero = nu_zero && tr.nu[i] == 0.0;
        const double slack = 1e-12 * std::max(1.0, tr.time_next[i]);
        in_flight = in_flight && tr.wait[i] >= 0.0 && tr.time_next[i] + slack >= tr.sample_epoch[i] + tr.delay[i];
    }
    rep.checks.push_back({"trace.nu_zero_without_constraint", nu_zero, nu_zero ? 0.0 : 1.0, 0.0, {}});
    rep.checks.push_back({"trace.one_packet_in_flight", in_flight, in_flight ? 0.0 : 1.0, 0.0, {}});
    const double total = tr.stats_length.mean() * static_cast<double>(tr.stats_length.count());
    const double rel = std::abs(total - tr.time_next.back()) / tr.time_next.back();
    rep.checks.push_back({"trace.renewal_consistency", rel <= 1e-9, rel, 1e-9, "sum L_k vs S_{k+1}"});
    rep.checks.push_back(z_check("trace.estimator_agreement", tr.stats_path.mean(), tr.stats_mart.mean(),
                                 tr.stats_diff.stderr_(), o.z_limit));
}

}  // namespace detail

/// Runs every invariant check; each result is independent of the others.
inline ValidationReport run_validation(const ValidateOptions& o = {}) {
    ValidationReport rep;
    detail::kernel_checks(rep, o);
    detail::analytic_checks(rep, o);
    detail::trace_checks(rep, o);
    return rep;
}

}  // namespace wsamp
