#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <type_traits>
#include <variant>
#include <vector>

#include "wiener_sampling/delay_models.hpp"
#include "wiener_sampling/policies.hpp"
#include "wiener_sampling/running_stats.hpp"
#include "wiener_sampling/stochastic_kernels.hpp"

namespace wsamp {

struct RunOptions {
    /// Wait-portion step; <= 0 selects threshold^2 / steps_per_threshold_sq per frame.
    double step = 0.0;
    double steps_per_threshold_sq = kDefaultStepsPerThresholdSq;
    double delay_step = 0.05;
    std::size_t max_delay_nodes = 4096;
    /// Traces longer than this keep only `checkpoints` log-spaced frames.
    std::size_t full_storage_limit = 100'000;
    std::size_t checkpoints = 512;
};

/// Per-frame error realized on the simulated path:
/// prev^2 D + 2 prev int_0^D Z dt + int_0^L Z^2 dt = int (X_t - Xhat_t)^2 dt.
inline double frame_error_path(const ExitSample& ex, double prev_delta, double delay) {
    const double e = prev_delta * prev_delta * delay + 2.0 * prev_delta * ex.delay_integral_1 +
                     ex.path_integral_2;
    return std::max(e, 0.0);
}

/// Unbiased per-frame error statistic prev^2 D + (1/6) delta_frame^4
/// (zero-mean cross term dropped, quadratic integral replaced by its
/// stopping-time identity).
inline double frame_error_mart(double delta_frame, double prev_delta, double delay) {
    const double d2 = delta_frame * delta_frame;
    return prev_delta * prev_delta * delay + d2 * d2 / 6.0;
}

/// Stored frames of one simulated trace. Columns are parallel vectors
/// indexed by checkpoint, `cum_*` and `time_next` are cumulative through
/// the end of frame k.
struct TraceSeries {
    std::string model_spec;
    std::string policy_spec;
    std::uint64_t seed = 0;
    std::uint64_t replication = 0;
    double mse_opt = std::numeric_limits<double>::quiet_NaN();

    std::vector<std::size_t> k;
    std::vector<double> sample_epoch, delay, wait, length, gamma, nu, backlog;
    std::vector<double> delta_delivery, delta_frame, err_path, err_mart;
    std::vector<double> cum_err;       ///< path estimator
    std::vector<double> cum_err_mart;  ///< martingale estimator
    std::vector<double> time_next;     ///< S_{k+1}

    RunningStats stats_path, stats_mart, stats_diff, stats_length;
    std::size_t frames = 0;
    std::size_t precision_warnings = 0;

    [[nodiscard]] std::size_t size() const noexcept { return k.size(); }
    [[nodiscard]] double timeavg_mse(std::size_t i) const { return cum_err[i] / time_next[i]; }
    [[nodiscard]] double regret(std::size_t i) const { return cum_err[i] - mse_opt * time_next[i]; }
};

/// Frame indices kept for a trace of `frames` frames: all of them up to the
/// storage limit, otherwise `count` log-spaced indices including 1 and frames.
inline std::vector<std::size_t> checkpoint_grid(std::size_t frames, std::size_t limit, std::size_t count) {
    std::vector<std::size_t> ks;
    if (frames <= limit || count < 2) {
        ks.resize(frames);
        for (std::size_t i = 0; i < frames; ++i) ks[i] = i + 1;
        return ks;
    }
    const double top = std::log(static_cast<double>(frames));
    for (std::size_t i = 0; i < count; ++i) {
        auto v = static_cast<std::size_t>(std::llround(std::exp(top * static_cast<double>(i) / (count - 1))));
        v = std::clamp<std::size_t>(v, 1, frames);
        if (ks.empty() || v > ks.back()) ks.push_back(v);
    }
    if (ks.back() != frames) ks.push_back(frames);
    return ks;
}

/// Random channels of one replication: delays, delay-portion path, wait path.
/// Keeping them apart lets two policies share delays and delivery increments.
struct TraceStreams {
    RngStream delays;
    RngStream delivery;
    RngStream wait;

    TraceStreams(std::uint64_t seed, std::uint64_t replication)
        : delays(seed, replication, 1), delivery(seed, replication, 2), wait(seed, replication, 3) {}
};

/// Runs `frames` renewal frames of `policy` on `model`.
inline TraceSeries run_trace(const DelayModel& model, Policy policy, std::string policy_spec,
                             std::size_t frames, std::uint64_t seed, std::uint64_t replication,
                             const RunOptions& opt = {},
                             double mse_opt = std::numeric_limits<double>::quiet_NaN()) {
    if (frames < 1) throw std::invalid_argument("run_trace: frames must be >= 1");
    TraceSeries tr;
    tr.model_spec = model.spec();
    tr.policy_spec = std::move(policy_spec);
    tr.seed = seed;
    tr.replication = replication;
    tr.mse_opt = mse_opt;
    tr.frames = frames;

    const auto grid = checkpoint_grid(frames, opt.full_storage_limit, opt.checkpoints);
    const std::size_t n = grid.size();
    for (auto* v : {&tr.sample_epoch, &tr.delay, &tr.wait, &tr.length, &tr.gamma, &tr.nu, &tr.backlog,
                    &tr.delta_delivery, &tr.delta_frame, &tr.err_path, &tr.err_mart, &tr.cum_err,
                    &tr.cum_err_mart, &tr.time_next})
        v->reserve(n);
    tr.k.reserve(n);

    TraceStreams rs(seed, replication);
    ExitOptions ex_opt;
    ex_opt.delay_step = opt.delay_step;
    ex_opt.max_delay_nodes = opt.max_delay_nodes;

    double epoch = 0.0;
    double prev = 0.0;
    double cum_mart = 0.0;
    double cum_path = 0.0;
    std::size_t next_cp = 0;

    for (std::size_t k = 1; k <= frames; ++k) {
        FrameRecord fr;
        fr.k = k;
        fr.sample_epoch = epoch;
        fr.prev_delta_frame = prev;
        fr.delay = model.sample(rs.delays);

        ExitSample ex;
        std::visit(
            [&](auto& p) {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, ConstantWaitPolicy>) {
                    ex = path_over_horizon(rs.delivery, rs.wait, fr.delay, p.wait, ex_opt);
                } else {
                    double tau;
                    if constexpr (std::is_same_v<T, OnlinePolicy>) {
                        tau = online_wait_rule(p.state);
                        fr.gamma = p.state.gamma;
                        fr.nu = p.state.nu();
                        fr.backlog = p.state.backlog;
                    } else {
                        tau = p.threshold;
                        fr.gamma = p.gamma;
                        fr.nu = p.nu;
                    }
                    ex_opt.step = opt.step > 0.0 ? opt.step
                                  : tau > 0.0    ? tau * tau / opt.steps_per_threshold_sq
                                                 : opt.delay_step;
                    ex = first_exit_after_delay(rs.delivery, rs.wait, fr.delay, tau, ex_opt);
                }
            },
            policy);

        fr.wait = ex.wait_time;
        fr.length = fr.delay + fr.wait;
        fr.delta_delivery = ex.delivery_value;
        fr.delta_frame = ex.exit_value;
        fr.error_path = frame_error_path(ex, prev, fr.delay);
        fr.error_mart = frame_error_mart(ex.exit_value, prev, fr.delay);
        if (ex.precision_warning) ++tr.precision_warnings;

        if (!std::isfinite(fr.length) || !std::isfinite(fr.error_path) || !std::isfinite(fr.error_mart))
            throw std::runtime_error("run_trace: non-finite frame state at k=" + std::to_string(k) +
                                     " (replication " + std::to_string(replication) + ")");

        if (auto* on = std::get_if<OnlinePolicy>(&policy)) {
            on->state = online_update(on->state, fr);
            if (!std::isfinite(on->state.gamma) || !std::isfinite(on->state.backlog))
                throw std::runtime_error("run_trace: non-finite learner state at k=" + std::to_string(k));
        }

        epoch += fr.length;
        cum_mart += fr.error_mart;
        cum_path += fr.error_path;
        prev = fr.delta_frame;
        tr.stats_path.add(fr.error_path);
        tr.stats_mart.add(fr.error_mart);
        tr.stats_diff.add(fr.error_path - fr.error_mart);
        tr.stats_length.add(fr.length);

        if (next_cp < n && grid[next_cp] == k) {
            ++next_cp;
            tr.k.push_back(k);
            tr.sample_epoch.push_back(fr.sample_epoch);
            tr.delay.push_back(fr.delay);
            tr.wait.push_back(fr.wait);
            tr.length.push_back(fr.length);
            tr.gamma.push_back(fr.gamma);
            tr.nu.push_back(fr.nu);
            tr.backlog.push_back(fr.backlog);
            tr.delta_delivery.push_back(fr.delta_delivery);
            tr.delta_frame.push_back(fr.delta_frame);
            tr.err_path.push_back(fr.error_path);
            tr.err_mart.push_back(fr.error_mart);
            tr.cum_err.push_back(cum_path);
            tr.cum_err_mart.push_back(cum_mart);
            tr.time_next.push_back(epoch);
        }
    }
    return tr;
}

/// Runs replications 0..reps-1 of one policy. Replication r always uses
/// stream (seed, r), so results do not depend on `threads`.
inline std::vector<TraceSeries> run_replications(const DelayModel& model,
                                                 const std::function<Policy()>& make,
                                                 const std::string& policy_spec, std::size_t frames,
                                                 std::uint64_t seed, std::size_t reps,
                                                 const RunOptions& opt, double mse_opt,
                                                 unsigned threads = 1) {
    if (reps < 1) throw std::invalid_argument("run_replications: reps must be >= 1");
    std::vector<TraceSeries> out(reps);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t r = next++; r < reps; r = next++) {
            try {
                out[r] = run_trace(model, make(), policy_spec, frames, seed, r, opt, mse_opt);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(reps)));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

/// Mean and standard error across replications at each stored frame index.
struct SeriesSummary {
    std::vector<std::size_t> k;
    std::vector<double> mean;
    std::vector<double> stderr_;
};

namespace detail {

inline void require_aligned(const std::vector<TraceSeries>& traces, const char* who) {
    if (traces.empty()) throw std::invalid_argument(std::string(who) + ": no traces");
    for (const auto& t : traces) {
        if (t.model_spec != traces.front().model_spec)
            throw std::invalid_argument(std::string(who) + ": traces use different delay models");
        if (t.k != traces.front().k)
            throw std::invalid_argument(std::string(who) + ": traces have different checkpoints");
    }
}

template <class F>
SeriesSummary summarize(const std::vector<TraceSeries>& traces, F&& value) {
    SeriesSummary s;
    s.k = traces.front().k;
    for (std::size_t i = 0; i < s.k.size(); ++i) {
        RunningStats st;
        for (const auto& t : traces) st.add(value(t, i));
        s.mean.push_back(st.mean());
        s.stderr_.push_back(st.stderr_());
    }
    return s;
}

}  // namespace detail

/// Delta_k = mean_r[cumulative error through S_{k+1}] - mse_opt * mean_r[S_{k+1}],
/// using the path error estimator.
inline SeriesSummary regret_series(const std::vector<TraceSeries>& traces, const OptimalSolution& sol) {
    detail::require_aligned(traces, "regret_series");
    return detail::summarize(traces, [&](const TraceSeries& t, std::size_t i) {
        return t.cum_err[i] - sol.mse_opt * t.time_next[i];
    });
}

/// Regret estimated against optimal-policy traces driven by the same delay
/// and delivery streams (common random numbers):
/// Delta_k = mean_r[R_online - R_optimal] + E[R_optimal], where
/// E[R_optimal] = -D_bar * l* because the first frame starts with no
/// previous increment. Same expectation as regret_series, smaller variance.
inline SeriesSummary paired_regret_series(const std::vector<TraceSeries>& online,
                                          const std::vector<TraceSeries>& optimal,
                                          const OptimalSolution& sol, double mean_delay) {
    detail::require_aligned(online, "paired_regret_series");
    detail::require_aligned(optimal, "paired_regret_series");
    if (online.size() != optimal.size() || online.front().k != optimal.front().k ||
        online.front().model_spec != optimal.front().model_spec)
        throw std::invalid_argument("paired_regret_series: traces are not paired");
    for (std::size_t r = 0; r < online.size(); ++r)
        if (online[r].seed != optimal[r].seed || online[r].replication != optimal[r].replication)
            throw std::invalid_argument("paired_regret_series: replication streams differ");
    const double baseline = -mean_delay * sol.frame_length_star;
    SeriesSummary s;
    s.k = online.front().k;
    for (std::size_t i = 0; i < s.k.size(); ++i) {
        RunningStats st;
        for (std::size_t r = 0; r < online.size(); ++r)
            st.add(online[r].regret(i) - optimal[r].regret(i));
        s.mean.push_back(st.mean() + baseline);
        s.stderr_.push_back(st.stderr_());
    }
    return s;
}

/// Running mean sampling interval S_{k+1}/k, averaged over replications.
struct ConstraintReport {
    double target_interval;  ///< 1/f_max
    SeriesSummary interval;
};

inline ConstraintReport constraint_report(const std::vector<TraceSeries>& traces, double f_max) {
    if (!(f_max > 0.0) || std::isinf(f_max))
        throw std::invalid_argument("constraint_report: f_max must be finite");
    detail::require_aligned(traces, "constraint_report");
    return {1.0 / f_max, detail::summarize(traces, [](const TraceSeries& t, std::size_t i) {
                return t.time_next[i] / static_cast<double>(t.k[i]);
            })};
}

/// First stored frame index from which the mean running interval stays at or
/// above fraction * 1/f_max; 0 if it never settles there.
inline std::size_t feasibility_index(const ConstraintReport& rep, double fraction) {
    const double need = fraction * rep.target_interval;
    std::size_t idx = 0;
    for (std::size_t i = rep.interval.k.size(); i-- > 0;) {
        if (rep.interval.mean[i] < need) break;
        idx = rep.interval.k[i];
    }
    return idx;
}

/// Time-average MSE (path estimator) across replications.
inline SeriesSummary timeavg_mse_series(const std::vector<TraceSeries>& traces) {
    detail::require_aligned(traces, "timeavg_mse_series");
    return detail::summarize(traces, [](const TraceSeries& t, std::size_t i) { return t.timeavg_mse(i); });
}

inline SeriesSummary gamma_error_series(const std::vector<TraceSeries>& traces, double gamma_star) {
    detail::require_aligned(traces, "gamma_error_series");
    return detail::summarize(traces, [&](const TraceSeries& t, std::size_t i) {
        const double e = t.gamma[i] - gamma_star;
        return e * e;
    });
}

}  // namespace wsamp
