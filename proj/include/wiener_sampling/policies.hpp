#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

#include "wiener_sampling/analytic.hpp"
#include "wiener_sampling/numeric_format.hpp"
#include "wiener_sampling/offline_solver.hpp"

namespace wsamp {

/// Everything the simulator records about one renewal frame.
struct FrameRecord {
    std::size_t k = 1;
    double sample_epoch = 0.0;  ///< S_k
    double delay = 0.0;         ///< D_k
    double wait = 0.0;          ///< W_k
    double length = 0.0;        ///< L_k = D_k + W_k
    double delta_delivery = 0.0;    ///< X_{S_k + D_k} - X_{S_k}
    double delta_frame = 0.0;       ///< X_{S_{k+1}} - X_{S_k}
    double prev_delta_frame = 0.0;  ///< X_{S_k} - X_{S_{k-1}}
    double error_path = 0.0;
    double error_mart = 0.0;
    double gamma = 0.0;
    double nu = 0.0;
    double backlog = 0.0;  ///< U_k
};

struct OnlineParams {
    double V = 10.0;
    double alpha = 1.0;
    double mean_delay_lb = 1.0;  ///< D_bar_lb
    double f_max = std::numeric_limits<double>::infinity();

    void validate() const {
        if (!(V > 0.0)) throw std::invalid_argument("online policy: V must be > 0");
        if (!(alpha > 0.5 && alpha <= 1.0))
            throw std::invalid_argument("online policy: alpha must lie in (0.5, 1]");
        if (!(mean_delay_lb > 0.0)) throw std::invalid_argument("online policy: D_bar_lb must be > 0");
        if (!(f_max > 0.0)) throw std::invalid_argument("online policy: f_max must be > 0");
    }
};

/// State of the stochastic-approximation learner at the start of frame k.
struct PolicyState {
    std::size_t k = 1;
    double gamma = 0.0;
    double backlog = 0.0;  ///< U_k, accumulated (1/f_max - L) violations
    OnlineParams params;

    [[nodiscard]] double nu() const { return std::max(backlog, 0.0) / params.V; }
    [[nodiscard]] double eta() const {
        return std::pow(static_cast<double>(k), -params.alpha) / (2.0 * params.mean_delay_lb);
    }
};

inline PolicyState initial_state(const OnlineParams& p) {
    p.validate();
    return PolicyState{1, 0.0, 0.0, p};
}

/// Threshold sqrt(3 (gamma_k + nu_k)) for the wait after delivery.
inline double online_wait_rule(const PolicyState& s) { return std::sqrt(3.0 * (s.gamma + s.nu())); }

/// One Robbins-Monro step on gamma with the delivery-time increment, plus the
/// virtual-queue update U_{k+1} = U_k + 1/f_max - L_k.
inline PolicyState online_update(const PolicyState& s, const FrameRecord& frame) {
    if (frame.k != s.k) throw std::invalid_argument("online_update: frame index mismatch");
    PolicyState next = s;
    const double y = g_point(s.gamma, s.nu(), frame.delta_delivery);
    next.gamma = std::max(0.0, s.gamma + s.eta() * y);
    const double budget = std::isinf(s.params.f_max) ? 0.0 : 1.0 / s.params.f_max;
    next.backlog = s.backlog + (budget - frame.length);
    next.k = s.k + 1;
    return next;
}

/// Constant threshold sqrt(3 (gamma* + nu*)).
inline double offline_policy(const OptimalSolution& sol) { return std::sqrt(sol.tau_sq_star); }

/// Signal-ignorant wait; w = 0 is zero-wait.
inline double constant_wait_policy(double w) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("constant wait must be finite and >= 0");
    return w;
}

struct OnlinePolicy {
    PolicyState state;
};
struct ThresholdPolicy {
    double threshold;
    double gamma = 0.0;  ///< reported in traces
    double nu = 0.0;
};
struct ConstantWaitPolicy {
    double wait;
};

using Policy = std::variant<OnlinePolicy, ThresholdPolicy, ConstantWaitPolicy>;

/// Builds a policy from "online", "optimal", "const:w" or "zerowait".
/// `optimal` needs the solved model; `online` needs its parameters.
inline Policy make_policy(std::string_view spec, const OptimalSolution& sol, const OnlineParams& online) {
    if (spec == "online") return OnlinePolicy{initial_state(online)};
    if (spec == "optimal") return ThresholdPolicy{offline_policy(sol), sol.gamma_star, sol.nu_star};
    if (spec == "zerowait") return ConstantWaitPolicy{0.0};
    if (spec.starts_with("const:")) {
        double w;
        if (!parse_double(spec.substr(6), w)) throw std::invalid_argument("bad constant wait: " + std::string(spec));
        return ConstantWaitPolicy{constant_wait_policy(w)};
    }
    throw std::invalid_argument("unknown policy: " + std::string(spec));
}

inline bool is_valid_policy_spec(std::string_view spec) {
    if (spec == "online" || spec == "optimal" || spec == "zerowait") return true;
    double w;
    return spec.starts_with("const:") && parse_double(spec.substr(6), w) && w >= 0.0 && std::isfinite(w);
}

}  // namespace wsamp
