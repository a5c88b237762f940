#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>

#include "wiener_sampling/rng.hpp"

namespace wsamp {

/// One frame of the signal increment X_{S+t} - X_S, from sampling epoch to
/// the end of the wait.
struct ExitSample {
    double wait_time = 0.0;
    double exit_value = 0.0;       ///< increment at the end of the frame
    double delivery_value = 0.0;   ///< increment at delivery, Z_delay
    double path_integral_1 = 0.0;  ///< trapezoid of Z over the whole frame
    double path_integral_2 = 0.0;  ///< trapezoid of Z^2 over the whole frame
    double delay_integral_1 = 0.0; ///< trapezoid of Z over [0, delay] only
    bool precision_warning = false;
};

struct ExitOptions {
    double step = 1e-3;
    /// Grid spacing over the delay portion; <= 0 means "use step".
    double delay_step = 0.0;
    std::size_t max_delay_nodes = 4096;
    /// step > coarse_fraction * threshold^2 raises the precision warning.
    double coarse_fraction = 1.0 / 50.0;
};

/// Steps per unit of threshold^2 used when no explicit step is configured.
inline constexpr double kDefaultStepsPerThresholdSq = 400.0;

/// Default wait-portion step for a given threshold: threshold^2 / 400.
inline double default_step(double threshold, double fallback = 1e-3) {
    const double t2 = threshold * threshold;
    return t2 > 0.0 ? t2 / kDefaultStepsPerThresholdSq : fallback;
}

/// Inverse Gaussian IG(mean, shape) draw (Michael, Schucany & Haas).
inline double inverse_gaussian(RngStream& rng, double mean, double shape) {
    const double n = rng.standard_normal();
    const double y = n * n;
    const double r = mean * y / (2.0 * shape);
    // mean * (1 + r - sqrt(r^2 + 2r)) without cancellation
    const double x = mean / (1.0 + r + std::sqrt(r * r + 2.0 * r));
    return rng.uniform() * (mean + x) <= mean ? x : mean * mean / x;
}

namespace detail {

inline void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw std::invalid_argument(what);
}

// Time at which a Brownian bridge of duration h, started at distance `a`
// below a barrier and ending at distance `c` from it (either side), first
// touches the barrier, conditional on touching. With s = t / (h - t) the
// density is inverse Gaussian with mean a / c and shape a^2 / h.
inline double bridge_crossing_time(RngStream& rng, double a, double c, double h) {
    if (a <= 0.0) return 0.0;
    const double shape = a * a / h;
    double s;
    if (c <= 0.0) {
        const double n = rng.standard_normal();
        s = shape / (n * n);
    } else {
        s = inverse_gaussian(rng, a / c, shape);
    }
    if (!std::isfinite(s)) return h;
    return h * s / (1.0 + s);
}

// Brownian path over [0, delay] on a uniform grid; accumulates trapezoid
// integrals into `out` and returns Z_delay.
inline double simulate_delay_portion(RngStream& rng, double delay, const ExitOptions& opt,
                                     ExitSample& out) {
    if (delay <= 0.0) return 0.0;
    const double spacing = opt.delay_step > 0.0 ? opt.delay_step : opt.step;
    auto nodes = static_cast<std::size_t>(std::ceil(delay / spacing));
    nodes = std::clamp<std::size_t>(nodes, 1, std::max<std::size_t>(opt.max_delay_nodes, 1));
    const double h = delay / static_cast<double>(nodes);
    const double sd = std::sqrt(h);
    double z = 0.0;
    for (std::size_t i = 0; i < nodes; ++i) {
        const double next = z + sd * rng.standard_normal();
        out.delay_integral_1 += 0.5 * h * (z + next);
        out.path_integral_2 += 0.5 * h * (z * z + next * next);
        z = next;
    }
    out.path_integral_1 = out.delay_integral_1;
    return z;
}

}  // namespace detail

/// Simulates W = inf{w >= 0 : |Z_{delay + w}| >= threshold} for a standard
/// Wiener process Z started at 0, together with the frame's path integrals.
///
/// The delay portion is simulated on its own grid with `delivery` draws; the
/// wait portion uses Euler steps of size opt.step from `wait`. Between grid
/// points a barrier crossing is accepted with the Brownian-bridge probability
/// exp(-2 (tau - x_i)(tau - x_{i+1}) / step) per side, and the crossing time
/// inside the step is drawn from the exact bridge first-passage law, so the
/// exit value is exactly +-threshold.
inline ExitSample first_exit_after_delay(RngStream& delivery, RngStream& wait, double delay,
                                         double threshold, const ExitOptions& opt) {
    detail::require_finite(delay, "first_exit_after_delay: delay must be finite");
    detail::require_finite(threshold, "first_exit_after_delay: threshold must be finite");
    detail::require_finite(opt.step, "first_exit_after_delay: step must be finite");
    if (delay < 0.0) throw std::invalid_argument("first_exit_after_delay: delay must be >= 0");
    if (threshold < 0.0)
        throw std::invalid_argument("first_exit_after_delay: threshold must be >= 0");
    if (!(opt.step > 0.0)) throw std::invalid_argument("first_exit_after_delay: step must be > 0");

    ExitSample out;
    out.precision_warning = threshold > 0.0 && opt.step > opt.coarse_fraction * threshold * threshold;

    double x = detail::simulate_delay_portion(delivery, delay, opt, out);
    out.delivery_value = x;
    if (std::abs(x) >= threshold) {
        out.exit_value = x;
        return out;
    }

    const double h = opt.step;
    const double sd = std::sqrt(h);
    const double tau = threshold;
    double t = 0.0;
    // exp(-40) is below the resolution of a 53-bit uniform draw
    constexpr double kNegligibleExponent = -40.0;
    constexpr std::size_t kMaxSteps = std::size_t{1} << 34;
    for (std::size_t i = 0; i < kMaxSteps; ++i) {
        const double y = x + sd * wait.standard_normal();
        double barrier = 0.0;
        double a = 0.0;
        double c = 0.0;
        if (y >= tau) {
            barrier = tau, a = tau - x, c = y - tau;
        } else if (y <= -tau) {
            barrier = -tau, a = tau + x, c = -tau - y;
        } else {
            const double e_up = -2.0 * (tau - x) * (tau - y) / h;
            const double e_dn = -2.0 * (tau + x) * (tau + y) / h;
            const double p_up = e_up > kNegligibleExponent ? std::exp(e_up) : 0.0;
            const double p_dn = e_dn > kNegligibleExponent ? std::exp(e_dn) : 0.0;
            if (p_up + p_dn > 0.0) {
                const double u = wait.uniform();
                if (u < p_up) {
                    barrier = tau, a = tau - x, c = tau - y;
                } else if (u < p_up + p_dn) {
                    barrier = -tau, a = tau + x, c = tau + y;
                }
            }
        }
        if (barrier != 0.0) {
            const double len = detail::bridge_crossing_time(wait, a, c, h);
            out.path_integral_1 += 0.5 * len * (x + barrier);
            out.path_integral_2 += 0.5 * len * (x * x + barrier * barrier);
            out.wait_time = t + len;
            out.exit_value = barrier;
            return out;
        }
        out.path_integral_1 += 0.5 * h * (x + y);
        out.path_integral_2 += 0.5 * h * (x * x + y * y);
        x = y;
        t += h;
    }
    throw std::runtime_error("first_exit_after_delay: step budget exhausted");
}

inline ExitSample first_exit_after_delay(RngStream& rng, double delay, double threshold,
                                         double step) {
    ExitOptions opt;
    opt.step = step;
    return first_exit_after_delay(rng, rng, delay, threshold, opt);
}

/// Path over [0, delay + wait] for a signal-ignorant wait: no stopping rule,
/// exit_value = Z_{delay + wait}. Both portions use opt.delay_step spacing.
inline ExitSample path_over_horizon(RngStream& delivery, RngStream& wait_rng, double delay,
                                    double wait, const ExitOptions& opt) {
    detail::require_finite(delay, "path_over_horizon: delay must be finite");
    detail::require_finite(wait, "path_over_horizon: wait must be finite");
    if (delay < 0.0 || wait < 0.0)
        throw std::invalid_argument("path_over_horizon: delay and wait must be >= 0");
    ExitSample out;
    double x = detail::simulate_delay_portion(delivery, delay, opt, out);
    out.delivery_value = x;
    out.wait_time = wait;
    if (wait > 0.0) {
        const double spacing = opt.delay_step > 0.0 ? opt.delay_step : opt.step;
        auto nodes = static_cast<std::size_t>(std::ceil(wait / spacing));
        nodes = std::clamp<std::size_t>(nodes, 1, std::max<std::size_t>(opt.max_delay_nodes, 1));
        const double h = wait / static_cast<double>(nodes);
        const double sd = std::sqrt(h);
        for (std::size_t i = 0; i < nodes; ++i) {
            const double y = x + sd * wait_rng.standard_normal();
            out.path_integral_1 += 0.5 * h * (x + y);
            out.path_integral_2 += 0.5 * h * (x * x + y * y);
            x = y;
        }
    }
    out.exit_value = x;
    return out;
}

/// Z_delay ~ N(0, delay).
inline double wiener_at_delay(RngStream& rng, double delay) {
    if (!(delay >= 0.0)) throw std::invalid_argument("wiener_at_delay: delay must be >= 0");
    return gaussian(rng, 0.0, delay);
}

}  // namespace wsamp
