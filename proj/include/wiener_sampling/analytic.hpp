#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "wiener_sampling/delay_models.hpp"
#include "wiener_sampling/rng.hpp"

namespace wsamp {

/// Pointwise g_nu(gamma; z) = (1/6) max{3(gamma+nu), z^2}^2 - gamma max{3(gamma+nu), z^2}.
inline double g_point(double gamma, double nu, double z) {
    const double m = std::max(3.0 * (gamma + nu), z * z);
    return m * m / 6.0 - gamma * m;
}

enum class EvalMode { quadrature, monte_carlo };

struct AnalyticOptions {
    std::size_t nodes = 4096;
    std::size_t mc_samples = 1'000'000;
    EvalMode mode = EvalMode::quadrature;
    std::uint64_t mc_seed = 0x5eed;
};

/// Expectations over Z_D, where D ~ P_D and Z_D | D = d ~ N(0, d), at one
/// squared threshold a = tau^2.
struct FrameMoments {
    double length = 0.0;      ///< E[max{a, Z_D^2}]
    double quartic = 0.0;     ///< (1/6) E[max{a, Z_D^2}^2]
    double excess1 = 0.0;     ///< E[(Z_D^2 - a)^+]
    double excess2 = 0.0;     ///< E[((Z_D^2 - a)^+)^2]
    double wait_prob = 0.0;   ///< Pr(Z_D^2 <= a)
    double total_weight = 0.0;
};

namespace detail {

// Conditional tail moments of Z ~ N(0, d) beyond |Z| = sqrt(a), via erfc.
struct NormalTail {
    double e1, e2, inside;
};

inline NormalTail normal_tail(double d, double a) {
    if (d <= 0.0) return {0.0, 0.0, 1.0};
    if (a <= 0.0) return {d, 3.0 * d * d, 0.0};
    const double u = std::sqrt(a / d);
    if (u > 40.0) return {0.0, 0.0, 1.0};
    const double phi = std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
    const double tail = std::erfc(u / std::numbers::sqrt2);
    const double u2 = u * u;
    const double e1 = d * (2.0 * u * phi + (1.0 - u2) * tail);
    const double e2 = d * d * ((6.0 * u - 2.0 * u2 * u) * phi + (u2 * u2 - 2.0 * u2 + 3.0) * tail);
    return {std::max(e1, 0.0), std::max(e2, 0.0), std::erf(u / std::numbers::sqrt2)};
}

}  // namespace detail

/// Immutable evaluation context for the frame-level expectations of one
/// delay model: quadrature nodes over the delay support, or a frozen set of
/// Monte Carlo draws of Z_D^2.
class AnalyticContext {
public:
    explicit AnalyticContext(DelayModel model, AnalyticOptions opt = {})
        : model_(std::move(model)), opt_(opt) {
        if (opt_.nodes < 64) throw std::invalid_argument("AnalyticContext: need >= 64 nodes");
        if (opt_.mc_samples < 10'000)
            throw std::invalid_argument("AnalyticContext: need >= 1e4 Monte Carlo samples");
        if (opt_.mode == EvalMode::quadrature) {
            nodes_ = model_.quadrature(opt_.nodes);
        } else {
            RngStream rng(opt_.mc_seed, 0);
            z2_.reserve(opt_.mc_samples);
            for (std::size_t i = 0; i < opt_.mc_samples; ++i) {
                const double z = wiener_at(rng, model_.sample(rng));
                z2_.push_back(z * z);
            }
        }
    }

    [[nodiscard]] const DelayModel& model() const noexcept { return model_; }
    [[nodiscard]] const AnalyticOptions& options() const noexcept { return opt_; }

    [[nodiscard]] FrameMoments frame_moments(double a) const {
        if (!(a >= 0.0)) throw std::invalid_argument("frame_moments: tau^2 must be >= 0");
        FrameMoments m;
        if (opt_.mode == EvalMode::quadrature) {
            for (const auto& n : nodes_) {
                const auto t = detail::normal_tail(n.x, a);
                m.excess1 += n.w * t.e1;
                m.excess2 += n.w * t.e2;
                m.wait_prob += n.w * t.inside;
                m.total_weight += n.w;
            }
        } else {
            for (double z2 : z2_) {
                const double e = z2 - a;
                if (e > 0.0) {
                    m.excess1 += e;
                    m.excess2 += e * e;
                } else {
                    m.wait_prob += 1.0;
                }
            }
            const double inv = 1.0 / static_cast<double>(z2_.size());
            m.excess1 *= inv;
            m.excess2 *= inv;
            m.wait_prob *= inv;
            m.total_weight = 1.0;
        }
        m.length = a * m.total_weight + m.excess1;
        m.quartic = (a * a * m.total_weight + 2.0 * a * m.excess1 + m.excess2) / 6.0;
        if (!std::isfinite(m.length) || !std::isfinite(m.quartic))
            throw std::runtime_error("frame_moments: integration failure (non-finite result)");
        return m;
    }

private:
    static double wiener_at(RngStream& rng, double d) { return std::sqrt(d) * rng.standard_normal(); }

    DelayModel model_;
    AnalyticOptions opt_;
    std::vector<QuadNode> nodes_;
    std::vector<double> z2_;
};

/// l(tau^2) = E[max{tau^2, Z_D^2}], the expected frame length of a threshold policy.
inline double expected_frame_length(const AnalyticContext& ctx, double tau_sq) {
    return ctx.frame_moments(tau_sq).length;
}

/// (1/6) E[max{tau^2, Z_D^2}^2], the expected (1/6)(frame increment)^4.
inline double expected_frame_quartic(const AnalyticContext& ctx, double tau_sq) {
    return ctx.frame_moments(tau_sq).quartic;
}

/// Pr(Z_D^2 <= tau^2).
inline double waiting_probability(const AnalyticContext& ctx, double tau_sq) {
    return std::clamp(ctx.frame_moments(tau_sq).wait_prob, 0.0, 1.0);
}

/// g_bar_nu(gamma) = E[g_nu(gamma; Z_D)], expanded around a = 3(gamma + nu):
/// a^2/6 - gamma a + nu E[(Z^2 - a)^+] + (1/6) E[((Z^2 - a)^+)^2].
inline double g_bar(const AnalyticContext& ctx, double gamma, double nu) {
    if (!(gamma >= 0.0) || !(nu >= 0.0)) throw std::invalid_argument("g_bar: gamma, nu must be >= 0");
    const double a = 3.0 * (gamma + nu);
    const auto m = ctx.frame_moments(a);
    return (a * a / 6.0 - gamma * a) * m.total_weight + nu * m.excess1 + m.excess2 / 6.0;
}

/// d g_bar_nu / d gamma = -3 gamma Pr(Z^2 < a) - E[Z^2 1{Z^2 >= a}]; equals -l(3 gamma) at nu = 0.
inline double g_bar_slope(const AnalyticContext& ctx, double gamma, double nu) {
    const double a = 3.0 * (gamma + nu);
    const auto m = ctx.frame_moments(a);
    return -3.0 * gamma * m.wait_prob - (m.excess1 + a * (m.total_weight - m.wait_prob));
}

struct GammaBracket {
    double lo;
    double hi;
};

/// D_bar/6 <= gamma* <= (1/2)(M + 2 D_bar w + w^2) / (D_bar + w), w = 1/f_max.
inline GammaBracket gamma_bracket(const DelayModel& model, double f_max) {
    if (!(f_max > 0.0)) throw std::invalid_argument("gamma_bracket: f_max must be > 0");
    const auto& mo = model.moments();
    const double w = std::isinf(f_max) ? 0.0 : 1.0 / f_max;
    const double denom = mo.mean + w;
    const double hi = denom > 0.0 ? 0.5 * (mo.second + 2.0 * mo.mean * w + w * w) / denom : 0.0;
    return {mo.mean / 6.0, hi};
}

/// Time-average MSE of a signal-ignorant policy waiting exactly w after each
/// delivery: (1/2)(M + 2 D_bar w + w^2) / (D_bar + w) + D_bar.
inline double constant_wait_mse(const DelayModel& model, double w) {
    const auto& mo = model.moments();
    return 0.5 * (mo.second + 2.0 * mo.mean * w + w * w) / (mo.mean + w) + mo.mean;
}

struct McEstimate {
    double mean;
    double stderr_;
};

/// Plain Monte Carlo estimate of E[f(Z_D)] with its standard error.
template <class F>
McEstimate monte_carlo_expectation(const DelayModel& model, std::size_t n, RngStream& rng, F&& f) {
    double mean = 0.0;
    double m2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double z = std::sqrt(model.sample(rng)) * rng.standard_normal();
        const double v = f(z);
        const double delta = v - mean;
        mean += delta / static_cast<double>(i + 1);
        m2 += delta * (v - mean);
    }
    const double var = n > 1 ? m2 / static_cast<double>(n - 1) : 0.0;
    return {mean, std::sqrt(var / static_cast<double>(n))};
}

}  // namespace wsamp
