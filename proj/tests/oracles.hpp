#pragma once

// Independent reference computations for the test suites. Nothing here uses
// the library's random streams, delay models or quadrature.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

struct RootEstimate {
    double gamma;
    double stderr_;
};

/// Draws n values of Z_D^2 with D from `draw_delay`, using std::mt19937_64.
inline std::vector<double> z_squared(std::size_t n, std::uint64_t seed,
                                     const std::function<double(std::mt19937_64&)>& draw_delay) {
    std::mt19937_64 eng(seed);
    std::normal_distribution<double> nd;
    std::vector<double> out(n);
    for (auto& v : out) {
        const double z = nd(eng);
        v = draw_delay(eng) * z * z;
    }
    return out;
}

/// Sample mean of (1/6) max{3g, z^2}^2 - g max{3g, z^2}.
inline double g_mean(const std::vector<double>& z2, double g) {
    double s = 0.0;
    const double a = 3.0 * g;
    for (double v : z2) {
        const double m = std::max(a, v);
        s += m * m / 6.0 - g * m;
    }
    return s / static_cast<double>(z2.size());
}

/// Root of the sample-mean g over [lo, hi] by bisection on one set of draws,
/// with a delta-method standard error sd(g)/(sqrt(n) |slope|).
inline RootEstimate gamma_star(const std::vector<double>& z2, double lo, double hi) {
    for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        (g_mean(z2, mid) > 0.0 ? lo : hi) = mid;
    }
    const double g = 0.5 * (lo + hi);
    const double a = 3.0 * g;
    double s = 0.0, s2 = 0.0, slope = 0.0;
    for (double v : z2) {
        const double m = std::max(a, v);
        const double y = m * m / 6.0 - g * m;
        s += y;
        s2 += y * y;
        slope += m;
    }
    const double n = static_cast<double>(z2.size());
    const double var = (s2 - s * s / n) / (n - 1.0);
    return {g, std::sqrt(var / n) / (slope / n)};
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// E[U^(2m); |U| > u] for U ~ N(0, 1), by integration by parts:
/// I_m = 2 u^(2m-1) phi(u) + (2m - 1) I_(m-1), I_0 = erfc(u / sqrt 2).
inline double normal_even_tail_moment(int m, double u) {
    const double phi = std::exp(-0.5 * u * u) / std::sqrt(2.0 * 3.14159265358979323846);
    double i = std::erfc(u / std::sqrt(2.0));
    for (int j = 1; j <= m; ++j) i = 2.0 * std::pow(u, 2 * j - 1) * phi + (2 * j - 1) * i;
    return i;
}

/// E[max{a, Z^2}^p] for Z | D = d ~ N(0, d), averaged over weighted delay
/// nodes (d_i, w_i).
template <class Nodes>
double max_power_moment(const Nodes& nodes, double a, int p) {
    double s = 0.0;
    for (const auto& n : nodes) {
        const double d = n.x;
        if (d <= 0.0) {
            s += n.w * std::pow(a, p);
            continue;
        }
        const double u = std::sqrt(a / d);
        const double inside = 1.0 - std::erfc(u / std::sqrt(2.0));
        s += n.w * (std::pow(a, p) * inside + std::pow(d, p) * normal_even_tail_moment(p, u));
    }
    return s;
}

}  // namespace oracle
