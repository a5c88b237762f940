#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "wiener_sampling/numeric_format.hpp"
#include "wiener_sampling/quadrature.hpp"
#include "wiener_sampling/rng.hpp"

namespace wsamp {

struct DelayMoments {
    double mean = 0.0;    ///< E[D]
    double second = 0.0;  ///< E[D^2]
    double fourth = 0.0;  ///< E[D^4]
};

/// Piecewise-constant perturbation of Uniform[0, 1] used for two-point
/// minimax constructions: density 1 - c/sqrt(k) on [0, delta/2], 1 on
/// (delta/2, 1 - delta/2] and 1 + c/sqrt(k) on (1 - delta/2, 1].
inline double lecam_density(double delta, double c, int k_param, double x) {
    if (!(delta > 0.0 && delta < 1.0) || !(std::abs(c) <= 0.5) || k_param < 1)
        throw std::invalid_argument("lecam_density: need delta in (0,1), |c| <= 1/2, k >= 1");
    const double bump = c / std::sqrt(static_cast<double>(k_param));
    if (x < 0.0 || x > 1.0) return 0.0;
    if (x <= 0.5 * delta) return 1.0 - bump;
    if (x <= 1.0 - 0.5 * delta) return 1.0;
    return 1.0 + bump;
}

namespace delay {

struct Deterministic {
    double value;
};
struct Uniform {
    double lo, hi;
};
struct LogNormal {
    double mu, sigma;
};
struct LeCam {
    double delta, c;
    int k;
};
struct Empirical {
    std::vector<double> values;
    std::string source;  ///< file path it was read from, if any
};

}  // namespace delay

/// Transmission-delay distribution. Immutable after construction.
class DelayModel {
public:
    using Kind = std::variant<delay::Deterministic, delay::Uniform, delay::LogNormal, delay::LeCam,
                              delay::Empirical>;

    static DelayModel deterministic(double d) {
        if (!(d >= 0.0) || !std::isfinite(d))
            throw std::invalid_argument("deterministic delay must be finite and >= 0");
        return DelayModel(delay::Deterministic{d});
    }
    static DelayModel uniform(double lo, double hi) {
        if (!(lo >= 0.0) || !(hi > lo) || !std::isfinite(hi))
            throw std::invalid_argument("uniform delay needs 0 <= a < b < inf");
        return DelayModel(delay::Uniform{lo, hi});
    }
    static DelayModel lognormal(double mu, double sigma) {
        if (!std::isfinite(mu) || !(sigma > 0.0) || !std::isfinite(sigma))
            throw std::invalid_argument("lognormal delay needs finite mu and sigma > 0");
        return DelayModel(delay::LogNormal{mu, sigma});
    }
    static DelayModel lecam(double delta, double c, int k) {
        (void)lecam_density(delta, c, k, 0.5);  // validates
        return DelayModel(delay::LeCam{delta, c, k});
    }
    static DelayModel empirical(std::vector<double> values, std::string source = {}) {
        if (values.empty()) throw std::invalid_argument("empirical delay needs at least one value");
        for (double v : values)
            if (!(v >= 0.0) || !std::isfinite(v))
                throw std::invalid_argument("empirical delays must be finite and >= 0");
        return DelayModel(delay::Empirical{std::move(values), std::move(source)});
    }

    [[nodiscard]] const Kind& kind() const noexcept { return kind_; }
    [[nodiscard]] const DelayMoments& moments() const noexcept { return moments_; }
    [[nodiscard]] double mean() const noexcept { return moments_.mean; }

    double sample(RngStream& rng) const {
        return std::visit(
            [&](const auto& k) -> double {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, delay::Deterministic>) {
                    return k.value;
                } else if constexpr (std::is_same_v<T, delay::Uniform>) {
                    return k.lo + (k.hi - k.lo) * rng.uniform();
                } else if constexpr (std::is_same_v<T, delay::LogNormal>) {
                    return std::exp(k.mu + k.sigma * rng.standard_normal());
                } else if constexpr (std::is_same_v<T, delay::LeCam>) {
                    const double bump = k.c / std::sqrt(static_cast<double>(k.k));
                    const double left = 1.0 - bump;
                    const double right = 1.0 + bump;
                    const double f1 = left * 0.5 * k.delta;
                    const double f2 = f1 + (1.0 - k.delta);
                    const double u = rng.uniform();
                    if (u < f1) return u / left;
                    if (u < f2) return 0.5 * k.delta + (u - f1);
                    return std::min(1.0, 1.0 - 0.5 * k.delta + (u - f2) / right);
                } else {
                    return k.values[rng.below(k.values.size())];
                }
            },
            kind_);
    }

    /// Nodes (delay value, probability weight) approximating E[f(D)].
    /// Exact for deterministic and empirical models; composite Gauss-Legendre
    /// otherwise (in standard-normal coordinates for the lognormal, truncated
    /// at +-10 standard deviations).
    [[nodiscard]] std::vector<QuadNode> quadrature(std::size_t nodes) const {
        return std::visit(
            [&](const auto& k) -> std::vector<QuadNode> {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, delay::Deterministic>) {
                    return {{k.value, 1.0}};
                } else if constexpr (std::is_same_v<T, delay::Uniform>) {
                    auto q = composite_gauss_legendre(k.lo, k.hi, nodes);
                    for (auto& n : q) n.w /= (k.hi - k.lo);
                    return q;
                } else if constexpr (std::is_same_v<T, delay::LogNormal>) {
                    constexpr double kHalfWidth = 10.0;
                    auto q = composite_gauss_legendre(-kHalfWidth, kHalfWidth, nodes);
                    const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
                    for (auto& n : q) {
                        n.w *= norm * std::exp(-0.5 * n.x * n.x);
                        n.x = std::exp(k.mu + k.sigma * n.x);
                    }
                    return q;
                } else if constexpr (std::is_same_v<T, delay::LeCam>) {
                    const double a = 0.5 * k.delta;
                    const double b = 1.0 - 0.5 * k.delta;
                    const std::size_t per = std::max<std::size_t>(16, nodes / 3);
                    std::vector<QuadNode> q;
                    for (auto [lo, hi] : {std::pair{0.0, a}, std::pair{a, b}, std::pair{b, 1.0}}) {
                        for (auto n : composite_gauss_legendre(lo, hi, per)) {
                            n.w *= lecam_density(k.delta, k.c, k.k, 0.5 * (lo + hi));
                            q.push_back(n);
                        }
                    }
                    return q;
                } else {
                    std::vector<QuadNode> q;
                    q.reserve(k.values.size());
                    const double w = 1.0 / static_cast<double>(k.values.size());
                    for (double v : k.values) q.push_back({v, w});
                    return q;
                }
            },
            kind_);
    }

    /// Text form accepted by parse_delay_spec.
    [[nodiscard]] std::string spec() const {
        return std::visit(
            [](const auto& k) -> std::string {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, delay::Deterministic>) {
                    return "det:" + to_shortest(k.value);
                } else if constexpr (std::is_same_v<T, delay::Uniform>) {
                    return "uniform:" + to_shortest(k.lo) + "," + to_shortest(k.hi);
                } else if constexpr (std::is_same_v<T, delay::LogNormal>) {
                    return "lognormal:" + to_shortest(k.mu) + "," + to_shortest(k.sigma);
                } else if constexpr (std::is_same_v<T, delay::LeCam>) {
                    return "lecam:" + to_shortest(k.delta) + "," + to_shortest(k.c) + "," +
                           std::to_string(k.k);
                } else {
                    return "empirical:" + k.source;
                }
            },
            kind_);
    }

    [[nodiscard]] bool is_empirical() const noexcept {
        return std::holds_alternative<delay::Empirical>(kind_);
    }

private:
    explicit DelayModel(Kind k) : kind_(std::move(k)) { moments_ = compute_moments(); }

    [[nodiscard]] DelayMoments compute_moments() const {
        return std::visit(
            [&](const auto& k) -> DelayMoments {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, delay::Deterministic>) {
                    const double d2 = k.value * k.value;
                    return {k.value, d2, d2 * d2};
                } else if constexpr (std::is_same_v<T, delay::Uniform>) {
                    auto raw = [&](int n) {
                        return (std::pow(k.hi, n + 1) - std::pow(k.lo, n + 1)) /
                               ((n + 1) * (k.hi - k.lo));
                    };
                    return {raw(1), raw(2), raw(4)};
                } else if constexpr (std::is_same_v<T, delay::LogNormal>) {
                    auto raw = [&](double n) {
                        return std::exp(n * k.mu + 0.5 * n * n * k.sigma * k.sigma);
                    };
                    return {raw(1), raw(2), raw(4)};
                } else {
                    // plug-in moments (empirical) or exact piecewise quadrature (lecam)
                    DelayMoments m;
                    for (const auto& n : quadrature(64)) {
                        const double d2 = n.x * n.x;
                        m.mean += n.w * n.x;
                        m.second += n.w * d2;
                        m.fourth += n.w * d2 * d2;
                    }
                    return m;
                }
            },
            kind_);
    }

    Kind kind_;
    DelayMoments moments_;
};

/// Default lower bound on the mean delay used by the step-size rule: half the
/// mean for fully specified models. Empirical models and zero-mean models
/// have no default.
inline std::optional<double> default_mean_lower_bound(const DelayModel& model) {
    if (model.is_empirical() || !(model.mean() > 0.0)) return std::nullopt;
    return 0.5 * model.mean();
}

inline std::vector<double> read_delay_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open delay file: " + path);
    std::vector<double> values;
    std::string line;
    while (std::getline(in, line)) {
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        auto last = line.find_last_not_of(" \t\r,");
        double v;
        if (!parse_double(std::string_view(line).substr(first, last - first + 1), v))
            throw std::invalid_argument("bad delay value in " + path + ": " + line);
        values.push_back(v);
    }
    return values;
}

/// Parses "det:d", "uniform:a,b", "lognormal:mu,sigma", "lecam:delta,c,k"
/// or "empirical:path.csv".
inline DelayModel parse_delay_spec(std::string_view text) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos)
        throw std::invalid_argument("delay spec needs '<kind>:<params>': " + std::string(text));
    const auto kind = text.substr(0, colon);
    const auto rest = text.substr(colon + 1);
    if (kind == "empirical") {
        std::string path(rest);
        return DelayModel::empirical(read_delay_file(path), path);
    }
    std::vector<double> p;
    std::size_t pos = 0;
    while (pos <= rest.size()) {
        auto next = rest.find(',', pos);
        if (next == std::string_view::npos) next = rest.size();
        double v;
        if (!parse_double(rest.substr(pos, next - pos), v))
            throw std::invalid_argument("bad number in delay spec: " + std::string(text));
        p.push_back(v);
        pos = next + 1;
    }
    auto expect = [&](std::size_t n) {
        if (p.size() != n)
            throw std::invalid_argument("wrong parameter count in delay spec: " + std::string(text));
    };
    if (kind == "det") {
        expect(1);
        return DelayModel::deterministic(p[0]);
    }
    if (kind == "uniform") {
        expect(2);
        return DelayModel::uniform(p[0], p[1]);
    }
    if (kind == "lognormal") {
        expect(2);
        return DelayModel::lognormal(p[0], p[1]);
    }
    if (kind == "lecam") {
        expect(3);
        if (p[2] != std::floor(p[2])) throw std::invalid_argument("lecam k must be an integer");
        return DelayModel::lecam(p[0], p[1], static_cast<int>(p[2]));
    }
    throw std::invalid_argument("unknown delay kind: " + std::string(kind));
}

}  // namespace wsamp
