#pragma once

#include <cmath>
#include <cstddef>

namespace wsamp {

/// Welford accumulator for mean / variance / standard error.
class RunningStats {
public:
    void add(double v) {
        ++n_;
        const double d = v - mean_;
        mean_ += d / static_cast<double>(n_);
        m2_ += d * (v - mean_);
    }
    [[nodiscard]] std::size_t count() const noexcept { return n_; }
    [[nodiscard]] double mean() const noexcept { return mean_; }
    [[nodiscard]] double variance() const noexcept {
        return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
    }
    [[nodiscard]] double stderr_() const noexcept {
        return n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
    }

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

}  // namespace wsamp
