#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace wsamp {

/// Reproducible random stream keyed by (seed, stream_id).
///
/// The engine is seeded through std::seed_seq with both halves of the seed
/// and the stream id, so replication r of an experiment always sees the same
/// draws no matter which thread runs it. A stream is a value: copy it to fork
/// an identical sequence, never share one between threads.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t channel = 0)
        : seed_(seed), stream_id_(stream_id), channel_(channel) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream_id),
                          static_cast<std::uint32_t>(stream_id >> 32),
                          static_cast<std::uint32_t>(channel),
                          static_cast<std::uint32_t>(channel >> 32)};
        engine_.seed(seq);
    }

    /// Independent sub-stream of the same (seed, stream_id) pair.
    [[nodiscard]] RngStream channel(std::uint64_t ch) const { return {seed_, stream_id_, ch}; }

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] std::uint64_t stream_id() const noexcept { return stream_id_; }

    double standard_normal() { return normal_(engine_); }

    /// Uniform on [0, 1).
    double uniform() { return std::generate_canonical<double, 53>(engine_); }

    std::uint64_t below(std::uint64_t n) {
        return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
    }

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t channel_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

/// One draw from N(mean, variance). variance == 0 returns mean exactly.
inline double gaussian(RngStream& rng, double mean, double variance) {
    if (!(variance >= 0.0)) throw std::invalid_argument("gaussian: variance must be >= 0");
    if (variance == 0.0) return mean;
    return mean + std::sqrt(variance) * rng.standard_normal();
}

}  // namespace wsamp
