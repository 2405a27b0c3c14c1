#pragma once

#include <cstdint>
#include <span>
#include <utility>

namespace dpgcnn {

/// SplitMix64 generator. The output sequence depends only on the seed, so
/// runs are reproducible across platforms and standard library versions.
///
/// Independent consumers (initialization, dropout, splits, sparsification)
/// take their own child stream via `stream(id)`; adding a consumer never
/// shifts the draws seen by another.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) noexcept : state_(seed) {}

    std::uint64_t next() noexcept {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, bound) using Lemire's multiply-shift with rejection.
    std::uint64_t below(std::uint64_t bound) noexcept;

    bool bernoulli(double p) noexcept { return uniform() < p; }

    /// Child generator whose seed mixes the current seed with `stream_id`.
    /// Does not advance this generator.
    Rng stream(std::uint64_t stream_id) const noexcept;

    template <typename T>
    void shuffle(std::span<T> values) noexcept {
        for (std::size_t i = values.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(values[i - 1], values[j]);
        }
    }

    std::uint64_t state() const noexcept { return state_; }

private:
    std::uint64_t state_;
};

/// Well-known child stream ids.
namespace streams {
inline constexpr std::uint64_t init = 1;
inline constexpr std::uint64_t dropout = 2;
inline constexpr std::uint64_t split = 3;
inline constexpr std::uint64_t sparsify = 4;
inline constexpr std::uint64_t link_task = 5;
inline constexpr std::uint64_t synthetic = 6;
}  // namespace streams

}  // namespace dpgcnn
