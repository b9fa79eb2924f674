#pragma once

// Philox4x32-10 counter-based generator (Salmon et al., Random123).
//
// The simulator never keeps generator state: the random words for image `i`
// of trial `t` are a pure function of (seed, t, i). That makes every trial an
// independent stream, lets trials run on any thread in any order, and lets
// the SIMD kernels evaluate many images at once with bit-identical results.
//
// Stream layout (pinned; changing it changes every simulation result):
//   key     = (seed & 0xffffffff, seed >> 32)
//   counter = (pair & 0xffffffff, pair >> 32, trial, 0) where pair = i / 2
//   output  = 4 words; image 2*pair uses (w0, w1), image 2*pair+1 uses (w2, w3)
//   first word of an image decides ground truth, second decides AutoQA pass.

#include <array>
#include <cstdint>

namespace qacost::rng {

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;
inline constexpr int kPhiloxRounds = 10;

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

constexpr PhiloxCounter philox4x32(PhiloxCounter ctr, PhiloxKey key) {
    for (int round = 0; round < kPhiloxRounds; ++round) {
        if (round > 0) {
            key[0] += kPhiloxW0;
            key[1] += kPhiloxW1;
        }
        const std::uint64_t p0 = std::uint64_t{kPhiloxM0} * ctr[0];
        const std::uint64_t p1 = std::uint64_t{kPhiloxM1} * ctr[2];
        ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
               static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    }
    return ctr;
}

/// Identifies one trial's stream.
struct StreamId {
    std::uint64_t seed = 0;
    std::uint32_t trial = 0;

    constexpr PhiloxKey key() const {
        return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    }
    constexpr PhiloxCounter counter(std::uint64_t pair) const {
        return {static_cast<std::uint32_t>(pair), static_cast<std::uint32_t>(pair >> 32), trial, 0u};
    }
};

/// The two 32-bit words assigned to image `index` of a stream.
struct ImageWords {
    std::uint32_t truth;
    std::uint32_t filter;
};

constexpr ImageWords image_words(const StreamId& stream, std::uint64_t index) {
    const PhiloxCounter out = philox4x32(stream.counter(index >> 1), stream.key());
    return (index & 1u) ? ImageWords{out[2], out[3]} : ImageWords{out[0], out[1]};
}

/// Bernoulli threshold on 32-bit words: an event fires iff word < threshold.
/// Thresholds live in [0, 2^32] so p = 1 fires always and p = 0 never.
std::uint64_t bernoulli_threshold(double p);

/// SplitMix64, used only for deriving reproducible test/config streams.
class SplitMix64 {
public:
    explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

    constexpr std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0,1) from the top 53 bits.
    constexpr double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    constexpr double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
    std::uint64_t state_;
};

}  // namespace qacost::rng
