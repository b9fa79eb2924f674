// Compiled with -mavx2; only called after a runtime CPU check.

#include <immintrin.h>

#include "qacost/simd/outcome_kernel.hpp"

namespace qacost::simd {

namespace {

constexpr int kLanes = 8;  // Philox blocks per iteration, 16 images

struct MulHiLo {
    __m256i hi;
    __m256i lo;
};

// 32x32 -> 64 multiply of each lane by a constant, split into high/low words.
inline MulHiLo mulhilo(__m256i a, __m256i m) {
    const __m256i even = _mm256_mul_epu32(a, m);
    const __m256i odd = _mm256_mul_epu32(_mm256_srli_epi64(a, 32), m);
    return {_mm256_blend_epi32(_mm256_srli_epi64(even, 32), odd, 0xAA),
            _mm256_blend_epi32(even, _mm256_slli_epi64(odd, 32), 0xAA)};
}

// Unsigned word < threshold for thresholds in [0, 2^32].
struct LessThan {
    __m256i biased;
    bool always;

    explicit LessThan(std::uint64_t threshold)
        : biased(_mm256_set1_epi32(static_cast<int>(static_cast<std::uint32_t>(threshold) ^ 0x80000000u))),
          always(threshold > 0xFFFFFFFFull) {}

    __m256i operator()(__m256i words) const {
        if (always) return _mm256_set1_epi32(-1);
        const __m256i w = _mm256_xor_si256(words, _mm256_set1_epi32(static_cast<int>(0x80000000u)));
        return _mm256_cmpgt_epi32(biased, w);
    }
};

inline std::uint64_t popcount_mask(__m256i mask) {
    return static_cast<std::uint64_t>(
        __builtin_popcount(static_cast<unsigned>(_mm256_movemask_ps(_mm256_castsi256_ps(mask)))));
}

struct LaneTally {
    const LessThan& is_clean;
    const LessThan& pass_clean;
    const LessThan& pass_defect;
    OutcomeCounts& c;

    void operator()(__m256i truth_words, __m256i filter_words) const {
        const __m256i clean = is_clean(truth_words);
        const __m256i pass = _mm256_blendv_epi8(pass_defect(filter_words), pass_clean(filter_words), clean);
        c.tp += popcount_mask(_mm256_and_si256(clean, pass));
        c.fn += popcount_mask(_mm256_andnot_si256(pass, clean));
        c.fp += popcount_mask(_mm256_andnot_si256(clean, pass));
        c.tn += popcount_mask(_mm256_andnot_si256(_mm256_or_si256(clean, pass), _mm256_set1_epi32(-1)));
    }
};

}  // namespace

OutcomeCounts count_outcomes_avx2(const rng::StreamId& stream, std::uint64_t first,
                                  std::uint64_t count, const OutcomeThresholds& t) {
    OutcomeCounts c;
    std::uint64_t i = first;
    const std::uint64_t end = first + count;

    if (i < end && (i & 1u)) {
        c += count_outcomes_scalar(stream, i, 1, t);
        ++i;
    }

    const LessThan is_clean(t.clean), pass_clean(t.pass_if_clean), pass_defect(t.pass_if_defect);
    const LaneTally tally{is_clean, pass_clean, pass_defect, c};
    const rng::PhiloxKey key = stream.key();
    const __m256i m0 = _mm256_set1_epi32(static_cast<int>(rng::kPhiloxM0));
    const __m256i m1 = _mm256_set1_epi32(static_cast<int>(rng::kPhiloxM1));
    const __m256i ctr2 = _mm256_set1_epi32(static_cast<int>(stream.trial));
    const __m256i lane = _mm256_setr_epi32(0, 1, 2, 3, 4, 5, 6, 7);

    for (; i + 2 * kLanes <= end; i += 2 * kLanes) {
        const std::uint64_t pair = i >> 1;
        __m256i x0, x1;
        if (static_cast<std::uint32_t>(pair) <= 0xFFFFFFFFu - (kLanes - 1)) {
            x0 = _mm256_add_epi32(_mm256_set1_epi32(static_cast<int>(static_cast<std::uint32_t>(pair))), lane);
            x1 = _mm256_set1_epi32(static_cast<int>(static_cast<std::uint32_t>(pair >> 32)));
        } else {
            alignas(32) std::uint32_t lo[kLanes], hi[kLanes];
            for (int j = 0; j < kLanes; ++j) {
                lo[j] = static_cast<std::uint32_t>(pair + j);
                hi[j] = static_cast<std::uint32_t>((pair + j) >> 32);
            }
            x0 = _mm256_load_si256(reinterpret_cast<const __m256i*>(lo));
            x1 = _mm256_load_si256(reinterpret_cast<const __m256i*>(hi));
        }
        __m256i x2 = ctr2;
        __m256i x3 = _mm256_setzero_si256();
        std::uint32_t k0 = key[0], k1 = key[1];
        for (int round = 0; round < rng::kPhiloxRounds; ++round) {
            if (round > 0) {
                k0 += rng::kPhiloxW0;
                k1 += rng::kPhiloxW1;
            }
            const MulHiLo a = mulhilo(x0, m0);
            const MulHiLo b = mulhilo(x2, m1);
            const __m256i n0 = _mm256_xor_si256(_mm256_xor_si256(b.hi, x1), _mm256_set1_epi32(static_cast<int>(k0)));
            const __m256i n2 = _mm256_xor_si256(_mm256_xor_si256(a.hi, x3), _mm256_set1_epi32(static_cast<int>(k1)));
            x0 = n0;
            x1 = b.lo;
            x2 = n2;
            x3 = a.lo;
        }
        tally(x0, x1);  // even images of each pair
        tally(x2, x3);  // odd images
    }

    if (i < end) c += count_outcomes_scalar(stream, i, end - i, t);
    return c;
}

}  // namespace qacost::simd
