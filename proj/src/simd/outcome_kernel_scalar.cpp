#include <cmath>

#include "qacost/simd/outcome_kernel.hpp"

namespace qacost {

std::uint64_t rng::bernoulli_threshold(double p) {
    if (!(p > 0.0)) return 0;
    if (p >= 1.0) return std::uint64_t{1} << 32;
    return static_cast<std::uint64_t>(std::llround(std::ldexp(p, 32)));
}

namespace simd {

OutcomeThresholds OutcomeThresholds::from_probabilities(double p_clean, double pass_given_clean,
                                                        double pass_given_defect) {
    return {rng::bernoulli_threshold(p_clean), rng::bernoulli_threshold(pass_given_clean),
            rng::bernoulli_threshold(pass_given_defect)};
}

namespace {

inline void tally(OutcomeCounts& c, std::uint32_t truth_word, std::uint32_t filter_word,
                  const OutcomeThresholds& t) {
    if (truth_word < t.clean) {
        if (filter_word < t.pass_if_clean) ++c.tp; else ++c.fn;
    } else {
        if (filter_word < t.pass_if_defect) ++c.fp; else ++c.tn;
    }
}

}  // namespace

OutcomeCounts count_outcomes_scalar(const rng::StreamId& stream, std::uint64_t first,
                                    std::uint64_t count, const OutcomeThresholds& t) {
    OutcomeCounts c;
    std::uint64_t i = first;
    const std::uint64_t end = first + count;
    if (i < end && (i & 1u)) {
        const auto w = rng::image_words(stream, i++);
        tally(c, w.truth, w.filter, t);
    }
    // Whole pairs share one Philox block.
    for (; i + 2 <= end; i += 2) {
        const auto out = rng::philox4x32(stream.counter(i >> 1), stream.key());
        tally(c, out[0], out[1], t);
        tally(c, out[2], out[3], t);
    }
    if (i < end) {
        const auto w = rng::image_words(stream, i);
        tally(c, w.truth, w.filter, t);
    }
    return c;
}

}  // namespace simd
}  // namespace qacost
