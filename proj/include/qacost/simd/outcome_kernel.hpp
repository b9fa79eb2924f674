#pragma once

// Per-image outcome kernels for the pipeline simulator.
//
// Each image draws ground truth (clean with probability p_gen_clean) and an
// AutoQA decision conditioned on that truth. The kernels only count the four
// confusion cells over a contiguous index range of one stream. All variants
// must agree bit-for-bit with the scalar reference; tests enforce this.

#include <cstdint>
#include <string_view>

#include "qacost/rng.hpp"

namespace qacost::simd {

/// Clean is the positive class; "pass" means AutoQA predicted clean.
struct OutcomeCounts {
    std::uint64_t tp = 0;  // clean, passed
    std::uint64_t fp = 0;  // defect, passed
    std::uint64_t tn = 0;  // defect, flagged
    std::uint64_t fn = 0;  // clean, flagged

    std::uint64_t passed() const { return tp + fp; }
    std::uint64_t total() const { return tp + fp + tn + fn; }

    OutcomeCounts& operator+=(const OutcomeCounts& o) {
        tp += o.tp;
        fp += o.fp;
        tn += o.tn;
        fn += o.fn;
        return *this;
    }
    bool operator==(const OutcomeCounts&) const = default;
};

struct OutcomeThresholds {
    std::uint64_t clean = 0;
    std::uint64_t pass_if_clean = 0;
    std::uint64_t pass_if_defect = 0;

    static OutcomeThresholds from_probabilities(double p_clean, double pass_given_clean,
                                                double pass_given_defect);
};

struct ImageOutcome {
    bool clean;
    bool passed;
};

inline ImageOutcome image_outcome(const rng::StreamId& stream, std::uint64_t index,
                                  const OutcomeThresholds& t) {
    const rng::ImageWords w = rng::image_words(stream, index);
    const bool clean = w.truth < t.clean;
    const bool passed = w.filter < (clean ? t.pass_if_clean : t.pass_if_defect);
    return {clean, passed};
}

enum class Isa { scalar, avx2 };

std::string_view to_string(Isa isa);

/// Best variant the running CPU supports.
Isa detect_isa();

/// detect_isa(), unless QACOST_SIMD=scalar is set in the environment.
Isa active_isa();

bool isa_available(Isa isa);

OutcomeCounts count_outcomes_scalar(const rng::StreamId& stream, std::uint64_t first,
                                    std::uint64_t count, const OutcomeThresholds& t);

#if defined(QACOST_HAVE_AVX2)
OutcomeCounts count_outcomes_avx2(const rng::StreamId& stream, std::uint64_t first,
                                  std::uint64_t count, const OutcomeThresholds& t);
#endif

/// Dispatches to the requested variant; throws if it is unavailable.
OutcomeCounts count_outcomes(Isa isa, const rng::StreamId& stream, std::uint64_t first,
                             std::uint64_t count, const OutcomeThresholds& t);

}  // namespace qacost::simd
