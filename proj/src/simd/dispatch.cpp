#include <cstdlib>
#include <string>

#include "qacost/error.hpp"
#include "qacost/simd/outcome_kernel.hpp"

namespace qacost::simd {

std::string_view to_string(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

bool isa_available(Isa isa) {
    switch (isa) {
        case Isa::scalar: return true;
        case Isa::avx2:
#if defined(QACOST_HAVE_AVX2)
            return __builtin_cpu_supports("avx2");
#else
            return false;
#endif
    }
    return false;
}

Isa detect_isa() { return isa_available(Isa::avx2) ? Isa::avx2 : Isa::scalar; }

Isa active_isa() {
    if (const char* forced = std::getenv("QACOST_SIMD"); forced && std::string(forced) == "scalar")
        return Isa::scalar;
    return detect_isa();
}

OutcomeCounts count_outcomes(Isa isa, const rng::StreamId& stream, std::uint64_t first,
                             std::uint64_t count, const OutcomeThresholds& t) {
    if (!isa_available(isa))
        throw Error(ErrorCode::invalid_argument,
                    "kernel variant '" + std::string(to_string(isa)) + "' is not available on this CPU");
#if defined(QACOST_HAVE_AVX2)
    if (isa == Isa::avx2) return count_outcomes_avx2(stream, first, count, t);
#endif
    return count_outcomes_scalar(stream, first, count, t);
}

}  // namespace qacost::simd
