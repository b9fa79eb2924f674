#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "qacost/cost_model.hpp"

namespace qacost {

/// Uniform grid over P_aqa(clean) in (0,1]. Text form: "lo:hi:steps".
struct PrecisionRange {
    double lo = 0.05;
    double hi = 1.0;
    std::size_t steps = 96;

    /// Throws Error(parse_error) on malformed text, Error(invalid_argument)
    /// when the range leaves (0,1], steps < 1, or steps == 1 with lo != hi.
    static PrecisionRange parse(std::string_view text);
    void validate() const;

    double at(std::size_t i) const;
};

struct SweepRow {
    double p_aqa_clean = 0;
    std::optional<double> delta_abs;  // absent on infeasible rows
    std::optional<double> delta_rel;
    bool feasible = false;

    bool operator==(const SweepRow&) const = default;
};

/// Savings as a function of P_aqa(clean) with p_gen_clean, y_aqa and costs held
/// at `base`. Infeasible grid points are marked, not fatal. Expectation mode.
std::vector<SweepRow> sweep_precision(const StageRates& base, const UnitCosts& costs, double n_mqa,
                                      const PrecisionRange& range);

/// Savings with P_aqa(clean) replaced by `p_aqa_clean`, feasibility unchecked.
SavingsReport savings_at_precision(const StageRates& base, double p_aqa_clean, const UnitCosts& costs,
                                   double n_mqa);

/// P_aqa(clean) in (0,1] at which savings cross zero for the base yield and
/// costs. Savings are c1 - c2/P in P, so the root is solved directly; the
/// result is verified to bring |delta_abs| below 1e-9 of the baseline total.
/// Throws Error(no_break_even) when savings keep one sign over (0,1].
double break_even_precision(const StageRates& base, const UnitCosts& costs, double n_mqa);

}  // namespace qacost
