#include "qacost/analysis.hpp"

#include <cmath>

#include "qacost/csv.hpp"
#include "qacost/error.hpp"

namespace qacost {

PrecisionRange PrecisionRange::parse(std::string_view text) {
    const std::size_t a = text.find(':');
    const std::size_t b = a == std::string_view::npos ? a : text.find(':', a + 1);
    if (a == std::string_view::npos || b == std::string_view::npos)
        throw Error(ErrorCode::parse_error, "range '" + std::string(text) + "' must look like lo:hi:steps");
    PrecisionRange r;
    r.lo = csv::parse_double(text.substr(0, a), "range lower bound");
    r.hi = csv::parse_double(text.substr(a + 1, b - a - 1), "range upper bound");
    const long long steps = csv::parse_integer(text.substr(b + 1), "range steps");
    if (steps < 1) throw Error(ErrorCode::invalid_argument, "range steps must be >= 1");
    r.steps = static_cast<std::size_t>(steps);
    r.validate();
    return r;
}

void PrecisionRange::validate() const {
    if (!(lo > 0.0 && lo <= 1.0 && hi > 0.0 && hi <= 1.0))
        throw Error(ErrorCode::invalid_argument, "sweep range must lie within (0,1]");
    if (lo > hi) throw Error(ErrorCode::invalid_argument, "sweep range lower bound exceeds upper bound");
    if (steps < 1) throw Error(ErrorCode::invalid_argument, "sweep needs at least one step");
    if (steps == 1 && lo != hi) throw Error(ErrorCode::invalid_argument, "a single-step sweep needs lo == hi");
    if (steps > 1 && lo == hi)
        throw Error(ErrorCode::invalid_argument, "a degenerate range [p,p] takes exactly one step");
}

double PrecisionRange::at(std::size_t i) const {
    if (steps == 1) return lo;
    if (i + 1 == steps) return hi;
    return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
}

SavingsReport savings_at_precision(const StageRates& base, double p_aqa_clean, const UnitCosts& costs,
                                   double n_mqa) {
    const auto checked = StageRates::check(base.p_gen_clean(), base.y_aqa(), p_aqa_clean);
    return savings(n_mqa, checked.rates, costs, VolumeMode::expectation);
}

std::vector<SweepRow> sweep_precision(const StageRates& base, const UnitCosts& costs, double n_mqa,
                                      const PrecisionRange& range) {
    range.validate();
    std::vector<SweepRow> rows;
    rows.reserve(range.steps);
    for (std::size_t i = 0; i < range.steps; ++i) {
        const double p = range.at(i);
        const auto checked = StageRates::check(base.p_gen_clean(), base.y_aqa(), p);
        SweepRow row{p, std::nullopt, std::nullopt, checked.feasible()};
        if (row.feasible) {
            const SavingsReport s = savings(n_mqa, checked.rates, costs, VolumeMode::expectation);
            row.delta_abs = s.delta_abs.value();
            row.delta_rel = s.delta_rel;
        }
        rows.push_back(row);
    }
    return rows;
}

double break_even_precision(const StageRates& base, const UnitCosts& costs, double n_mqa) {
    costs.validate();
    const double pg = base.p_gen_clean();
    const double y = base.y_aqa();
    if (!(pg > 0.0)) throw Error(ErrorCode::zero_yield, "p_gen_clean is zero");
    if (!(y > 0.0)) throw Error(ErrorCode::zero_yield, "y_aqa is zero");
    const double cg = costs.gen.value(), ca = costs.aqa.value(), cm = costs.mqa.value();

    // delta/n = (cg + cm)/pg - ((cg + ca)/y + cm)/P, zero at P = pg * loss / (cg + cm).
    const double loss = (cg + ca) / y + cm;
    if (cg + cm <= 0.0 || loss <= 0.0)
        throw Error(ErrorCode::no_break_even, "savings never change sign: baseline or AutoQA costs vanish");
    const double root = pg * (loss / (cg + cm));
    if (!(root > 0.0 && root <= 1.0))
        throw Error(ErrorCode::no_break_even,
                    "savings stay negative for every P_aqa(clean) in (0,1]; break-even would need P = " +
                        csv::format_double(root));

    const SavingsReport check = savings_at_precision(base, root, costs, n_mqa);
    if (std::abs(check.delta_abs.value()) >= 1e-9 * check.baseline_total.value())
        throw Error(ErrorCode::no_break_even, "break-even root failed verification against savings()");
    return root;
}

}  // namespace qacost
