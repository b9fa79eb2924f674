#include "qacost/cost_model.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "qacost/error.hpp"

namespace qacost {

std::string format_currency(Currency c) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", c.value());
    return buf;
}

std::string format_probability(double p) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", p);
    return buf;
}

namespace {

bool is_probability(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

std::string describe(double pg, double y, double p) {
    std::ostringstream os;
    os.precision(17);
    os << "(p_gen_clean=" << pg << ", y_aqa=" << y << ", p_aqa_clean=" << p << ")";
    return os.str();
}

std::optional<std::string> infeasibility_of(double pg, double y, double p) {
    if (y * p > pg + kFeasibilitySlack) {
        return "y_aqa*p_aqa_clean > p_gen_clean: AutoQA would pass more clean images than the "
               "generator produces " + describe(pg, y, p);
    }
    if (y * (1.0 - p) > (1.0 - pg) + kFeasibilitySlack) {
        return "y_aqa*(1-p_aqa_clean) > 1-p_gen_clean: AutoQA would pass more defective images "
               "than the generator produces " + describe(pg, y, p);
    }
    return std::nullopt;
}

// Snaps values within rounding noise of an integer before taking the ceiling,
// so that e.g. 100/0.4 yields 250 rather than 251.
double ceil_count(double x) {
    const double nearest = std::round(x);
    if (std::abs(x - nearest) <= 1e-9 * std::max(1.0, std::abs(x))) return nearest;
    return std::ceil(x);
}

void require_target(double n_mqa_target) {
    if (!std::isfinite(n_mqa_target) || n_mqa_target <= 0.0)
        throw Error(ErrorCode::invalid_argument, "n_mqa target must be a positive finite count");
}

}  // namespace

StageRates::StageRates(double p_gen_clean, double y_aqa, double p_aqa_clean)
    : StageRates(Unchecked{}, p_gen_clean, y_aqa, p_aqa_clean) {
    if (!is_probability(p_gen_clean) || !is_probability(y_aqa) || !is_probability(p_aqa_clean)) {
        throw Error(ErrorCode::invalid_argument,
                    "stage rates must lie in [0,1] " + describe(p_gen_clean, y_aqa, p_aqa_clean));
    }
    if (auto why = infeasibility_of(p_gen_clean, y_aqa, p_aqa_clean))
        throw Error(ErrorCode::infeasible, *why);
}

StageRates::Checked StageRates::check(double p_gen_clean, double y_aqa, double p_aqa_clean) {
    Checked out{StageRates(Unchecked{}, p_gen_clean, y_aqa, p_aqa_clean), std::nullopt};
    if (!is_probability(p_gen_clean) || !is_probability(y_aqa) || !is_probability(p_aqa_clean)) {
        out.infeasibility =
            "stage rates must lie in [0,1] " + describe(p_gen_clean, y_aqa, p_aqa_clean);
    } else {
        out.infeasibility = infeasibility_of(p_gen_clean, y_aqa, p_aqa_clean);
    }
    return out;
}

void UnitCosts::validate() const {
    for (Currency c : {gen, aqa, mqa}) {
        if (!std::isfinite(c.value()) || c.value() < 0.0)
            throw Error(ErrorCode::invalid_argument, "unit costs must be finite and non-negative");
    }
}

std::string_view to_string(VolumeMode mode) {
    return mode == VolumeMode::ceiling ? "ceiling" : "expectation";
}

VolumeMode parse_volume_mode(std::string_view text) {
    if (text == "expectation") return VolumeMode::expectation;
    if (text == "ceiling") return VolumeMode::ceiling;
    throw Error(ErrorCode::parse_error,
                "unknown volume mode '" + std::string(text) + "' (expected expectation|ceiling)");
}

double overall_yield(const StageRates& rates) { return rates.y_aqa() * rates.p_aqa_clean(); }

VolumePlan volumes_from_target(double n_mqa_target, const StageRates& rates, VolumeMode mode) {
    require_target(n_mqa_target);
    const double y = overall_yield(rates);
    if (y <= 0.0)
        throw Error(ErrorCode::zero_yield,
                    "overall yield y_aqa*p_aqa_clean is zero; no number of generated images reaches "
                    "the target");
    VolumePlan plan{n_mqa_target / y, n_mqa_target / rates.p_aqa_clean(), n_mqa_target, mode};
    if (mode == VolumeMode::ceiling) {
        plan.n_gen = ceil_count(plan.n_gen);
        plan.n_aqa = ceil_count(plan.n_aqa);
        plan.n_mqa = ceil_count(plan.n_mqa);
    }
    return plan;
}

VolumePlan volumes_from_generated(double n_gen, const StageRates& rates) {
    if (!std::isfinite(n_gen) || n_gen < 0.0)
        throw Error(ErrorCode::invalid_argument, "n_gen must be a non-negative finite count");
    const double n_aqa = n_gen * rates.y_aqa();
    return {n_gen, n_aqa, n_aqa * rates.p_aqa_clean(), VolumeMode::expectation};
}

CostBreakdown pipeline_cost(double n_mqa_target, const StageRates& rates, const UnitCosts& costs,
                            VolumeMode mode) {
    costs.validate();
    const VolumePlan plan = volumes_from_target(n_mqa_target, rates, mode);
    return CostBreakdown::from_components(costs.gen * plan.n_gen, costs.aqa * plan.n_gen,
                                          costs.mqa * plan.n_aqa);
}

CostBreakdown baseline_cost(double n_mqa_target, double p_gen_clean, const UnitCosts& costs,
                            VolumeMode mode) {
    require_target(n_mqa_target);
    costs.validate();
    if (!is_probability(p_gen_clean))
        throw Error(ErrorCode::invalid_argument, "p_gen_clean must lie in [0,1]");
    if (p_gen_clean <= 0.0)
        throw Error(ErrorCode::zero_yield, "p_gen_clean is zero; the generator never yields a clean image");
    double n_gen = n_mqa_target / p_gen_clean;
    if (mode == VolumeMode::ceiling) n_gen = ceil_count(n_gen);
    return CostBreakdown::from_components(costs.gen * n_gen, Currency{0.0}, costs.mqa * n_gen);
}

SavingsReport savings(double n_mqa_target, const StageRates& rates, const UnitCosts& costs,
                      VolumeMode mode) {
    const CostBreakdown base = baseline_cost(n_mqa_target, rates.p_gen_clean(), costs, mode);
    const CostBreakdown with_aqa = pipeline_cost(n_mqa_target, rates, costs, mode);
    SavingsReport r;
    r.baseline_total = base.total;
    r.autoqa_total = with_aqa.total;
    r.delta_abs = base.total - with_aqa.total;
    r.delta_rel = base.total.value() > 0.0 ? r.delta_abs / base.total : 0.0;
    return r;
}

}  // namespace qacost
