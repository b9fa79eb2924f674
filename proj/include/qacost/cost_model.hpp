#pragma once

// Closed-form volume, cost and savings model for a GenAI -> AutoQA -> ManualQA
// pipeline. Clean is the positive class throughout.
//
// Notation used in comments:
//   P_gen  generator clean rate (also the ManualQA-only yield)
//   y_aqa  fraction of generated images that pass AutoQA
//   P_aqa  precision of AutoQA for the clean class (= ManualQA yield)
//   y      overall yield y_aqa * P_aqa
//
// Some formulations write the AutoQA yield as `r` in the generation term of
// the savings expression; it is the same quantity as y_aqa here.

#include <compare>
#include <optional>
#include <string>

namespace qacost {

/// Currency amount. Full binary precision internally; rounded only when printed.
class Currency {
public:
    constexpr Currency() = default;
    constexpr explicit Currency(double amount) : amount_(amount) {}

    constexpr double value() const { return amount_; }

    constexpr Currency operator+(Currency o) const { return Currency{amount_ + o.amount_}; }
    constexpr Currency operator-(Currency o) const { return Currency{amount_ - o.amount_}; }
    constexpr Currency operator-() const { return Currency{-amount_}; }
    constexpr Currency& operator+=(Currency o) { amount_ += o.amount_; return *this; }
    constexpr Currency operator*(double k) const { return Currency{amount_ * k}; }
    friend constexpr Currency operator*(double k, Currency c) { return c * k; }
    constexpr double operator/(Currency o) const { return amount_ / o.amount_; }

    constexpr auto operator<=>(const Currency&) const = default;

private:
    double amount_ = 0.0;
};

/// Two-decimal rendering used at every report boundary.
std::string format_currency(Currency c);
/// Four-decimal rendering for probabilities.
std::string format_probability(double p);

/// Generator and AutoQA quality. Valid instances satisfy the probability model:
/// an AutoQA filter cannot pass more clean (or defective) images than exist.
class StageRates {
public:
    /// Throws Error(infeasible) naming the violated constraint, or
    /// Error(invalid_argument) when a field is outside [0,1].
    StageRates(double p_gen_clean, double y_aqa, double p_aqa_clean);

    /// Diagnostic-returning variant for sweeps: the rates are always carried,
    /// `infeasibility` explains why they would have been rejected.
    struct Checked;
    static Checked check(double p_gen_clean, double y_aqa, double p_aqa_clean);

    double p_gen_clean() const { return p_gen_clean_; }
    double y_aqa() const { return y_aqa_; }
    double p_aqa_clean() const { return p_aqa_clean_; }

    bool operator==(const StageRates&) const = default;

private:
    struct Unchecked {};
    StageRates(Unchecked, double p_gen_clean, double y_aqa, double p_aqa_clean)
        : p_gen_clean_(p_gen_clean), y_aqa_(y_aqa), p_aqa_clean_(p_aqa_clean) {}

    double p_gen_clean_;
    double y_aqa_;
    double p_aqa_clean_;
};

struct StageRates::Checked {
    StageRates rates;
    std::optional<std::string> infeasibility;

    bool feasible() const { return !infeasibility.has_value(); }
};

/// Slack granted to the joint feasibility constraints to absorb rounding in
/// rates derived by inversion (e.g. conditional -> rates round trips).
inline constexpr double kFeasibilitySlack = 1e-12;

struct UnitCosts {
    Currency gen;
    Currency aqa;
    Currency mqa;

    /// Throws Error(invalid_argument) for negative or non-finite costs.
    void validate() const;
};

enum class VolumeMode { expectation, ceiling };

std::string_view to_string(VolumeMode mode);
VolumeMode parse_volume_mode(std::string_view text);

struct VolumePlan {
    double n_gen = 0;
    double n_aqa = 0;
    double n_mqa = 0;
    VolumeMode mode = VolumeMode::expectation;
};

struct CostBreakdown {
    Currency gen;
    Currency aqa;
    Currency mqa;
    Currency total;

    static CostBreakdown from_components(Currency gen, Currency aqa, Currency mqa) {
        return {gen, aqa, mqa, gen + aqa + mqa};
    }
};

struct SavingsReport {
    Currency baseline_total;
    Currency autoqa_total;
    Currency delta_abs;
    double delta_rel = 0;  // delta_abs / baseline_total
};

/// y = y_aqa * P_aqa: fraction of generated images that end up accepted.
double overall_yield(const StageRates& rates);

/// Back-solves the upstream volumes needed to accept `n_mqa_target` images.
/// Ceiling mode rounds each stage up independently after the real-valued solve.
VolumePlan volumes_from_target(double n_mqa_target, const StageRates& rates, VolumeMode mode);

/// Forward direction: expected downstream volumes for `n_gen` generated images.
VolumePlan volumes_from_generated(double n_gen, const StageRates& rates);

/// AutoQA scores every generated image; ManualQA reviews only AutoQA survivors.
CostBreakdown pipeline_cost(double n_mqa_target, const StageRates& rates, const UnitCosts& costs,
                            VolumeMode mode);

/// ManualQA-only pipeline reaching the same accepted volume.
CostBreakdown baseline_cost(double n_mqa_target, double p_gen_clean, const UnitCosts& costs,
                            VolumeMode mode);

SavingsReport savings(double n_mqa_target, const StageRates& rates, const UnitCosts& costs,
                      VolumeMode mode);

}  // namespace qacost
