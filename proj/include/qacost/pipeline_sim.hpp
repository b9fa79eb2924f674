#pragma once

// Monte Carlo simulator of the GenAI -> AutoQA -> ManualQA pipeline.
//
// Each generated image is clean with probability p_gen_clean; AutoQA passes it
// with a probability conditioned on that ground truth; ManualQA is an
// infallible oracle that accepts exactly the clean survivors.

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "qacost/cost_model.hpp"
#include "qacost/simd/outcome_kernel.hpp"

namespace qacost {

struct ClassifierConditional {
    double pass_given_clean = 0;
    double pass_given_defect = 0;

    /// Throws Error(invalid_argument) unless both lie in [0,1].
    void validate() const;
};

/// Base-rate inversion of (y_aqa, P_aqa) into per-class pass probabilities.
/// Requires 0 < p_gen_clean < 1; throws Error(infeasible) naming the failed bound.
ClassifierConditional to_conditional(const StageRates& rates);

/// Exact inverse of to_conditional. Throws Error(degenerate_yield) when the
/// implied y_aqa is zero, since P_aqa is then undefined.
StageRates from_conditional(const ClassifierConditional& cond, double p_gen_clean);

struct FixedGenerated {
    std::uint64_t n_gen = 0;
};
struct TargetAccepted {
    std::uint64_t n_mqa = 0;
};
using StopRule = std::variant<FixedGenerated, TargetAccepted>;

struct SimConfig {
    double p_gen_clean = 0;
    ClassifierConditional classifier;
    UnitCosts costs;
    StopRule stop_rule = FixedGenerated{};
    std::uint64_t seed = 0;
    std::uint32_t trials = 1;

    /// Only consulted by TargetAccepted.
    std::uint64_t generation_cap = 100'000'000;
    std::uint64_t batch_size = 4096;

    void validate() const;
};

struct SimOptions {
    /// 0 = one worker per hardware thread (capped by the trial count).
    unsigned threads = 0;
    std::optional<simd::Isa> isa;  // defaults to simd::active_isa()
};

struct TrialResult {
    std::uint64_t n_gen = 0;
    std::uint64_t n_aqa = 0;
    std::uint64_t n_mqa = 0;
    simd::OutcomeCounts counts;
    double y_aqa = 0;                    // n_aqa / n_gen
    std::optional<double> p_aqa_clean;   // tp / n_aqa; absent when nothing passed
    CostBreakdown cost;
};

struct Summary {
    double mean = 0;
    double stddev = 0;  // sample standard deviation (n-1); 0 for a single trial
    double min = 0;
    double max = 0;

    static Summary of(const std::vector<double>& values);
};

struct SimReport {
    std::uint64_t seed = 0;
    std::vector<TrialResult> trials;

    Summary n_gen, n_aqa, n_mqa;
    Summary y_aqa;
    Summary p_aqa_clean;  // over trials where it is defined
    Summary gen_cost, aqa_cost, mqa_cost, total_cost;
};

/// Runs all trials; results are independent of thread count and kernel variant.
SimReport simulate(const SimConfig& config, const SimOptions& options = {});

/// Runs one trial on the calling thread.
TrialResult simulate_trial(const SimConfig& config, std::uint32_t trial, simd::Isa isa);

/// Per-image (truth, AutoQA decision) of the first `n` images of a trial's
/// stream; the same draws simulate() counts.
std::vector<simd::ImageOutcome> trial_outcomes(const SimConfig& config, std::uint32_t trial,
                                               std::uint64_t n);

}  // namespace qacost
