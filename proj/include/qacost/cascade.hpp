#pragma once

// Composition of per-defect binary detectors into one AutoQA stage.
//
// Rule: an image passes the cascade iff every detector passes it.
// Modeling assumption for the closed form: defects occur independently and
// each detector's errors depend only on the presence of its own defect. The
// joint-table enumeration exists to quantify what that assumption costs.
//
// Detector table semantics: `pass_yield` is the fraction of images a detector
// labels clean and `prevalence` is the defect base rate in its evaluation set
// (one minus the pass yield a perfect detector would have).

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qacost/cost_model.hpp"

namespace qacost {

struct DetectorProfile {
    std::string defect_id;
    double pass_yield = 0;      // fraction of images passed (labeled clean)
    double flag_precision = 0;  // precision among flagged images
    double prevalence = 0;      // defect base rate

    /// Builds the profile a detector with the given conditionals would show.
    static DetectorProfile from_conditionals(std::string defect_id, double prevalence,
                                             double flag_given_present, double flag_given_absent);

    /// The detector viewed as a one-stage AutoQA for its own defect.
    StageRates own_rates() const;
};

struct DetectorConditionals {
    double flag_given_present = 0;
    double flag_given_absent = 0;
};

/// Base-rate inversion. Requires 0 < prevalence < 1; throws Error(infeasible)
/// naming the violated constraint.
DetectorConditionals detector_conditionals(const DetectorProfile& d);

enum class Decision { pass, flag };

/// AND rule: pass iff every detector passed. Throws on an empty list.
Decision cascade_decide(const std::vector<Decision>& decisions);

class CascadeSpec {
public:
    /// Throws Error(invalid_argument) when empty or when defect ids repeat.
    explicit CascadeSpec(std::vector<DetectorProfile> detectors);

    const std::vector<DetectorProfile>& detectors() const { return detectors_; }

private:
    std::vector<DetectorProfile> detectors_;
};

inline constexpr std::size_t kMaxEnumeratedDefects = 8;

/// Presence distribution over a list of defect types. Presence vectors are
/// bitmasks: bit k set means defect_ids()[k] is present.
class DefectMix {
public:
    static DefectMix marginals(std::vector<std::string> defect_ids, std::vector<double> probabilities);
    /// `table` has 2^k entries summing to 1 (within 1e-9); k <= kMaxEnumeratedDefects.
    static DefectMix joint(std::vector<std::string> defect_ids, std::vector<double> table);
    /// The joint table implied by independent marginals.
    DefectMix to_joint() const;

    bool is_joint() const { return joint_; }
    const std::vector<std::string>& defect_ids() const { return ids_; }
    /// Marginal presence probabilities (marginal form) or the 2^k table (joint form).
    const std::vector<double>& values() const { return values_; }

    /// Probability that no listed defect is present.
    double clean_probability() const;

private:
    DefectMix(std::vector<std::string> ids, std::vector<double> values, bool joint)
        : ids_(std::move(ids)), values_(std::move(values)), joint_(joint) {}

    std::vector<std::string> ids_;
    std::vector<double> values_;
    bool joint_ = false;
};

/// Tolerance for matching a supplied p_gen_clean against the mix.
inline constexpr double kMixCleanTolerance = 1e-9;

/// Closed-form product expansion; requires the marginal form. When
/// `p_gen_clean` is given it must match the mix's clean probability within
/// kMixCleanTolerance or Error(inconsistent_mix) is thrown.
StageRates effective_rates_independent(const CascadeSpec& spec, const DefectMix& mix,
                                       std::optional<double> p_gen_clean = std::nullopt);

/// Exhaustive oracle over all presence vectors. Accepts either form (marginals
/// are expanded); throws Error(too_many_defects) above kMaxEnumeratedDefects.
StageRates effective_rates_enumerate(const CascadeSpec& spec, const DefectMix& mix,
                                     std::optional<double> p_gen_clean = std::nullopt);

}  // namespace qacost
