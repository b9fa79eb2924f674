#include "qacost/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "qacost/error.hpp"

namespace qacost {

namespace {

bool is_probability(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

std::string num(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

void require_probability(double p, const std::string& what) {
    if (!is_probability(p)) throw Error(ErrorCode::invalid_argument, what + " must lie in [0,1]");
}

// Per-detector pass probability given presence / absence of its defect.
struct PassProbabilities {
    double if_present;
    double if_absent;
};

struct Binding {
    std::size_t mix_index;
    PassProbabilities pass;
};

std::vector<Binding> bind(const CascadeSpec& spec, const DefectMix& mix) {
    std::vector<Binding> out;
    const auto& ids = mix.defect_ids();
    for (const DetectorProfile& d : spec.detectors()) {
        const auto it = std::find(ids.begin(), ids.end(), d.defect_id);
        if (it == ids.end())
            throw Error(ErrorCode::invalid_argument,
                        "detector '" + d.defect_id + "' has no entry in the defect mix");
        const DetectorConditionals c = detector_conditionals(d);
        out.push_back({static_cast<std::size_t>(it - ids.begin()),
                       {1.0 - c.flag_given_present, 1.0 - c.flag_given_absent}});
    }
    return out;
}

StageRates finish(double clean, double clean_and_pass, double pass, std::optional<double> supplied) {
    if (supplied) {
        if (std::abs(*supplied - clean) > kMixCleanTolerance)
            throw Error(ErrorCode::inconsistent_mix,
                        "supplied p_gen_clean " + num(*supplied) +
                            " disagrees with the defect mix's all-absent probability " + num(clean));
    }
    if (pass <= 0.0)
        throw Error(ErrorCode::degenerate_yield, "cascade passes no image; p_aqa_clean is undefined");
    return StageRates(clean, std::min(pass, 1.0), std::min(clean_and_pass / pass, 1.0));
}

}  // namespace

DetectorProfile DetectorProfile::from_conditionals(std::string defect_id, double prevalence,
                                                   double flag_given_present, double flag_given_absent) {
    const double flagged_present = prevalence * flag_given_present;
    const double flagged = flagged_present + (1.0 - prevalence) * flag_given_absent;
    return {std::move(defect_id), 1.0 - flagged, flagged > 0.0 ? flagged_present / flagged : 0.0,
            prevalence};
}

StageRates DetectorProfile::own_rates() const {
    const DetectorConditionals c = detector_conditionals(*this);
    const double clean = 1.0 - prevalence;
    const double clean_pass = clean * (1.0 - c.flag_given_absent);
    if (pass_yield <= 0.0)
        throw Error(ErrorCode::degenerate_yield, "detector '" + defect_id + "' passes no image");
    return StageRates(clean, pass_yield, std::min(clean_pass / pass_yield, 1.0));
}

DetectorConditionals detector_conditionals(const DetectorProfile& d) {
    require_probability(d.pass_yield, "pass_yield of '" + d.defect_id + "'");
    require_probability(d.flag_precision, "flag_precision of '" + d.defect_id + "'");
    require_probability(d.prevalence, "prevalence of '" + d.defect_id + "'");
    if (!(d.prevalence > 0.0 && d.prevalence < 1.0))
        throw Error(ErrorCode::invalid_argument,
                    "prevalence of '" + d.defect_id + "' must lie strictly inside (0,1)");
    const double flagged = 1.0 - d.pass_yield;
    DetectorConditionals c{flagged * d.flag_precision / d.prevalence,
                           flagged * (1.0 - d.flag_precision) / (1.0 - d.prevalence)};
    if (c.flag_given_present > 1.0 + kFeasibilitySlack)
        throw Error(ErrorCode::infeasible,
                    "detector '" + d.defect_id +
                        "': (1-pass_yield)*flag_precision/prevalence = " + num(c.flag_given_present) +
                        " exceeds 1");
    if (c.flag_given_absent > 1.0 + kFeasibilitySlack)
        throw Error(ErrorCode::infeasible,
                    "detector '" + d.defect_id +
                        "': (1-pass_yield)*(1-flag_precision)/(1-prevalence) = " +
                        num(c.flag_given_absent) + " exceeds 1");
    c.flag_given_present = std::min(c.flag_given_present, 1.0);
    c.flag_given_absent = std::min(c.flag_given_absent, 1.0);
    return c;
}

Decision cascade_decide(const std::vector<Decision>& decisions) {
    if (decisions.empty()) throw Error(ErrorCode::invalid_argument, "cascade_decide needs at least one decision");
    return std::all_of(decisions.begin(), decisions.end(), [](Decision d) { return d == Decision::pass; })
               ? Decision::pass
               : Decision::flag;
}

CascadeSpec::CascadeSpec(std::vector<DetectorProfile> detectors) : detectors_(std::move(detectors)) {
    if (detectors_.empty()) throw Error(ErrorCode::invalid_argument, "a cascade needs at least one detector");
    std::set<std::string> seen;
    for (const auto& d : detectors_) {
        if (!seen.insert(d.defect_id).second)
            throw Error(ErrorCode::invalid_argument, "duplicate detector for defect '" + d.defect_id + "'");
    }
}

DefectMix DefectMix::marginals(std::vector<std::string> defect_ids, std::vector<double> probabilities) {
    if (defect_ids.size() != probabilities.size())
        throw Error(ErrorCode::invalid_argument, "defect mix: one marginal per defect id required");
    if (std::set<std::string>(defect_ids.begin(), defect_ids.end()).size() != defect_ids.size())
        throw Error(ErrorCode::invalid_argument, "defect mix: defect ids must be unique");
    for (double p : probabilities) require_probability(p, "defect marginal");
    return DefectMix(std::move(defect_ids), std::move(probabilities), false);
}

DefectMix DefectMix::joint(std::vector<std::string> defect_ids, std::vector<double> table) {
    if (defect_ids.size() > kMaxEnumeratedDefects)
        throw Error(ErrorCode::too_many_defects,
                    "joint defect tables support at most " + std::to_string(kMaxEnumeratedDefects) +
                        " defect types");
    if (std::set<std::string>(defect_ids.begin(), defect_ids.end()).size() != defect_ids.size())
        throw Error(ErrorCode::invalid_argument, "defect mix: defect ids must be unique");
    if (table.size() != (std::size_t{1} << defect_ids.size()))
        throw Error(ErrorCode::invalid_argument, "joint table must have 2^k entries");
    double sum = 0;
    for (double p : table) {
        require_probability(p, "joint table entry");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw Error(ErrorCode::invalid_argument, "joint table must sum to 1 (got " + num(sum) + ")");
    return DefectMix(std::move(defect_ids), std::move(table), true);
}

DefectMix DefectMix::to_joint() const {
    if (joint_) return *this;
    const std::size_t k = ids_.size();
    if (k > kMaxEnumeratedDefects)
        throw Error(ErrorCode::too_many_defects,
                    "cannot enumerate more than " + std::to_string(kMaxEnumeratedDefects) + " defect types");
    std::vector<double> table(std::size_t{1} << k);
    for (std::size_t v = 0; v < table.size(); ++v) {
        double p = 1.0;
        for (std::size_t i = 0; i < k; ++i) p *= ((v >> i) & 1u) ? values_[i] : 1.0 - values_[i];
        table[v] = p;
    }
    return DefectMix(ids_, std::move(table), true);
}

double DefectMix::clean_probability() const {
    if (joint_) return values_[0];
    double p = 1.0;
    for (double q : values_) p *= 1.0 - q;
    return p;
}

StageRates effective_rates_independent(const CascadeSpec& spec, const DefectMix& mix,
                                       std::optional<double> p_gen_clean) {
    if (mix.is_joint())
        throw Error(ErrorCode::invalid_argument,
                    "effective_rates_independent needs marginals; use effective_rates_enumerate for joint tables");
    const std::vector<Binding> bound = bind(spec, mix);
    const auto& q = mix.values();

    // Factor per mix entry: P(pass all of its detectors) and the same
    // restricted to the defect being absent. Entries without a detector pass.
    double pass = 1.0;
    double clean_and_pass = 1.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        const auto it = std::find_if(bound.begin(), bound.end(), [&](const Binding& b) { return b.mix_index == i; });
        const PassProbabilities pp = it != bound.end() ? it->pass : PassProbabilities{1.0, 1.0};
        pass *= q[i] * pp.if_present + (1.0 - q[i]) * pp.if_absent;
        clean_and_pass *= (1.0 - q[i]) * pp.if_absent;
    }
    return finish(mix.clean_probability(), clean_and_pass, pass, p_gen_clean);
}

StageRates effective_rates_enumerate(const CascadeSpec& spec, const DefectMix& mix,
                                     std::optional<double> p_gen_clean) {
    if (mix.defect_ids().size() > kMaxEnumeratedDefects)
        throw Error(ErrorCode::too_many_defects,
                    "enumeration supports at most " + std::to_string(kMaxEnumeratedDefects) + " defect types");
    const DefectMix joint = mix.to_joint();
    const std::vector<Binding> bound = bind(spec, joint);
    const auto& table = joint.values();

    double pass = 0.0;
    for (std::size_t v = 0; v < table.size(); ++v) {
        double p_all = 1.0;
        for (const Binding& b : bound) p_all *= ((v >> b.mix_index) & 1u) ? b.pass.if_present : b.pass.if_absent;
        pass += table[v] * p_all;
    }
    double clean_pass_all = 1.0;
    for (const Binding& b : bound) clean_pass_all *= b.pass.if_absent;
    return finish(table[0], table[0] * clean_pass_all, pass, p_gen_clean);
}

}  // namespace qacost
