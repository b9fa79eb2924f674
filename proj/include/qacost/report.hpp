#pragma once

// File outputs: CSV tables, standalone SVG charts and the JSON run report.

#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qacost/analysis.hpp"
#include "qacost/config.hpp"
#include "qacost/cost_model.hpp"
#include "qacost/metrics.hpp"
#include "qacost/pipeline_sim.hpp"

namespace qacost::report {

inline constexpr const char* kVolumesHeader = "stage,count";
inline constexpr const char* kCostsHeader = "config,gen,aqa,mqa,total";
inline constexpr const char* kSweepHeader = "p_aqa_clean,delta_abs,delta_rel,feasible";

struct NamedCost {
    std::string config;
    CostBreakdown cost;
};

std::string volumes_csv(const VolumePlan& plan);
std::string costs_csv(const std::vector<NamedCost>& rows);
/// Infeasible rows leave delta_abs and delta_rel empty.
std::string sweep_csv(const std::vector<SweepRow>& rows);
std::vector<SweepRow> parse_sweep_csv(std::string_view text, std::string_view source = "<memory>");

inline constexpr const char* kConsensusHeader = "image_id,defect_id,agreed_severity,label";
inline constexpr const char* kAgreementHeader = "defect_id,agreement_rate";

/// No-consensus pairs leave agreed_severity empty and carry label "discarded".
std::string consensus_csv(const std::vector<ConsensusLabel>& labels);
/// One row per defect id present in `records`, sorted by id.
std::string agreement_csv(const std::vector<AnnotationRecord>& records);

std::string volumes_svg(const VolumePlan& plan, std::string_view title);
/// Stacked bars (gen, aqa, mqa) per configuration.
std::string costs_svg(const std::vector<NamedCost>& rows, std::string_view title);
/// delta_rel against P_aqa(clean); infeasible rows break the line.
std::string sweep_svg(const std::vector<SweepRow>& rows, std::optional<double> break_even, std::string_view title);

/// ManualQA spend as a fraction of the total; nullopt when the total is zero.
std::optional<double> mqa_share(const CostBreakdown& cost);

using Json = nlohmann::ordered_json;

/// Skeleton shared by every run report: tool version, command, seed and the
/// config echo. Deliberately free of timestamps, thread counts and CPU details
/// so identical inputs give byte-identical files.
Json run_report(std::string_view command, const RunConfig& config);

Json to_json(const StageRates& rates);
Json to_json(const VolumePlan& plan);
Json to_json(const CostBreakdown& cost);
Json to_json(const SavingsReport& s);
Json to_json(const SimReport& sim);

/// Serializes with two-space indentation and a trailing newline.
std::string dump(const Json& j);

/// Writes `content` to dir/name and returns the path written.
std::filesystem::path write_output(const std::filesystem::path& dir, std::string_view name, std::string_view content);

}  // namespace qacost::report
