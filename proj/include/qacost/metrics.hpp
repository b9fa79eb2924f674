#pragma once

// Rater annotations -> consensus labels -> binary labels -> confusion stats.
//
// Consensus is complete agreement among whoever rated an (image, defect)
// pair. Agreed severity 1 is clean, agreed 3 is a defect; agreed 2 and any
// disagreement are discarded.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qacost/cost_model.hpp"

namespace qacost {

struct AnnotationRecord {
    std::string image_id;
    std::string annotator_id;
    std::string defect_id;
    int severity = 1;  // 1 no defect, 2 some defect, 3 significant defect
};

inline constexpr const char* kAnnotationHeader = "image_id,annotator_id,defect_id,severity";
inline constexpr const char* kEvalHeader = "image_id,truth,predicted";

/// Throws Error(parse_error) on bad rows, Error(invalid_argument) on a repeated
/// (image, annotator, defect) triple, Error(io_error) when unreadable.
std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path);
std::vector<AnnotationRecord> parse_annotations(std::string_view text, std::string_view source = "<memory>");

struct ConsensusLabel {
    std::string image_id;
    std::string defect_id;
    std::optional<int> agreed_severity;  // empty = no consensus

    bool agreed() const { return agreed_severity.has_value(); }
    bool operator==(const ConsensusLabel&) const = default;
};

/// One label per (image, defect) pair, sorted by image then defect id.
std::vector<ConsensusLabel> consensus(const std::vector<AnnotationRecord>& records);

enum class BinaryLabel { clean, defect, discarded };
std::string_view to_string(BinaryLabel label);

BinaryLabel binarize(const ConsensusLabel& label);

/// Fraction of images rated for `defect_id` whose raters all agree.
/// Throws Error(empty_input) when no image was rated for it.
double agreement_rate(const std::vector<AnnotationRecord>& records, const std::string& defect_id);

struct ImageLabel {
    std::string image_id;
    BinaryLabel label;
};

/// Image-level label over the in-scope defects: any defect makes the image a
/// defect; otherwise any discarded or missing in-scope label discards it.
std::vector<ImageLabel> image_labels(const std::vector<ConsensusLabel>& labels,
                                     const std::vector<std::string>& in_scope_defects);

enum class BinaryClass { clean, defect };
std::string_view to_string(BinaryClass c);

struct EvalRecord {
    std::string image_id;
    BinaryClass truth;
    BinaryClass predicted;
};

std::vector<EvalRecord> load_evals(const std::filesystem::path& path);
std::vector<EvalRecord> parse_evals(std::string_view text, std::string_view source = "<memory>");

/// Confusion counts with clean as the positive class. Ratios with an empty
/// denominator are absent.
struct ConfusionStats {
    std::uint64_t tp = 0;  // clean predicted clean
    std::uint64_t fp = 0;  // defect predicted clean
    std::uint64_t tn = 0;  // defect predicted defect
    std::uint64_t fn = 0;  // clean predicted defect

    std::uint64_t total() const { return tp + fp + tn + fn; }

    double yield_clean() const;   // fraction predicted clean
    double yield_defect() const;  // fraction predicted defect
    std::optional<double> precision_clean() const;
    std::optional<double> precision_defect() const;
    std::optional<double> recall_clean() const;
    std::optional<double> recall_defect() const;
};

/// Throws Error(empty_input) for an empty set.
ConfusionStats confusion(const std::vector<EvalRecord>& evals);

/// y_aqa = (tp+fp)/n, p_aqa_clean = tp/(tp+fp). p_gen_clean comes from the
/// data ((tp+fn)/n) unless supplied. Throws Error(zero_pass) when nothing was
/// predicted clean.
StageRates stage_rates_from_confusion(const ConfusionStats& stats,
                                      std::optional<double> supplied_p_gen_clean = std::nullopt);

}  // namespace qacost
