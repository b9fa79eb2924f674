#include "qacost/metrics.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

#include "qacost/csv.hpp"
#include "qacost/error.hpp"

namespace qacost {

namespace {

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

BinaryClass parse_class(const std::string& field, const std::string& where) {
    if (field == "clean") return BinaryClass::clean;
    if (field == "defect") return BinaryClass::defect;
    throw Error(ErrorCode::parse_error, where + ": expected clean|defect, got '" + field + "'");
}

using PairKey = std::pair<std::string, std::string>;  // (image, defect)

std::map<PairKey, std::vector<int>> group_severities(const std::vector<AnnotationRecord>& records) {
    std::map<PairKey, std::vector<int>> groups;
    for (const auto& r : records) groups[{r.image_id, r.defect_id}].push_back(r.severity);
    return groups;
}

bool all_equal(const std::vector<int>& v) {
    return std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) == v.end();
}

}  // namespace

std::vector<AnnotationRecord> parse_annotations(std::string_view text, std::string_view source) {
    const csv::Table t = csv::parse(text, kAnnotationHeader, source);
    std::vector<AnnotationRecord> out;
    std::set<std::tuple<std::string, std::string, std::string>> seen;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        const std::string where = std::string(source) + ":" + std::to_string(t.line_numbers[i]);
        const long long severity = csv::parse_integer(row[3], where + " severity");
        if (severity < 1 || severity > 3)
            throw Error(ErrorCode::parse_error, where + ": severity must be 1, 2 or 3");
        if (row[0].empty() || row[1].empty() || row[2].empty())
            throw Error(ErrorCode::parse_error, where + ": empty id field");
        if (!seen.insert({row[0], row[1], row[2]}).second)
            throw Error(ErrorCode::invalid_argument,
                        where + ": duplicate rating of image '" + row[0] + "' by '" + row[1] + "' for '" + row[2] + "'");
        out.push_back({row[0], row[1], row[2], static_cast<int>(severity)});
    }
    return out;
}

std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path) {
    return parse_annotations(csv::read_file(path), path.string());
}

std::vector<ConsensusLabel> consensus(const std::vector<AnnotationRecord>& records) {
    std::vector<ConsensusLabel> out;
    for (const auto& [key, severities] : group_severities(records)) {
        ConsensusLabel label{key.first, key.second, std::nullopt};
        if (all_equal(severities)) label.agreed_severity = severities.front();
        out.push_back(std::move(label));
    }
    return out;
}

std::string_view to_string(BinaryLabel label) {
    switch (label) {
        case BinaryLabel::clean: return "clean";
        case BinaryLabel::defect: return "defect";
        case BinaryLabel::discarded: return "discarded";
    }
    return "discarded";
}

BinaryLabel binarize(const ConsensusLabel& label) {
    if (!label.agreed_severity) return BinaryLabel::discarded;
    switch (*label.agreed_severity) {
        case 1: return BinaryLabel::clean;
        case 3: return BinaryLabel::defect;
        default: return BinaryLabel::discarded;
    }
}

double agreement_rate(const std::vector<AnnotationRecord>& records, const std::string& defect_id) {
    std::size_t images = 0, agreed = 0;
    for (const auto& [key, severities] : group_severities(records)) {
        if (key.second != defect_id) continue;
        ++images;
        if (all_equal(severities)) ++agreed;
    }
    if (images == 0) throw Error(ErrorCode::empty_input, "no image was rated for defect '" + defect_id + "'");
    return static_cast<double>(agreed) / static_cast<double>(images);
}

std::vector<ImageLabel> image_labels(const std::vector<ConsensusLabel>& labels,
                                     const std::vector<std::string>& in_scope_defects) {
    std::map<std::string, std::map<std::string, BinaryLabel>> by_image;
    for (const auto& l : labels) by_image[l.image_id][l.defect_id] = binarize(l);

    std::vector<ImageLabel> out;
    for (const auto& [image, per_defect] : by_image) {
        bool any_defect = false, any_unusable = false;
        for (const auto& d : in_scope_defects) {
            const auto it = per_defect.find(d);
            if (it == per_defect.end() || it->second == BinaryLabel::discarded) any_unusable = true;
            else if (it->second == BinaryLabel::defect) any_defect = true;
        }
        out.push_back({image, any_defect     ? BinaryLabel::defect
                              : any_unusable ? BinaryLabel::discarded
                                             : BinaryLabel::clean});
    }
    return out;
}

std::string_view to_string(BinaryClass c) { return c == BinaryClass::clean ? "clean" : "defect"; }

std::vector<EvalRecord> parse_evals(std::string_view text, std::string_view source) {
    const csv::Table t = csv::parse(text, kEvalHeader, source);
    std::vector<EvalRecord> out;
    out.reserve(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        const std::string where = std::string(source) + ":" + std::to_string(t.line_numbers[i]);
        out.push_back({row[0], parse_class(row[1], where), parse_class(row[2], where)});
    }
    return out;
}

std::vector<EvalRecord> load_evals(const std::filesystem::path& path) {
    return parse_evals(csv::read_file(path), path.string());
}

double ConfusionStats::yield_clean() const {
    return static_cast<double>(tp + fp) / static_cast<double>(total());
}
double ConfusionStats::yield_defect() const {
    return static_cast<double>(tn + fn) / static_cast<double>(total());
}
std::optional<double> ConfusionStats::precision_clean() const { return ratio(tp, tp + fp); }
std::optional<double> ConfusionStats::precision_defect() const { return ratio(tn, tn + fn); }
std::optional<double> ConfusionStats::recall_clean() const { return ratio(tp, tp + fn); }
std::optional<double> ConfusionStats::recall_defect() const { return ratio(tn, tn + fp); }

ConfusionStats confusion(const std::vector<EvalRecord>& evals) {
    if (evals.empty()) throw Error(ErrorCode::empty_input, "confusion needs at least one evaluation record");
    ConfusionStats s;
    for (const auto& e : evals) {
        const bool clean = e.truth == BinaryClass::clean;
        const bool pass = e.predicted == BinaryClass::clean;
        if (clean) {
            if (pass) ++s.tp; else ++s.fn;
        } else {
            if (pass) ++s.fp; else ++s.tn;
        }
    }
    return s;
}

StageRates stage_rates_from_confusion(const ConfusionStats& stats, std::optional<double> supplied_p_gen_clean) {
    if (stats.total() == 0) throw Error(ErrorCode::empty_input, "confusion stats are empty");
    const std::uint64_t passed = stats.tp + stats.fp;
    if (passed == 0) throw Error(ErrorCode::zero_pass, "no image was predicted clean; p_aqa_clean is undefined");
    const auto n = static_cast<double>(stats.total());
    const double p_gen = supplied_p_gen_clean.value_or(static_cast<double>(stats.tp + stats.fn) / n);
    return StageRates(p_gen, static_cast<double>(passed) / n,
                      static_cast<double>(stats.tp) / static_cast<double>(passed));
}

}  // namespace qacost
