#pragma once

// Run configuration files: flat "key = value" lines, '#' starts a comment.
// Unknown keys, repeated keys and malformed values are errors. The full
// schema lives in docs/config_schema.md.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qacost/analysis.hpp"
#include "qacost/cascade.hpp"
#include "qacost/cost_model.hpp"

namespace qacost {

enum class RatesSource { direct, confusion, cascade };
enum class SimStop { fixed_generated, target_accepted };

struct CascadeMember {
    std::string defect_id;
    std::string technology;
};

struct RunConfig {
    std::string name;
    std::string description;
    std::filesystem::path source;  // file the config was read from, if any

    RatesSource rates_source = RatesSource::direct;
    std::optional<double> p_gen_clean;  // direct, or supplied for confusion/cascade
    std::optional<double> y_aqa;
    std::optional<double> p_aqa_clean;
    std::filesystem::path confusion_evals;
    std::filesystem::path cascade_profiles;
    std::vector<CascadeMember> cascade_members;

    UnitCosts costs{Currency{0.004}, Currency{0.0}, Currency{0.5}};
    double n_mqa = 100;
    VolumeMode mode = VolumeMode::expectation;
    PrecisionRange sweep;

    std::uint64_t seed = 42;
    std::uint32_t sim_trials = 3;
    SimStop sim_stop = SimStop::fixed_generated;
    std::uint64_t sim_count = 1'000'000;
    std::uint64_t sim_generation_cap = 100'000'000;
    unsigned sim_threads = 0;

    std::optional<double> reference_delta_rel;
    double reference_band = 0.02;
    std::string reference_note;

    std::filesystem::path out_dir;

    /// Key/value pairs as written, in file order (echoed into run reports).
    std::vector<std::pair<std::string, std::string>> entries;
};

/// Parses config text; relative paths resolve against `base_dir`.
/// Throws Error(parse_error) with "source:line" context.
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {},
                       std::string_view source = "<memory>");

RunConfig load_config(const std::filesystem::path& path);

/// Accepts a path, or a bare name looked up as `<name>.conf` in ./configs,
/// each directory of $QACOST_CONFIG_PATH, and the bundled configs directory.
/// Throws Error(io_error) when nothing matches.
std::filesystem::path resolve_config(const std::string& name_or_path);

/// Directory holding the bundled configs.
std::filesystem::path bundled_config_dir();

/// One row of the detector table file (per-defect detector measurements).
struct DetectorTableRow {
    std::string defect_id;
    std::string technology;
    std::uint64_t n_images = 0;
    DetectorProfile profile;
};

inline constexpr const char* kDetectorTableHeader =
    "defect_id,technology,n_images,oracle_pass_yield,pass_yield,flag_precision";

std::vector<DetectorTableRow> load_detector_table(const std::filesystem::path& path);

struct ResolvedRates {
    StageRates rates;
    std::string provenance;  // human-readable account of where the rates came from
};

/// Derives StageRates from whichever single source the config names.
ResolvedRates resolve_rates(const RunConfig& config);

}  // namespace qacost
