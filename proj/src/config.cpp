#include "qacost/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "qacost/csv.hpp"
#include "qacost/error.hpp"
#include "qacost/metrics.hpp"

namespace qacost {

namespace {

std::vector<std::string> split_list(std::string_view text) {
    std::vector<std::string> out;
    for (const std::string& part : csv::split_line(text)) {
        const std::string t = csv::trim(part);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

double parse_probability(const std::string& v, const std::string& what) {
    const double p = csv::parse_double(v, what);
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::parse_error, what + " must lie in [0,1]");
    return p;
}

double parse_cost(const std::string& v, const std::string& what) {
    const double c = csv::parse_double(v, what);
    if (!(c >= 0.0) || !std::isfinite(c)) throw Error(ErrorCode::parse_error, what + " must be finite and >= 0");
    return c;
}

std::uint64_t parse_count(const std::string& v, const std::string& what) {
    const long long n = csv::parse_integer(v, what);
    if (n < 0) throw Error(ErrorCode::parse_error, what + " must be non-negative");
    return static_cast<std::uint64_t>(n);
}

std::filesystem::path resolve_path(const std::filesystem::path& base, const std::string& v) {
    std::filesystem::path p(v);
    return p.is_absolute() || base.empty() ? p : base / p;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::filesystem::path&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"name", [](RunConfig& c, const std::string& v, auto&) { c.name = v; }},
        {"description", [](RunConfig& c, const std::string& v, auto&) { c.description = v; }},
        {"rates.source",
         [](RunConfig& c, const std::string& v, auto&) {
             if (v == "direct") c.rates_source = RatesSource::direct;
             else if (v == "confusion") c.rates_source = RatesSource::confusion;
             else if (v == "cascade") c.rates_source = RatesSource::cascade;
             else throw Error(ErrorCode::parse_error, "rates.source must be direct|confusion|cascade");
         }},
        {"rates.p_gen_clean",
         [](RunConfig& c, const std::string& v, auto&) { c.p_gen_clean = parse_probability(v, "rates.p_gen_clean"); }},
        {"rates.y_aqa", [](RunConfig& c, const std::string& v, auto&) { c.y_aqa = parse_probability(v, "rates.y_aqa"); }},
        {"rates.p_aqa_clean",
         [](RunConfig& c, const std::string& v, auto&) { c.p_aqa_clean = parse_probability(v, "rates.p_aqa_clean"); }},
        {"confusion.evals",
         [](RunConfig& c, const std::string& v, const std::filesystem::path& base) {
             c.confusion_evals = resolve_path(base, v);
         }},
        {"cascade.profiles",
         [](RunConfig& c, const std::string& v, const std::filesystem::path& base) {
             c.cascade_profiles = resolve_path(base, v);
         }},
        {"cascade.detectors",
         [](RunConfig& c, const std::string& v, auto&) {
             c.cascade_members.clear();
             for (const std::string& item : split_list(v)) {
                 const auto colon = item.find(':');
                 if (colon == std::string::npos)
                     throw Error(ErrorCode::parse_error, "cascade.detectors entries look like defect_id:TECH");
                 c.cascade_members.push_back({csv::trim(item.substr(0, colon)), csv::trim(item.substr(colon + 1))});
             }
             if (c.cascade_members.empty()) throw Error(ErrorCode::parse_error, "cascade.detectors is empty");
         }},
        {"costs.gen", [](RunConfig& c, const std::string& v, auto&) { c.costs.gen = Currency{parse_cost(v, "costs.gen")}; }},
        {"costs.aqa", [](RunConfig& c, const std::string& v, auto&) { c.costs.aqa = Currency{parse_cost(v, "costs.aqa")}; }},
        {"costs.mqa", [](RunConfig& c, const std::string& v, auto&) { c.costs.mqa = Currency{parse_cost(v, "costs.mqa")}; }},
        {"target.n_mqa",
         [](RunConfig& c, const std::string& v, auto&) {
             c.n_mqa = csv::parse_double(v, "target.n_mqa");
             if (!(c.n_mqa > 0.0)) throw Error(ErrorCode::parse_error, "target.n_mqa must be > 0");
         }},
        {"mode", [](RunConfig& c, const std::string& v, auto&) { c.mode = parse_volume_mode(v); }},
        {"sweep.range", [](RunConfig& c, const std::string& v, auto&) { c.sweep = PrecisionRange::parse(v); }},
        {"seed", [](RunConfig& c, const std::string& v, auto&) { c.seed = parse_count(v, "seed"); }},
        {"sim.trials",
         [](RunConfig& c, const std::string& v, auto&) {
             const auto n = parse_count(v, "sim.trials");
             if (n < 1 || n > 1'000'000) throw Error(ErrorCode::parse_error, "sim.trials must be in [1, 1e6]");
             c.sim_trials = static_cast<std::uint32_t>(n);
         }},
        {"sim.stop",
         [](RunConfig& c, const std::string& v, auto&) {
             if (v == "fixed_generated") c.sim_stop = SimStop::fixed_generated;
             else if (v == "target_accepted") c.sim_stop = SimStop::target_accepted;
             else throw Error(ErrorCode::parse_error, "sim.stop must be fixed_generated|target_accepted");
         }},
        {"sim.count",
         [](RunConfig& c, const std::string& v, auto&) {
             c.sim_count = parse_count(v, "sim.count");
             if (c.sim_count == 0) throw Error(ErrorCode::parse_error, "sim.count must be > 0");
         }},
        {"sim.generation_cap",
         [](RunConfig& c, const std::string& v, auto&) { c.sim_generation_cap = parse_count(v, "sim.generation_cap"); }},
        {"sim.threads",
         [](RunConfig& c, const std::string& v, auto&) {
             c.sim_threads = static_cast<unsigned>(parse_count(v, "sim.threads"));
         }},
        {"reference.delta_rel",
         [](RunConfig& c, const std::string& v, auto&) { c.reference_delta_rel = csv::parse_double(v, "reference.delta_rel"); }},
        {"reference.band",
         [](RunConfig& c, const std::string& v, auto&) { c.reference_band = parse_probability(v, "reference.band"); }},
        {"reference.note", [](RunConfig& c, const std::string& v, auto&) { c.reference_note = v; }},
        {"output.dir",
         [](RunConfig& c, const std::string& v, const std::filesystem::path&) { c.out_dir = v; }},
    };
    return table;
}

void check_single_source(const RunConfig& c, const std::set<std::string>& keys, std::string_view source) {
    auto reject = [&](const char* key, const char* why) {
        if (keys.count(key))
            throw Error(ErrorCode::parse_error, std::string(source) + ": key '" + key + "' " + why);
    };
    switch (c.rates_source) {
        case RatesSource::direct:
            if (!c.p_gen_clean || !c.y_aqa || !c.p_aqa_clean)
                throw Error(ErrorCode::parse_error, std::string(source) +
                                                        ": rates.source=direct needs rates.p_gen_clean, "
                                                        "rates.y_aqa and rates.p_aqa_clean");
            reject("confusion.evals", "conflicts with rates.source=direct");
            reject("cascade.profiles", "conflicts with rates.source=direct");
            reject("cascade.detectors", "conflicts with rates.source=direct");
            break;
        case RatesSource::confusion:
            if (c.confusion_evals.empty())
                throw Error(ErrorCode::parse_error, std::string(source) + ": rates.source=confusion needs confusion.evals");
            reject("rates.y_aqa", "conflicts with rates.source=confusion");
            reject("rates.p_aqa_clean", "conflicts with rates.source=confusion");
            reject("cascade.profiles", "conflicts with rates.source=confusion");
            reject("cascade.detectors", "conflicts with rates.source=confusion");
            break;
        case RatesSource::cascade:
            if (c.cascade_profiles.empty() || c.cascade_members.empty())
                throw Error(ErrorCode::parse_error,
                            std::string(source) + ": rates.source=cascade needs cascade.profiles and cascade.detectors");
            reject("rates.y_aqa", "conflicts with rates.source=cascade");
            reject("rates.p_aqa_clean", "conflicts with rates.source=cascade");
            reject("confusion.evals", "conflicts with rates.source=cascade");
            break;
    }
}

}  // namespace

RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir, std::string_view source) {
    RunConfig config;
    std::set<std::string> keys;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string where = std::string(source) + ":" + std::to_string(line_no);
        const auto hash = line.find('#');
        const std::string body = csv::trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw Error(ErrorCode::parse_error, where + ": expected 'key = value'");
        const std::string key = csv::trim(body.substr(0, eq));
        const std::string value = csv::trim(body.substr(eq + 1));
        const auto it = setters().find(key);
        if (it == setters().end()) throw Error(ErrorCode::parse_error, where + ": unknown key '" + key + "'");
        if (!keys.insert(key).second) throw Error(ErrorCode::parse_error, where + ": key '" + key + "' repeated");
        try {
            it->second(config, value, base_dir);
        } catch (const Error& e) {
            throw Error(ErrorCode::parse_error, where + ": " + e.what());
        }
        config.entries.emplace_back(key, value);
    }
    check_single_source(config, keys, source);
    return config;
}

RunConfig load_config(const std::filesystem::path& path) {
    RunConfig c = parse_config(csv::read_file(path), path.parent_path(), path.string());
    c.source = path;
    if (c.name.empty()) c.name = path.stem().string();
    return c;
}

std::filesystem::path bundled_config_dir() { return std::filesystem::path(QACOST_SOURCE_DIR) / "configs"; }

std::filesystem::path resolve_config(const std::string& name_or_path) {
    std::error_code ec;
    const std::filesystem::path direct(name_or_path);
    if (std::filesystem::is_regular_file(direct, ec)) return direct;

    std::vector<std::filesystem::path> dirs{"configs"};
    if (const char* env = std::getenv("QACOST_CONFIG_PATH")) {
        std::string_view rest(env);
        while (!rest.empty()) {
            const auto colon = rest.find(':');
            dirs.emplace_back(std::string(rest.substr(0, colon)));
            if (colon == std::string_view::npos) break;
            rest.remove_prefix(colon + 1);
        }
    }
    dirs.push_back(bundled_config_dir());
    for (const auto& dir : dirs) {
        const auto candidate = dir / (name_or_path + ".conf");
        if (std::filesystem::is_regular_file(candidate, ec)) return candidate;
    }
    throw Error(ErrorCode::io_error, "config '" + name_or_path + "' not found (looked for a file, then <name>.conf in "
                                     "./configs, $QACOST_CONFIG_PATH and " + bundled_config_dir().string() + ")");
}

std::vector<DetectorTableRow> load_detector_table(const std::filesystem::path& path) {
    const csv::Table t = csv::read(path, kDetectorTableHeader);
    std::vector<DetectorTableRow> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& r = t.rows[i];
        const std::string where = path.string() + ":" + std::to_string(t.line_numbers[i]);
        const double oracle = parse_probability(r[3], where + " oracle_pass_yield");
        DetectorTableRow row{r[0], r[1], parse_count(r[2], where + " n_images"),
                             DetectorProfile{r[0], parse_probability(r[4], where + " pass_yield"),
                                             parse_probability(r[5], where + " flag_precision"), 1.0 - oracle}};
        out.push_back(std::move(row));
    }
    return out;
}

ResolvedRates resolve_rates(const RunConfig& config) {
    std::ostringstream prov;
    prov.precision(6);
    switch (config.rates_source) {
        case RatesSource::direct:
            prov << "direct rates from config";
            return {StageRates(*config.p_gen_clean, *config.y_aqa, *config.p_aqa_clean), prov.str()};
        case RatesSource::confusion: {
            const ConfusionStats stats = confusion(load_evals(config.confusion_evals));
            prov << "confusion counts from " << config.confusion_evals.filename().string() << " (tp=" << stats.tp
                 << " fp=" << stats.fp << " tn=" << stats.tn << " fn=" << stats.fn << ")";
            return {stage_rates_from_confusion(stats, config.p_gen_clean), prov.str()};
        }
        case RatesSource::cascade: {
            const auto table = load_detector_table(config.cascade_profiles);
            std::vector<DetectorProfile> detectors;
            std::vector<std::string> ids;
            std::vector<double> prevalences;
            for (const CascadeMember& m : config.cascade_members) {
                const auto it = std::find_if(table.begin(), table.end(), [&](const DetectorTableRow& r) {
                    return r.defect_id == m.defect_id && r.technology == m.technology;
                });
                if (it == table.end())
                    throw Error(ErrorCode::invalid_argument, "no detector '" + m.defect_id + ":" + m.technology + "' in " +
                                                                 config.cascade_profiles.string());
                detectors.push_back(it->profile);
                ids.push_back(m.defect_id);
                prevalences.push_back(it->profile.prevalence);
            }
            const StageRates r = effective_rates_independent(CascadeSpec(std::move(detectors)),
                                                             DefectMix::marginals(ids, prevalences), config.p_gen_clean);
            prov << "independent AND-cascade of " << config.cascade_members.size() << " detectors from "
                 << config.cascade_profiles.filename().string();
            return {r, prov.str()};
        }
    }
    throw Error(ErrorCode::invalid_argument, "unknown rates source");
}

}  // namespace qacost
