#include "qacost/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>

#include "qacost/analysis.hpp"
#include "qacost/cascade.hpp"
#include "qacost/config.hpp"
#include "qacost/csv.hpp"
#include "qacost/metrics.hpp"
#include "qacost/pipeline_sim.hpp"
#include "qacost/report.hpp"
#include "qacost/taxonomy.hpp"
#include "qacost/vqa_client.hpp"

namespace qacost {

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::parse_error:
        case ErrorCode::unknown_defect:
        case ErrorCode::empty_substitution:
            return kExitUsage;
        case ErrorCode::io_error:
        case ErrorCode::timeout:
        case ErrorCode::endpoint_error:
            return kExitIo;
        case ErrorCode::invalid_argument:
        case ErrorCode::infeasible:
        case ErrorCode::zero_yield:
        case ErrorCode::degenerate_yield:
        case ErrorCode::budget_exceeded:
        case ErrorCode::too_many_defects:
        case ErrorCode::inconsistent_mix:
        case ErrorCode::empty_input:
        case ErrorCode::zero_pass:
        case ErrorCode::no_break_even:
            return kExitInput;
    }
    return kExitInput;
}

namespace {

using report::Json;

std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.insert(0, width - s.size(), ' ');
    return s;
}

std::string pct(double v) { return fmt("%.2f%%", 100.0 * v); }

struct Common {
    std::vector<std::string> configs;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::string format = "text";
};

// Overrides shared by the closed-form subcommands.
struct ModelOverrides {
    std::optional<double> n_mqa;
    std::optional<std::string> mode;
    std::optional<double> c_gen, c_aqa, c_mqa;
};

void add_common(CLI::App* cmd, Common& c, bool needs_config, bool multi_config = false) {
    auto* opt = cmd->add_option("--config", c.configs, "config file path or bundled config name");
    if (!multi_config) opt->expected(1);
    if (needs_config) opt->required();
    cmd->add_option("--seed", c.seed, "override the config seed");
    cmd->add_option("--out-dir", c.out_dir, "directory for CSV, SVG and run-report files");
    cmd->add_option("--format", c.format, "stdout format")->check(CLI::IsMember({"text", "csv", "json"}));
}

void add_model_overrides(CLI::App* cmd, ModelOverrides& o) {
    cmd->add_option("--n-mqa", o.n_mqa, "accepted-image target (overrides target.n_mqa)");
    cmd->add_option("--mode", o.mode, "volume mode")->check(CLI::IsMember({"expectation", "ceiling"}));
    cmd->add_option("--c-gen", o.c_gen, "generation cost per image");
    cmd->add_option("--c-aqa", o.c_aqa, "AutoQA cost per image");
    cmd->add_option("--c-mqa", o.c_mqa, "ManualQA cost per image");
}

RunConfig load_one(const std::string& name, const Common& common, const ModelOverrides* o = nullptr) {
    RunConfig cfg = load_config(resolve_config(name));
    if (common.seed) cfg.seed = *common.seed;
    if (o) {
        if (o->n_mqa) {
            if (!(*o->n_mqa > 0)) throw Error(ErrorCode::invalid_argument, "--n-mqa must be > 0");
            cfg.n_mqa = *o->n_mqa;
        }
        if (o->mode) cfg.mode = parse_volume_mode(*o->mode);
        if (o->c_gen) cfg.costs.gen = Currency{*o->c_gen};
        if (o->c_aqa) cfg.costs.aqa = Currency{*o->c_aqa};
        if (o->c_mqa) cfg.costs.mqa = Currency{*o->c_mqa};
        cfg.costs.validate();
    }
    return cfg;
}

std::filesystem::path out_dir_for(const Common& common, const RunConfig* cfg) {
    if (!common.out_dir.empty()) return common.out_dir;
    if (cfg && !cfg->out_dir.empty()) return cfg->out_dir;
    return {};
}

// Writes each named file into the output directory (if any) and records the
// file names in the run report, which is written last.
void write_outputs(const std::filesystem::path& dir, std::vector<std::pair<std::string, std::string>> files,
                   Json& run, std::ostream& out, bool announce) {
    if (dir.empty()) return;
    Json names = Json::array();
    for (const auto& f : files) names.push_back(f.first);
    names.push_back("run_report.json");
    run["outputs"] = names;
    for (const auto& [name, content] : files) {
        const auto p = report::write_output(dir, name, content);
        if (announce) out << "wrote " << p.string() << "\n";
    }
    const auto p = report::write_output(dir, "run_report.json", report::dump(run));
    if (announce) out << "wrote " << p.string() << "\n";
}

void print_rates_line(std::ostream& out, const RunConfig& cfg, const ResolvedRates& r) {
    out << "config " << cfg.name << " (" << r.provenance << ")\n";
    out << "rates  p_gen_clean " << format_probability(r.rates.p_gen_clean()) << "  y_aqa "
        << format_probability(r.rates.y_aqa()) << "  p_aqa_clean " << format_probability(r.rates.p_aqa_clean())
        << "  overall yield " << format_probability(overall_yield(r.rates)) << "\n";
    // Unit costs are often sub-cent, so they are echoed at full precision.
    out << "costs  gen " << csv::format_double(cfg.costs.gen.value()) << "  aqa "
        << csv::format_double(cfg.costs.aqa.value()) << "  mqa " << csv::format_double(cfg.costs.mqa.value()) << "  target n_mqa " << csv::format_double(cfg.n_mqa) << "  mode "
        << to_string(cfg.mode) << "\n";
}

Json costs_json(const StageRates& rates, const UnitCosts& c) {
    Json j = report::to_json(rates);
    j["costs"] = {{"gen", c.gen.value()}, {"aqa", c.aqa.value()}, {"mqa", c.mqa.value()}};
    return j;
}

// --- volumes ---------------------------------------------------------------

int run_volumes(const Common& common, const ModelOverrides& o, std::ostream& out) {
    const RunConfig cfg = load_one(common.configs.front(), common, &o);
    const ResolvedRates r = resolve_rates(cfg);
    const VolumePlan plan = volumes_from_target(cfg.n_mqa, r.rates, cfg.mode);

    Json run = report::run_report("volumes", cfg);
    run["rates"] = costs_json(r.rates, cfg.costs);
    run["volumes"] = report::to_json(plan);
    const std::string csv_text = report::volumes_csv(plan);

    if (common.format == "csv") out << csv_text;
    else if (common.format == "json") out << report::dump(run);
    else {
        print_rates_line(out, cfg, r);
        out << "GenAI    " << fmt("%12.2f", plan.n_gen) << "\n";
        out << "AutoQA   " << fmt("%12.2f", plan.n_aqa) << "\n";
        out << "ManualQA " << fmt("%12.2f", plan.n_mqa) << "\n";
    }
    write_outputs(out_dir_for(common, &cfg),
                  {{"volumes.csv", csv_text}, {"volumes.svg", report::volumes_svg(plan, "Images per stage: " + cfg.name)}},
                  run, out, common.format == "text");
    return kExitOk;
}

// --- cost ------------------------------------------------------------------

int run_cost(const Common& common, const ModelOverrides& o, std::ostream& out) {
    std::vector<RunConfig> cfgs;
    for (const auto& name : common.configs) cfgs.push_back(load_one(name, common, &o));
    const RunConfig& first = cfgs.front();

    std::vector<report::NamedCost> rows;
    Json details = Json::array();
    const ResolvedRates first_rates = resolve_rates(first);
    rows.push_back({"Baseline", baseline_cost(first.n_mqa, first_rates.rates.p_gen_clean(), first.costs, first.mode)});
    details.push_back({{"config", "Baseline"}, {"p_gen_clean", first_rates.rates.p_gen_clean()}});
    for (const RunConfig& cfg : cfgs) {
        if (cfg.n_mqa != first.n_mqa || cfg.mode != first.mode)
            throw Error(ErrorCode::invalid_argument, "configs compared by 'cost' must share target.n_mqa and mode");
        const ResolvedRates r = cfg.name == first.name ? first_rates : resolve_rates(cfg);
        rows.push_back({cfg.name, pipeline_cost(cfg.n_mqa, r.rates, cfg.costs, cfg.mode)});
        Json d = costs_json(r.rates, cfg.costs);
        d["config"] = cfg.name;
        details.push_back(d);
    }

    Json run = report::run_report("cost", first);
    run["n_mqa"] = first.n_mqa;
    run["mode"] = std::string(to_string(first.mode));
    run["configs"] = details;
    Json rj = Json::array();
    for (const auto& row : rows) {
        Json c = report::to_json(row.cost);
        c["config"] = row.config;
        rj.push_back(c);
    }
    run["costs"] = rj;
    const std::string csv_text = report::costs_csv(rows);

    if (common.format == "csv") out << csv_text;
    else if (common.format == "json") out << report::dump(run);
    else {
        out << "n_mqa " << csv::format_double(first.n_mqa) << "  mode " << to_string(first.mode) << "\n";
        char line[256];
        std::snprintf(line, sizeof line, "%-24s %10s %10s %10s %10s %10s\n", "config", "gen", "aqa", "mqa", "total",
                      "mqa share");
        out << line;
        for (const auto& row : rows) {
            const auto share = report::mqa_share(row.cost);
            std::snprintf(line, sizeof line, "%-24s %10s %10s %10s %10s %10s\n", row.config.c_str(),
                          format_currency(row.cost.gen).c_str(), format_currency(row.cost.aqa).c_str(),
                          format_currency(row.cost.mqa).c_str(), format_currency(row.cost.total).c_str(),
                          share ? pct(*share).c_str() : "n/a");
            out << line;
        }
    }
    write_outputs(out_dir_for(common, &first),
                  {{"costs.csv", csv_text}, {"costs.svg", report::costs_svg(rows, "Cost composition")}}, run, out,
                  common.format == "text");
    return kExitOk;
}

// --- savings ---------------------------------------------------------------

int run_savings(const Common& common, const ModelOverrides& o, std::ostream& out) {
    const RunConfig cfg = load_one(common.configs.front(), common, &o);
    const ResolvedRates r = resolve_rates(cfg);
    const SavingsReport s = savings(cfg.n_mqa, r.rates, cfg.costs, cfg.mode);
    const CostBreakdown pipeline = pipeline_cost(cfg.n_mqa, r.rates, cfg.costs, cfg.mode);
    const CostBreakdown baseline = baseline_cost(cfg.n_mqa, r.rates.p_gen_clean(), cfg.costs, cfg.mode);
    const auto share_p = report::mqa_share(pipeline);
    const auto share_b = report::mqa_share(baseline);

    Json run = report::run_report("savings", cfg);
    run["rates"] = costs_json(r.rates, cfg.costs);
    run["pipeline"] = report::to_json(pipeline);
    run["baseline"] = report::to_json(baseline);
    run["savings"] = report::to_json(s);
    run["mqa_share"] = {{"pipeline", share_p ? Json(*share_p) : Json(nullptr)},
                        {"baseline", share_b ? Json(*share_b) : Json(nullptr)}};

    std::string reference_text;
    if (cfg.reference_delta_rel) {
        const double diff = *cfg.reference_delta_rel - s.delta_rel;
        const bool inside = std::abs(diff) <= cfg.reference_band;
        reference_text = "reference delta_rel " + format_probability(*cfg.reference_delta_rel) + " vs computed " +
                         format_probability(s.delta_rel) + ": difference " + fmt("%+.2f", 100 * diff) + " pp, " +
                         (inside ? "inside" : "OUTSIDE") + " the +/-" + fmt("%.2f", 100 * cfg.reference_band) +
                         " pp reconciliation band\n";
        if (!cfg.reference_note.empty()) reference_text += "note: " + cfg.reference_note + "\n";
        reference_text += "see docs/reconciliation.md for the discrepancy notes\n";
        run["reference"] = {{"delta_rel", *cfg.reference_delta_rel},
                            {"difference", diff},
                            {"band", cfg.reference_band},
                            {"inside_band", inside},
                            {"note", cfg.reference_note}};
    }

    if (common.format == "json") out << report::dump(run);
    else if (common.format == "csv") {
        out << "baseline_total,autoqa_total,delta_abs,delta_rel\n"
            << csv::format_double(s.baseline_total.value()) << "," << csv::format_double(s.autoqa_total.value()) << ","
            << csv::format_double(s.delta_abs.value()) << "," << csv::format_double(s.delta_rel) << "\n";
    } else {
        print_rates_line(out, cfg, r);
        out << "baseline total   " << format_currency(s.baseline_total) << "\n";
        out << "AutoQA total     " << format_currency(s.autoqa_total) << "\n";
        out << "delta_abs        " << format_currency(s.delta_abs) << "\n";
        out << "delta_rel        " << format_probability(s.delta_rel) << " (" << pct(s.delta_rel) << ")\n";
        out << "ManualQA share   " << (share_p ? pct(*share_p) : "n/a") << " of the AutoQA pipeline, "
            << (share_b ? pct(*share_b) : "n/a") << " of the baseline\n";
        out << reference_text;
    }
    write_outputs(out_dir_for(common, &cfg), {}, run, out, common.format == "text");
    return kExitOk;
}

// --- sweep / breakeven -----------------------------------------------------

int run_sweep(const Common& common, const ModelOverrides& o, const std::string& range_text, std::ostream& out) {
    RunConfig cfg = load_one(common.configs.front(), common, &o);
    if (!range_text.empty()) cfg.sweep = PrecisionRange::parse(range_text);
    const ResolvedRates r = resolve_rates(cfg);
    const auto rows = sweep_precision(r.rates, cfg.costs, cfg.n_mqa, cfg.sweep);
    std::optional<double> p_star;
    try {
        p_star = break_even_precision(r.rates, cfg.costs, cfg.n_mqa);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::no_break_even) throw;
    }

    Json run = report::run_report("sweep", cfg);
    run["rates"] = costs_json(r.rates, cfg.costs);
    run["range"] = {{"lo", cfg.sweep.lo}, {"hi", cfg.sweep.hi}, {"steps", cfg.sweep.steps}};
    run["break_even"] = p_star ? Json(*p_star) : Json(nullptr);
    Json jr = Json::array();
    for (const auto& row : rows)
        jr.push_back({{"p_aqa_clean", row.p_aqa_clean},
                      {"delta_abs", row.delta_abs ? Json(*row.delta_abs) : Json(nullptr)},
                      {"delta_rel", row.delta_rel ? Json(*row.delta_rel) : Json(nullptr)},
                      {"feasible", row.feasible}});
    run["rows"] = jr;
    const std::string csv_text = report::sweep_csv(rows);

    if (common.format == "csv") out << csv_text;
    else if (common.format == "json") out << report::dump(run);
    else {
        print_rates_line(out, cfg, r);
        out << "p_aqa_clean   delta_abs   delta_rel\n";
        for (const auto& row : rows) {
            out << format_probability(row.p_aqa_clean) << "    ";
            if (row.feasible)
                out << pad(format_currency(Currency{*row.delta_abs}), 10) << "  "
                    << pad(format_probability(*row.delta_rel), 10) << "\n";
            else
                out << "  infeasible\n";
        }
        out << "break-even " << (p_star ? format_probability(*p_star) : std::string("none in (0,1]")) << "\n";
    }
    write_outputs(out_dir_for(common, &cfg),
                  {{"sweep.csv", csv_text},
                   {"sweep.svg", report::sweep_svg(rows, p_star, "Savings vs AutoQA precision: " + cfg.name)}},
                  run, out, common.format == "text");
    return kExitOk;
}

int run_breakeven(const Common& common, const ModelOverrides& o, std::ostream& out) {
    const RunConfig cfg = load_one(common.configs.front(), common, &o);
    const ResolvedRates r = resolve_rates(cfg);
    const double p = break_even_precision(r.rates, cfg.costs, cfg.n_mqa);
    const double below = savings_at_precision(r.rates, std::max(p - 1e-6, 1e-12), cfg.costs, cfg.n_mqa).delta_abs.value();
    const double above = p + 1e-6 <= 1.0
                             ? savings_at_precision(r.rates, p + 1e-6, cfg.costs, cfg.n_mqa).delta_abs.value()
                             : std::nan("");

    Json run = report::run_report("breakeven", cfg);
    run["rates"] = costs_json(r.rates, cfg.costs);
    run["break_even"] = p;
    run["delta_abs_below"] = below;
    run["delta_abs_above"] = std::isnan(above) ? Json(nullptr) : Json(above);

    if (common.format == "json") out << report::dump(run);
    else if (common.format == "csv") out << "break_even_p_aqa_clean\n" << csv::format_double(p) << "\n";
    else {
        print_rates_line(out, cfg, r);
        out << "break-even P_aqa(clean) " << format_probability(p) << " (" << csv::format_double(p) << ")\n";
        out << "savings at P*-1e-6 " << fmt("%+.3e", below);
        if (!std::isnan(above)) out << ", at P*+1e-6 " << fmt("%+.3e", above);
        out << "\n";
    }
    write_outputs(out_dir_for(common, &cfg), {}, run, out, common.format == "text");
    return kExitOk;
}

// --- simulate --------------------------------------------------------------

struct SimFlags {
    std::optional<std::uint32_t> trials;
    std::optional<std::uint64_t> count;
    std::optional<std::string> stop;
    unsigned threads = 0;
    std::string isa = "auto";
};

int run_simulate(const Common& common, const SimFlags& f, std::ostream& out) {
    RunConfig cfg = load_one(common.configs.front(), common);
    if (f.trials) {
        if (*f.trials < 1) throw Error(ErrorCode::invalid_argument, "--trials must be >= 1");
        cfg.sim_trials = *f.trials;
    }
    if (f.count) cfg.sim_count = *f.count;
    if (f.stop) cfg.sim_stop = *f.stop == "target_accepted" ? SimStop::target_accepted : SimStop::fixed_generated;
    const ResolvedRates r = resolve_rates(cfg);

    SimConfig sc;
    sc.p_gen_clean = r.rates.p_gen_clean();
    sc.classifier = to_conditional(r.rates);
    sc.costs = cfg.costs;
    sc.seed = cfg.seed;
    sc.trials = cfg.sim_trials;
    sc.generation_cap = cfg.sim_generation_cap;
    if (cfg.sim_stop == SimStop::fixed_generated) sc.stop_rule = FixedGenerated{cfg.sim_count};
    else sc.stop_rule = TargetAccepted{cfg.sim_count};

    SimOptions opts;
    opts.threads = f.threads ? f.threads : cfg.sim_threads;
    if (f.isa == "scalar") opts.isa = simd::Isa::scalar;
    else if (f.isa == "avx2") {
        if (!simd::isa_available(simd::Isa::avx2))
            throw Error(ErrorCode::invalid_argument, "AVX2 kernel requested but not available on this CPU/build");
        opts.isa = simd::Isa::avx2;
    }
    const SimReport sim = simulate(sc, opts);

    // Closed-form expectation for the same stopping rule.
    VolumePlan expected_plan;
    CostBreakdown expected_cost;
    if (cfg.sim_stop == SimStop::fixed_generated) {
        const double n = static_cast<double>(cfg.sim_count);
        expected_plan = volumes_from_generated(n, r.rates);
        expected_cost = CostBreakdown::from_components(cfg.costs.gen * n, cfg.costs.aqa * n,
                                                       cfg.costs.mqa * expected_plan.n_aqa);
    } else {
        const double n = static_cast<double>(cfg.sim_count);
        expected_plan = volumes_from_target(n, r.rates, VolumeMode::expectation);
        expected_cost = pipeline_cost(n, r.rates, cfg.costs, VolumeMode::expectation);
    }

    Json run = report::run_report("simulate", cfg);
    run["rates"] = costs_json(r.rates, cfg.costs);
    run["conditional"] = {{"pass_given_clean", sc.classifier.pass_given_clean},
                          {"pass_given_defect", sc.classifier.pass_given_defect}};
    run["stop"] = {{"rule", cfg.sim_stop == SimStop::fixed_generated ? "fixed_generated" : "target_accepted"},
                   {"count", cfg.sim_count},
                   {"generation_cap", cfg.sim_generation_cap}};
    run["expected"] = {{"volumes", report::to_json(expected_plan)}, {"cost", report::to_json(expected_cost)}};
    run["simulation"] = report::to_json(sim);

    if (common.format == "json") out << report::dump(run);
    else if (common.format == "csv") {
        out << "trial,n_gen,n_aqa,n_mqa,gen,aqa,mqa,total\n";
        for (std::size_t i = 0; i < sim.trials.size(); ++i) {
            const auto& t = sim.trials[i];
            out << i << "," << t.n_gen << "," << t.n_aqa << "," << t.n_mqa << "," << csv::format_double(t.cost.gen.value())
                << "," << csv::format_double(t.cost.aqa.value()) << "," << csv::format_double(t.cost.mqa.value())
                << "," << csv::format_double(t.cost.total.value()) << "\n";
        }
    } else {
        print_rates_line(out, cfg, r);
        out << "trials " << cfg.sim_trials << "  seed " << cfg.seed << "  stop "
            << (cfg.sim_stop == SimStop::fixed_generated ? "fixed_generated " : "target_accepted ") << cfg.sim_count
            << "\n";
        auto line = [&](const char* name, const Summary& s, double expected, const char* pattern) {
            out << name << "  mean " << fmt(pattern, s.mean) << "  sd "
                << fmt(pattern, s.stddev) << "  expected " << fmt(pattern, expected) << "\n";
        };
        line("n_gen    ", sim.n_gen, expected_plan.n_gen, "%.2f");
        line("n_aqa    ", sim.n_aqa, expected_plan.n_aqa, "%.2f");
        line("n_mqa    ", sim.n_mqa, expected_plan.n_mqa, "%.2f");
        line("gen cost ", sim.gen_cost, expected_cost.gen.value(), "%.2f");
        line("aqa cost ", sim.aqa_cost, expected_cost.aqa.value(), "%.2f");
        line("mqa cost ", sim.mqa_cost, expected_cost.mqa.value(), "%.2f");
        line("total    ", sim.total_cost, expected_cost.total.value(), "%.2f");
    }
    write_outputs(out_dir_for(common, &cfg), {}, run, out, common.format == "text");
    return kExitOk;
}

// --- cascade ---------------------------------------------------------------

int run_cascade(const Common& common, std::ostream& out) {
    const RunConfig cfg = load_one(common.configs.front(), common);
    if (cfg.rates_source != RatesSource::cascade)
        throw Error(ErrorCode::invalid_argument, "config '" + cfg.name + "' does not use rates.source = cascade");
    const auto table = load_detector_table(cfg.cascade_profiles);

    std::vector<DetectorProfile> detectors;
    std::vector<std::string> ids;
    std::vector<double> prevalences;
    Json jd = Json::array();
    for (const CascadeMember& m : cfg.cascade_members) {
        const auto it = std::find_if(table.begin(), table.end(), [&](const DetectorTableRow& row) {
            return row.defect_id == m.defect_id && row.technology == m.technology;
        });
        if (it == table.end())
            throw Error(ErrorCode::invalid_argument, "no detector '" + m.defect_id + ":" + m.technology + "'");
        detectors.push_back(it->profile);
        ids.push_back(m.defect_id);
        prevalences.push_back(it->profile.prevalence);
    }
    const CascadeSpec spec(detectors);
    const DefectMix mix = DefectMix::marginals(ids, prevalences);
    const StageRates independent = effective_rates_independent(spec, mix, cfg.p_gen_clean);
    std::optional<StageRates> enumerated;
    if (ids.size() <= kMaxEnumeratedDefects) enumerated = effective_rates_enumerate(spec, mix, cfg.p_gen_clean);

    std::vector<DetectorConditionals> conds;
    for (std::size_t i = 0; i < detectors.size(); ++i) {
        conds.push_back(detector_conditionals(detectors[i]));
        jd.push_back({{"defect_id", detectors[i].defect_id},
                      {"technology", cfg.cascade_members[i].technology},
                      {"pass_yield", detectors[i].pass_yield},
                      {"flag_precision", detectors[i].flag_precision},
                      {"prevalence", detectors[i].prevalence},
                      {"flag_given_present", conds.back().flag_given_present},
                      {"flag_given_absent", conds.back().flag_given_absent}});
    }

    Json run = report::run_report("cascade", cfg);
    run["detectors"] = jd;
    run["independent"] = report::to_json(independent);
    run["enumerated"] = enumerated ? report::to_json(*enumerated) : Json(nullptr);

    if (common.format == "json") out << report::dump(run);
    else if (common.format == "csv") {
        out << "method,p_gen_clean,y_aqa,p_aqa_clean\n";
        out << "independent," << csv::format_double(independent.p_gen_clean()) << ","
            << csv::format_double(independent.y_aqa()) << "," << csv::format_double(independent.p_aqa_clean()) << "\n";
        if (enumerated)
            out << "enumerated," << csv::format_double(enumerated->p_gen_clean()) << ","
                << csv::format_double(enumerated->y_aqa()) << "," << csv::format_double(enumerated->p_aqa_clean())
                << "\n";
    } else {
        out << "config " << cfg.name << ": AND-cascade of " << detectors.size() << " detectors\n";
        out << "defect                      tech    pass   prec   prev  P(flag|defect)  P(flag|clean)\n";
        for (std::size_t i = 0; i < detectors.size(); ++i) {
            char line[256];
            std::snprintf(line, sizeof line, "%-27s %-6s %.4f %.4f %.4f  %.4f          %.4f\n",
                          detectors[i].defect_id.c_str(), cfg.cascade_members[i].technology.c_str(),
                          detectors[i].pass_yield, detectors[i].flag_precision, detectors[i].prevalence,
                          conds[i].flag_given_present, conds[i].flag_given_absent);
            out << line;
        }
        auto rates_line = [&](const char* name, const StageRates& s) {
            out << name << " p_gen_clean " << format_probability(s.p_gen_clean()) << "  y_aqa "
                << format_probability(s.y_aqa()) << "  p_aqa_clean " << format_probability(s.p_aqa_clean()) << "\n";
        };
        rates_line("independent", independent);
        if (enumerated) rates_line("enumerated ", *enumerated);
    }
    write_outputs(out_dir_for(common, &cfg), {}, run, out, common.format == "text");
    return kExitOk;
}

// --- metrics ---------------------------------------------------------------

struct MetricsFlags {
    std::string annotations;
    std::string evals;
    std::vector<std::string> scope;
    std::optional<double> p_gen_clean;
};

int run_metrics(const Common& common, const MetricsFlags& f, std::ostream& out) {
    if (f.annotations.empty() && f.evals.empty())
        throw Error(ErrorCode::parse_error, "metrics needs --annotations and/or --evals");
    RunConfig placeholder;
    placeholder.name = "metrics";
    if (common.seed) placeholder.seed = *common.seed;
    Json run = report::run_report("metrics", placeholder);
    run.erase("seed");
    run.erase("config");
    std::vector<std::pair<std::string, std::string>> files;
    std::string text;

    if (!f.annotations.empty()) {
        const auto records = load_annotations(f.annotations);
        const auto labels = consensus(records);
        files.emplace_back("consensus.csv", report::consensus_csv(labels));
        files.emplace_back("agreement.csv", report::agreement_csv(records));

        std::set<std::string> ids;
        for (const auto& rec : records) ids.insert(rec.defect_id);
        const std::vector<std::string> scope = f.scope.empty() ? std::vector<std::string>(ids.begin(), ids.end()) : f.scope;
        const auto images = image_labels(labels, scope);
        std::string img_csv = "image_id,label\n";
        std::map<std::string, int> tally;
        for (const auto& il : images) {
            img_csv += il.image_id + "," + std::string(to_string(il.label)) + "\n";
            tally[std::string(to_string(il.label))] += 1;
        }
        files.emplace_back("image_labels.csv", img_csv);

        Json agreement = Json::object();
        text += "annotations " + f.annotations + ": " + std::to_string(records.size()) + " ratings, " +
                std::to_string(labels.size()) + " (image, defect) pairs\n";
        for (const auto& id : ids) {
            const double a = agreement_rate(records, id);
            agreement[id] = a;
            text += "  agreement " + id + " " + format_probability(a) + "\n";
        }
        text += "  image labels:";
        for (const char* k : {"clean", "defect", "discarded"}) text += std::string(" ") + k + " " + std::to_string(tally[k]);
        text += "\n";
        run["agreement"] = agreement;
        run["image_labels"] = {{"clean", tally["clean"]}, {"defect", tally["defect"]}, {"discarded", tally["discarded"]}};
    }
    if (!f.evals.empty()) {
        const ConfusionStats s = confusion(load_evals(f.evals));
        auto opt = [](std::optional<double> v) { return v ? Json(*v) : Json(nullptr); };
        run["confusion"] = {{"tp", s.tp},
                            {"fp", s.fp},
                            {"tn", s.tn},
                            {"fn", s.fn},
                            {"yield_clean", s.yield_clean()},
                            {"precision_clean", opt(s.precision_clean())},
                            {"precision_defect", opt(s.precision_defect())},
                            {"recall_clean", opt(s.recall_clean())},
                            {"recall_defect", opt(s.recall_defect())}};
        auto show = [](std::optional<double> v) { return v ? format_probability(*v) : std::string("n/a"); };
        text += "evals " + f.evals + ": tp " + std::to_string(s.tp) + " fp " + std::to_string(s.fp) + " tn " +
                std::to_string(s.tn) + " fn " + std::to_string(s.fn) + "\n";
        text += "  yield(clean) " + format_probability(s.yield_clean()) + "  precision(clean) " +
                show(s.precision_clean()) + "  precision(defect) " + show(s.precision_defect()) + "\n";
        text += "  recall(clean) " + show(s.recall_clean()) + "  recall(defect) " + show(s.recall_defect()) + "\n";
        const StageRates r = stage_rates_from_confusion(s, f.p_gen_clean);
        run["stage_rates"] = report::to_json(r);
        text += "  stage rates: p_gen_clean " + format_probability(r.p_gen_clean()) + "  y_aqa " +
                format_probability(r.y_aqa()) + "  p_aqa_clean " + format_probability(r.p_aqa_clean()) + "\n";
    }

    if (common.format == "json") out << report::dump(run);
    else if (common.format == "csv") {
        for (const auto& [name, content] : files)
            if (name == "consensus.csv") out << content;
    } else out << text;
    write_outputs(out_dir_for(common, nullptr), files, run, out, common.format == "text");
    return kExitOk;
}

// --- prompts ---------------------------------------------------------------

struct PromptFlags {
    std::vector<std::string> defects;
    bool all = false;
    std::string object_class;
    std::string product_type;
    std::string fixtures;
    std::string endpoint;
    std::string image_id;
    std::string image_uri;
    int threshold = kDefaultFlagThreshold;
    std::string unparseable = "flag";
    int timeout_ms = 30'000;
    int attempts = 3;
};

int run_prompts(const Common& common, const PromptFlags& f, std::ostream& out) {
    std::vector<const DetailedDefect*> defects;
    if (!f.defects.empty()) {
        for (const auto& id : f.defects) {
            const DetailedDefect* d = find_detailed(id);
            if (!d) throw Error(ErrorCode::unknown_defect, "unknown detailed defect '" + id + "'");
            defects.push_back(d);
        }
    } else if (f.all) {
        for (const auto& d : detailed_defects()) defects.push_back(&d);
    } else {
        defects = core_detailed_defects();
    }

    if (!f.fixtures.empty() && !f.endpoint.empty())
        throw Error(ErrorCode::parse_error, "--fixtures and --endpoint are mutually exclusive");

    if (f.fixtures.empty() && f.endpoint.empty()) {
        Json arr = Json::array();
        for (std::size_t i = 0; i < defects.size(); ++i) {
            const PromptBundle b = render_prompt(defects[i]->id, f.object_class, f.product_type);
            if (common.format == "json") {
                arr.push_back(Json::parse(VqaRequest{f.image_id, b, ImageRef::from_uri(f.image_uri)}.to_json()));
            } else {
                if (i) out << "\n";
                out << "=== " << b.defect_id << " ===\n" << prompt_text(b);
            }
        }
        if (common.format == "json") out << report::dump(arr);
        return kExitOk;
    }

    if (f.image_id.empty()) throw Error(ErrorCode::parse_error, "--image-id is required when querying a detector");
    std::unique_ptr<VqaClient> client;
    if (!f.fixtures.empty()) client = MockVqaClient::from_fixture_dir(f.fixtures);
    else {
        HttpClientConfig hc;
        hc.endpoint = f.endpoint;
        hc.timeout = std::chrono::milliseconds(f.timeout_ms);
        hc.retry.max_attempts = f.attempts;
        client = std::make_unique<HttpVqaClient>(hc);
    }
    const ImageRef image = ImageRef::from_uri(f.image_uri.empty() ? f.image_id : f.image_uri);
    const auto answers = query_catalog(*client, f.image_id, image, f.object_class, f.product_type, defects);
    const auto decisions =
        coarse_decision(answers, f.threshold, f.unparseable == "abstain" ? UnparseablePolicy::abstain : UnparseablePolicy::flag);

    Json j;
    j["image_id"] = f.image_id;
    Json ja = Json::array();
    for (const auto& a : answers)
        ja.push_back({{"defect_id", a.detailed_id},
                      {"severity", a.response.parsed_severity ? Json(*a.response.parsed_severity) : Json(nullptr)},
                      {"raw", a.response.raw_text}});
    j["answers"] = ja;
    Json jc = Json::array();
    bool any_flag = false;
    for (const auto& d : decisions) {
        any_flag = any_flag || d.outcome == CoarseOutcome::flag;
        jc.push_back({{"coarse_id", d.coarse_id},
                      {"outcome", std::string(to_string(d.outcome))},
                      {"severity", d.severity ? Json(*d.severity) : Json(nullptr)}});
    }
    j["coarse"] = jc;
    j["image_decision"] = any_flag ? "flag" : "pass";
    const TokenUsage usage = client->token_usage();
    j["tokens"] = {{"calls", usage.calls}, {"prompt", usage.prompt_tokens}, {"response", usage.response_tokens}};

    if (common.format == "json") out << report::dump(j);
    else {
        out << "image " << f.image_id << "\n";
        for (const auto& a : answers)
            out << "  " << a.detailed_id << "  severity "
                << (a.response.parsed_severity ? std::to_string(*a.response.parsed_severity) : std::string("?"))
                << "\n";
        for (const auto& d : decisions)
            out << "coarse " << d.coarse_id << "  " << to_string(d.outcome) << "\n";
        out << "image decision " << (any_flag ? "flag" : "pass") << "\n";
        out << "tokens: " << usage.calls << " calls, ~" << usage.prompt_tokens << " prompt, ~" << usage.response_tokens
            << " response\n";
    }
    return kExitOk;
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"qacost: cost and yield analysis for generate / AutoQA / ManualQA image pipelines", "qacost"};
    app.require_subcommand(1);
    app.set_version_flag("--version", QACOST_VERSION);

    Common common;
    ModelOverrides overrides;
    std::string range_text;
    SimFlags sim;
    MetricsFlags metrics;
    PromptFlags prompts;

    auto* volumes = app.add_subcommand("volumes", "images needed at each stage for the accepted target");
    add_common(volumes, common, true);
    add_model_overrides(volumes, overrides);

    auto* cost = app.add_subcommand("cost", "cost composition for one or more configs plus the baseline");
    add_common(cost, common, true, true);
    add_model_overrides(cost, overrides);

    auto* sav = app.add_subcommand("savings", "savings relative to a ManualQA-only baseline");
    add_common(sav, common, true);
    add_model_overrides(sav, overrides);

    auto* sweep = app.add_subcommand("sweep", "savings as a function of AutoQA precision");
    add_common(sweep, common, true);
    add_model_overrides(sweep, overrides);
    sweep->add_option("--range", range_text, "lo:hi:steps over P_aqa(clean)");

    auto* be = app.add_subcommand("breakeven", "AutoQA precision where savings cross zero");
    add_common(be, common, true);
    add_model_overrides(be, overrides);

    auto* simc = app.add_subcommand("simulate", "Monte Carlo run of the pipeline");
    add_common(simc, common, true);
    simc->add_option("--trials", sim.trials, "number of trials");
    simc->add_option("--count", sim.count, "images generated (fixed_generated) or accepted (target_accepted)");
    simc->add_option("--stop", sim.stop, "stopping rule")->check(CLI::IsMember({"fixed_generated", "target_accepted"}));
    simc->add_option("--threads", sim.threads, "worker threads (0 = hardware)");
    simc->add_option("--isa", sim.isa, "kernel variant")->check(CLI::IsMember({"auto", "scalar", "avx2"}));

    auto* casc = app.add_subcommand("cascade", "effective rates of an AND-cascade of detectors");
    add_common(casc, common, true);

    auto* met = app.add_subcommand("metrics", "annotation consensus, agreement and confusion statistics");
    add_common(met, common, false);
    met->add_option("--annotations", metrics.annotations, "annotation CSV");
    met->add_option("--evals", metrics.evals, "evaluation CSV (image_id,truth,predicted)");
    met->add_option("--scope", metrics.scope, "in-scope defect ids for image labels")->delimiter(',');
    met->add_option("--p-gen-clean", metrics.p_gen_clean, "supply P_gen(clean) instead of estimating it");

    auto* pr = app.add_subcommand("prompts", "render detector prompts, optionally query a VQA endpoint");
    add_common(pr, common, false);
    pr->add_option("--defect", prompts.defects, "detailed defect id (repeatable; default: the 13 core)");
    pr->add_flag("--all", prompts.all, "include supplementary prompts");
    pr->add_option("--object-class", prompts.object_class, "object class substituted into prompts")->required();
    pr->add_option("--product-type", prompts.product_type, "product type substituted into prompts")->required();
    pr->add_option("--fixtures", prompts.fixtures, "replay answers from <dir>/<image_id>/<defect_id>.txt");
    pr->add_option("--endpoint", prompts.endpoint, "http://host:port/path of a VQA service");
    pr->add_option("--image-id", prompts.image_id, "image to assess");
    pr->add_option("--image-uri", prompts.image_uri, "image reference sent to the endpoint");
    pr->add_option("--threshold", prompts.threshold, "flag when severity >= threshold")->check(CLI::Range(1, 3));
    pr->add_option("--unparseable", prompts.unparseable, "policy for unparseable answers")
        ->check(CLI::IsMember({"flag", "abstain"}));
    pr->add_option("--timeout-ms", prompts.timeout_ms, "per-request timeout")->check(CLI::PositiveNumber);
    pr->add_option("--attempts", prompts.attempts, "maximum attempts per request")->check(CLI::Range(1, 10));

    if (args.empty()) {
        err << app.help();
        return kExitUsage;
    }
    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << QACOST_VERSION << "\n";
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "qacost: usage error: " << e.what() << " (run 'qacost --help')\n";
        return kExitUsage;
    }

    try {
        if (volumes->parsed()) return run_volumes(common, overrides, out);
        if (cost->parsed()) return run_cost(common, overrides, out);
        if (sav->parsed()) return run_savings(common, overrides, out);
        if (sweep->parsed()) return run_sweep(common, overrides, range_text, out);
        if (be->parsed()) return run_breakeven(common, overrides, out);
        if (simc->parsed()) return run_simulate(common, sim, out);
        if (casc->parsed()) return run_cascade(common, out);
        if (met->parsed()) return run_metrics(common, metrics, out);
        if (pr->parsed()) return run_prompts(common, prompts, out);
    } catch (const Error& e) {
        err << "qacost: " << to_string(e.code()) << ": " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        err << "qacost: internal error: " << e.what() << "\n";
        return kExitIo;
    }
    err << app.help();
    return kExitUsage;
}

}  // namespace qacost
