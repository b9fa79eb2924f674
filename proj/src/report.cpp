#include "qacost/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "qacost/csv.hpp"
#include "qacost/error.hpp"

namespace qacost::report {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 400;
constexpr int kLeft = 70, kRight = 20, kTop = 40, kBottom = 60;

std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

std::string escape_xml(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

void svg_open(std::ostringstream& o, std::string_view title) {
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape_xml(title)
      << "</text>\n";
}

// A "nice" axis maximum: 1, 2 or 5 times a power of ten.
double nice_ceiling(double v) {
    if (!(v > 0)) return 1.0;
    const double p = std::pow(10.0, std::floor(std::log10(v)));
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (m * p >= v) return m * p;
    return 10 * p;
}

void y_axis(std::ostringstream& o, double lo, double hi, const char* label_fmt) {
    const int plot_h = kHeight - kTop - kBottom;
    o << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kHeight - kBottom
      << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double v = lo + (hi - lo) * i / 5.0;
        const double y = kHeight - kBottom - plot_h * i / 5.0;
        o << "<line x1=\"" << kLeft - 4 << "\" y1=\"" << fmt("%.1f", y) << "\" x2=\"" << kWidth - kRight
          << "\" y2=\"" << fmt("%.1f", y) << "\" stroke=\"#ddd\"/>\n";
        o << "<text x=\"" << kLeft - 8 << "\" y=\"" << fmt("%.1f", y + 4) << "\" text-anchor=\"end\">"
          << fmt(label_fmt, v) << "</text>\n";
    }
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

}  // namespace

std::string volumes_csv(const VolumePlan& plan) {
    std::string out = std::string(kVolumesHeader) + "\n";
    out += "gen," + csv::format_double(plan.n_gen) + "\n";
    out += "aqa," + csv::format_double(plan.n_aqa) + "\n";
    out += "mqa," + csv::format_double(plan.n_mqa) + "\n";
    return out;
}

std::string costs_csv(const std::vector<NamedCost>& rows) {
    std::string out = std::string(kCostsHeader) + "\n";
    for (const NamedCost& r : rows) {
        if (r.config.find(',') != std::string::npos)
            throw Error(ErrorCode::invalid_argument, "config name '" + r.config + "' contains a comma");
        out += r.config + "," + csv::format_double(r.cost.gen.value()) + "," + csv::format_double(r.cost.aqa.value()) +
               "," + csv::format_double(r.cost.mqa.value()) + "," + csv::format_double(r.cost.total.value()) + "\n";
    }
    return out;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::string out = std::string(kSweepHeader) + "\n";
    for (const SweepRow& r : rows) {
        out += csv::format_double(r.p_aqa_clean) + ",";
        out += (r.delta_abs ? csv::format_double(*r.delta_abs) : std::string()) + ",";
        out += (r.delta_rel ? csv::format_double(*r.delta_rel) : std::string()) + ",";
        out += bool_text(r.feasible) + "\n";
    }
    return out;
}

std::vector<SweepRow> parse_sweep_csv(std::string_view text, std::string_view source) {
    const csv::Table t = csv::parse(text, kSweepHeader, source);
    std::vector<SweepRow> rows;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& f = t.rows[i];
        const std::string where = std::string(source) + ":" + std::to_string(t.line_numbers[i]);
        SweepRow row;
        row.p_aqa_clean = csv::parse_double(f[0], where + " p_aqa_clean");
        if (!f[1].empty()) row.delta_abs = csv::parse_double(f[1], where + " delta_abs");
        if (!f[2].empty()) row.delta_rel = csv::parse_double(f[2], where + " delta_rel");
        if (f[3] == "true") row.feasible = true;
        else if (f[3] != "false") throw Error(ErrorCode::parse_error, where + ": feasible must be true|false");
        if (row.feasible != (row.delta_abs.has_value() && row.delta_rel.has_value()))
            throw Error(ErrorCode::parse_error, where + ": savings present iff the row is feasible");
        rows.push_back(row);
    }
    return rows;
}

std::string consensus_csv(const std::vector<ConsensusLabel>& labels) {
    std::string out = std::string(kConsensusHeader) + "\n";
    for (const ConsensusLabel& l : labels) {
        out += l.image_id + "," + l.defect_id + ",";
        if (l.agreed_severity) out += std::to_string(*l.agreed_severity);
        out += "," + std::string(to_string(binarize(l))) + "\n";
    }
    return out;
}

std::string agreement_csv(const std::vector<AnnotationRecord>& records) {
    std::set<std::string> ids;
    for (const auto& r : records) ids.insert(r.defect_id);
    std::string out = std::string(kAgreementHeader) + "\n";
    for (const std::string& id : ids) out += id + "," + csv::format_double(agreement_rate(records, id)) + "\n";
    return out;
}

std::string volumes_svg(const VolumePlan& plan, std::string_view title) {
    std::ostringstream o;
    svg_open(o, title);
    const double top = nice_ceiling(std::max({plan.n_gen, plan.n_aqa, plan.n_mqa}));
    y_axis(o, 0, top, "%.0f");
    const int plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
    const std::pair<const char*, double> bars[] = {{"GenAI", plan.n_gen}, {"AutoQA", plan.n_aqa}, {"ManualQA", plan.n_mqa}};
    const double slot = plot_w / 3.0;
    for (int i = 0; i < 3; ++i) {
        const double h = plot_h * bars[i].second / top;
        const double x = kLeft + slot * i + slot * 0.2;
        o << "<rect x=\"" << fmt("%.1f", x) << "\" y=\"" << fmt("%.1f", kHeight - kBottom - h) << "\" width=\""
          << fmt("%.1f", slot * 0.6) << "\" height=\"" << fmt("%.1f", h) << "\" fill=\"#4a7fb5\"/>\n";
        o << "<text x=\"" << fmt("%.1f", x + slot * 0.3) << "\" y=\"" << fmt("%.1f", kHeight - kBottom - h - 5)
          << "\" text-anchor=\"middle\">" << fmt("%.1f", bars[i].second) << "</text>\n";
        o << "<text x=\"" << fmt("%.1f", x + slot * 0.3) << "\" y=\"" << kHeight - kBottom + 18
          << "\" text-anchor=\"middle\">" << bars[i].first << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

std::string costs_svg(const std::vector<NamedCost>& rows, std::string_view title) {
    std::ostringstream o;
    svg_open(o, title);
    double max_total = 0;
    for (const auto& r : rows) max_total = std::max(max_total, r.cost.total.value());
    const double top = nice_ceiling(max_total);
    y_axis(o, 0, top, "%.0f");
    const int plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
    const char* colors[] = {"#8fbc8f", "#f0b35a", "#4a7fb5"};
    const double slot = rows.empty() ? plot_w : plot_w / static_cast<double>(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double parts[] = {rows[i].cost.gen.value(), rows[i].cost.aqa.value(), rows[i].cost.mqa.value()};
        const double x = kLeft + slot * i + slot * 0.2;
        double base = kHeight - kBottom;
        for (int k = 0; k < 3; ++k) {
            const double h = plot_h * parts[k] / top;
            base -= h;
            o << "<rect x=\"" << fmt("%.1f", x) << "\" y=\"" << fmt("%.1f", base) << "\" width=\""
              << fmt("%.1f", slot * 0.6) << "\" height=\"" << fmt("%.1f", h) << "\" fill=\"" << colors[k] << "\"/>\n";
        }
        o << "<text x=\"" << fmt("%.1f", x + slot * 0.3) << "\" y=\"" << fmt("%.1f", base - 5)
          << "\" text-anchor=\"middle\">" << format_currency(rows[i].cost.total) << "</text>\n";
        o << "<text x=\"" << fmt("%.1f", x + slot * 0.3) << "\" y=\"" << kHeight - kBottom + 18
          << "\" text-anchor=\"middle\">" << escape_xml(rows[i].config) << "</text>\n";
    }
    const char* names[] = {"GenAI", "AutoQA", "ManualQA"};
    for (int k = 0; k < 3; ++k) {
        const int x = kLeft + 10 + k * 110;
        o << "<rect x=\"" << x << "\" y=\"" << kHeight - 24 << "\" width=\"12\" height=\"12\" fill=\"" << colors[k]
          << "\"/>\n";
        o << "<text x=\"" << x + 16 << "\" y=\"" << kHeight - 14 << "\">" << names[k] << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

std::string sweep_svg(const std::vector<SweepRow>& rows, std::optional<double> break_even, std::string_view title) {
    std::ostringstream o;
    svg_open(o, title);
    double lo = 0, hi = 0;
    for (const auto& r : rows)
        if (r.delta_rel) {
            lo = std::min(lo, *r.delta_rel);
            hi = std::max(hi, *r.delta_rel);
        }
    if (lo < 0) lo = -nice_ceiling(-lo);
    hi = nice_ceiling(hi);
    y_axis(o, lo, hi, "%.2f");
    const int plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
    auto px = [&](double p) { return kLeft + plot_w * p; };
    auto py = [&](double d) { return kHeight - kBottom - plot_h * (d - lo) / (hi - lo); };

    o << "<line x1=\"" << kLeft << "\" y1=\"" << kHeight - kBottom << "\" x2=\"" << kWidth - kRight << "\" y2=\""
      << kHeight - kBottom << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 10; ++i)
        o << "<text x=\"" << fmt("%.1f", px(i / 10.0)) << "\" y=\"" << kHeight - kBottom + 16
          << "\" text-anchor=\"middle\">" << fmt("%.1f", i / 10.0) << "</text>\n";
    o << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - kBottom + 34
      << "\" text-anchor=\"middle\">AutoQA precision P(clean)</text>\n";
    if (lo < 0)
        o << "<line x1=\"" << kLeft << "\" y1=\"" << fmt("%.1f", py(0)) << "\" x2=\"" << kWidth - kRight << "\" y2=\""
          << fmt("%.1f", py(0)) << "\" stroke=\"#900\" stroke-dasharray=\"4 3\"/>\n";

    std::string points;
    auto flush = [&] {
        if (!points.empty())
            o << "<polyline fill=\"none\" stroke=\"#4a7fb5\" stroke-width=\"2\" points=\"" << points << "\"/>\n";
        points.clear();
    };
    for (const auto& r : rows) {
        if (!r.delta_rel) {
            flush();
            continue;
        }
        if (!points.empty()) points += ' ';
        points += fmt("%.2f", px(r.p_aqa_clean)) + "," + fmt("%.2f", py(*r.delta_rel));
    }
    flush();
    if (break_even) {
        o << "<circle cx=\"" << fmt("%.2f", px(*break_even)) << "\" cy=\"" << fmt("%.2f", py(0))
          << "\" r=\"4\" fill=\"#900\"/>\n";
        o << "<text x=\"" << fmt("%.2f", px(*break_even) + 6) << "\" y=\"" << fmt("%.2f", py(0) - 6) << "\">P* = "
          << format_probability(*break_even) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

std::optional<double> mqa_share(const CostBreakdown& cost) {
    if (!(cost.total.value() > 0)) return std::nullopt;
    return cost.mqa.value() / cost.total.value();
}

Json run_report(std::string_view command, const RunConfig& config) {
    Json j;
    j["tool"] = "qacost";
    j["version"] = QACOST_VERSION;
    j["command"] = std::string(command);
    j["config_name"] = config.name;
    j["seed"] = config.seed;
    Json echo = Json::array();
    for (const auto& [k, v] : config.entries) echo.push_back(Json::array({k, v}));
    j["config"] = echo;
    return j;
}

Json to_json(const StageRates& r) {
    return Json{{"p_gen_clean", r.p_gen_clean()}, {"y_aqa", r.y_aqa()}, {"p_aqa_clean", r.p_aqa_clean()}};
}

Json to_json(const VolumePlan& p) {
    return Json{{"mode", std::string(to_string(p.mode))}, {"n_gen", p.n_gen}, {"n_aqa", p.n_aqa}, {"n_mqa", p.n_mqa}};
}

Json to_json(const CostBreakdown& c) {
    return Json{{"gen", c.gen.value()}, {"aqa", c.aqa.value()}, {"mqa", c.mqa.value()}, {"total", c.total.value()}};
}

Json to_json(const SavingsReport& s) {
    return Json{{"baseline_total", s.baseline_total.value()},
                {"autoqa_total", s.autoqa_total.value()},
                {"delta_abs", s.delta_abs.value()},
                {"delta_rel", s.delta_rel}};
}

namespace {
Json summary_json(const Summary& s) {
    return Json{{"mean", s.mean}, {"stddev", s.stddev}, {"min", s.min}, {"max", s.max}};
}
}  // namespace

Json to_json(const SimReport& sim) {
    Json trials = Json::array();
    for (std::size_t i = 0; i < sim.trials.size(); ++i) {
        const TrialResult& t = sim.trials[i];
        Json row{{"trial", i},
                 {"n_gen", t.n_gen},
                 {"n_aqa", t.n_aqa},
                 {"n_mqa", t.n_mqa},
                 {"tp", t.counts.tp},
                 {"fp", t.counts.fp},
                 {"tn", t.counts.tn},
                 {"fn", t.counts.fn},
                 {"y_aqa", t.y_aqa}};
        row["p_aqa_clean"] = t.p_aqa_clean ? Json(*t.p_aqa_clean) : Json(nullptr);
        row["cost"] = to_json(t.cost);
        trials.push_back(std::move(row));
    }
    return Json{{"seed", sim.seed},
                {"trials", trials},
                {"summary",
                 {{"n_gen", summary_json(sim.n_gen)},
                  {"n_aqa", summary_json(sim.n_aqa)},
                  {"n_mqa", summary_json(sim.n_mqa)},
                  {"y_aqa", summary_json(sim.y_aqa)},
                  {"p_aqa_clean", summary_json(sim.p_aqa_clean)},
                  {"gen_cost", summary_json(sim.gen_cost)},
                  {"aqa_cost", summary_json(sim.aqa_cost)},
                  {"mqa_cost", summary_json(sim.mqa_cost)},
                  {"total_cost", summary_json(sim.total_cost)}}}};
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

std::filesystem::path write_output(const std::filesystem::path& dir, std::string_view name, std::string_view content) {
    const auto path = dir / std::string(name);
    csv::write_file(path, content);
    return path;
}

}  // namespace qacost::report
