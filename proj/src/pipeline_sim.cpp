#include "qacost/pipeline_sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "qacost/error.hpp"

namespace qacost {

namespace {

bool is_probability(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

std::string num(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

simd::OutcomeThresholds thresholds_of(const SimConfig& c) {
    return simd::OutcomeThresholds::from_probabilities(c.p_gen_clean, c.classifier.pass_given_clean,
                                                       c.classifier.pass_given_defect);
}

TrialResult finish(const SimConfig& config, const simd::OutcomeCounts& counts) {
    TrialResult r;
    r.counts = counts;
    r.n_gen = counts.total();
    r.n_aqa = counts.passed();
    r.n_mqa = counts.tp;
    r.y_aqa = r.n_gen > 0 ? static_cast<double>(r.n_aqa) / static_cast<double>(r.n_gen) : 0.0;
    if (r.n_aqa > 0) r.p_aqa_clean = static_cast<double>(counts.tp) / static_cast<double>(r.n_aqa);
    const auto n_gen = static_cast<double>(r.n_gen);
    r.cost = CostBreakdown::from_components(config.costs.gen * n_gen, config.costs.aqa * n_gen,
                                            config.costs.mqa * static_cast<double>(r.n_aqa));
    return r;
}

}  // namespace

void ClassifierConditional::validate() const {
    if (!is_probability(pass_given_clean) || !is_probability(pass_given_defect))
        throw Error(ErrorCode::invalid_argument, "classifier pass probabilities must lie in [0,1]");
}

ClassifierConditional to_conditional(const StageRates& rates) {
    const double pg = rates.p_gen_clean();
    if (!(pg > 0.0 && pg < 1.0))
        throw Error(ErrorCode::invalid_argument,
                    "to_conditional requires 0 < p_gen_clean < 1, got " + num(pg));
    ClassifierConditional c{rates.y_aqa() * rates.p_aqa_clean() / pg,
                            rates.y_aqa() * (1.0 - rates.p_aqa_clean()) / (1.0 - pg)};
    if (c.pass_given_clean > 1.0 + kFeasibilitySlack)
        throw Error(ErrorCode::infeasible,
                    "pass_given_clean = y_aqa*p_aqa_clean/p_gen_clean = " + num(c.pass_given_clean) +
                        " exceeds 1");
    if (c.pass_given_defect > 1.0 + kFeasibilitySlack)
        throw Error(ErrorCode::infeasible,
                    "pass_given_defect = y_aqa*(1-p_aqa_clean)/(1-p_gen_clean) = " +
                        num(c.pass_given_defect) + " exceeds 1");
    c.pass_given_clean = std::min(c.pass_given_clean, 1.0);
    c.pass_given_defect = std::min(c.pass_given_defect, 1.0);
    return c;
}

StageRates from_conditional(const ClassifierConditional& cond, double p_gen_clean) {
    cond.validate();
    if (!is_probability(p_gen_clean))
        throw Error(ErrorCode::invalid_argument, "p_gen_clean must lie in [0,1]");
    const double clean_pass = p_gen_clean * cond.pass_given_clean;
    const double y = clean_pass + (1.0 - p_gen_clean) * cond.pass_given_defect;
    if (y <= 0.0)
        throw Error(ErrorCode::degenerate_yield,
                    "implied y_aqa is zero: AutoQA passes nothing, so p_aqa_clean is undefined");
    return StageRates(p_gen_clean, y, std::min(clean_pass / y, 1.0));
}

void SimConfig::validate() const {
    if (!is_probability(p_gen_clean))
        throw Error(ErrorCode::invalid_argument, "p_gen_clean must lie in [0,1]");
    classifier.validate();
    costs.validate();
    if (trials < 1) throw Error(ErrorCode::invalid_argument, "trials must be >= 1");
    if (batch_size < 1) throw Error(ErrorCode::invalid_argument, "batch_size must be >= 1");
    const std::uint64_t param =
        std::visit([](const auto& rule) -> std::uint64_t {
            if constexpr (std::is_same_v<std::decay_t<decltype(rule)>, FixedGenerated>)
                return rule.n_gen;
            else
                return rule.n_mqa;
        }, stop_rule);
    if (param == 0) throw Error(ErrorCode::invalid_argument, "stop rule parameter must be > 0");
}

Summary Summary::of(const std::vector<double>& values) {
    Summary s;
    if (values.empty()) return s;
    const auto n = static_cast<double>(values.size());
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    s.min = *lo;
    s.max = *hi;
    // The running sum can land a hair outside [min,max] for equal values.
    s.mean = std::clamp(s.mean, s.min, s.max);
    if (values.size() > 1) {
        double ss = 0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(ss / (n - 1.0));
    }
    return s;
}

TrialResult simulate_trial(const SimConfig& config, std::uint32_t trial, simd::Isa isa) {
    const rng::StreamId stream{config.seed, trial};
    const simd::OutcomeThresholds t = thresholds_of(config);

    if (const auto* fixed = std::get_if<FixedGenerated>(&config.stop_rule))
        return finish(config, simd::count_outcomes(isa, stream, 0, fixed->n_gen, t));

    const std::uint64_t target = std::get<TargetAccepted>(config.stop_rule).n_mqa;
    simd::OutcomeCounts total;
    std::uint64_t next = 0;
    while (total.tp < target) {
        if (next >= config.generation_cap)
            throw Error(ErrorCode::budget_exceeded,
                        "target of " + std::to_string(target) + " accepted images not reached within " +
                            std::to_string(config.generation_cap) + " generated images");
        const std::uint64_t batch = std::min(config.batch_size, config.generation_cap - next);
        const simd::OutcomeCounts counts = simd::count_outcomes(isa, stream, next, batch, t);
        if (total.tp + counts.tp < target) {
            total += counts;
            next += batch;
            continue;
        }
        // The boundary falls inside this batch: replay it image by image and
        // stop right after the image that completes the target.
        for (std::uint64_t i = next; total.tp < target; ++i) {
            const simd::ImageOutcome o = simd::image_outcome(stream, i, t);
            if (o.clean) {
                if (o.passed) ++total.tp; else ++total.fn;
            } else {
                if (o.passed) ++total.fp; else ++total.tn;
            }
        }
    }
    return finish(config, total);
}

std::vector<simd::ImageOutcome> trial_outcomes(const SimConfig& config, std::uint32_t trial,
                                               std::uint64_t n) {
    config.validate();
    const rng::StreamId stream{config.seed, trial};
    const simd::OutcomeThresholds t = thresholds_of(config);
    std::vector<simd::ImageOutcome> out;
    out.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) out.push_back(simd::image_outcome(stream, i, t));
    return out;
}

SimReport simulate(const SimConfig& config, const SimOptions& options) {
    config.validate();
    const simd::Isa isa = options.isa.value_or(simd::active_isa());

    SimReport report;
    report.seed = config.seed;
    report.trials.resize(config.trials);

    unsigned workers = options.threads != 0 ? options.threads : std::thread::hardware_concurrency();
    workers = std::clamp(workers, 1u, config.trials);

    std::atomic<std::uint32_t> next_trial{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (std::uint32_t t = next_trial++; t < config.trials; t = next_trial++) {
            try {
                report.trials[t] = simulate_trial(config, t, isa);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next_trial = config.trials;
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);

    auto collect = [&](auto field) {
        std::vector<double> v;
        v.reserve(report.trials.size());
        for (const TrialResult& r : report.trials) field(r, v);
        return Summary::of(v);
    };
    report.n_gen = collect([](const TrialResult& r, auto& v) { v.push_back(static_cast<double>(r.n_gen)); });
    report.n_aqa = collect([](const TrialResult& r, auto& v) { v.push_back(static_cast<double>(r.n_aqa)); });
    report.n_mqa = collect([](const TrialResult& r, auto& v) { v.push_back(static_cast<double>(r.n_mqa)); });
    report.y_aqa = collect([](const TrialResult& r, auto& v) { v.push_back(r.y_aqa); });
    report.p_aqa_clean = collect([](const TrialResult& r, auto& v) {
        if (r.p_aqa_clean) v.push_back(*r.p_aqa_clean);
    });
    report.gen_cost = collect([](const TrialResult& r, auto& v) { v.push_back(r.cost.gen.value()); });
    report.aqa_cost = collect([](const TrialResult& r, auto& v) { v.push_back(r.cost.aqa.value()); });
    report.mqa_cost = collect([](const TrialResult& r, auto& v) { v.push_back(r.cost.mqa.value()); });
    report.total_cost = collect([](const TrialResult& r, auto& v) { v.push_back(r.cost.total.value()); });
    return report;
}

}  // namespace qacost
