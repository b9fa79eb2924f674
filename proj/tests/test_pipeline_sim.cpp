#include <doctest.h>

#include <cmath>

#include "qacost/error.hpp"
#include "qacost/pipeline_sim.hpp"
#include "qacost/rng.hpp"

using namespace qacost;

namespace {

const UnitCosts kCosts{Currency{0.004}, Currency{0.0}, Currency{0.5}};

SimConfig single_ag(std::uint64_t n_gen, std::uint32_t trials = 3) {
    SimConfig c;
    c.p_gen_clean = 0.187;
    c.classifier = to_conditional(StageRates(0.187, 0.118, 0.400));
    c.costs = kCosts;
    c.stop_rule = FixedGenerated{n_gen};
    c.seed = 42;
    c.trials = trials;
    return c;
}

}  // namespace

TEST_CASE("conditional inversion") {
    const auto c = to_conditional(StageRates(0.187, 0.118, 0.400));
    CHECK(c.pass_given_clean == doctest::Approx(0.252406).epsilon(1e-5));
    CHECK(c.pass_given_defect == doctest::Approx(0.087085).epsilon(1e-5));

    const auto o = to_conditional(StageRates(0.187, 0.187, 1.0));
    CHECK(o.pass_given_clean == doctest::Approx(1.0));
    CHECK(o.pass_given_defect == 0.0);

    const StageRates back = from_conditional({1.0, 0.0}, 0.187);
    CHECK(back.y_aqa() == doctest::Approx(0.187));
    CHECK(back.p_aqa_clean() == 1.0);

    const StageRates coin = from_conditional({0.5, 0.5}, 0.3);
    CHECK(coin.y_aqa() == doctest::Approx(0.5));
    CHECK(coin.p_aqa_clean() == doctest::Approx(0.3));

    const StageRates rt = from_conditional({0.25241, 0.08709}, 0.187);
    CHECK(rt.y_aqa() == doctest::Approx(0.118).epsilon(1e-4));
    CHECK(rt.p_aqa_clean() == doctest::Approx(0.400).epsilon(1e-4));

    CHECK_THROWS_AS(from_conditional({0.0, 0.0}, 0.4), Error);
    try {
        from_conditional({0.0, 0.0}, 0.4);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::degenerate_yield);
    }
    CHECK_THROWS_AS(to_conditional(StageRates(0.0, 0.0, 0.0)), Error);
}

TEST_CASE("conditional round trip over random rates") {
    rng::SplitMix64 g(11);
    for (int i = 0; i < 1000; ++i) {
        const double pg = g.uniform(0.01, 0.99);
        const ClassifierConditional c{g.uniform(), g.uniform()};
        if (pg * c.pass_given_clean + (1 - pg) * c.pass_given_defect < 1e-6) continue;
        const StageRates r = from_conditional(c, pg);
        const StageRates back = from_conditional(to_conditional(r), pg);
        CHECK(back.y_aqa() == doctest::Approx(r.y_aqa()).epsilon(1e-12));
        CHECK(back.p_aqa_clean() == doctest::Approx(r.p_aqa_clean()).epsilon(1e-12));
    }
}

TEST_CASE("fixed generated run tracks the closed form") {
    const SimReport rep = simulate(single_ag(1'000'000));
    REQUIRE(rep.trials.size() == 3);
    CHECK(rep.seed == 42);
    CHECK(std::abs(rep.y_aqa.mean / 0.118 - 1.0) < 0.005);
    CHECK(std::abs(rep.n_mqa.mean / 47'200.0 - 1.0) < 0.01);
    for (const TrialResult& t : rep.trials) {
        CHECK(t.n_gen == 1'000'000);
        CHECK(t.n_gen >= t.n_aqa);
        CHECK(t.n_aqa >= t.n_mqa);
        CHECK(t.counts.tp + t.counts.fp == t.n_aqa);
        CHECK(t.counts.total() == t.n_gen);
        CHECK(t.cost.total.value() == t.cost.gen.value() + t.cost.aqa.value() + t.cost.mqa.value());
    }
    CHECK(rep.n_mqa.mean >= rep.n_mqa.min);
    CHECK(rep.n_mqa.mean <= rep.n_mqa.max);
}

TEST_CASE("oracle filter accepts exactly the clean draws") {
    SimConfig c = single_ag(10'000, 2);
    c.classifier = {1.0, 0.0};
    const SimReport rep = simulate(c);
    for (std::uint32_t t = 0; t < 2; ++t) {
        const auto outcomes = trial_outcomes(c, t, 10'000);
        std::uint64_t clean = 0;
        for (const auto& o : outcomes) clean += o.clean;
        CHECK(rep.trials[t].n_mqa == clean);
        REQUIRE(rep.trials[t].p_aqa_clean);
        CHECK(*rep.trials[t].p_aqa_clean == 1.0);
    }
}

TEST_CASE("target accepted stops exactly at the target") {
    SimConfig c;
    c.p_gen_clean = 1.0;
    c.classifier = {1.0, 0.0};
    c.costs = kCosts;
    c.stop_rule = TargetAccepted{100};
    c.trials = 1;
    const SimReport rep = simulate(c);
    CHECK(rep.trials[0].n_gen == 100);
    CHECK(rep.trials[0].cost.total.value() == doctest::Approx(100 * (0.004 + 0.5)));

    SimConfig s = single_ag(0, 4);
    s.stop_rule = TargetAccepted{5000};
    s.batch_size = 1000;
    const SimReport r2 = simulate(s);
    for (const auto& t : r2.trials) CHECK(t.n_mqa == 5000);
    // Batch size does not change where a trial stops.
    s.batch_size = 37;
    const SimReport r3 = simulate(s);
    for (std::size_t i = 0; i < r2.trials.size(); ++i) CHECK(r3.trials[i].n_gen == r2.trials[i].n_gen);

    // The last generated image is the one that completed the target.
    const auto last = trial_outcomes(s, 0, r2.trials[0].n_gen).back();
    CHECK(last.clean);
    CHECK(last.passed);
}

TEST_CASE("generation cap") {
    SimConfig c = single_ag(0, 1);
    c.stop_rule = TargetAccepted{1000};
    c.generation_cap = 5000;
    try {
        simulate(c);
        FAIL("expected budget_exceeded");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::budget_exceeded);
    }
}

TEST_CASE("config validation") {
    SimConfig c = single_ag(10);
    c.trials = 0;
    CHECK_THROWS_AS(simulate(c), Error);
    c = single_ag(0);
    CHECK_THROWS_AS(simulate(c), Error);
    c = single_ag(10);
    c.classifier.pass_given_clean = 1.5;
    CHECK_THROWS_AS(simulate(c), Error);
}

TEST_CASE("results independent of threads and kernel") {
    SimConfig c = single_ag(200'003, 7);
    c.stop_rule = FixedGenerated{200'003};
    const SimReport base = simulate(c, {1, simd::Isa::scalar});
    for (unsigned threads : {1u, 2u, 3u, 8u}) {
        for (simd::Isa isa : {simd::Isa::scalar, simd::Isa::avx2}) {
            if (!simd::isa_available(isa)) continue;
            const SimReport r = simulate(c, {threads, isa});
            for (std::size_t i = 0; i < r.trials.size(); ++i) {
                CHECK(r.trials[i].counts == base.trials[i].counts);
                CHECK(r.trials[i].cost.total == base.trials[i].cost.total);
            }
            CHECK(r.total_cost.mean == base.total_cost.mean);
            CHECK(r.total_cost.stddev == base.total_cost.stddev);
        }
    }
    // Same for the target-accepted path, which replays a partial batch.
    c.stop_rule = TargetAccepted{3000};
    const SimReport t1 = simulate(c, {1, simd::Isa::scalar});
    const SimReport t2 = simulate(c, {4, std::nullopt});
    for (std::size_t i = 0; i < t1.trials.size(); ++i) CHECK(t1.trials[i].counts == t2.trials[i].counts);
}

TEST_CASE("summary statistics") {
    const Summary s = Summary::of({1.0, 2.0, 3.0, 4.0});
    CHECK(s.mean == 2.5);
    CHECK(s.stddev == doctest::Approx(std::sqrt(5.0 / 3.0)));
    CHECK(s.min == 1.0);
    CHECK(s.max == 4.0);
    const Summary one = Summary::of({0.1});
    CHECK(one.stddev == 0.0);
    const Summary same = Summary::of({0.1, 0.1, 0.1});
    CHECK(same.mean == 0.1);
}
