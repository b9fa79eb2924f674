#include <doctest.h>

#include <cmath>

#include "qacost/cost_model.hpp"
#include "qacost/error.hpp"
#include "qacost/rng.hpp"

using namespace qacost;

namespace {

const UnitCosts kCosts{Currency{0.004}, Currency{0.0}, Currency{0.5}};

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected qacost::Error");
    return ErrorCode::invalid_argument;
}

// Random feasible rates: draw the two conditionals, then invert.
StageRates random_rates(rng::SplitMix64& g) {
    for (;;) {
        const double pg = g.uniform(0.01, 0.99);
        const double a = g.uniform();  // pass | clean
        const double b = g.uniform();  // pass | defect
        const double y = pg * a + (1 - pg) * b;
        if (y <= 1e-6) continue;
        const double p = std::min(1.0, pg * a / y);
        auto c = StageRates::check(pg, y, p);
        if (c.feasible()) return c.rates;
    }
}

}  // namespace

TEST_CASE("overall yield") {
    CHECK(overall_yield(StageRates(0.187, 0.118, 0.400)) == doctest::Approx(0.0472).epsilon(1e-12));
    CHECK(overall_yield(StageRates(0.187, 0.239, 0.297)) == doctest::Approx(0.070983).epsilon(1e-12));
    for (double p : {0.0, 0.3, 0.187, 1.0}) CHECK(overall_yield(StageRates(p, 1.0, p)) == p);
}

TEST_CASE("stage rates reject invalid and infeasible triples") {
    CHECK(code_of([] { StageRates(1.2, 0.5, 0.5); }) == ErrorCode::invalid_argument);
    CHECK(code_of([] { StageRates(0.5, -0.1, 0.5); }) == ErrorCode::invalid_argument);
    CHECK(code_of([] { StageRates(0.5, 0.5, std::nan("")); }) == ErrorCode::invalid_argument);
    // Passing 90%-clean output from 50%-clean input at full yield is impossible.
    CHECK(code_of([] { StageRates(0.5, 1.0, 0.9); }) == ErrorCode::infeasible);
    // Too many defects passed.
    CHECK(code_of([] { StageRates(0.9, 1.0, 0.5); }) == ErrorCode::infeasible);

    const auto c = StageRates::check(0.5, 1.0, 0.9);
    CHECK_FALSE(c.feasible());
    CHECK(c.infeasibility->find("p_gen_clean") != std::string::npos);
    CHECK(c.rates.p_aqa_clean() == 0.9);
    CHECK(StageRates::check(0.187, 0.118, 0.4).feasible());
}

TEST_CASE("volumes from target") {
    const StageRates single(0.187, 0.118, 0.400);
    const VolumePlan ceil_plan = volumes_from_target(100, single, VolumeMode::ceiling);
    CHECK(ceil_plan.n_aqa == 250);
    CHECK(ceil_plan.n_gen == 2119);
    CHECK(ceil_plan.n_mqa == 100);

    const VolumePlan oracle = volumes_from_target(100, StageRates(0.187, 0.187, 1.0), VolumeMode::expectation);
    CHECK(oracle.n_aqa == doctest::Approx(100));
    CHECK(oracle.n_gen == doctest::Approx(534.76).epsilon(1e-4));

    for (auto mode : {VolumeMode::expectation, VolumeMode::ceiling}) {
        const VolumePlan id = volumes_from_target(37, StageRates(1, 1, 1), mode);
        CHECK(id.n_gen == 37);
        CHECK(id.n_aqa == 37);
        CHECK(id.n_mqa == 37);
    }
    CHECK(code_of([] { volumes_from_target(100, StageRates(0.5, 0.0, 0.5), VolumeMode::expectation); }) ==
          ErrorCode::zero_yield);
    CHECK(code_of([] { volumes_from_target(0, StageRates(0.5, 0.5, 0.5), VolumeMode::expectation); }) ==
          ErrorCode::invalid_argument);
}

TEST_CASE("volumes from generated") {
    const VolumePlan p = volumes_from_generated(380, StageRates(0.187, 0.118, 0.400));
    CHECK(p.n_aqa == doctest::Approx(44.84));
    CHECK(p.n_mqa == doctest::Approx(17.936));
    const VolumePlan z = volumes_from_generated(0, StageRates(0.3, 0.3, 0.3));
    CHECK(z.n_gen == 0);
    CHECK(z.n_aqa == 0);
    CHECK(z.n_mqa == 0);
    const VolumePlan h = volumes_from_generated(1000, StageRates(0.5, 0.5, 0.5));
    CHECK(h.n_aqa == 500);
    CHECK(h.n_mqa == 250);
}

TEST_CASE("pipeline and baseline cost examples") {
    const CostBreakdown single = pipeline_cost(100, StageRates(0.187, 0.118, 0.400), kCosts, VolumeMode::expectation);
    CHECK(single.gen.value() == doctest::Approx(8.4746).epsilon(1e-4));
    CHECK(single.aqa.value() == 0.0);
    CHECK(single.mqa.value() == doctest::Approx(125.0));
    CHECK(single.total.value() == doctest::Approx(133.4746).epsilon(1e-5));
    CHECK(format_currency(single.total) == "133.47");

    const UnitCosts np{Currency{0.004}, Currency{0.00041}, Currency{0.5}};
    const CostBreakdown ag_np = pipeline_cost(100, StageRates(0.187, 0.153, 0.241), np, VolumeMode::expectation);
    CHECK(format_currency(ag_np.total) == "219.43");

    const CostBreakdown zero = pipeline_cost(10, StageRates(1, 1, 1), UnitCosts{}, VolumeMode::expectation);
    CHECK(zero.total.value() == 0.0);

    CHECK(format_currency(baseline_cost(100, 0.187, kCosts, VolumeMode::expectation).total) == "269.52");
    CHECK(baseline_cost(100, 1.0, kCosts, VolumeMode::expectation).total.value() == doctest::Approx(50.4));
    CHECK(format_currency(baseline_cost(1, 0.0187, kCosts, VolumeMode::expectation).total) == "26.95");
    CHECK(code_of([] { baseline_cost(1, 0.0, kCosts, VolumeMode::expectation); }) == ErrorCode::zero_yield);
}

TEST_CASE("savings examples") {
    const SavingsReport s = savings(100, StageRates(0.187, 0.118, 0.400), kCosts, VolumeMode::expectation);
    CHECK(s.delta_rel == doctest::Approx(0.504767).epsilon(1e-5));
    CHECK(s.delta_abs.value() == doctest::Approx(s.baseline_total.value() - s.autoqa_total.value()));

    const SavingsReport same = savings(100, StageRates(0.187, 1.0, 0.187), kCosts, VolumeMode::expectation);
    CHECK(same.delta_abs.value() == 0.0);
    CHECK(same.delta_rel == 0.0);

    const SavingsReport oracle = savings(100, StageRates(0.187, 0.187, 1.0), kCosts, VolumeMode::expectation);
    CHECK(oracle.delta_rel == doctest::Approx(0.8065).epsilon(1e-4));
}

TEST_CASE("currency arithmetic and formatting") {
    const Currency a{1.005}, b{2.0};
    CHECK((a + b).value() == doctest::Approx(3.005));
    CHECK((b - a).value() == doctest::Approx(0.995));
    CHECK((a * 2.0).value() == doctest::Approx(2.01));
    CHECK(b / Currency{4.0} == 0.5);
    CHECK(format_currency(Currency{-6.5712}) == "-6.57");
    CHECK(format_probability(0.50476) == "0.5048");
    CHECK(code_of([] { UnitCosts{Currency{-1}, Currency{0}, Currency{0}}.validate(); }) == ErrorCode::invalid_argument);
    CHECK(code_of([] { parse_volume_mode("rounded"); }) == ErrorCode::parse_error);
}

TEST_CASE("properties over random feasible rates") {
    rng::SplitMix64 g(0x5eed);
    int checked = 0;
    for (int i = 0; i < 2000; ++i) {
        const StageRates r = random_rates(g);
        const UnitCosts c{Currency{g.uniform(0.0, 0.05)}, Currency{g.uniform(0.0, 0.01)}, Currency{g.uniform(0.01, 2.0)}};
        const double n = g.uniform(1.0, 1e4);
        const double y = overall_yield(r);

        // Cost decomposition.
        const CostBreakdown e = pipeline_cost(n, r, c, VolumeMode::expectation);
        const double expected =
            n * (c.gen.value() / y + c.aqa.value() / y + c.mqa.value() / r.p_aqa_clean());
        CHECK(e.total.value() == doctest::Approx(expected).epsilon(1e-12));
        CHECK(e.total.value() == e.gen.value() + e.aqa.value() + e.mqa.value());
        CHECK(y <= r.p_gen_clean() + kFeasibilitySlack);

        // Volume ordering and ceiling dominance.
        const VolumePlan ve = volumes_from_target(n, r, VolumeMode::expectation);
        CHECK(ve.n_gen >= ve.n_aqa);
        CHECK(ve.n_aqa >= ve.n_mqa);
        const CostBreakdown ce = pipeline_cost(n, r, c, VolumeMode::ceiling);
        CHECK(ce.total.value() >= e.total.value() - 1e-9);
        CHECK(ce.total.value() - e.total.value() < c.gen.value() + c.aqa.value() + c.mqa.value() + 1e-9);

        // Scale linearity.
        const double k = g.uniform(0.1, 10.0);
        const SavingsReport s1 = savings(n, r, c, VolumeMode::expectation);
        const SavingsReport sk = savings(k * n, r, c, VolumeMode::expectation);
        CHECK(sk.delta_abs.value() == doctest::Approx(k * s1.delta_abs.value()).epsilon(1e-9).scale(s1.baseline_total.value()));
        CHECK(s1.delta_rel <= 1.0);
        CHECK((s1.delta_rel > 0) == (s1.delta_abs.value() > 0));
        ++checked;
    }
    CHECK(checked == 2000);
}

TEST_CASE("delta_rel increases with AutoQA precision") {
    rng::SplitMix64 g(77);
    int samples = 0;
    while (samples < 1000) {
        const double pg = g.uniform(0.02, 0.95);
        const double y = g.uniform(0.01, 1.0);
        // Feasible precision interval for this (pg, y).
        const double lo = std::max(0.0, 1.0 - (1.0 - pg) / y);
        const double hi = std::min(1.0, pg / y);
        if (hi - lo < 1e-6 || hi <= 0) continue;
        double p1 = g.uniform(lo, hi), p2 = g.uniform(lo, hi);
        if (p1 == p2 || std::min(p1, p2) <= 0) continue;
        if (p1 > p2) std::swap(p1, p2);
        const UnitCosts c{Currency{g.uniform(0.0, 0.05)}, Currency{g.uniform(0.0, 0.01)}, Currency{g.uniform(0.01, 2.0)}};
        const auto a = savings(100, StageRates::check(pg, y, p1).rates, c, VolumeMode::expectation);
        const auto b = savings(100, StageRates::check(pg, y, p2).rates, c, VolumeMode::expectation);
        CHECK(a.delta_rel < b.delta_rel);
        ++samples;
    }
}
