#include <doctest.h>

#include <cmath>

#include "qacost/analysis.hpp"
#include "qacost/error.hpp"
#include "qacost/report.hpp"
#include "qacost/rng.hpp"

using namespace qacost;

namespace {

const UnitCosts kCosts{Currency{0.004}, Currency{0.0}, Currency{0.5}};
const StageRates kSingle(0.187, 0.118, 0.400);

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected qacost::Error");
    return ErrorCode::invalid_argument;
}

// Plain bisection on the sign of savings, used as an oracle for the closed-form root.
double bisect(const StageRates& base, const UnitCosts& c, double n) {
    double lo = 1e-9, hi = 1.0;
    auto f = [&](double p) { return savings_at_precision(base, p, c, n).delta_abs.value(); };
    REQUIRE(f(lo) < 0);
    REQUIRE(f(hi) > 0);
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("precision range") {
    const auto r = PrecisionRange::parse("0.05:1.0:96");
    CHECK(r.steps == 96);
    CHECK(r.at(0) == 0.05);
    CHECK(r.at(95) == 1.0);
    CHECK(r.at(1) == doctest::Approx(0.06));
    CHECK(PrecisionRange::parse("0.4:0.4:1").at(0) == 0.4);
    CHECK(code_of([] { PrecisionRange::parse("0.1:0.9"); }) == ErrorCode::parse_error);
    CHECK(code_of([] { PrecisionRange::parse("a:0.9:3"); }) == ErrorCode::parse_error);
    CHECK(code_of([] { PrecisionRange::parse("0:0.9:3"); }) == ErrorCode::invalid_argument);
    CHECK(code_of([] { PrecisionRange::parse("0.2:1.1:3"); }) == ErrorCode::invalid_argument);
    CHECK(code_of([] { PrecisionRange::parse("0.9:0.2:3"); }) == ErrorCode::invalid_argument);
    CHECK(code_of([] { PrecisionRange::parse("0.2:0.9:1"); }) == ErrorCode::invalid_argument);
    CHECK(code_of([] { PrecisionRange::parse("0.2:0.9:0"); }) == ErrorCode::invalid_argument);
}

TEST_CASE("sweep over the single-model base") {
    const auto rows = sweep_precision(kSingle, kCosts, 100, PrecisionRange::parse("0.05:1.0:96"));
    REQUIRE(rows.size() == 96);
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].p_aqa_clean > rows[i - 1].p_aqa_clean);
    for (const auto& r : rows) {
        CHECK(r.feasible);
        if (r.p_aqa_clean < 0.198) CHECK(*r.delta_abs < 0);
        if (r.p_aqa_clean > 0.199) CHECK(*r.delta_abs > 0);
    }
    // At P = 1 with y held at 0.118 only GenAI grows relative to the oracle.
    CHECK(*rows.back().delta_rel == doctest::Approx(0.8019).epsilon(1e-4));
    CHECK(*rows.back().delta_rel < savings(100, StageRates(0.187, 0.187, 1.0), kCosts, VolumeMode::expectation).delta_rel);

    const auto one = sweep_precision(kSingle, kCosts, 100, PrecisionRange::parse("0.4:0.4:1"));
    REQUIRE(one.size() == 1);
    CHECK(*one[0].delta_rel == savings(100, kSingle, kCosts, VolumeMode::expectation).delta_rel);
}

TEST_CASE("sweep marks infeasible points") {
    // y = 0.9 with 30% clean input confines precision to [2/9, 1/3].
    const auto rows = sweep_precision(StageRates(0.3, 0.9, 0.3), kCosts, 100, PrecisionRange::parse("0.1:1.0:10"));
    int feasible = 0;
    for (const auto& r : rows) {
        CHECK(r.feasible == r.delta_abs.has_value());
        CHECK(r.feasible == r.delta_rel.has_value());
        feasible += r.feasible;
        if (r.p_aqa_clean > 0.34 || r.p_aqa_clean < 0.22) CHECK_FALSE(r.feasible);
    }
    CHECK(feasible == 1);
}

TEST_CASE("harm regime straddles the clean rate when AutoQA is free") {
    const UnitCosts c{Currency{0.004}, Currency{0.0}, Currency{0.5}};
    const auto rows = sweep_precision(StageRates(0.187, 1.0, 0.187), c, 100, PrecisionRange::parse("0.15:0.25:11"));
    // With y = 1 only P = p_gen_clean is feasible; the identity row has zero savings.
    for (const auto& r : rows)
        if (r.feasible) CHECK(*r.delta_abs == doctest::Approx(0.0).epsilon(1e-12));

    const StageRates base(0.187, 0.5, 0.3);
    const auto grid = sweep_precision(base, c, 100, PrecisionRange::parse("0.1:0.5:41"));
    bool crossed = false;
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (*grid[i - 1].delta_abs < 0 && *grid[i].delta_abs > 0) crossed = true;
    CHECK(crossed);
}

TEST_CASE("break-even precision") {
    const double p = break_even_precision(kSingle, kCosts, 100);
    CHECK(std::abs(p - 0.198) < 0.001);
    CHECK(savings_at_precision(kSingle, 0.195, kCosts, 100).delta_abs.value() < 0);
    CHECK(savings_at_precision(kSingle, 0.200, kCosts, 100).delta_abs.value() > 0);
    CHECK(savings_at_precision(kSingle, p - 1e-6, kCosts, 100).delta_abs.value() < 0);
    CHECK(savings_at_precision(kSingle, p + 1e-6, kCosts, 100).delta_abs.value() > 0);
    CHECK(std::abs(savings_at_precision(kSingle, p, kCosts, 100).delta_rel) < 1e-8);
    CHECK(p == doctest::Approx(bisect(kSingle, kCosts, 100)).epsilon(1e-12));

    // Only the ManualQA term remains: the root is the clean rate itself.
    for (double c : {0.01, 0.5, 7.0})
        CHECK(break_even_precision(kSingle, UnitCosts{Currency{0}, Currency{0}, Currency{c}}, 100) ==
              doctest::Approx(0.187).epsilon(1e-14));
}

TEST_CASE("break-even agrees with bisection on random bases") {
    rng::SplitMix64 g(99);
    int n = 0;
    while (n < 300) {
        const StageRates base = StageRates::check(g.uniform(0.02, 0.9), g.uniform(0.005, 1.0), 0.5).rates;
        const UnitCosts c{Currency{g.uniform(0.0, 0.05)}, Currency{g.uniform(0.0, 0.01)}, Currency{g.uniform(0.05, 2.0)}};
        double p;
        try {
            p = break_even_precision(base, c, 100);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::no_break_even);
            CHECK(savings_at_precision(base, 1.0, c, 100).delta_abs.value() <= 0);
            continue;
        }
        CHECK(p == doctest::Approx(bisect(base, c, 100)).epsilon(1e-9));
        ++n;
    }
}

TEST_CASE("no break-even") {
    // A low-yield filter: savings stay negative even at P = 1.
    const StageRates weak(0.5, 0.002, 0.5);
    CHECK(code_of([&] { break_even_precision(weak, kCosts, 100); }) == ErrorCode::no_break_even);
    CHECK(code_of([] { break_even_precision(kSingle, UnitCosts{}, 100); }) == ErrorCode::no_break_even);
}

TEST_CASE("sweep CSV round trip") {
    const auto rows = sweep_precision(StageRates(0.3, 0.9, 0.3), kCosts, 100, PrecisionRange::parse("0.05:1.0:96"));
    const std::string text = report::sweep_csv(rows);
    CHECK(text.rfind("p_aqa_clean,delta_abs,delta_rel,feasible\n", 0) == 0);
    const auto back = report::parse_sweep_csv(text);
    REQUIRE(back.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) CHECK(back[i] == rows[i]);
    CHECK(report::sweep_csv({}) == "p_aqa_clean,delta_abs,delta_rel,feasible\n");
    CHECK_THROWS_AS(report::parse_sweep_csv("p_aqa_clean,delta_abs,delta_rel,feasible\n0.5,,,true\n"), Error);
    CHECK_THROWS_AS(report::parse_sweep_csv("p_aqa_clean,delta_abs,delta_rel,feasible\n0.5,1,1,false\n"), Error);
}
