#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <limits>

#include "qacost/config.hpp"
#include "qacost/csv.hpp"
#include "qacost/error.hpp"
#include "qacost/rng.hpp"

using namespace qacost;

namespace {

const std::filesystem::path kData = QACOST_TEST_DATA;

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected qacost::Error");
    return ErrorCode::invalid_argument;
}

std::string message_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

const char* kDirect = "rates.p_gen_clean = 0.187\nrates.y_aqa = 0.118\nrates.p_aqa_clean = 0.4\n";

}  // namespace

TEST_CASE("csv parsing") {
    const auto t = csv::parse("a,b\n1,2\n\n3,4\r\n", "a,b");
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[1][1] == "4");
    CHECK(t.line_numbers == std::vector<std::size_t>{2, 4});
    CHECK(csv::split_line("x,,y") == std::vector<std::string>{"x", "", "y"});
    CHECK(code_of([] { csv::parse("a,c\n", "a,b"); }) == ErrorCode::parse_error);
    CHECK(code_of([] { csv::parse("a,b\n1\n", "a,b"); }) == ErrorCode::parse_error);
    CHECK(code_of([] { csv::parse("", "a,b"); }) == ErrorCode::parse_error);
    CHECK(message_of([] { csv::parse("a,b\n1,2\n1\n", "a,b", "f.csv"); }).find("f.csv:3") != std::string::npos);
    CHECK(csv::trim("  x y \t") == "x y");
}

TEST_CASE("number formatting round trips") {
    CHECK(csv::format_double(0.1) == "0.1");
    CHECK(csv::format_double(1.0) == "1");
    CHECK(csv::format_double(-2.5e-7) == "-2.5e-07");
    rng::SplitMix64 g(3);
    for (int i = 0; i < 10000; ++i) {
        const double v = (g.uniform() - 0.5) * std::pow(10.0, static_cast<int>(g.next() % 20) - 10);
        CHECK(csv::parse_double(csv::format_double(v), "v") == v);
    }
    CHECK(code_of([] { csv::parse_double("1.5x", "v"); }) == ErrorCode::parse_error);
    CHECK(code_of([] { csv::parse_double("", "v"); }) == ErrorCode::parse_error);
    CHECK(code_of([] { csv::parse_integer("1.0", "n"); }) == ErrorCode::parse_error);
    CHECK(csv::parse_integer("-12", "n") == -12);
}

TEST_CASE("file io errors name the path") {
    CHECK(code_of([] { csv::read_file("/nonexistent/q.csv"); }) == ErrorCode::io_error);
    CHECK(message_of([] { csv::read_file("/nonexistent/q.csv"); }).find("/nonexistent/q.csv") != std::string::npos);
    const auto tmp = std::filesystem::temp_directory_path() / "qacost_csv_test" / "nested" / "f.txt";
    csv::write_file(tmp, "hello\n");
    CHECK(csv::read_file(tmp) == "hello\n");
    std::filesystem::remove_all(tmp.parent_path().parent_path());
}

TEST_CASE("config parsing") {
    const RunConfig c = parse_config(std::string("# comment\nname = x\n") + kDirect +
                                     "costs.aqa = 0.00041  # per image\nmode = ceiling\nsweep.range = 0.1:0.9:9\n"
                                     "seed = 7\nsim.trials = 5\nsim.stop = target_accepted\nsim.count = 1000\n"
                                     "reference.delta_rel = 0.5161\n");
    CHECK(c.name == "x");
    CHECK(*c.p_gen_clean == 0.187);
    CHECK(c.costs.aqa.value() == 0.00041);
    CHECK(c.costs.mqa.value() == 0.5);
    CHECK(c.mode == VolumeMode::ceiling);
    CHECK(c.sweep.steps == 9);
    CHECK(c.seed == 7);
    CHECK(c.sim_trials == 5);
    CHECK(c.sim_stop == SimStop::target_accepted);
    CHECK(*c.reference_delta_rel == 0.5161);
    REQUIRE(c.entries.size() == 12);
    CHECK(c.entries[0] == std::pair<std::string, std::string>{"name", "x"});
    CHECK(c.entries[4].second == "0.00041");

    const ResolvedRates r = resolve_rates(c);
    CHECK(r.rates.y_aqa() == 0.118);
}

TEST_CASE("config errors carry source and line") {
    auto err = [](const std::string& text) { return message_of([&] { parse_config(text, {}, "t.conf"); }); };
    CHECK(err(std::string(kDirect) + "colour = red\n").find("t.conf:4") != std::string::npos);
    CHECK(err(std::string(kDirect) + "seed = 1\nseed = 2\n").find("repeated") != std::string::npos);
    CHECK(err(std::string(kDirect) + "just words\n").find("t.conf:4") != std::string::npos);
    CHECK(err(std::string(kDirect) + "rates.y_aqa = 1.5\n").find("t.conf") != std::string::npos);
    CHECK(code_of([] { parse_config(std::string(kDirect) + "costs.mqa = -1\n"); }) == ErrorCode::parse_error);
    CHECK(code_of([] { parse_config(std::string(kDirect) + "sweep.range = 0:1:5\n"); }) == ErrorCode::parse_error);
    CHECK(code_of([] { parse_config(std::string(kDirect) + "sim.trials = 0\n"); }) == ErrorCode::parse_error);
    CHECK(code_of([] { parse_config(std::string(kDirect) + "mode = nearest\n"); }) == ErrorCode::parse_error);
}

TEST_CASE("exactly one rates source") {
    CHECK(code_of([] { parse_config("rates.p_gen_clean = 0.2\nrates.y_aqa = 0.1\n"); }) == ErrorCode::parse_error);
    CHECK(code_of([] { parse_config(std::string(kDirect) + "confusion.evals = e.csv\n"); }) == ErrorCode::parse_error);
    CHECK(code_of([] { parse_config("rates.source = confusion\n"); }) == ErrorCode::parse_error);
    CHECK(code_of([] { parse_config("rates.source = confusion\nconfusion.evals = e.csv\nrates.y_aqa = 0.1\n"); }) ==
          ErrorCode::parse_error);
    CHECK(code_of([] { parse_config("rates.source = cascade\ncascade.profiles = p.csv\n"); }) == ErrorCode::parse_error);
    CHECK(code_of([] {
              parse_config("rates.source = cascade\ncascade.profiles = p.csv\ncascade.detectors = a:AG\n"
                           "confusion.evals = e.csv\n");
          }) == ErrorCode::parse_error);
    CHECK(code_of([] { parse_config("rates.source = cascade\ncascade.profiles = p.csv\ncascade.detectors = aAG\n"); }) ==
          ErrorCode::parse_error);
    CHECK(code_of([] { parse_config("rates.source = sensors\n"); }) == ErrorCode::parse_error);
}

TEST_CASE("relative paths resolve against the config file") {
    const RunConfig c = parse_config("rates.source = confusion\nconfusion.evals = ../data/e.csv\n", "/tmp/cfg");
    CHECK(c.confusion_evals == std::filesystem::path("/tmp/cfg/../data/e.csv"));
    const RunConfig abs = parse_config("rates.source = confusion\nconfusion.evals = /x/e.csv\n", "/tmp/cfg");
    CHECK(abs.confusion_evals == std::filesystem::path("/x/e.csv"));
}

TEST_CASE("every bundled config loads and resolves") {
    int n = 0;
    for (const auto& entry : std::filesystem::directory_iterator(bundled_config_dir())) {
        if (entry.path().extension() != ".conf") continue;
        CAPTURE(entry.path().string());
        const RunConfig c = load_config(entry.path());
        CHECK(c.name == entry.path().stem().string());
        CHECK_NOTHROW(resolve_rates(c));
        ++n;
    }
    CHECK(n >= 8);
}

TEST_CASE("config lookup") {
    CHECK(resolve_config("paper_single_ag").filename() == "paper_single_ag.conf");
    const auto explicit_path = bundled_config_dir() / "paper_oracle.conf";
    CHECK(resolve_config(explicit_path.string()) == explicit_path);
    CHECK(code_of([] { resolve_config("no_such_config"); }) == ErrorCode::io_error);

    const auto dir = std::filesystem::temp_directory_path() / "qacost_cfg_lookup";
    csv::write_file(dir / "mine.conf", kDirect);
    ::setenv("QACOST_CONFIG_PATH", ("/nonexistent:" + dir.string()).c_str(), 1);
    CHECK(resolve_config("mine") == dir / "mine.conf");
    ::unsetenv("QACOST_CONFIG_PATH");
    CHECK(code_of([] { resolve_config("mine"); }) == ErrorCode::io_error);
    std::filesystem::remove_all(dir);
}

TEST_CASE("derived rates") {
    const RunConfig conf = load_config(resolve_config("example_confusion"));
    const StageRates r = resolve_rates(conf).rates;
    CHECK(r.y_aqa() == doctest::Approx(45.0 / 380));
    CHECK(r.p_aqa_clean() == doctest::Approx(0.4));

    const RunConfig casc = load_config(resolve_config("derived_cascade_ag"));
    const ResolvedRates rc = resolve_rates(casc);
    CHECK(rc.provenance.find("5 detectors") != std::string::npos);
    CHECK(rc.rates.y_aqa() > 0.0);
    CHECK(rc.rates.y_aqa() < 1.0);

    const auto table = load_detector_table(casc.cascade_profiles);
    CHECK(table.size() == 18);
    CHECK(table[0].profile.prevalence == doctest::Approx(0.04));
    CHECK(table[0].profile.pass_yield == 1.0);

    RunConfig bad = casc;
    bad.cascade_members = {{"scale_mismatch", "GPT"}};
    CHECK(code_of([&] { resolve_rates(bad); }) == ErrorCode::invalid_argument);
    RunConfig mix = casc;
    mix.p_gen_clean = 0.187;
    CHECK(code_of([&] { resolve_rates(mix); }) == ErrorCode::inconsistent_mix);
}
