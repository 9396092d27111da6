#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "tomolab/experiments.hpp"

using namespace tomolab;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    std::ofstream out(name, std::ios::binary);
    out << content;
    return name;
}

std::string read_all(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("experiment names round trip") {
    for (ExperimentKind kind :
         {ExperimentKind::RateSweep, ExperimentKind::AdaptiveVsNonadaptive,
          ExperimentKind::MomentCheck, ExperimentKind::Tilt, ExperimentKind::VolumeRatio,
          ExperimentKind::Certificates}) {
        CHECK(parse_experiment_name(experiment_name(kind)) == kind);
    }
    CHECK_THROWS_AS(parse_experiment_name("bogus"), std::invalid_argument);
}

TEST_CASE("default configs carry the published scales") {
    const ExperimentConfig rate = default_config(ExperimentKind::RateSweep);
    CHECK(rate.d == 8);
    CHECK(rate.trials == 50);
    REQUIRE(rate.n_grid.size() == 7);
    CHECK(rate.n_grid.front() == 1024);
    CHECK(rate.n_grid.back() == 65536);

    const ExperimentConfig avn = default_config(ExperimentKind::AdaptiveVsNonadaptive);
    CHECK(avn.d == 4);
    CHECK(avn.trials == 30);
    CHECK(avn.n_grid.front() == 8192);
    CHECK(avn.n_grid.back() == 131072);
    CHECK(avn.gamma == doctest::Approx(1.0 / 16.0));

    CHECK(default_config(ExperimentKind::MomentCheck).mc_samples == 100000);
    CHECK(default_config(ExperimentKind::Tilt).mc_samples == 10000);
    CHECK(default_config(ExperimentKind::Tilt).epsilon == doctest::Approx(0.05));
    CHECK(default_config(ExperimentKind::Certificates).trials == 1000);
}

TEST_CASE("config JSON parsing honors overrides and aliases") {
    const ExperimentConfig cfg = parse_config_json(
        "{\"experiment\":\"rate-sweep\",\"d\":4,\"n-grid\":[100,200,400],"
        "\"trials\":3,\"seed\":99,\"output\":\"out.csv\",\"delta\":0.1}");
    CHECK(cfg.experiment == ExperimentKind::RateSweep);
    CHECK(cfg.d == 4);
    REQUIRE(cfg.n_grid.size() == 3);
    CHECK(cfg.n_grid[1] == 200);
    CHECK(cfg.trials == 3);
    CHECK(cfg.seed == 99);
    CHECK(cfg.output == "out.csv");
    CHECK(cfg.delta == doctest::Approx(0.1));

    // n_grid is accepted as an alias for n-grid.
    const ExperimentConfig alias =
        parse_config_json("{\"experiment\":\"rate-sweep\",\"n_grid\":[10,20]}");
    CHECK(alias.n_grid.size() == 2);
}

TEST_CASE("config JSON parsing rejects malformed inputs by name") {
    CHECK_THROWS_WITH_AS(parse_config_json("{\"d\":4}"), doctest::Contains("experiment"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        parse_config_json("{\"experiment\":\"rate-sweep\",\"mystery\":1}"),
        doctest::Contains("mystery"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_json("{\"experiment\":\"never-heard-of-it\"}"),
                    std::invalid_argument);
    CHECK_THROWS_AS(parse_config_json("{\"experiment\":\"rate-sweep\",\"n-grid\":[200,100]}"),
                    std::invalid_argument);
    CHECK_THROWS_AS(parse_config_json("{\"experiment\":\"rate-sweep\",\"d\":0}"),
                    std::invalid_argument);
    CHECK_THROWS_AS(parse_config_json("{\"experiment\":\"rate-sweep\",\"d\":4,\"r\":5}"),
                    std::invalid_argument);
    CHECK_THROWS_AS(parse_config_json("{\"experiment\":\"rate-sweep\",\"trials\":0}"),
                    std::invalid_argument);
    CHECK_THROWS_AS(parse_config_json("not json at all"), std::invalid_argument);
    CHECK_THROWS_AS(load_config_file("no_such_config_file.json"), std::runtime_error);
}

TEST_CASE("fit_loglog_slope recovers exact power laws") {
    std::vector<double> x{1024, 2048, 4096, 8192, 16384};
    std::vector<double> inv_sqrt, inv, flat;
    for (double v : x) {
        inv_sqrt.push_back(5.0 / std::sqrt(v));
        inv.push_back(3.0 / v);
        flat.push_back(0.7);
    }
    CHECK(fit_loglog_slope(x, inv_sqrt).slope == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(fit_loglog_slope(x, inv).slope == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(fit_loglog_slope(x, flat).slope == doctest::Approx(0.0));
    CHECK(fit_loglog_slope(x, inv_sqrt).slope_ci == doctest::Approx(0.0));

    CHECK_THROWS_AS(fit_loglog_slope({1024}, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(fit_loglog_slope(x, {1, 2, 3, 4, 0}), std::invalid_argument);
}

TEST_CASE("result CSV round trips, including quoting and empty optionals") {
    std::vector<ResultRow> rows;
    ResultRow awkward;
    awkward.experiment = "rate-sweep";
    awkward.d = 8;
    awkward.epsilon = 0.05;
    awkward.c = 1.0;
    awkward.n = 1024;
    awkward.trial = 0;
    awkward.metric = "metric,with\"quote";
    awkward.value = 1.0 / 3.0;
    awkward.std_error = 0.25;
    awkward.bound = std::nullopt;
    awkward.pass = true;
    rows.push_back(awkward);

    ResultRow summary;
    summary.experiment = "rate-sweep";
    summary.d = 8;
    summary.epsilon = 0.0;
    summary.c = 1.0;
    summary.n = -1;
    summary.trial = -1;
    summary.metric = "op_error_slope";
    summary.value = -0.5000000000000003;
    summary.pass = false;
    rows.push_back(summary);

    const std::string csv = result_csv(rows);
    CHECK(csv.rfind("experiment,d,epsilon,C,n,trial,metric,value,std_error,bound,pass\n", 0) ==
          0);
    const std::string path = write_temp("tmp_roundtrip.csv", csv);
    const std::vector<ResultRow> back = read_result_csv(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].metric == "metric,with\"quote");
    CHECK(back[0].value == 1.0 / 3.0);  // 17 significant digits round-trip
    CHECK(back[0].std_error.has_value());
    CHECK(*back[0].std_error == 0.25);
    CHECK_FALSE(back[0].bound.has_value());
    REQUIRE(back[0].pass.has_value());
    CHECK(*back[0].pass);
    CHECK(back[1].trial == -1);
    CHECK(back[1].value == -0.5000000000000003);
    REQUIRE(back[1].pass.has_value());
    CHECK_FALSE(*back[1].pass);
    std::remove(path.c_str());

    CHECK_THROWS_AS(read_result_csv("no_such_results_file.csv"), std::runtime_error);
}

TEST_CASE("summarize_rows fits per-n medians and applies known bands") {
    std::vector<ResultRow> rows;
    for (std::int64_t n : {1024, 4096, 16384}) {
        for (int trial = 0; trial < 3; ++trial) {
            ResultRow row;
            row.experiment = "rate-sweep";
            row.d = 8;
            row.c = 1.0;
            row.n = n;
            row.trial = trial;
            row.metric = "op_error";
            row.value = 2.0 / std::sqrt(static_cast<double>(n)) * (1.0 + 0.01 * trial);
            rows.push_back(row);
        }
    }
    const std::vector<SummaryLine> lines = summarize_rows(rows);
    REQUIRE(lines.size() == 1);
    CHECK(lines[0].metric == "op_error");
    CHECK(lines[0].points == 3);
    CHECK(lines[0].fit.slope == doctest::Approx(-0.5).epsilon(1e-9));
    REQUIRE(lines[0].band_lo.has_value());
    CHECK(*lines[0].band_lo == doctest::Approx(-0.6));
    CHECK(*lines[0].band_hi == doctest::Approx(-0.4));
    REQUIRE(lines[0].pass.has_value());
    CHECK(*lines[0].pass);

    const std::string table = summary_table(lines);
    CHECK(table.find("op_error") != std::string::npos);
    CHECK(table.find("-0.5") != std::string::npos);
}

TEST_CASE("run_experiment output is independent of the thread count") {
    ExperimentConfig cfg = default_config(ExperimentKind::Certificates);
    cfg.trials = 8;
    cfg.seed = 77;
    const ExperimentResult one = run_experiment(cfg, 1);
    const ExperimentResult three = run_experiment(cfg, 3);
    CHECK(one.all_checks_pass);
    CHECK(result_csv(one.rows) == result_csv(three.rows));
}

TEST_CASE("run_experiment is deterministic across repeat runs") {
    ExperimentConfig cfg = default_config(ExperimentKind::VolumeRatio);
    cfg.d = 2;
    cfg.mc_samples = 2000;
    cfg.seed = 5;
    const std::string first = result_csv(run_experiment(cfg, 2).rows);
    const std::string second = result_csv(run_experiment(cfg, 2).rows);
    CHECK(first == second);
    CHECK_FALSE(first.empty());
}

TEST_CASE("run_cli handles run and summarize end to end") {
    const std::string config_path = write_temp(
        "tmp_cli_config.json",
        "{\"experiment\":\"volume-ratio\",\"d\":2,\"mc_samples\":2000,\"seed\":11,"
        "\"output\":\"tmp_cli_results.csv\"}");

    const char* run_argv[] = {"tomolab", "run", "--config", "tmp_cli_config.json"};
    CHECK(run_cli(4, run_argv) == 0);
    const std::string produced = read_all("tmp_cli_results.csv");
    CHECK(produced.rfind("experiment,", 0) == 0);

    const char* summarize_argv[] = {"tomolab", "summarize", "tmp_cli_results.csv"};
    CHECK(run_cli(3, summarize_argv) == 0);

    // Seed override on the command line changes the draw.
    const char* override_argv[] = {"tomolab", "run", "--config", "tmp_cli_config.json",
                                   "--seed", "12"};
    CHECK(run_cli(6, override_argv) == 0);
    const std::string reseeded = read_all("tmp_cli_results.csv");
    CHECK(produced != reseeded);

    std::remove(config_path.c_str());
    std::remove("tmp_cli_results.csv");
}

TEST_CASE("run_cli rejects bad invocations") {
    const char* no_args[] = {"tomolab"};
    CHECK(run_cli(1, no_args) != 0);
    const char* missing_config[] = {"tomolab", "run", "--config", "definitely_missing.json"};
    CHECK(run_cli(4, missing_config) == 1);
    const char* missing_csv[] = {"tomolab", "summarize", "definitely_missing.csv"};
    CHECK(run_cli(3, missing_csv) == 1);
}
