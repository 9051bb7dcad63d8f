#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>
#include <sstream>

#include "support.hpp"
#include "weylscat/cli.hpp"

using namespace weylscat;
using namespace testing;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr Complex kI{0.0, 1.0};

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("weylscat_test_cli_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

cli::RunResult run_json(const json& j, const fs::path& base, std::string* log_out = nullptr) {
    std::ostringstream log;
    const cli::RunResult r = cli::run(cli::config_from_json(j, base), log);
    if (log_out) *log_out = log.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<SampleRow> read_csv(const fs::path& p) {
    std::ifstream in(p);
    return read_samples_csv(in);
}

}  // namespace

TEST_CASE("forward: constant W = 0 gives S = -1 at every lambda") {
    TempDir tmp;
    const json j{{"subcommand", "forward"},
                 {"model", {{"name", "constant_w"}, {"dim", 1}, {"parameters", {{"c", 0}}}}},
                 {"grid", {{"lambda_min", -2}, {"lambda_max", 2}, {"points", 5}}},
                 {"output", "out.csv"}};
    const cli::RunResult r = run_json(j, tmp.path);
    CHECK(r.exit_code == 0);
    const auto rows = read_csv(tmp.path / "out.csv");
    REQUIRE(rows.size() == 5);
    for (const auto& row : rows) {
        CHECK(row.rank == 1);
        CHECK(std::abs(row.s(0, 0) + 1.0) < 1e-12);
        CHECK(row.status == SampleStatus::Ok);
    }
    CHECK(rows.front().lambda == -2.0);
    CHECK(rows.back().lambda == 2.0);
}

TEST_CASE("forward: uniform model against the closed form") {
    TempDir tmp;
    const json j{{"subcommand", "forward"},
                 {"model", {{"name", "uniform_density"}}},
                 {"grid", {{"lambda_min", -0.9}, {"lambda_max", 0.9}, {"points", 7}}},
                 {"output", {{"path", "u.json"}, {"format", "json"}}}};
    CHECK(run_json(j, tmp.path).exit_code == 0);
    const auto rows = samples_from_json(load_json(tmp.path / "u.json"));
    REQUIRE(rows.size() == 7);
    for (const auto& row : rows) {
        const double lam = row.lambda;
        const Complex m = std::log((1.0 - lam) / (1.0 + lam)) + kI * std::numbers::pi;
        CHECK(std::abs(row.s(0, 0) - (1.0 - 2.0 * kI * std::numbers::pi / m)) < 1e-7);
        CHECK(row.defect < 1e-8);
    }
}

TEST_CASE("laxphillips rows are contractions") {
    TempDir tmp;
    const json j{{"subcommand", "laxphillips"},
                 {"model", {{"name", "uniform_density"}}},
                 {"D", {{"scalar", {0, -1}}}},
                 {"grid", {{"lambda_min", -0.5}, {"lambda_max", 0.5}, {"points", 3}}},
                 {"output", "lp.csv"}};
    CHECK(run_json(j, tmp.path).exit_code == 0);
    const auto rows = read_csv(tmp.path / "lp.csv");
    REQUIRE(rows.size() == 3);
    // lambda = 0: M = i pi, S^LP = 1 - 2/(1 + pi)
    CHECK(std::abs(rows[1].s(0, 0) - (1.0 - 2.0 / (1.0 + std::numbers::pi))) < 1e-7);
    for (const auto& row : rows) CHECK(spectral_norm(row.s) <= 1.0 + 1e-12);
}

TEST_CASE("dissipative output does not depend on the thread count") {
    TempDir tmp;
    json j{{"subcommand", "dissipative"},
           {"model", {{"name", "rational"}, {"dim", 2}, {"parameters", {{"count", 3}}}}},
           {"D", {{"name", "random_dissipative_D"}}},
           {"grid", {{"lambda_min", -3}, {"lambda_max", 3}, {"points", 41}}},
           {"seed", 11}};
    j["output"] = "one.csv";
    j["threads"] = 1;
    CHECK(run_json(j, tmp.path).exit_code == 0);
    j["output"] = "four.csv";
    j["threads"] = 4;
    CHECK(run_json(j, tmp.path).exit_code == 0);
    const std::string one = slurp(tmp.path / "one.csv");
    CHECK(!one.empty());
    CHECK(one == slurp(tmp.path / "four.csv"));
    const auto rows = read_csv(tmp.path / "one.csv");
    REQUIRE(rows.size() == 41);
    for (const auto& row : rows) {
        CHECK(row.s.rows() == row.rank + 2);
        CHECK(defect_unitary(row.s) < 1e-10);
    }
    // a different seed gives a different model
    j["output"] = "other.csv";
    j["seed"] = 12;
    CHECK(run_json(j, tmp.path).exit_code == 0);
    CHECK(slurp(tmp.path / "other.csv") != one);
}

TEST_CASE("inverse: constant W realizes and writes the recovered model") {
    TempDir tmp;
    const json j{{"subcommand", "inverse"},
                 {"model", {{"name", "constant_w"}, {"parameters", {{"c", 0.5}}}}},
                 {"grid", {{"lambda_min", -3}, {"lambda_max", 3}, {"points", 31}}},
                 {"output", "report.json"}};
    CHECK(run_json(j, tmp.path).exit_code == 0);
    const json report = load_json(tmp.path / "report.json");
    CHECK(report.at("realized") == true);
    CHECK(report.at("pass") == true);
    CHECK(report.at("roundtrip_error").get<double>() < 1e-3);
    const NevanlinnaMeasure recovered = load_measure(tmp.path / "report.model.json");
    CHECK(std::abs(recovered.density_at(0.0)(0, 0) - 3.0 / std::numbers::pi) < 1e-10);
}

TEST_CASE("inverse: a non-admissible tabulated W is reported and exits 1") {
    TempDir tmp;
    json samples = json::array();
    for (double x : {-1.0, 0.0, 1.0})
        for (double y : {0.5, 1.0, 2.0}) samples.push_back({{"eta", {x, y}}, {"w", 1.0}});
    save_json(tmp.path / "w_one.json", json{{"dim", 1}, {"samples", samples}});
    const json j{{"subcommand", "inverse"}, {"model", "w_one.json"}, {"grid", {{"points", 11}}}, {"output", "bad.json"}};
    CHECK(run_json(j, tmp.path).exit_code == 1);
    const json report = load_json(tmp.path / "bad.json");
    CHECK(report.at("realized") == false);
}

TEST_CASE("verify passes on the uniform model") {
    TempDir tmp;
    const json j{{"subcommand", "verify"},
                 {"model", {{"name", "uniform_density"}, {"dim", 2}, {"parameters", {{"height", 0.5}}}}},
                 {"grid", {{"lambda_min", -0.9}, {"lambda_max", 0.9}, {"points", 19}}},
                 {"output", {{"path", "v.json"}, {"format", "json"}}}};
    std::string log;
    const cli::RunResult r = run_json(j, tmp.path, &log);
    CHECK_MESSAGE(r.exit_code == 0, log);
    const json report = load_json(tmp.path / "v.json");
    CHECK(report.at("pass") == true);
    CHECK(report.at("invariants").size() > 10);
    for (const auto& inv : report.at("invariants")) CHECK_MESSAGE(inv.at("status") != "fail", inv.dump());
}

TEST_CASE("exit code 1 when row defects exceed the threshold") {
    TempDir tmp;
    const json j{{"subcommand", "forward"},
                 {"model", {{"name", "rational"}, {"dim", 2}, {"parameters", {{"count", 3}}}}},
                 {"grid", {{"lambda_min", -1}, {"lambda_max", 1}, {"points", 11}}},
                 {"tolerances", {{"defect", 1e-300}}},
                 {"output", "x.csv"}};
    CHECK(run_json(j, tmp.path).exit_code == 1);
}

TEST_CASE("exit codes 2 and 3 for config and model errors") {
    TempDir tmp;
    // a missing model file is caught while parsing the config (exit 2 in the binary)
    const json missing_file{{"subcommand", "forward"}, {"model", "nope.json"}, {"output", "x.csv"}};
    CHECK_CODE(cli::config_from_json(missing_file, tmp.path), ErrorCode::ConfigError);
    // one that goes away before the run is reported by run()
    save_json(tmp.path / "gone.json", json{{"dim", 1}});
    cli::RunConfig cfg = cli::config_from_json(json{{"subcommand", "forward"}, {"model", "gone.json"}}, tmp.path);
    fs::remove(tmp.path / "gone.json");
    std::ostringstream log;
    CHECK(cli::run(cfg, log).exit_code == 2);
    const json unknown{{"subcommand", "forward"}, {"model", {{"name", "no_such_model"}}}, {"output", "x.csv"}};
    CHECK(run_json(unknown, tmp.path).exit_code == 3);
    const json bad_params{{"subcommand", "forward"}, {"model", {{"name", "constant_w"}, {"parameters", {{"c", 2}}}}}};
    CHECK(run_json(bad_params, tmp.path).exit_code == 3);
    const json bad_d{{"subcommand", "laxphillips"}, {"model", {{"name", "uniform_density"}}}, {"D", {{"scalar", {0, 1}}}}};
    CHECK(run_json(bad_d, tmp.path).exit_code == 3);
}

TEST_CASE("config_from_json validation") {
    CHECK_CODE(cli::config_from_json(json{{"model", {{"name", "uniform_density"}}}}), ErrorCode::ConfigError);
    CHECK_CODE(cli::config_from_json(json{{"subcommand", "forward"}}), ErrorCode::ConfigError);
    CHECK_CODE(cli::config_from_json(json{{"subcommand", "sideways"}, {"model", {{"name", "uniform_density"}}}}),
               ErrorCode::ConfigError);
    const json base{{"subcommand", "forward"}, {"model", {{"name", "uniform_density"}}}};
    json j = base;
    j["grid"] = {{"points", 1}};
    CHECK_CODE(cli::config_from_json(j), ErrorCode::ConfigError);
    j = base;
    j["grid"] = {{"lambda_min", 1}, {"lambda_max", -1}};
    CHECK_CODE(cli::config_from_json(j), ErrorCode::ConfigError);
    j = base;
    j["output"] = {{"format", "xml"}};
    CHECK_CODE(cli::config_from_json(j), ErrorCode::ConfigError);
    j = base;
    j["schedule"] = {{"ratio", 2.0}};
    CHECK_CODE(cli::config_from_json(j), ErrorCode::ConfigError);
    j = base;
    j["tolerances"] = {{"defect", -1.0}};
    CHECK_CODE(cli::config_from_json(j), ErrorCode::ConfigError);
    j = base;
    j["threads"] = 0;
    CHECK_CODE(cli::config_from_json(j), ErrorCode::ConfigError);

    const cli::RunConfig cfg = cli::config_from_json(base, "/some/dir");
    CHECK(cfg.grid.points == 101);
    CHECK(cfg.grid.nodes().front() == -2.0);
    CHECK(cfg.grid.nodes().back() == 2.0);
    CHECK(cfg.format == OutputFormat::Csv);
    CHECK(cfg.output.empty());
    TempDir tmp;
    save_json(tmp.path / "m.json", json{{"dim", 1}});
    const cli::RunConfig file_model = cli::config_from_json(json{{"subcommand", "verify"}, {"model", "m.json"}}, tmp.path);
    CHECK(std::get<fs::path>(file_model.model) == tmp.path / "m.json");
}

TEST_CASE("shipped configs parse") {
    const fs::path dir = fs::path(WEYLSCAT_CONFIG_DIR);
    int seen = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const json j = load_json(entry.path());
        if (!j.contains("subcommand")) continue;
        CHECK_NOTHROW(cli::config_from_json(j, dir));
        ++seen;
    }
    CHECK(seen >= 5);
}
