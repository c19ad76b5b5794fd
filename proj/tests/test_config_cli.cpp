#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cstdio>
#include <fstream>
#include <string>

#include "shuffle_fl/config.hpp"

using namespace shuffle_fl;

namespace {

std::string run_cli(const std::string& args) {
  const std::string cmd = std::string(SHUFFLE_FL_CLI_PATH) + " " + args + " 2>&1";
  std::array<char, 4096> buf{};
  std::string out;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  while (fgets(buf.data(), static_cast<int>(buf.size()), pipe) != nullptr) out += buf.data();
  pclose(pipe);
  return out;
}

int run_cli_status(const std::string& args) {
  const std::string cmd = std::string(SHUFFLE_FL_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("minimal run config applies defaults") {
  const nlohmann::json j = nlohmann::json::parse(R"({
    "algorithm": "local-rr", "M": 2, "N": 8, "K": 16, "B": 2, "seed": 0,
    "problem": {"kind": "f2", "L": 10, "mu": 1, "nu": 1}
  })");
  const RunSpec spec = run_spec_from_json(j);
  CHECK(spec.config.algorithm == Algorithm::LocalRR);
  CHECK_FALSE(spec.config.eta.has_value());
  CHECK(spec.config.default_rule() == Rule::ThmLocalRR);
  CHECK(spec.config.record == Record::FinalOnly);
  CHECK(spec.problem.kind == "f2");

  const nlohmann::json echoed = resolved_config_json(spec);
  CHECK(echoed["rule"] == "thm-local-rr");
  CHECK(echoed["seed"] == 0);
}

TEST_CASE("config validation names the offending field") {
  SECTION("B must divide N") {
    const nlohmann::json j = nlohmann::json::parse(R"({
      "algorithm": "local-rr", "M": 2, "N": 8, "K": 4, "B": 3,
      "problem": {"kind": "f3", "L": 2, "mu": 1, "nu": 1}
    })");
    CHECK_THROWS_WITH(run_spec_from_json(j),
                      Catch::Matchers::ContainsSubstring("B must divide N"));
  }

  SECTION("SyncShuf requires M | N") {
    const nlohmann::json j = nlohmann::json::parse(R"({
      "algorithm": "local-rr", "M": 3, "N": 8, "K": 4, "B": 2, "sync_shuf": true,
      "problem": {"kind": "f3", "L": 2, "mu": 1, "nu": 1}
    })");
    CHECK_THROWS_WITH(run_spec_from_json(j),
                      Catch::Matchers::ContainsSubstring("M must divide N"));
  }

  SECTION("missing problem object") {
    const nlohmann::json j = nlohmann::json::parse(
        R"({"algorithm": "gd", "M": 1, "N": 4, "K": 1})");
    try {
      run_spec_from_json(j);
      FAIL("expected config_error");
    } catch (const config_error& e) {
      CHECK(e.field() == "problem");
    }
  }

  SECTION("wrong field type") {
    const nlohmann::json j = nlohmann::json::parse(R"({
      "algorithm": "gd", "M": "two", "N": 4, "K": 1,
      "problem": {"kind": "f1", "L": 1, "mu": 1}
    })");
    try {
      run_spec_from_json(j);
      FAIL("expected config_error");
    } catch (const config_error& e) {
      CHECK(e.field() == "M");
    }
  }
}

TEST_CASE("load_config reads a file and sweep specs resolve") {
  const std::string path = "test_config_tmp.json";
  {
    std::ofstream out(path);
    out << R"({
      "algorithm": "minibatch-rr", "M": 2, "N": 8, "K": 4, "B": 2, "seed": 3,
      "problem": {"kind": "f3", "L": 2, "mu": 1, "nu": 1},
      "sweep": {"axis": "M", "values": [1, 2, 4], "trials": 3}
    })";
  }
  const RunSpec run_spec = load_config(path);
  CHECK(run_spec.config.M == 2);

  const SweepSpec sweep = sweep_spec_from_json(load_json_file(path));
  CHECK(sweep.values == std::vector<long long>{1, 2, 4});
  CHECK(sweep.trials == 3);
  CHECK(sweep.measure == Measure::MeanSuboptimality);
  std::remove(path.c_str());

  CHECK_THROWS_AS(load_config("does_not_exist.json"), config_error);
}

TEST_CASE("sweep spec validation covers every axis point") {
  const nlohmann::json base = nlohmann::json::parse(R"({
    "algorithm": "minibatch-rr", "M": 2, "N": 8, "K": 4, "B": 2, "seed": 3,
    "problem": {"kind": "f3", "L": 2, "mu": 1, "nu": 1},
    "sweep": {"axis": "B", "values": [1, 2, 3], "trials": 2}
  })");
  // B = 3 does not divide N = 8: the whole sweep is rejected up front.
  CHECK_THROWS_AS(sweep_spec_from_json(base), config_error);

  nlohmann::json ok = base;
  ok["sweep"]["values"] = {1, 2, 4};
  CHECK_NOTHROW(sweep_spec_from_json(ok));
}

TEST_CASE("inline CLI overrides take precedence over config-file values", "[cli]") {
  const std::string cfg_path = "test_override_cfg.json";
  {
    std::ofstream out(cfg_path);
    out << R"({
      "algorithm": "minibatch-rr", "M": 2, "N": 8, "K": 4, "B": 2, "seed": 1,
      "problem": {"kind": "f3", "L": 2, "mu": 1, "nu": 1}
    })";
  }
  const std::string out_path = "test_override_out.json";
  const int status = run_cli_status("run --config " + cfg_path + " --K 8 --seed 42 --out " + out_path);
  CHECK(status == 0);
  std::ifstream in(out_path);
  REQUIRE(in.good());
  nlohmann::json doc;
  in >> doc;
  CHECK(doc["config"]["K"] == 8);      // inline override
  CHECK(doc["config"]["seed"] == 42);  // inline override
  CHECK(doc["config"]["M"] == 2);      // file value preserved
  CHECK(doc["config"]["problem"]["kind"] == "f3");
  std::remove(cfg_path.c_str());
  std::remove(out_path.c_str());
}

TEST_CASE("CLI help lists every schema flag", "[cli]") {
  const std::string run_help = run_cli("run --help");
  for (const auto& [field, _] : run_schema()) {
    // x0 and problem subfields surface as dedicated flags.
    if (field == "problem") {
      CHECK(run_help.find("--problem") != std::string::npos);
      continue;
    }
    std::string flag = "--" + field;
    if (field == "sync_shuf") flag = "--sync-shuf";
    INFO("missing flag " << flag);
    CHECK(run_help.find(flag) != std::string::npos);
  }
  for (const char* f : {"--L", "--mu", "--nu", "--tau", "--out", "--format", "--strict"})
    CHECK(run_help.find(f) != std::string::npos);

  const std::string sweep_help = run_cli("sweep --help");
  for (const auto& [field, _] : sweep_schema()) {
    if (field == "values") continue;  // required option, printed as --values
    CHECK(sweep_help.find("--" + field) != std::string::npos);
  }
  CHECK(sweep_help.find("--values") != std::string::npos);

  for (const char* sub : {"bounds", "verify-concentration", "oracle"}) {
    const std::string help = run_cli(std::string(sub) + " --help");
    CHECK(help.find("--help") != std::string::npos);
  }
}

TEST_CASE("CLI end-to-end invocations", "[cli]") {
  SECTION("bounds prints eta, threshold and the order bound") {
    const std::string out =
        run_cli("bounds --theorem T1 --L 1 --mu 1 --nu 1 --M 4 --N 16 --K 256 --B 2");
    CHECK(out.find("eta = ") != std::string::npos);
    CHECK(out.find("epoch threshold = ") != std::string::npos);
    CHECK(out.find("order bound = ") != std::string::npos);
  }

  SECTION("verify-concentration prints the bound and a PASS verdict") {
    const std::string out = run_cli(
        "verify-concentration --M 2 --N 10 --n 5 --delta 0.05 --trials 20000 --seed 1");
    CHECK(out.find("bound = ") != std::string::npos);
    CHECK(out.find("PASS") != std::string::npos);
  }

  SECTION("run writes a JSON document embedding the resolved config") {
    const std::string path = "cli_run_out.json";
    const int status = run_cli_status(
        "run --problem f3 --algorithm minibatch-rr --M 2 --N 8 --K 4 --B 2 --L 2 --mu 1 "
        "--nu 1 --seed 9 --out " + path);
    CHECK(status == 0);
    std::ifstream in(path);
    REQUIRE(in.good());
    nlohmann::json doc;
    in >> doc;
    CHECK(doc["config"]["seed"] == 9);
    CHECK(doc["config"]["algorithm"] == "minibatch-rr");
    CHECK(doc["result"]["suboptimality"].is_array());
    std::remove(path.c_str());
  }

  SECTION("invalid configuration exits with code 2") {
    CHECK(run_cli_status("run --problem f3 --algorithm minibatch-rr --M 2 --N 8 --K 4 --B 3 "
                         "--L 2 --mu 1 --nu 1") == 2);
    CHECK(run_cli_status("run --no-such-flag") == 2);
    CHECK(run_cli_status("bounds --theorem T9") == 2);
  }

  SECTION("sweep writes CSV with slope metadata sidecar") {
    const std::string path = "cli_sweep_out.csv";
    const int status = run_cli_status(
        "sweep --problem f3 --algorithm minibatch-rr --axis M --values 1,2,4 --K 8 --N 8 "
        "--B 2 --L 2 --mu 1 --nu 1 --eta 0.02 --trials 8 --seed 7 --format csv --out " + path);
    CHECK(status == 0);
    std::ifstream in(path);
    REQUIRE(in.good());
    std::string header;
    std::getline(in, header);
    CHECK(header == "axis,value,mean,stderr,trials");
    std::ifstream meta(path + ".meta.json");
    REQUIRE(meta.good());
    nlohmann::json mj;
    meta >> mj;
    CHECK(mj.contains("slope"));
    CHECK(mj.contains("spec_hash"));
    std::remove(path.c_str());
    std::remove((path + ".meta.json").c_str());
    std::remove((path + ".spec.json").c_str());
  }

  SECTION("oracle subcommand reports discrepancies") {
    const std::string out =
        run_cli("oracle --name phi_vs_sim --N 4 --B 2 --M 1 --eta 0.1 --trials 2000 --seed 3");
    CHECK(out.find("max |discrepancy|") != std::string::npos);
    CHECK(run_cli_status("oracle --name phi_vs_sim --N 4 --B 2 --M 1 --trials 500") == 0);
    CHECK(run_cli_status("oracle --name bogus") == 2);
  }

  SECTION("strict mode exits 3 on divergence") {
    CHECK(run_cli_status("run --problem f3 --algorithm minibatch-rr --M 1 --N 4 --K 200 --B 2 "
                         "--L 2 --mu 1 --nu 1 --eta 2.0 --x0 1.0 --strict") == 3);
  }
}
