// Command-line driver for the shuffling-based distributed optimization
// simulator: single runs, parameter sweeps, closed-form bound evaluation,
// concentration checks and exact oracles.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "shuffle_fl/concentration.hpp"
#include "shuffle_fl/config.hpp"
#include "shuffle_fl/harness.hpp"

using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;

struct CommonRunOptions {
  std::string config_path;
  std::string problem = "f3";
  std::string algorithm = "minibatch-rr";
  int M = 1, N = 16, K = 16, B = 1;
  double L = 1.0, mu = 1.0, nu = 1.0, tau = 0.0;
  std::optional<double> eta;
  std::string rule;
  bool sync_shuf = false;
  std::uint64_t seed = 0;
  std::string record = "final-only";
  std::vector<double> x0;
  std::string out;
  std::string format = "json";
  bool strict = false;
  int threads = 0;
};

void add_run_flags(CLI::App* cmd, CommonRunOptions& opt) {
  cmd->add_option("--config", opt.config_path, "JSON config file; inline flags override its values");
  cmd->add_option("--problem", opt.problem, "problem kind: f1 | f2 | f3 | composite3d | hetero");
  cmd->add_option("--algorithm", opt.algorithm,
                  "algorithm: minibatch-rr | local-rr | minibatch-sgd | local-sgd | gd");
  cmd->add_option("--M", opt.M, "machine count M");
  cmd->add_option("--N", opt.N, "components per machine N");
  cmd->add_option("--K", opt.K, "epochs K");
  cmd->add_option("--B", opt.B, "batch / sync interval B (must divide N)");
  cmd->add_option("--L", opt.L, "smoothness constant L");
  cmd->add_option("--mu", opt.mu, "PL constant mu");
  cmd->add_option("--nu", opt.nu, "intra-machine deviation nu");
  cmd->add_option("--tau", opt.tau, "heterogeneity constant tau");
  cmd->add_option("--eta", opt.eta, "explicit step size eta (overrides --rule)");
  cmd->add_option("--rule", opt.rule,
                  "step-size rule: thm-minibatch-rr | thm-local-rr | thm-minibatch-rr-sync | "
                  "thm-local-rr-sync (default: matching theorem rule)");
  cmd->add_flag("--sync-shuf", opt.sync_shuf, "enable synchronized shuffling (sync_shuf)");
  cmd->add_option("--seed", opt.seed, "RNG seed");
  cmd->add_option("--record", opt.record, "record: final-only | per-epoch | per-round");
  cmd->add_option("--x0", opt.x0, "initial iterate components x0");
  cmd->add_option("--out", opt.out, "output path");
  cmd->add_option("--format", opt.format, "output format: json | csv");
  cmd->add_flag("--strict", opt.strict, "exit 3 when a run diverges");
  cmd->add_option("--threads", opt.threads,
                  "worker thread cap (default: SHUFFLE_FL_THREADS, then hardware)");
}

// Builds the effective JSON (file values, then inline overrides) and parses
// it through the schema, so validation and precedence live in one place.
json effective_json(const CLI::App* cmd, const CommonRunOptions& opt) {
  json j = opt.config_path.empty() ? json::object() : shuffle_fl::load_json_file(opt.config_path);
  auto passed = [cmd](const std::string& flag) { return cmd->count(flag) > 0; };

  if (!j.contains("problem")) j["problem"] = json::object();
  if (passed("--problem") || !j["problem"].contains("kind")) j["problem"]["kind"] = opt.problem;
  if (passed("--L") || !j["problem"].contains("L")) j["problem"]["L"] = opt.L;
  if (passed("--mu") || !j["problem"].contains("mu")) j["problem"]["mu"] = opt.mu;
  if (passed("--nu") || !j["problem"].contains("nu")) j["problem"]["nu"] = opt.nu;
  if (passed("--tau") || !j["problem"].contains("tau")) j["problem"]["tau"] = opt.tau;

  if (passed("--algorithm") || !j.contains("algorithm")) j["algorithm"] = opt.algorithm;
  if (passed("--M") || !j.contains("M")) j["M"] = opt.M;
  if (passed("--N") || !j.contains("N")) j["N"] = opt.N;
  if (passed("--K") || !j.contains("K")) j["K"] = opt.K;
  if (passed("--B") || !j.contains("B")) j["B"] = opt.B;
  if (passed("--seed") || !j.contains("seed")) j["seed"] = opt.seed;
  if (passed("--sync-shuf")) j["sync_shuf"] = opt.sync_shuf;
  if (passed("--record") || !j.contains("record")) j["record"] = opt.record;
  if (passed("--eta")) j["eta"] = *opt.eta;
  if (passed("--rule")) j["rule"] = opt.rule;
  if (passed("--x0")) j["x0"] = opt.x0;
  return j;
}

void write_or_print(const std::string& out, const std::string& content) {
  if (out.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + out);
  f << content;
}

int cmd_run(const CLI::App* cmd, const CommonRunOptions& opt) {
  shuffle_fl::RunSpec spec = shuffle_fl::run_spec_from_json(effective_json(cmd, opt));
  const shuffle_fl::Problem problem = spec.problem.make(spec.config.M, spec.config.N);
  json doc;
  doc["config"] = shuffle_fl::resolved_config_json(spec);
  try {
    const shuffle_fl::RunResult result = shuffle_fl::run(problem, spec.config);
    doc["result"] = {{"suboptimality", result.suboptimality},
                     {"final_x", result.final_x},
                     {"epochs_run", result.epochs_run},
                     {"gradient_evaluations", result.gradient_evaluations},
                     {"communication_rounds", result.communication_rounds}};
    write_or_print(opt.out, doc.dump(2) + "\n");
    std::cerr << "final suboptimality: " << result.suboptimality.back() << "\n";
  } catch (const shuffle_fl::diverged_error& e) {
    doc["result"] = {{"diverged", true}, {"epoch", e.epoch()}};
    write_or_print(opt.out, doc.dump(2) + "\n");
    std::cerr << "diverged at epoch " << e.epoch() << "\n";
    if (opt.strict) return kExitDiverged;
  }
  return kExitOk;
}

int cmd_sweep(const CLI::App* cmd, const CommonRunOptions& opt, const std::string& axis,
              const std::vector<long long>& values, int trials, const std::string& measure) {
  json j = effective_json(cmd, opt);
  j["sweep"] = {{"axis", axis},
                {"values", values},
                {"trials", trials},
                {"measure", measure},
                {"threads", opt.threads}};
  const shuffle_fl::SweepSpec spec = shuffle_fl::sweep_spec_from_json(j);
  const shuffle_fl::SweepResult result = shuffle_fl::run_sweep(spec);

  for (const auto& pt : result.points)
    std::cerr << spec.problem.kind << " " << axis << "=" << pt.axis_value << " mean=" << pt.mean
              << " stderr=" << pt.stderr_ << " trials=" << pt.trials
              << (pt.diverged > 0 ? " diverged=" + std::to_string(pt.diverged) : "") << "\n";
  if (result.fit_valid)
    std::cerr << "slope=" << result.fitted_slope << " stderr=" << result.slope_stderr
              << " r2=" << result.r_squared << "\n";

  const std::string path = opt.out.empty() ? "sweep_result." + opt.format : opt.out;
  shuffle_fl::persist(result, path,
                      opt.format == "csv" ? shuffle_fl::PersistFormat::Csv
                                          : shuffle_fl::PersistFormat::Json);
  // Reproducibility sidecar: the resolved spec itself.
  std::ofstream side(path + ".spec.json", std::ios::binary);
  side << shuffle_fl::spec_to_json(spec).dump(2) << "\n";

  int total_diverged = 0;
  for (const auto& pt : result.points) total_diverged += pt.diverged;
  if (opt.strict && total_diverged > 0) return kExitDiverged;
  return kExitOk;
}

int cmd_bounds(const std::string& theorem, const shuffle_fl::RateParams& params, double delta) {
  using namespace shuffle_fl;
  if (theorem == "T1" || theorem == "T2" || theorem == "T5" || theorem == "T6") {
    UpperTheorem thm = theorem == "T1"   ? UpperTheorem::T1
                       : theorem == "T2" ? UpperTheorem::T2
                       : theorem == "T5" ? UpperTheorem::T5
                                         : UpperTheorem::T6;
    Rule rule = theorem == "T1"   ? Rule::ThmMinibatchRR
                : theorem == "T2" ? Rule::ThmLocalRR
                : theorem == "T5" ? Rule::ThmMinibatchRRSync
                                  : Rule::ThmLocalRRSync;
    const BoundResult bound = upper_bound(thm, params, delta);
    std::cout << "eta = " << step_size(rule, params) << "\n"
              << "epoch threshold = " << epoch_threshold(rule, params) << "\n"
              << "order bound = " << bound.order << (bound.in_regime ? "" : "  [out of regime]")
              << "\n";
    if (bound.explicit_value) std::cout << "explicit bound = " << *bound.explicit_value << "\n";
  } else if (theorem == "T3" || theorem == "T4" || theorem == "P1") {
    LowerTheorem thm = theorem == "T3"   ? LowerTheorem::T3
                       : theorem == "T4" ? LowerTheorem::T4
                                         : LowerTheorem::P1;
    std::cout << "lower bound = " << lower_bound(thm, params) << "\n";
  } else {
    std::cerr << "unknown theorem '" << theorem << "' (expected T1, T2, T3, T4, T5, T6 or P1)\n";
    return kExitConfig;
  }
  std::cout << "total cost (minibatch) = " << total_cost(CostKind::Minibatch, params) << "\n"
            << "total cost (local) = " << total_cost(CostKind::Local, params) << "\n";
  return kExitOk;
}

int cmd_verify_concentration(int M, int N, int n, double delta, double nu, long long trials,
                             std::uint64_t seed, const std::string& population) {
  using namespace shuffle_fl;
  WithoutReplacementSpec spec = population == "sphere3"
                                    ? make_sphere_population(M, N, n, nu, delta, seed)
                                    : make_signed_population(M, N, n, nu, delta);
  const ViolationReport report = mc_violation_rate(spec, trials, seed);
  std::cout << "bound = " << report.bound << "\n"
            << "violations = " << report.violations << " / " << report.trials << "\n"
            << "rate = " << report.rate << " (stderr " << report.stderr_ << ", delta " << delta
            << ")\n"
            << (report.pass ? "PASS" : "FAIL") << "\n";
  return report.pass ? kExitOk : 1;
}

int cmd_oracle(const std::string& name, const shuffle_fl::OracleParams& params) {
  const shuffle_fl::CrossCheckReport report = shuffle_fl::oracle_cross_check(name, params);
  std::cout << "oracle " << report.name << "\n"
            << "max |discrepancy| = " << report.max_abs_discrepancy << "\n";
  if (report.mc_discrepancy_stderrs > 0.0)
    std::cout << "MC gap = " << report.mc_discrepancy_stderrs << " stderr\n";
  std::cout << report.details.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulator and verification harness for shuffling-based distributed optimization"};
  app.require_subcommand(1);

  CommonRunOptions run_opt;
  CLI::App* run_cmd = app.add_subcommand("run", "run one configuration and report the trace");
  add_run_flags(run_cmd, run_opt);

  CommonRunOptions sweep_opt;
  std::string sweep_axis = "M";
  std::vector<long long> sweep_values;
  int sweep_trials = 1;
  std::string sweep_measure = "mean-suboptimality";
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "sweep one axis, aggregate trials, fit slope");
  add_run_flags(sweep_cmd, sweep_opt);
  sweep_cmd->add_option("--axis", sweep_axis, "sweep axis: M | N | K | B");
  sweep_cmd->add_option("--values", sweep_values, "axis values (comma separated)")
      ->delimiter(',')
      ->required();
  sweep_cmd->add_option("--trials", sweep_trials, "independent trials per point");
  sweep_cmd->add_option("--measure", sweep_measure,
                        "measure: mean-suboptimality | mean-abs-iterate | second-moment");

  shuffle_fl::RateParams rate_params;
  std::string bounds_theorem = "T1";
  double bounds_delta = 0.05;
  CLI::App* bounds_cmd = app.add_subcommand("bounds", "evaluate step sizes and rate bounds");
  bounds_cmd->add_option("--theorem", bounds_theorem, "T1 | T2 | T3 | T4 | T5 | T6 | P1");
  bounds_cmd->add_option("--L", rate_params.L, "smoothness constant L");
  bounds_cmd->add_option("--mu", rate_params.mu, "PL constant mu");
  bounds_cmd->add_option("--nu", rate_params.nu, "intra-machine deviation nu");
  bounds_cmd->add_option("--tau", rate_params.tau, "heterogeneity constant tau");
  bounds_cmd->add_option("--rho", rate_params.rho, "heterogeneity slope rho");
  bounds_cmd->add_option("--lambda", rate_params.lambda, "component-wise deviation lambda");
  bounds_cmd->add_option("--M", rate_params.M, "machine count M");
  bounds_cmd->add_option("--N", rate_params.N, "components per machine N");
  bounds_cmd->add_option("--K", rate_params.K, "epochs K");
  bounds_cmd->add_option("--B", rate_params.B, "batch / sync interval B");
  bounds_cmd->add_option("--F0", rate_params.F0_gap, "initial suboptimality F(x0) - F*");
  bounds_cmd->add_option("--cc", rate_params.c_c, "communication round cost c_c");
  bounds_cmd->add_option("--ce", rate_params.c_e, "per-epoch computation cost c_e");
  bounds_cmd->add_option("--epsilon", rate_params.epsilon, "target accuracy for total cost");
  bounds_cmd->add_option("--delta", bounds_delta, "failure probability for explicit bounds");

  int vc_M = 1, vc_N = 10, vc_n = 5;
  double vc_delta = 0.05, vc_nu = 1.0;
  long long vc_trials = 100000;
  std::uint64_t vc_seed = 1;
  std::string vc_population = "pm1";
  CLI::App* vc_cmd = app.add_subcommand("verify-concentration",
                                        "Monte-Carlo check of the Hoeffding-Serfling bound");
  vc_cmd->add_option("--M", vc_M, "independent permutations M");
  vc_cmd->add_option("--N", vc_N, "population size N");
  vc_cmd->add_option("--n", vc_n, "prefix length n (1 <= n <= N-1)");
  vc_cmd->add_option("--delta", vc_delta, "failure probability delta");
  vc_cmd->add_option("--nu", vc_nu, "deviation bound nu");
  vc_cmd->add_option("--trials", vc_trials, "Monte-Carlo trials");
  vc_cmd->add_option("--seed", vc_seed, "RNG seed");
  vc_cmd->add_option("--population", vc_population, "population: pm1 | sphere3");

  shuffle_fl::OracleParams oracle_params;
  std::string oracle_name = "phi_vs_sim";
  CLI::App* oracle_cmd = app.add_subcommand("oracle", "exact-oracle cross-checks");
  oracle_cmd->add_option("--name", oracle_name, "phi_vs_sim | hetero_vs_sim | brute_force_epoch");
  oracle_cmd->add_option("--N", oracle_params.N, "components per machine N");
  oracle_cmd->add_option("--M", oracle_params.M, "machine count M");
  oracle_cmd->add_option("--B", oracle_params.B, "batch / sync interval B");
  oracle_cmd->add_option("--K", oracle_params.K, "epochs K (hetero_vs_sim)");
  oracle_cmd->add_option("--L", oracle_params.L, "smoothness constant L");
  oracle_cmd->add_option("--mu", oracle_params.mu, "PL constant mu");
  oracle_cmd->add_option("--nu", oracle_params.nu, "intra-machine deviation nu");
  oracle_cmd->add_option("--tau", oracle_params.tau, "heterogeneity constant tau");
  oracle_cmd->add_option("--eta", oracle_params.eta, "step size eta");
  oracle_cmd->add_option("--x0", oracle_params.x0, "initial iterate");
  oracle_cmd->add_option("--trials", oracle_params.mc_trials, "Monte-Carlo trials");
  oracle_cmd->add_option("--seed", oracle_params.seed, "RNG seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(run_cmd, run_opt);
    if (sweep_cmd->parsed())
      return cmd_sweep(sweep_cmd, sweep_opt, sweep_axis, sweep_values, sweep_trials, sweep_measure);
    if (bounds_cmd->parsed()) return cmd_bounds(bounds_theorem, rate_params, bounds_delta);
    if (vc_cmd->parsed())
      return cmd_verify_concentration(vc_M, vc_N, vc_n, vc_delta, vc_nu, vc_trials, vc_seed,
                                      vc_population);
    if (oracle_cmd->parsed()) return cmd_oracle(oracle_name, oracle_params);
  } catch (const shuffle_fl::config_error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitConfig;
}
