#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "shuffle_fl/algorithms.hpp"
#include "shuffle_fl/harness.hpp"

namespace shuffle_fl {

// Raised on schema violations; `field` names the offending entry.
class config_error : public std::runtime_error {
 public:
  config_error(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

inline Algorithm parse_algorithm(const std::string& s) {
  if (s == "minibatch-rr") return Algorithm::MinibatchRR;
  if (s == "local-rr") return Algorithm::LocalRR;
  if (s == "minibatch-sgd") return Algorithm::MinibatchSGD;
  if (s == "local-sgd") return Algorithm::LocalSGD;
  if (s == "gd") return Algorithm::GD;
  throw config_error("algorithm", "unknown algorithm '" + s + "'");
}

inline std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::MinibatchRR: return "minibatch-rr";
    case Algorithm::LocalRR: return "local-rr";
    case Algorithm::MinibatchSGD: return "minibatch-sgd";
    case Algorithm::LocalSGD: return "local-sgd";
    case Algorithm::GD: return "gd";
  }
  return "?";
}

inline Rule parse_rule(const std::string& s) {
  if (s == "thm-minibatch-rr") return Rule::ThmMinibatchRR;
  if (s == "thm-local-rr") return Rule::ThmLocalRR;
  if (s == "thm-minibatch-rr-sync") return Rule::ThmMinibatchRRSync;
  if (s == "thm-local-rr-sync") return Rule::ThmLocalRRSync;
  throw config_error("rule", "unknown step-size rule '" + s + "'");
}

inline std::string rule_name(Rule r) {
  switch (r) {
    case Rule::ThmMinibatchRR: return "thm-minibatch-rr";
    case Rule::ThmLocalRR: return "thm-local-rr";
    case Rule::ThmMinibatchRRSync: return "thm-minibatch-rr-sync";
    case Rule::ThmLocalRRSync: return "thm-local-rr-sync";
  }
  return "?";
}

inline Record parse_record(const std::string& s) {
  if (s == "final-only") return Record::FinalOnly;
  if (s == "per-epoch") return Record::PerEpoch;
  if (s == "per-round") return Record::PerRound;
  throw config_error("record", "unknown record mode '" + s + "'");
}

inline std::string record_name(Record r) {
  switch (r) {
    case Record::FinalOnly: return "final-only";
    case Record::PerEpoch: return "per-epoch";
    case Record::PerRound: return "per-round";
  }
  return "?";
}

inline Measure parse_measure(const std::string& s) {
  if (s == "mean-suboptimality") return Measure::MeanSuboptimality;
  if (s == "mean-abs-iterate") return Measure::MeanAbsIterate;
  if (s == "second-moment") return Measure::SecondMoment;
  throw config_error("measure", "unknown measure '" + s + "'");
}

inline std::string measure_name(Measure m) {
  switch (m) {
    case Measure::MeanSuboptimality: return "mean-suboptimality";
    case Measure::MeanAbsIterate: return "mean-abs-iterate";
    case Measure::SecondMoment: return "second-moment";
  }
  return "?";
}

inline Axis parse_axis(const std::string& s) {
  if (s == "M") return Axis::M;
  if (s == "N") return Axis::N;
  if (s == "K") return Axis::K;
  if (s == "B") return Axis::B;
  throw config_error("axis", "unknown axis '" + s + "' (expected M, N, K or B)");
}

// A run request: algorithm configuration plus the named problem.
struct RunSpec {
  RunConfig config;
  ProblemSpec problem;
};

// Documented JSON schema for run configs. Inline CLI overrides use the same
// names; the flag-coverage test checks --help against this list.
inline const std::map<std::string, std::string>& run_schema() {
  static const std::map<std::string, std::string> schema = {
      {"algorithm", "minibatch-rr | local-rr | minibatch-sgd | local-sgd | gd"},
      {"M", "machine count, >= 1"},
      {"N", "components per machine, >= 2"},
      {"K", "epochs, >= 0"},
      {"B", "batch / sync interval; B must divide N"},
      {"seed", "64-bit RNG seed"},
      {"sync_shuf", "synchronized shuffling; requires M | N"},
      {"eta", "explicit step size (overrides rule)"},
      {"rule", "thm-minibatch-rr | thm-local-rr | thm-minibatch-rr-sync | thm-local-rr-sync"},
      {"record", "final-only | per-epoch | per-round"},
      {"x0", "initial iterate (array; defaults to the origin)"},
      {"problem", "object: kind (f1|f2|f3|composite3d|hetero), L, mu, nu, tau"},
  };
  return schema;
}

inline const std::map<std::string, std::string>& sweep_schema() {
  static const std::map<std::string, std::string> schema = {
      {"axis", "M | N | K | B"},
      {"values", "axis values, comma separated or JSON array"},
      {"trials", "independent trials per point"},
      {"measure", "mean-suboptimality | mean-abs-iterate | second-moment"},
      {"threads", "worker cap (0 = SHUFFLE_FL_THREADS or hardware)"},
  };
  return schema;
}

namespace detail {

template <typename T>
T get_field(const nlohmann::json& j, const std::string& key, const char* expected) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw config_error(key, std::string("expected ") + expected);
  }
}

template <typename T>
T get_field_or(const nlohmann::json& j, const std::string& key, const char* expected, T fallback) {
  if (!j.contains(key)) return fallback;
  return get_field<T>(j, key, expected);
}

}  // namespace detail

inline ProblemSpec problem_spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw config_error("problem", "expected an object");
  ProblemSpec spec;
  spec.kind = detail::get_field<std::string>(j, "kind", "string");
  spec.L = detail::get_field_or<double>(j, "L", "number", 1.0);
  spec.mu = detail::get_field_or<double>(j, "mu", "number", 1.0);
  spec.nu = detail::get_field_or<double>(j, "nu", "number", 0.0);
  spec.tau = detail::get_field_or<double>(j, "tau", "number", 0.0);
  if (spec.kind != "f1" && spec.kind != "f2" && spec.kind != "f3" && spec.kind != "composite3d" &&
      spec.kind != "hetero")
    throw config_error("problem.kind", "unknown construction '" + spec.kind + "'");
  return spec;
}

inline RunSpec run_spec_from_json(const nlohmann::json& j) {
  RunSpec spec;
  spec.config.algorithm =
      parse_algorithm(detail::get_field<std::string>(j, "algorithm", "string"));
  spec.config.M = detail::get_field<int>(j, "M", "integer");
  spec.config.N = detail::get_field<int>(j, "N", "integer");
  spec.config.K = detail::get_field<int>(j, "K", "integer");
  spec.config.B = detail::get_field_or<int>(
      j, "B", "integer", spec.config.algorithm == Algorithm::GD ? spec.config.N : 1);
  spec.config.seed = detail::get_field_or<std::uint64_t>(j, "seed", "integer", 0);
  spec.config.sync_shuf = detail::get_field_or<bool>(j, "sync_shuf", "boolean", false);
  if (j.contains("eta")) spec.config.eta = detail::get_field<double>(j, "eta", "number");
  if (j.contains("rule"))
    spec.config.rule = parse_rule(detail::get_field<std::string>(j, "rule", "string"));
  spec.config.record =
      parse_record(detail::get_field_or<std::string>(j, "record", "string", "final-only"));
  if (j.contains("x0"))
    spec.config.x0 = detail::get_field<std::vector<double>>(j, "x0", "array of numbers");
  if (!j.contains("problem")) throw config_error("problem", "missing required object");
  spec.problem = problem_spec_from_json(j.at("problem"));

  try {
    spec.config.validate();
  } catch (const std::invalid_argument& e) {
    throw config_error("config", e.what());
  }
  return spec;
}

inline SweepSpec sweep_spec_from_json(const nlohmann::json& j) {
  RunSpec base = run_spec_from_json(j);
  if (!j.contains("sweep")) throw config_error("sweep", "missing required object");
  const nlohmann::json& sj = j.at("sweep");
  SweepSpec spec;
  spec.base_config = base.config;
  spec.problem = base.problem;
  spec.axis = parse_axis(detail::get_field<std::string>(sj, "axis", "string"));
  spec.values = detail::get_field<std::vector<long long>>(sj, "values", "array of integers");
  spec.trials = detail::get_field_or<int>(sj, "trials", "integer", 1);
  spec.base_seed = base.config.seed;
  spec.measure = parse_measure(
      detail::get_field_or<std::string>(sj, "measure", "string", "mean-suboptimality"));
  spec.threads = detail::get_field_or<int>(sj, "threads", "integer", 0);
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw config_error("sweep", e.what());
  }
  return spec;
}

inline nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("config_path", "cannot open '" + path + "'");
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw config_error("config_path", std::string("invalid JSON: ") + e.what());
  }
}

// Loads a run config from a JSON file, applying defaults and validation.
inline RunSpec load_config(const std::string& path) { return run_spec_from_json(load_json_file(path)); }

// Resolved-config echo for output metadata: every successful invocation
// embeds enough to reproduce it byte-identically.
inline nlohmann::json resolved_config_json(const RunSpec& spec) {
  nlohmann::json j = {{"algorithm", algorithm_name(spec.config.algorithm)},
                      {"M", spec.config.M},
                      {"N", spec.config.N},
                      {"K", spec.config.K},
                      {"B", spec.config.B},
                      {"seed", spec.config.seed},
                      {"sync_shuf", spec.config.sync_shuf},
                      {"record", record_name(spec.config.record)},
                      {"problem",
                       {{"kind", spec.problem.kind},
                        {"L", spec.problem.L},
                        {"mu", spec.problem.mu},
                        {"nu", spec.problem.nu},
                        {"tau", spec.problem.tau}}}};
  if (spec.config.eta)
    j["eta"] = *spec.config.eta;
  else
    j["rule"] = rule_name(spec.config.rule ? *spec.config.rule : spec.config.default_rule());
  if (!spec.config.x0.empty()) j["x0"] = spec.config.x0;
  return j;
}

}  // namespace shuffle_fl
