#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "shuffle_fl/algorithms.hpp"
#include "shuffle_fl/problem.hpp"
#include "shuffle_fl/rates.hpp"

namespace shuffle_fl {

// Fixed-shape pairwise summation; the reduction tree depends only on indices,
// so results are bit-identical regardless of how trials were scheduled.
inline double pairwise_sum(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
  if (hi == lo) return 0.0;
  if (hi - lo == 1) return v[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  return pairwise_sum(v, lo, mid) + pairwise_sum(v, mid, hi);
}

inline double pairwise_sum(const std::vector<double>& v) { return pairwise_sum(v, 0, v.size()); }

struct FitResult {
  double slope = 0.0;
  double stderr_ = 0.0;
  double r_squared = 1.0;
};

// Ordinary least squares on (ln x, ln y); stderr from residual variance.
inline FitResult fit_loglog_slope(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw std::invalid_argument("fit_loglog_slope: need >= 3 points");
  std::vector<double> xs, ys;
  for (const auto& [x, y] : points) {
    if (x <= 0.0 || y <= 0.0) throw std::invalid_argument("fit_loglog_slope: values must be positive");
    xs.push_back(std::log(x));
    ys.push_back(std::log(y));
  }
  const auto n = static_cast<double>(xs.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    sx += xs[j];
    sy += ys[j];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    sxx += (xs[j] - mx) * (xs[j] - mx);
    sxy += (xs[j] - mx) * (ys[j] - my);
    syy += (ys[j] - my) * (ys[j] - my);
  }
  if (sxx <= 0.0) throw std::invalid_argument("fit_loglog_slope: degenerate x values");
  FitResult fit;
  fit.slope = sxy / sxx;
  const double intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    const double resid = ys[j] - (intercept + fit.slope * xs[j]);
    ssr += resid * resid;
  }
  fit.stderr_ = n > 2 ? std::sqrt(ssr / (n - 2.0) / sxx) : 0.0;
  fit.r_squared = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
  return fit;
}

// Named construction plus constants, resolvable to a Problem for given (M, N).
struct ProblemSpec {
  std::string kind = "f3";  // f1 | f2 | f3 | composite3d | hetero
  double L = 1.0;
  double mu = 1.0;
  double nu = 0.0;
  double tau = 0.0;

  Problem make(int M, int N) const {
    if (kind == "f1") return make_skewed_quadratic_1d(SkewedKind::F1, L, mu, nu, N, M);
    if (kind == "f2") return make_skewed_quadratic_1d(SkewedKind::F2, L, mu, nu, N, M);
    if (kind == "f3") return make_skewed_quadratic_1d(SkewedKind::F3, L, mu, nu, N, M);
    if (kind == "composite3d") return make_composite_3d(L, mu, nu, N, M);
    if (kind == "hetero") return make_hetero_linear_quadratic(L, mu, tau, N, M);
    throw std::invalid_argument("ProblemSpec: unknown kind '" + kind + "'");
  }
};

enum class Axis { M, N, K, B };
enum class Measure { MeanSuboptimality, MeanAbsIterate, SecondMoment };

inline std::string axis_name(Axis a) {
  switch (a) {
    case Axis::M: return "M";
    case Axis::N: return "N";
    case Axis::K: return "K";
    case Axis::B: return "B";
  }
  return "?";
}

struct SweepSpec {
  RunConfig base_config;
  ProblemSpec problem;
  Axis axis = Axis::M;
  std::vector<long long> values;
  int trials = 1;
  std::uint64_t base_seed = 0;
  Measure measure = Measure::MeanSuboptimality;
  int threads = 0;  // 0: use SHUFFLE_FL_THREADS, then hardware concurrency

  RunConfig config_at(long long value) const {
    RunConfig cfg = base_config;
    switch (axis) {
      case Axis::M: cfg.M = static_cast<int>(value); break;
      case Axis::N: cfg.N = static_cast<int>(value); break;
      case Axis::K: cfg.K = static_cast<int>(value); break;
      case Axis::B: cfg.B = static_cast<int>(value); break;
    }
    return cfg;
  }

  void validate() const {
    if (values.empty()) throw std::invalid_argument("SweepSpec: no axis values");
    if (trials < 1) throw std::invalid_argument("SweepSpec: trials must be >= 1");
    for (long long v : values) config_at(v).validate();
  }
};

struct SweepPoint {
  long long axis_value = 0;
  double mean = 0.0;
  double stderr_ = 0.0;
  int trials = 0;
  int diverged = 0;
  bool excluded_from_fit = false;
};

struct SweepResult {
  std::string axis;
  std::vector<SweepPoint> points;
  double fitted_slope = 0.0;
  double slope_stderr = 0.0;
  double r_squared = 0.0;
  bool fit_valid = false;
  std::uint64_t seed = 0;
  std::string spec_hash;
};

inline int resolve_thread_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SHUFFLE_FL_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

inline double measure_of(Measure measure, const Problem& p, const RunResult& r) {
  switch (measure) {
    case Measure::MeanSuboptimality:
      return r.suboptimality.back();
    case Measure::MeanAbsIterate: {
      double s = 0.0;
      for (double v : r.final_x) s += v * v;
      return std::sqrt(s);
    }
    case Measure::SecondMoment: {
      double s = 0.0;
      for (double v : r.final_x) s += v * v;
      return s;
    }
  }
  (void)p;
  return 0.0;
}

inline std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

inline nlohmann::json spec_to_json(const SweepSpec& spec);  // defined below

// Runs `trials` independent runs per axis value (seeds = base + trial index),
// aggregates the chosen measure with a fixed-order pairwise reduction, and
// fits a log-log least-squares line. Diverged trials are counted and the
// point is dropped from the fit when more than 1% of its trials diverge;
// nonpositive means are likewise excluded (log undefined).
inline SweepResult run_sweep(const SweepSpec& spec) {
  spec.validate();
  SweepResult result;
  result.axis = axis_name(spec.axis);
  result.seed = spec.base_seed;
  result.spec_hash = fnv1a_hex(spec_to_json(spec).dump());

  const int n_threads = resolve_thread_count(spec.threads);

  for (long long value : spec.values) {
    RunConfig cfg = spec.config_at(value);
    const Problem problem = spec.problem.make(cfg.M, cfg.N);
    // Deterministic config failures must surface here, not inside workers.
    if (!cfg.x0.empty() && static_cast<int>(cfg.x0.size()) != problem.dim)
      throw std::invalid_argument("run_sweep: x0 dimension does not match the problem");
    (void)cfg.resolve_step_size(problem.constants);

    std::vector<double> outcomes(static_cast<std::size_t>(spec.trials));
    std::vector<char> ok(static_cast<std::size_t>(spec.trials), 0);
    std::atomic<int> next{0};
    auto worker = [&]() {
      for (;;) {
        const int t = next.fetch_add(1);
        if (t >= spec.trials) return;
        RunConfig trial_cfg = cfg;
        trial_cfg.seed = spec.base_seed + static_cast<std::uint64_t>(t);
        try {
          const RunResult r = run(problem, trial_cfg);
          outcomes[static_cast<std::size_t>(t)] = measure_of(spec.measure, problem, r);
          ok[static_cast<std::size_t>(t)] = 1;
        } catch (const diverged_error&) {
          ok[static_cast<std::size_t>(t)] = 0;
        }
      }
    };
    if (n_threads <= 1 || spec.trials == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      const int spawn = std::min(n_threads, spec.trials);
      pool.reserve(static_cast<std::size_t>(spawn));
      for (int w = 0; w < spawn; ++w) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }

    SweepPoint point;
    point.axis_value = value;
    std::vector<double> kept;
    kept.reserve(static_cast<std::size_t>(spec.trials));
    for (int t = 0; t < spec.trials; ++t) {
      if (ok[static_cast<std::size_t>(t)])
        kept.push_back(outcomes[static_cast<std::size_t>(t)]);
      else
        ++point.diverged;
    }
    point.trials = static_cast<int>(kept.size());
    if (!kept.empty()) {
      point.mean = pairwise_sum(kept) / static_cast<double>(kept.size());
      if (kept.size() > 1) {
        std::vector<double> sq(kept.size());
        for (std::size_t j = 0; j < kept.size(); ++j)
          sq[j] = (kept[j] - point.mean) * (kept[j] - point.mean);
        const double var = pairwise_sum(sq) / (static_cast<double>(kept.size()) - 1.0);
        point.stderr_ = std::sqrt(var / static_cast<double>(kept.size()));
      }
    }
    point.excluded_from_fit =
        kept.empty() || point.mean <= 0.0 ||
        static_cast<double>(point.diverged) > 0.01 * static_cast<double>(spec.trials);
    result.points.push_back(point);
  }

  std::vector<std::pair<double, double>> fit_points;
  for (const auto& pt : result.points)
    if (!pt.excluded_from_fit) fit_points.emplace_back(static_cast<double>(pt.axis_value), pt.mean);
  if (fit_points.size() >= 3) {
    const FitResult fit = fit_loglog_slope(fit_points);
    result.fitted_slope = fit.slope;
    result.slope_stderr = fit.stderr_;
    result.r_squared = fit.r_squared;
    result.fit_valid = true;
  }
  return result;
}

// ---- Oracle cross-checks ---------------------------------------------------

struct CrossCheckReport {
  std::string name;
  double max_abs_discrepancy = 0.0;
  double mc_discrepancy_stderrs = 0.0;  // MC-vs-exact gap in standard errors
  nlohmann::json details;
};

// Exact expected endpoint and second moment of one minibatch RR epoch on a
// sign-split 1-D construction, by enumerating all C(N, N/2)^M equally likely
// sign-pattern tuples and replaying the epoch for each.
inline void enumerate_epoch_moments(const Problem& problem, double eta, int B, double x0,
                                    double& mean_out, double& second_moment_out) {
  const int N = problem.components;
  const int M = problem.machines;
  if (N > 6 || M > 2) throw std::invalid_argument("enumerate_epoch_moments: limited to N <= 6, M <= 2");

  // Distinct arrangements of N/2 +1s and N/2 -1s, as index permutations:
  // positive components are 1..N/2 and are consumed in order.
  std::vector<std::vector<int>> arrangements;
  {
    std::vector<int> signs(static_cast<std::size_t>(N), -1);
    for (int t = 0; t < N / 2; ++t) signs[static_cast<std::size_t>(t)] = 1;
    std::sort(signs.begin(), signs.end(), std::greater<int>());
    do {
      std::vector<int> perm;
      perm.reserve(static_cast<std::size_t>(N));
      int next_pos = 1, next_neg = N / 2 + 1;
      for (int j = 0; j < N; ++j)
        perm.push_back(signs[static_cast<std::size_t>(j)] > 0 ? next_pos++ : next_neg++);
      arrangements.push_back(std::move(perm));
    } while (std::prev_permutation(signs.begin(), signs.end()));
  }

  const std::size_t patterns = arrangements.size();
  long double sum = 0.0, sum_sq = 0.0;
  std::uint64_t total = 0;
  std::vector<std::size_t> odo(static_cast<std::size_t>(M), 0);
  for (;;) {
    PermutationSet perms;
    for (int m = 0; m < M; ++m)
      perms.per_machine.emplace_back(arrangements[odo[static_cast<std::size_t>(m)]]);
    const std::vector<double> endpoint =
        minibatch_rr_epoch(std::vector<double>{x0}, problem, eta, B, perms);
    sum += endpoint[0];
    sum_sq += endpoint[0] * endpoint[0];
    ++total;

    int digit = M - 1;
    while (digit >= 0 && ++odo[static_cast<std::size_t>(digit)] == patterns) {
      odo[static_cast<std::size_t>(digit)] = 0;
      --digit;
    }
    if (digit < 0) break;
  }
  mean_out = static_cast<double>(sum / total);
  second_moment_out = static_cast<double>(sum_sq / total);
}

struct OracleParams {
  int N = 4;
  int M = 1;
  int B = 2;
  double L = 1.0;
  double mu = 1.0;
  double nu = 1.0;
  double tau = 1.0;
  double eta = 0.1;
  int K = 8;
  double x0 = 0.0;
  long long mc_trials = 10000;
  std::uint64_t seed = 1;
};

// phi_vs_sim: Monte-Carlo second moment of a minibatch RR epoch on the F3
// construction against the closed-form (1-eta L)^{2N/B} x0^2
// + (eta^2 nu^2/(M B^2)) Phi.
inline CrossCheckReport oracle_phi_vs_sim(const OracleParams& p) {
  const Problem problem = make_skewed_quadratic_1d(SkewedKind::F3, p.L, p.mu, p.nu, p.N, p.M);
  const double alpha = 1.0 - p.eta * p.L;
  const double phi = phi_closed_form(p.N, p.B, alpha);
  const double predicted =
      std::pow(alpha, 2.0 * p.N / p.B) * p.x0 * p.x0 +
      p.eta * p.eta * p.nu * p.nu / (static_cast<double>(p.M) * p.B * p.B) * phi;

  std::vector<double> sq(static_cast<std::size_t>(p.mc_trials));
  for (long long t = 0; t < p.mc_trials; ++t) {
    const PermutationSet perms =
        sample_permutation_set(p.M, p.N, p.seed + static_cast<std::uint64_t>(t), 1, false);
    const std::vector<double> endpoint =
        minibatch_rr_epoch(std::vector<double>{p.x0}, problem, p.eta, p.B, perms);
    sq[static_cast<std::size_t>(t)] = endpoint[0] * endpoint[0];
  }
  const double mean = pairwise_sum(sq) / static_cast<double>(p.mc_trials);
  double var = 0.0;
  for (double v : sq) var += (v - mean) * (v - mean);
  var /= static_cast<double>(p.mc_trials - 1);
  const double se = std::sqrt(var / static_cast<double>(p.mc_trials));

  CrossCheckReport report;
  report.name = "phi_vs_sim";
  report.max_abs_discrepancy = std::fabs(mean - predicted);
  report.mc_discrepancy_stderrs = se > 0.0 ? report.max_abs_discrepancy / se : 0.0;
  report.details = {{"predicted", predicted}, {"mc_mean", mean}, {"mc_stderr", se}, {"phi", phi}};
  return report;
}

// hetero_vs_sim: deterministic local RR run on the heterogeneous construction
// against the closed-form recursion, compared at every synchronization point.
inline CrossCheckReport oracle_hetero_vs_sim(const OracleParams& p) {
  const Problem problem = make_hetero_linear_quadratic(p.L, p.mu, p.tau, p.N, p.M);
  const std::vector<double> expected =
      hetero_trajectory(p.mu, p.tau, p.eta, p.B, p.N, p.K, p.x0);

  std::vector<double> observed;
  observed.push_back(p.x0);
  std::vector<double> x{p.x0};
  const RoundHook hook = [&](std::span<const double> xi) { observed.push_back(xi[0]); };
  for (int k = 1; k <= p.K; ++k) {
    const PermutationSet perms = sample_permutation_set(p.M, p.N, p.seed, k, false);
    x = local_rr_epoch(std::move(x), problem, p.eta, p.B, perms, hook);
  }

  CrossCheckReport report;
  report.name = "hetero_vs_sim";
  double max_err = 0.0;
  for (std::size_t j = 0; j < expected.size(); ++j)
    max_err = std::max(max_err, std::fabs(expected[j] - observed[j]));
  report.max_abs_discrepancy = max_err;
  report.details = {{"sync_points", expected.size()}, {"final_expected", expected.back()},
                    {"final_observed", observed.back()}};
  return report;
}

// brute_force_epoch: exact enumeration of the minibatch RR epoch moments on
// F3, against (a) the Phi closed form and (b) Monte-Carlo.
inline CrossCheckReport oracle_brute_force_epoch(const OracleParams& p) {
  const Problem problem = make_skewed_quadratic_1d(SkewedKind::F3, p.L, p.mu, p.nu, p.N, p.M);
  double exact_mean = 0.0, exact_second = 0.0;
  enumerate_epoch_moments(problem, p.eta, p.B, p.x0, exact_mean, exact_second);

  const double alpha = 1.0 - p.eta * p.L;
  const double predicted =
      std::pow(alpha, 2.0 * p.N / p.B) * p.x0 * p.x0 +
      p.eta * p.eta * p.nu * p.nu / (static_cast<double>(p.M) * p.B * p.B) *
          phi_closed_form(p.N, p.B, alpha);

  std::vector<double> sq(static_cast<std::size_t>(p.mc_trials));
  for (long long t = 0; t < p.mc_trials; ++t) {
    const PermutationSet perms =
        sample_permutation_set(p.M, p.N, p.seed + static_cast<std::uint64_t>(t), 1, false);
    const std::vector<double> endpoint =
        minibatch_rr_epoch(std::vector<double>{p.x0}, problem, p.eta, p.B, perms);
    sq[static_cast<std::size_t>(t)] = endpoint[0] * endpoint[0];
  }
  const double mc_mean = pairwise_sum(sq) / static_cast<double>(p.mc_trials);
  double var = 0.0;
  for (double v : sq) var += (v - mc_mean) * (v - mc_mean);
  var /= static_cast<double>(p.mc_trials - 1);
  const double se = std::sqrt(var / static_cast<double>(p.mc_trials));

  CrossCheckReport report;
  report.name = "brute_force_epoch";
  report.max_abs_discrepancy = std::fabs(exact_second - predicted);
  report.mc_discrepancy_stderrs = se > 0.0 ? std::fabs(mc_mean - exact_second) / se : 0.0;
  report.details = {{"exact_mean", exact_mean},
                    {"exact_second_moment", exact_second},
                    {"phi_prediction", predicted},
                    {"mc_mean", mc_mean},
                    {"mc_stderr", se}};
  return report;
}

inline CrossCheckReport oracle_cross_check(const std::string& name, const OracleParams& params) {
  if (name == "phi_vs_sim") return oracle_phi_vs_sim(params);
  if (name == "hetero_vs_sim") return oracle_hetero_vs_sim(params);
  if (name == "brute_force_epoch") return oracle_brute_force_epoch(params);
  throw std::invalid_argument("oracle_cross_check: unknown oracle '" + name + "'");
}

// ---- Persistence ------------------------------------------------------------

enum class PersistFormat { Csv, Json };

inline nlohmann::json sweep_result_to_json(const SweepResult& r) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& pt : r.points)
    points.push_back({{"axis", r.axis},
                      {"value", pt.axis_value},
                      {"mean", pt.mean},
                      {"stderr", pt.stderr_},
                      {"trials", pt.trials},
                      {"diverged", pt.diverged},
                      {"excluded_from_fit", pt.excluded_from_fit}});
  return {{"axis", r.axis},
          {"points", points},
          {"slope", r.fitted_slope},
          {"slope_stderr", r.slope_stderr},
          {"r_squared", r.r_squared},
          {"fit_valid", r.fit_valid},
          {"seed", r.seed},
          {"spec_hash", r.spec_hash}};
}

inline SweepResult sweep_result_from_json(const nlohmann::json& j) {
  SweepResult r;
  r.axis = j.at("axis").get<std::string>();
  for (const auto& pj : j.at("points")) {
    SweepPoint pt;
    pt.axis_value = pj.at("value").get<long long>();
    pt.mean = pj.at("mean").get<double>();
    pt.stderr_ = pj.at("stderr").get<double>();
    pt.trials = pj.at("trials").get<int>();
    pt.diverged = pj.value("diverged", 0);
    pt.excluded_from_fit = pj.value("excluded_from_fit", false);
    r.points.push_back(pt);
  }
  r.fitted_slope = j.at("slope").get<double>();
  r.slope_stderr = j.at("slope_stderr").get<double>();
  r.r_squared = j.at("r_squared").get<double>();
  r.fit_valid = j.at("fit_valid").get<bool>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.spec_hash = j.at("spec_hash").get<std::string>();
  return r;
}

namespace detail {

inline std::string format_double(double v) {
  nlohmann::json j = v;  // shortest round-trip representation
  return j.dump();
}

}  // namespace detail

// CSV: exactly the columns axis,value,mean,stderr,trials plus a JSON sidecar
// <path>.meta.json carrying the fit and reproducibility metadata. JSON embeds
// everything in one document. No timestamps, so equal inputs give equal bytes.
inline void persist(const SweepResult& r, const std::string& path, PersistFormat format) {
  if (format == PersistFormat::Json) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("persist: cannot write " + path);
    out << sweep_result_to_json(r).dump(2) << "\n";
    if (!out) throw std::runtime_error("persist: write failed for " + path);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("persist: cannot write " + path);
  out << "axis,value,mean,stderr,trials\n";
  for (const auto& pt : r.points)
    out << r.axis << ',' << pt.axis_value << ',' << detail::format_double(pt.mean) << ','
        << detail::format_double(pt.stderr_) << ',' << pt.trials << "\n";
  if (!out) throw std::runtime_error("persist: write failed for " + path);

  nlohmann::json meta = {{"slope", r.fitted_slope},
                         {"slope_stderr", r.slope_stderr},
                         {"r_squared", r.r_squared},
                         {"fit_valid", r.fit_valid},
                         {"spec_hash", r.spec_hash},
                         {"seed", r.seed},
                         {"axis", r.axis}};
  std::ofstream side(path + ".meta.json", std::ios::binary);
  if (!side) throw std::runtime_error("persist: cannot write " + path + ".meta.json");
  side << meta.dump(2) << "\n";
  if (!side) throw std::runtime_error("persist: write failed for " + path + ".meta.json");
}

inline SweepResult load_sweep_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_sweep_json: cannot read " + path);
  nlohmann::json j;
  in >> j;
  return sweep_result_from_json(j);
}

inline SweepResult load_sweep_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_sweep_csv: cannot read " + path);
  SweepResult r;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    SweepPoint pt;
    std::getline(ss, field, ',');
    r.axis = field;
    std::getline(ss, field, ',');
    pt.axis_value = std::stoll(field);
    std::getline(ss, field, ',');
    pt.mean = std::stod(field);
    std::getline(ss, field, ',');
    pt.stderr_ = std::stod(field);
    std::getline(ss, field, ',');
    pt.trials = std::stoi(field);
    r.points.push_back(pt);
  }
  std::ifstream side(path + ".meta.json", std::ios::binary);
  if (side) {
    nlohmann::json meta;
    side >> meta;
    r.fitted_slope = meta.value("slope", 0.0);
    r.slope_stderr = meta.value("slope_stderr", 0.0);
    r.r_squared = meta.value("r_squared", 0.0);
    r.fit_valid = meta.value("fit_valid", false);
    r.spec_hash = meta.value("spec_hash", std::string());
    r.seed = meta.value("seed", std::uint64_t{0});
    if (meta.contains("axis")) r.axis = meta["axis"].get<std::string>();
  }
  return r;
}

inline nlohmann::json run_config_to_json(const RunConfig& cfg) {
  nlohmann::json j = {{"algorithm", static_cast<int>(cfg.algorithm)},
                      {"M", cfg.M},
                      {"N", cfg.N},
                      {"K", cfg.K},
                      {"B", cfg.B},
                      {"sync_shuf", cfg.sync_shuf},
                      {"seed", cfg.seed},
                      {"record", static_cast<int>(cfg.record)}};
  if (cfg.eta) j["eta"] = *cfg.eta;
  if (cfg.rule) j["rule"] = static_cast<int>(*cfg.rule);
  if (!cfg.x0.empty()) j["x0"] = cfg.x0;
  return j;
}

inline nlohmann::json spec_to_json(const SweepSpec& spec) {
  return {{"base_config", run_config_to_json(spec.base_config)},
          {"problem",
           {{"kind", spec.problem.kind},
            {"L", spec.problem.L},
            {"mu", spec.problem.mu},
            {"nu", spec.problem.nu},
            {"tau", spec.problem.tau}}},
          {"axis", axis_name(spec.axis)},
          {"values", spec.values},
          {"trials", spec.trials},
          {"base_seed", spec.base_seed},
          {"measure", static_cast<int>(spec.measure)}};
}

}  // namespace shuffle_fl
