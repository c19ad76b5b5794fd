#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "shuffle_fl/problem.hpp"
#include "shuffle_fl/rates.hpp"
#include "shuffle_fl/rng.hpp"
#include "shuffle_fl/shuffle.hpp"

namespace shuffle_fl {

enum class Algorithm { MinibatchRR, LocalRR, MinibatchSGD, LocalSGD, GD };
enum class Record { FinalOnly, PerEpoch, PerRound };

// Thrown when an iterate leaves the finite range; carries the epoch index.
class diverged_error : public std::runtime_error {
 public:
  diverged_error(int epoch, const std::string& what) : std::runtime_error(what), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

struct RunConfig {
  Algorithm algorithm = Algorithm::MinibatchRR;
  int M = 1;
  int N = 2;
  int K = 1;
  int B = 1;
  std::optional<double> eta;    // explicit step size, overrides rule
  std::optional<Rule> rule;     // named step-size rule; default matches algorithm
  bool sync_shuf = false;
  std::uint64_t seed = 0;
  Record record = Record::FinalOnly;
  std::vector<double> x0;       // empty: start at the origin
  // Permits B outside the standard ranges (B = N minibatch, B = 1 local)
  // for the structural equivalence tests.
  bool relax_batch_bounds = false;

  void validate() const {
    if (M < 1 || N < 2 || K < 0 || B < 1) throw std::invalid_argument("RunConfig: need M >= 1, N >= 2, K >= 0, B >= 1");
    if (algorithm != Algorithm::GD) {
      if (N % B != 0) throw std::invalid_argument("RunConfig: B must divide N");
      if (!relax_batch_bounds) {
        if (algorithm == Algorithm::MinibatchRR && B > N / 2)
          throw std::invalid_argument("RunConfig: minibatch RR requires 1 <= B <= N/2");
        if (algorithm == Algorithm::LocalRR && B < 2)
          throw std::invalid_argument("RunConfig: local RR requires 2 <= B <= N");
      }
    }
    if (sync_shuf && N % M != 0)
      throw std::invalid_argument("RunConfig: M must divide N under SyncShuf");
  }

  Rule default_rule() const {
    switch (algorithm) {
      case Algorithm::MinibatchRR:
      case Algorithm::MinibatchSGD:
        return sync_shuf ? Rule::ThmMinibatchRRSync : Rule::ThmMinibatchRR;
      case Algorithm::LocalRR:
      case Algorithm::LocalSGD:
        return sync_shuf ? Rule::ThmLocalRRSync : Rule::ThmLocalRR;
      case Algorithm::GD:
        return Rule::ThmMinibatchRR;  // unused; GD defaults to 1/L
    }
    return Rule::ThmMinibatchRR;
  }

  double resolve_step_size(const Constants& c) const {
    if (eta) {
      if (*eta <= 0.0) throw std::invalid_argument("RunConfig: eta must be > 0");
      return *eta;
    }
    if (algorithm == Algorithm::GD && !rule) return 1.0 / c.L;
    RateParams rp;
    rp.L = c.L;
    rp.mu = c.mu;
    rp.rho = c.rho;
    rp.M = M;
    rp.N = N;
    rp.K = K;
    rp.B = B;
    return step_size(rule ? *rule : default_rule(), rp);
  }
};

struct RunResult {
  std::vector<double> suboptimality;  // F(iterate) - F* at recorded checkpoints
  std::vector<double> final_x;
  int epochs_run = 0;
  long long gradient_evaluations = 0;
  long long communication_rounds = 0;
};

using RoundHook = std::function<void(std::span<const double>)>;

namespace detail {

inline double pairwise_machine_sum(const std::vector<std::vector<double>>& v, std::size_t d,
                                   std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return v[lo][d];
  const std::size_t mid = lo + (hi - lo) / 2;
  return pairwise_machine_sum(v, d, lo, mid) + pairwise_machine_sum(v, d, mid, hi);
}

// Fixed-order pairwise reduction of M per-machine vectors into `out`
// (divided by M). The reduction tree depends only on machine indices, so
// simulating machines in any order gives bit-identical averages.
inline void average_machines(const std::vector<std::vector<double>>& per_machine,
                             std::vector<double>& out) {
  const std::size_t M = per_machine.size();
  const std::size_t dim = per_machine[0].size();
  for (std::size_t d = 0; d < dim; ++d)
    out[d] = pairwise_machine_sum(per_machine, d, 0, M) / static_cast<double>(M);
}

inline void guard_finite(std::span<const double> x, int epoch) {
  for (double v : x)
    if (!std::isfinite(v) || std::fabs(v) > 1e12)
      throw diverged_error(epoch, "iterate diverged at epoch " + std::to_string(epoch));
}

}  // namespace detail

// One epoch of minibatch RR (Algorithm 2): N/B rounds, all MB gradients of a
// round evaluated at the round's starting iterate,
//   x_i = x_{i-1} - (eta/M) sum_m (1/B) sum_{j=(i-1)B+1}^{iB}
//                                   grad f^m_{sigma_m(j)}(x_{i-1}).
inline std::vector<double> minibatch_rr_epoch(std::vector<double> x, const Problem& p, double eta,
                                              int B, const PermutationSet& perms,
                                              const RoundHook& on_round = {}) {
  if (p.components % B != 0) throw std::invalid_argument("minibatch_rr_epoch: B must divide N");
  if (perms.machines() != p.machines)
    throw std::invalid_argument("minibatch_rr_epoch: need one permutation per machine");
  const int rounds = p.components / B;
  const auto dim = static_cast<std::size_t>(p.dim);
  std::vector<std::vector<double>> machine_sum(static_cast<std::size_t>(p.machines),
                                               std::vector<double>(dim));
  std::vector<double> g(dim), avg(dim);
  for (int r = 1; r <= rounds; ++r) {
    for (int m = 1; m <= p.machines; ++m) {
      auto& acc = machine_sum[static_cast<std::size_t>(m - 1)];
      std::fill(acc.begin(), acc.end(), 0.0);
      const Permutation& sigma = perms.per_machine[static_cast<std::size_t>(m - 1)];
      for (int j = (r - 1) * B + 1; j <= r * B; ++j) {
        p.component_grad(m, sigma(j), x, g);
        for (std::size_t d = 0; d < dim; ++d) acc[d] += g[d];
      }
      for (double& v : acc) v /= B;
    }
    detail::average_machines(machine_sum, avg);
    for (std::size_t d = 0; d < dim; ++d) x[d] -= eta * avg[d];
    if (on_round) on_round(x);
  }
  return x;
}

// One epoch of local RR (Algorithm 1): each machine takes sequential steps on
// its own shuffled components; after every B steps the iterates are averaged
// and re-broadcast. Returns the final synchronized average y_{N/B}.
inline std::vector<double> local_rr_epoch(std::vector<double> x, const Problem& p, double eta,
                                          int B, const PermutationSet& perms,
                                          const RoundHook& on_round = {}) {
  if (p.components % B != 0) throw std::invalid_argument("local_rr_epoch: B must divide N");
  if (perms.machines() != p.machines)
    throw std::invalid_argument("local_rr_epoch: need one permutation per machine");
  const auto dim = static_cast<std::size_t>(p.dim);
  std::vector<std::vector<double>> local(static_cast<std::size_t>(p.machines), x);
  std::vector<double> g(dim);
  for (int i = 1; i <= p.components; ++i) {
    for (int m = 1; m <= p.machines; ++m) {
      auto& xm = local[static_cast<std::size_t>(m - 1)];
      const Permutation& sigma = perms.per_machine[static_cast<std::size_t>(m - 1)];
      p.component_grad(m, sigma(i), xm, g);
      for (std::size_t d = 0; d < dim; ++d) xm[d] -= eta * g[d];
    }
    if (i % B == 0) {
      detail::average_machines(local, x);
      for (auto& xm : local) xm = x;
      if (on_round) on_round(x);
    }
  }
  return x;
}

// With-replacement counterpart of minibatch RR: identical round structure,
// each machine contributes B gradients at i.i.d. uniform component indices.
inline std::vector<double> minibatch_sgd_epoch(std::vector<double> x, const Problem& p, double eta,
                                               int B, std::vector<Rng>& machine_rngs,
                                               const RoundHook& on_round = {}) {
  if (p.components % B != 0) throw std::invalid_argument("minibatch_sgd_epoch: B must divide N");
  const int rounds = p.components / B;
  const auto dim = static_cast<std::size_t>(p.dim);
  std::vector<std::vector<double>> machine_sum(static_cast<std::size_t>(p.machines),
                                               std::vector<double>(dim));
  std::vector<double> g(dim), avg(dim);
  for (int r = 1; r <= rounds; ++r) {
    for (int m = 1; m <= p.machines; ++m) {
      auto& acc = machine_sum[static_cast<std::size_t>(m - 1)];
      std::fill(acc.begin(), acc.end(), 0.0);
      Rng& rng = machine_rngs[static_cast<std::size_t>(m - 1)];
      for (int j = 0; j < B; ++j) {
        const int idx = static_cast<int>(rng.below(static_cast<std::uint64_t>(p.components))) + 1;
        p.component_grad(m, idx, x, g);
        for (std::size_t d = 0; d < dim; ++d) acc[d] += g[d];
      }
      for (double& v : acc) v /= B;
    }
    detail::average_machines(machine_sum, avg);
    for (std::size_t d = 0; d < dim; ++d) x[d] -= eta * avg[d];
    if (on_round) on_round(x);
  }
  return x;
}

// With-replacement counterpart of local RR: same synchronization pattern,
// i.i.d. uniform index per machine per local step.
inline std::vector<double> local_sgd_epoch(std::vector<double> x, const Problem& p, double eta,
                                           int B, std::vector<Rng>& machine_rngs,
                                           const RoundHook& on_round = {}) {
  if (p.components % B != 0) throw std::invalid_argument("local_sgd_epoch: B must divide N");
  const auto dim = static_cast<std::size_t>(p.dim);
  std::vector<std::vector<double>> local(static_cast<std::size_t>(p.machines), x);
  std::vector<double> g(dim);
  for (int i = 1; i <= p.components; ++i) {
    for (int m = 1; m <= p.machines; ++m) {
      auto& xm = local[static_cast<std::size_t>(m - 1)];
      Rng& rng = machine_rngs[static_cast<std::size_t>(m - 1)];
      const int idx = static_cast<int>(rng.below(static_cast<std::uint64_t>(p.components))) + 1;
      p.component_grad(m, idx, xm, g);
      for (std::size_t d = 0; d < dim; ++d) xm[d] -= eta * g[d];
    }
    if (i % B == 0) {
      detail::average_machines(local, x);
      for (auto& xm : local) xm = x;
      if (on_round) on_round(x);
    }
  }
  return x;
}

inline std::vector<double> gd_epoch(std::vector<double> x, const Problem& p, double eta) {
  const std::vector<double> g = global_gradient(p, x);
  for (std::size_t d = 0; d < x.size(); ++d) x[d] -= eta * g[d];
  return x;
}

// Runs K epochs of the configured algorithm. Per-epoch permutations derive
// from (seed, epoch, machine), so prefix trajectories coincide across runs
// that share a seed but differ in K.
inline RunResult run(const Problem& p, const RunConfig& cfg) {
  cfg.validate();
  if (cfg.M != p.machines || cfg.N != p.components)
    throw std::invalid_argument("run: config (M, N) must match the problem");
  const double eta = cfg.resolve_step_size(p.constants);
  const int B = cfg.algorithm == Algorithm::GD ? p.components : cfg.B;

  std::vector<double> x = cfg.x0.empty() ? std::vector<double>(static_cast<std::size_t>(p.dim), 0.0)
                                         : cfg.x0;
  if (static_cast<int>(x.size()) != p.dim) throw std::invalid_argument("run: x0 dimension mismatch");

  RunResult result;
  auto record_point = [&](std::span<const double> xi) {
    result.suboptimality.push_back(suboptimality(p, xi));
  };
  if (cfg.record != Record::FinalOnly) record_point(x);

  RoundHook hook;
  if (cfg.record == Record::PerRound) hook = record_point;

  for (int k = 1; k <= cfg.K; ++k) {
    switch (cfg.algorithm) {
      case Algorithm::MinibatchRR:
      case Algorithm::LocalRR: {
        const PermutationSet perms =
            sample_permutation_set(cfg.M, cfg.N, cfg.seed, k, cfg.sync_shuf);
        x = cfg.algorithm == Algorithm::MinibatchRR
                ? minibatch_rr_epoch(std::move(x), p, eta, B, perms, hook)
                : local_rr_epoch(std::move(x), p, eta, B, perms, hook);
        break;
      }
      case Algorithm::MinibatchSGD:
      case Algorithm::LocalSGD: {
        std::vector<Rng> rngs;
        rngs.reserve(static_cast<std::size_t>(cfg.M));
        for (int m = 1; m <= cfg.M; ++m)
          rngs.push_back(Rng::substream(cfg.seed, static_cast<std::uint64_t>(k),
                                        static_cast<std::uint64_t>(m)));
        x = cfg.algorithm == Algorithm::MinibatchSGD
                ? minibatch_sgd_epoch(std::move(x), p, eta, B, rngs, hook)
                : local_sgd_epoch(std::move(x), p, eta, B, rngs, hook);
        break;
      }
      case Algorithm::GD:
        x = gd_epoch(std::move(x), p, eta);
        if (hook) hook(x);
        break;
    }
    detail::guard_finite(x, k);
    if (cfg.record == Record::PerEpoch) record_point(x);
  }

  if (cfg.record == Record::FinalOnly || result.suboptimality.empty()) record_point(x);
  result.final_x = std::move(x);
  result.epochs_run = cfg.K;
  result.gradient_evaluations =
      static_cast<long long>(cfg.M) * p.components * cfg.K;
  result.communication_rounds = static_cast<long long>(p.components) * cfg.K / B;
  return result;
}

}  // namespace shuffle_fl
