#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <map>
#include <stdexcept>
#include <vector>

#include "shuffle_fl/rng.hpp"
#include "shuffle_fl/shuffle.hpp"

namespace shuffle_fl {

// Generalized vector Hoeffding-Serfling bound for the mean of M independent
// without-replacement prefix sums:
//   nu * sqrt(8 (1 - (n-1)/N) log(2/delta) / (M n)).
inline double hs_bound(double nu, int M, int N, int n, double delta) {
  if (nu < 0.0) throw std::invalid_argument("hs_bound: nu must be >= 0");
  if (M < 1 || N < 2) throw std::invalid_argument("hs_bound: need M >= 1, N >= 2");
  if (n < 1 || n > N - 1) throw std::invalid_argument("hs_bound: need 1 <= n <= N-1");
  if (delta <= 0.0 || delta >= 1.0) throw std::invalid_argument("hs_bound: delta must be in (0,1)");
  const double frac = 1.0 - static_cast<double>(n - 1) / N;
  return nu * std::sqrt(8.0 * frac * std::log(2.0 / delta) / (static_cast<double>(M) * n));
}

// Population for the Monte-Carlo validator: M machines, N vectors each, with
// deviations ||v_i^m - vbar^m|| <= nu.
struct WithoutReplacementSpec {
  int M = 1;
  int N = 2;
  int n = 1;  // prefix length, 1 <= n <= N-1
  double nu = 1.0;
  double delta = 0.05;
  // vectors[m][i] is v_i^m, each of the same dimension.
  std::vector<std::vector<std::vector<double>>> vectors;

  int dim() const { return vectors.empty() || vectors[0].empty() ? 0 : static_cast<int>(vectors[0][0].size()); }

  void validate() const {
    if (static_cast<int>(vectors.size()) != M) throw std::invalid_argument("WithoutReplacementSpec: need M machines");
    if (n < 1 || n > N - 1) throw std::invalid_argument("WithoutReplacementSpec: need 1 <= n <= N-1");
    if (delta <= 0.0 || delta >= 1.0) throw std::invalid_argument("WithoutReplacementSpec: delta in (0,1)");
    const auto d = static_cast<std::size_t>(dim());
    for (const auto& machine : vectors) {
      if (static_cast<int>(machine.size()) != N)
        throw std::invalid_argument("WithoutReplacementSpec: need N vectors per machine");
      std::vector<double> mean(d, 0.0);
      for (const auto& v : machine)
        for (std::size_t t = 0; t < d; ++t) mean[t] += v[t] / N;
      for (const auto& v : machine) {
        double dev = 0.0;
        for (std::size_t t = 0; t < d; ++t) dev += (v[t] - mean[t]) * (v[t] - mean[t]);
        if (std::sqrt(dev) > nu + 1e-9 * (1.0 + nu))
          throw std::invalid_argument("WithoutReplacementSpec: deviation exceeds nu");
      }
    }
  }
};

// Scalar population of +/- nu values, N/2 each; per-machine mean is zero.
inline WithoutReplacementSpec make_signed_population(int M, int N, int n, double nu, double delta) {
  if (N % 2 != 0) throw std::invalid_argument("make_signed_population: N must be even");
  WithoutReplacementSpec spec;
  spec.M = M;
  spec.N = N;
  spec.n = n;
  spec.nu = nu;
  spec.delta = delta;
  spec.vectors.assign(static_cast<std::size_t>(M),
                      std::vector<std::vector<double>>(static_cast<std::size_t>(N)));
  for (int m = 0; m < M; ++m)
    for (int i = 0; i < N; ++i)
      spec.vectors[static_cast<std::size_t>(m)][static_cast<std::size_t>(i)] = {i < N / 2 ? nu : -nu};
  return spec;
}

// 3-D population of antipodal pairs +/- nu * u with random unit directions u;
// per-machine means are exactly the shared center and every deviation has
// norm exactly nu.
inline WithoutReplacementSpec make_sphere_population(int M, int N, int n, double nu, double delta,
                                                     std::uint64_t seed) {
  if (N % 2 != 0) throw std::invalid_argument("make_sphere_population: N must be even");
  WithoutReplacementSpec spec;
  spec.M = M;
  spec.N = N;
  spec.n = n;
  spec.nu = nu;
  spec.delta = delta;
  spec.vectors.assign(static_cast<std::size_t>(M), {});
  for (int m = 0; m < M; ++m) {
    Rng rng = Rng::substream(seed, 0x5f3759df, static_cast<std::uint64_t>(m));
    auto& machine = spec.vectors[static_cast<std::size_t>(m)];
    machine.reserve(static_cast<std::size_t>(N));
    for (int pair = 0; pair < N / 2; ++pair) {
      double u[3];
      double norm = 0.0;
      do {
        norm = 0.0;
        for (double& c : u) {
          c = rng.normal();
          norm += c * c;
        }
        norm = std::sqrt(norm);
      } while (norm < 1e-12);
      machine.push_back({nu * u[0] / norm, nu * u[1] / norm, nu * u[2] / norm});
      machine.push_back({-nu * u[0] / norm, -nu * u[1] / norm, -nu * u[2] / norm});
    }
  }
  return spec;
}

struct ViolationReport {
  double bound = 0.0;
  long long trials = 0;
  long long violations = 0;
  double rate = 0.0;
  double stderr_ = 0.0;  // binomial standard error
  bool pass = false;     // rate <= delta + 3 * stderr
};

// Draws M independent permutations per trial and checks whether
// ||(1/(Mn)) sum_m sum_{i<=n} v^m_{sigma_m(i)} - (1/M) sum_m vbar^m||
// exceeds hs_bound. Reproducible: trial t uses substream (seed, t, m).
inline ViolationReport mc_violation_rate(const WithoutReplacementSpec& spec, long long n_trials,
                                         std::uint64_t seed) {
  spec.validate();
  if (n_trials < 1) throw std::invalid_argument("mc_violation_rate: n_trials must be >= 1");

  const auto d = static_cast<std::size_t>(spec.dim());
  std::vector<double> center(d, 0.0);
  for (const auto& machine : spec.vectors)
    for (const auto& v : machine)
      for (std::size_t t = 0; t < d; ++t)
        center[t] += v[t] / (static_cast<double>(spec.M) * spec.N);

  ViolationReport report;
  report.bound = hs_bound(spec.nu, spec.M, spec.N, spec.n, spec.delta);
  report.trials = n_trials;

  std::vector<double> acc(d);
  for (long long t = 0; t < n_trials; ++t) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int m = 0; m < spec.M; ++m) {
      Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(m));
      const Permutation sigma = sample_uniform_permutation(spec.N, rng);
      const auto& machine = spec.vectors[static_cast<std::size_t>(m)];
      for (int i = 1; i <= spec.n; ++i) {
        const auto& v = machine[static_cast<std::size_t>(sigma(i) - 1)];
        for (std::size_t q = 0; q < d; ++q) acc[q] += v[q];
      }
    }
    double dev = 0.0;
    for (std::size_t q = 0; q < d; ++q) {
      const double delta_q = acc[q] / (static_cast<double>(spec.M) * spec.n) - center[q];
      dev += delta_q * delta_q;
    }
    if (std::sqrt(dev) > report.bound) ++report.violations;
  }

  report.rate = static_cast<double>(report.violations) / static_cast<double>(n_trials);
  report.stderr_ = std::sqrt(report.rate * (1.0 - report.rate) / static_cast<double>(n_trials));
  report.pass = report.rate <= spec.delta + 3.0 * report.stderr_;
  return report;
}

// Exact distribution of the signed partial-sum statistic of the lower-bound
// analysis: S = (1/M) sum_m sum_{j<=i} sigma^m_j + sum_{j=i+1}^{i+k} sigma^M_j
// over M independent random arrangements of N/2 +1's and N/2 -1's. Stored as
// integer counts of M*S, so probabilities and moments are exact.
struct PartialSumDistribution {
  int N = 0, M = 0, i = 0, k = 0;
  std::map<long long, std::uint64_t> counts;  // key: M * S
  std::uint64_t total = 0;

  double expected_abs() const {
    long double acc = 0.0;
    for (const auto& [value, count] : counts)
      acc += static_cast<long double>(std::llabs(value)) * count;
    return static_cast<double>(acc / (static_cast<long double>(M) * total));
  }
  std::uint64_t count_positive() const {
    std::uint64_t c = 0;
    for (const auto& [value, count] : counts)
      if (value > 0) c += count;
    return c;
  }
  std::uint64_t count_negative() const {
    std::uint64_t c = 0;
    for (const auto& [value, count] : counts)
      if (value < 0) c += count;
    return c;
  }
  double p_positive() const { return static_cast<double>(count_positive()) / static_cast<double>(total); }
  double p_negative() const { return static_cast<double>(count_negative()) / static_cast<double>(total); }
};

// Exhaustive enumeration over all C(N, N/2)^M equally likely sign-pattern
// tuples. Only sign placement matters, so each machine is represented by the
// positions of its +1's. Enforced limits N <= 8, M <= 3 keep this exact.
inline PartialSumDistribution exact_partial_sum_distribution(int N, int M, int i, int k) {
  if (N < 2 || N % 2 != 0) throw std::invalid_argument("exact_partial_sum_distribution: N must be even");
  if (N > 8 || M < 1 || M > 3)
    throw std::invalid_argument("exact_partial_sum_distribution: enumeration limited to N <= 8, M <= 3");
  if (i < 0 || k < 0 || i + k > N)
    throw std::invalid_argument("exact_partial_sum_distribution: need 0 <= i, 0 <= k, i + k <= N");
  if (i + k < 1) throw std::invalid_argument("exact_partial_sum_distribution: need i + k >= 1");

  // All distinct arrangements with prefix sums precomputed.
  std::vector<std::vector<int>> prefix;  // prefix[p][j] = sum of first j signs
  {
    std::vector<int> signs(static_cast<std::size_t>(N), -1);
    for (int t = 0; t < N / 2; ++t) signs[static_cast<std::size_t>(t)] = 1;
    std::sort(signs.begin(), signs.end(), std::greater<int>());
    do {
      std::vector<int> ps(static_cast<std::size_t>(N) + 1, 0);
      for (int j = 0; j < N; ++j) ps[static_cast<std::size_t>(j) + 1] = ps[static_cast<std::size_t>(j)] + signs[static_cast<std::size_t>(j)];
      prefix.push_back(std::move(ps));
    } while (std::prev_permutation(signs.begin(), signs.end()));
  }

  PartialSumDistribution dist;
  dist.N = N;
  dist.M = M;
  dist.i = i;
  dist.k = k;

  const std::size_t patterns = prefix.size();
  std::vector<std::size_t> odo(static_cast<std::size_t>(M), 0);
  for (;;) {
    long long scaled = 0;  // M * S
    for (int m = 0; m < M; ++m) scaled += prefix[odo[static_cast<std::size_t>(m)]][static_cast<std::size_t>(i)];
    const auto& last = prefix[odo[static_cast<std::size_t>(M - 1)]];
    scaled += static_cast<long long>(M) *
              (last[static_cast<std::size_t>(i + k)] - last[static_cast<std::size_t>(i)]);
    ++dist.counts[scaled];
    ++dist.total;

    int digit = M - 1;
    while (digit >= 0 && ++odo[static_cast<std::size_t>(digit)] == patterns) {
      odo[static_cast<std::size_t>(digit)] = 0;
      --digit;
    }
    if (digit < 0) break;
  }
  return dist;
}

}  // namespace shuffle_fl
