#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

namespace shuffle_fl {

// Constant step-size rules. Logs are natural throughout.
enum class Rule { ThmMinibatchRR, ThmLocalRR, ThmMinibatchRRSync, ThmLocalRRSync };

enum class UpperTheorem { T1, T2, T5, T6 };
enum class LowerTheorem { T3, T4, P1 };
enum class CostKind { Minibatch, Local };

struct RateParams {
  double L = 1.0;
  double mu = 1.0;
  double nu = 0.0;
  double tau = 0.0;
  double rho = 1.0;
  double lambda = 0.0;
  long long M = 1;
  long long N = 2;
  long long K = 1;
  long long B = 1;
  double F0_gap = 0.0;   // F(x_0) - F*
  double c_c = 1.0;      // cost of one communication round
  double c_e = 1.0;      // cost of one epoch of gradient computation
  double epsilon = 1e-3;

  double kappa() const { return L / mu; }
};

namespace detail {

inline double rule_log_arg(Rule rule, const RateParams& p) {
  const double m = static_cast<double>(p.M);
  const double base = static_cast<double>(p.N) * static_cast<double>(p.K) * static_cast<double>(p.K);
  switch (rule) {
    case Rule::ThmMinibatchRR:
    case Rule::ThmLocalRR: return m * base;
    case Rule::ThmMinibatchRRSync:
    case Rule::ThmLocalRRSync: return m * m * base;
  }
  return 0.0;
}

}  // namespace detail

// Named step-size rules:
//   minibatch RR        B log(M N K^2) / (mu N K)
//   local RR              log(M N K^2) / (mu N K)
//   minibatch RR + sync B log(M^2 N K^2) / (mu N K)
//   local RR + sync       log(M^2 N K^2) / (mu N K)
inline double step_size(Rule rule, const RateParams& p) {
  if (p.M < 1 || p.N < 1 || p.K < 1 || p.B < 1 || p.mu <= 0.0)
    throw std::invalid_argument("step_size: parameters must be positive");
  const double arg = detail::rule_log_arg(rule, p);
  if (arg <= 1.0) throw std::invalid_argument("step_size: MNK^2 must exceed 1");
  const double common = std::log(arg) / (p.mu * static_cast<double>(p.N) * static_cast<double>(p.K));
  const bool batch_scaled = rule == Rule::ThmMinibatchRR || rule == Rule::ThmMinibatchRRSync;
  return batch_scaled ? static_cast<double>(p.B) * common : common;
}

// Smallest K satisfying the self-referential epoch requirement paired with
// each step-size rule:
//   T1: K >= 6 kappa log(M N K^2)      T2: K >= 7 rho kappa log(M N K^2)
//   T5: K >= 6 kappa log(M^2 N K^2)    T6: K >= 7 kappa log(M^2 N K^2)
// Found by monotone search; the LHS grows linearly and the RHS only
// logarithmically, so the first crossing is the answer.
inline long long epoch_threshold(Rule rule, const RateParams& p) {
  if (p.M < 1 || p.N < 1 || p.mu <= 0.0 || p.L < p.mu)
    throw std::invalid_argument("epoch_threshold: invalid parameters");
  double factor = 0.0;
  switch (rule) {
    case Rule::ThmMinibatchRR: factor = 6.0 * p.kappa(); break;
    case Rule::ThmLocalRR: factor = 7.0 * p.rho * p.kappa(); break;
    case Rule::ThmMinibatchRRSync: factor = 6.0 * p.kappa(); break;
    case Rule::ThmLocalRRSync: factor = 7.0 * p.kappa(); break;
  }
  const double m = static_cast<double>(p.M);
  const double m_factor =
      (rule == Rule::ThmMinibatchRRSync || rule == Rule::ThmLocalRRSync) ? m * m : m;
  auto satisfied = [&](long long K) {
    const double arg = m_factor * static_cast<double>(p.N) * static_cast<double>(K) *
                       static_cast<double>(K);
    return static_cast<double>(K) >= factor * std::log(arg);
  };
  long long hi = 1;
  while (!satisfied(hi)) {
    if (hi > (1LL << 60)) throw std::invalid_argument("epoch_threshold: search overflow");
    hi *= 2;
  }
  long long lo = hi / 2;
  while (lo + 1 < hi) {
    const long long mid = lo + (hi - lo) / 2;
    (satisfied(mid) ? hi : lo) = mid;
  }
  while (hi > 1 && satisfied(hi - 1)) --hi;
  return hi;
}

struct BoundResult {
  double order = 0.0;                    // unit constants, log factors as displayed
  std::optional<double> explicit_value;  // full-constant form, when available
  bool in_regime = true;                 // K >= epoch_threshold for the matching rule
};

// Upper-bound right-hand sides. `order` evaluates the rate with unit
// constants, keeping the squared step-size log factor; T1 also has a
// full-constant form
//   F0/(MNK^2) + 15 L^2 nu^2 (N^{3/2}-B^{3/2})^2 log(2NK/(B delta)) log^2(MNK^2)
//                 / (mu^3 M N^4 K^2),
// reported through `explicit_value` at the supplied delta.
inline BoundResult upper_bound(UpperTheorem thm, const RateParams& p, double delta = 0.05) {
  if (p.M < 1 || p.N < 1 || p.K < 1 || p.B < 1) throw std::invalid_argument("upper_bound: invalid sizes");
  const double M = static_cast<double>(p.M), N = static_cast<double>(p.N),
               K = static_cast<double>(p.K), B = static_cast<double>(p.B);
  const double kap2 = p.L * p.L / (p.mu * p.mu * p.mu);
  BoundResult r;
  Rule rule = Rule::ThmMinibatchRR;
  switch (thm) {
    case UpperTheorem::T1: rule = Rule::ThmMinibatchRR; break;
    case UpperTheorem::T2: rule = Rule::ThmLocalRR; break;
    case UpperTheorem::T5: rule = Rule::ThmMinibatchRRSync; break;
    case UpperTheorem::T6: rule = Rule::ThmLocalRRSync; break;
  }
  const double lg = std::log(detail::rule_log_arg(rule, p));
  switch (thm) {
    case UpperTheorem::T1:
      r.order = p.F0_gap / (M * N * K * K) + kap2 * p.nu * p.nu / (M * N * K * K) * lg * lg;
      if (delta > 0.0 && delta < 1.0) {
        const double gap_term = p.F0_gap / (M * N * K * K);
        const double shape = std::pow(N, 1.5) - std::pow(B, 1.5);
        r.explicit_value = gap_term + 15.0 * p.L * p.L * p.nu * p.nu * shape * shape *
                                          std::log(2.0 * N * K / (B * delta)) * lg * lg /
                                          (p.mu * p.mu * p.mu * M * N * N * N * N * K * K);
      }
      break;
    case UpperTheorem::T2:
      r.order = p.F0_gap / (M * N * K * K) +
                kap2 * lg * lg *
                    (p.nu * p.nu / (M * N * K * K) + p.nu * p.nu * B / (N * N * K * K) +
                     p.tau * p.tau * B * B / (N * N * K * K));
      break;
    case UpperTheorem::T5:
      r.order = p.F0_gap / (M * M * N * K * K) +
                kap2 * lg * lg *
                    (p.nu * p.nu / (M * M * N * K * K) + p.lambda * p.lambda / (M * K * K));
      break;
    case UpperTheorem::T6:
      r.order = p.F0_gap / (M * M * N * K * K) +
                kap2 * lg * lg *
                    (p.nu * p.nu / (M * M * N * K * K) + p.nu * p.nu * B / (N * N * K * K) +
                     p.lambda * p.lambda * B * B / (N * N * K * K) +
                     p.lambda * p.lambda / (M * K * K));
      break;
  }
  r.in_regime = p.K >= epoch_threshold(rule, p);
  return r;
}

// Lower bounds with order constants set to one. The regime constants c2/c4
// ("large enough" in the statements) default to 1 and may be overridden.
inline double lower_bound(LowerTheorem thm, const RateParams& p, double c_regime = 1.0) {
  const double M = static_cast<double>(p.M), N = static_cast<double>(p.N),
               K = static_cast<double>(p.K), B = static_cast<double>(p.B);
  switch (thm) {
    case LowerTheorem::T3:
      return static_cast<double>(p.K) < c_regime * p.kappa()
                 ? p.nu * p.nu / (p.mu * M * N * K)
                 : p.nu * p.nu / (p.mu * M * N * K * K);
    case LowerTheorem::T4:
      return static_cast<double>(p.K) < c_regime * p.kappa()
                 ? p.nu * p.nu / (p.mu * M * N * K)
                 : p.nu * p.nu / (p.mu * M * N * K * K) + p.nu * p.nu * B / (p.mu * N * N * K * K);
    case LowerTheorem::P1:
      return p.tau * p.tau * B * B / (p.mu * N * N * K * K);
  }
  return 0.0;
}

// Total cost to reach epsilon accuracy, unit constants:
//   minibatch: c_c nu sqrt(N) / (B sqrt(M eps)) + c_e nu / sqrt(M N eps)
//   local:     c_c (nu sqrt(N)/(B sqrt(M eps)) + nu/sqrt(B eps) + tau/sqrt(eps))
//            + c_e (nu/sqrt(M N eps) + nu sqrt(B)/(N sqrt(eps)) + tau B/(N sqrt(eps)))
inline double total_cost(CostKind kind, const RateParams& p) {
  if (p.epsilon <= 0.0) throw std::invalid_argument("total_cost: epsilon must be > 0");
  const double M = static_cast<double>(p.M), N = static_cast<double>(p.N),
               B = static_cast<double>(p.B), eps = p.epsilon;
  const double comm = p.c_c * p.nu * std::sqrt(N) / (B * std::sqrt(M * eps));
  const double comp = p.c_e * p.nu / std::sqrt(M * N * eps);
  if (kind == CostKind::Minibatch) return comm + comp;
  return p.c_c * (p.nu * std::sqrt(N) / (B * std::sqrt(M * eps)) + p.nu / std::sqrt(B * eps) +
                  p.tau / std::sqrt(eps)) +
         p.c_e * (p.nu / std::sqrt(M * N * eps) + p.nu * std::sqrt(B) / (N * std::sqrt(eps)) +
                  p.tau * B / (N * std::sqrt(eps)));
}

// Exact variance of the geometric-weighted blocked sum of a random +/-1
// arrangement (N/2 of each sign), alpha = 1 - eta L:
//   Phi = (B^2 (n-1)/(N-1)) ((1 + 1/(n-1)) sum_j alpha^{2j}
//                            - (1/(n-1)) (sum_j alpha^j)^2),  n = N/B,
// with the sums over j = 0..n-1.
inline double phi_closed_form(long long N, long long B, double alpha) {
  if (N < 2 || B < 1 || N % B != 0) throw std::invalid_argument("phi_closed_form: need B | N, N >= 2");
  const long long n = N / B;
  if (n < 2) throw std::invalid_argument("phi_closed_form: need N/B >= 2");
  double sum_a = 0.0, sum_a2 = 0.0, pw = 1.0;
  for (long long j = 0; j < n; ++j) {
    sum_a += pw;
    sum_a2 += pw * pw;
    pw *= alpha;
  }
  const double nm1 = static_cast<double>(n - 1);
  const double bb = static_cast<double>(B) * static_cast<double>(B);
  return bb * nm1 / static_cast<double>(N - 1) *
         ((1.0 + 1.0 / nm1) * sum_a2 - (1.0 / nm1) * sum_a * sum_a);
}

// Deterministic synchronized-average trajectory of local RR on the
// heterogeneous linear/quadratic construction:
//   y_{r+1} = (1/2)(1 + (1-2 eta mu)^B) y_r
//             + (eta tau / 2)(B - sum_{j=0}^{B-1} (1-2 eta mu)^j).
// Returns y_0, y_1, ..., y_{NK/B} (one entry per synchronization round).
inline std::vector<double> hetero_trajectory(double mu, double tau, double eta, long long B,
                                             long long N, long long K, double y0) {
  if (mu <= 0.0 || eta < 0.0 || tau < 0.0) throw std::invalid_argument("hetero_trajectory: bad constants");
  if (B < 2 || B % 2 != 0) throw std::invalid_argument("hetero_trajectory: B must be even and >= 2");
  if (N < 1 || N % B != 0) throw std::invalid_argument("hetero_trajectory: B must divide N");
  if (K < 0) throw std::invalid_argument("hetero_trajectory: K must be >= 0");

  const double base = 1.0 - 2.0 * eta * mu;
  double pw = 1.0, geom = 0.0;
  for (long long j = 0; j < B; ++j) {
    geom += pw;
    pw *= base;
  }
  const double contraction = 0.5 * (1.0 + pw);
  const double drift = 0.5 * eta * tau * (static_cast<double>(B) - geom);

  const long long rounds = N * K / B;
  std::vector<double> y(static_cast<std::size_t>(rounds) + 1);
  y[0] = y0;
  for (long long r = 0; r < rounds; ++r)
    y[static_cast<std::size_t>(r) + 1] = contraction * y[static_cast<std::size_t>(r)] + drift;
  return y;
}

}  // namespace shuffle_fl
