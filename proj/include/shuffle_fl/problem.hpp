#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "shuffle_fl/rng.hpp"

namespace shuffle_fl {

// Analytic constants of the objective: L-smoothness, PL constant mu,
// intra-machine deviation nu, objective-wise heterogeneity (tau, rho) and
// component-wise heterogeneity lambda.
struct Constants {
  double L = 1.0;
  double mu = 1.0;
  double nu = 0.0;
  double tau = 0.0;
  double rho = 1.0;
  double lambda = 0.0;

  double kappa() const { return L / mu; }
};

// Finite-sum distributed objective: M machines, N components per machine,
// F(x) = (1/(MN)) sum_m sum_i f_i^m(x). Oracles are pure functions of
// (m, i, x) with m in [M], i in [N]; safe to call concurrently.
struct Problem {
  int machines = 1;    // M
  int components = 1;  // N
  int dim = 1;

  // component_grad(m, i, x, out): writes grad f_i^m(x) into out (length dim).
  std::function<void(int, int, std::span<const double>, std::span<double>)> component_grad;
  // component_value(m, i, x): f_i^m(x).
  std::function<double(int, int, std::span<const double>)> component_value;

  Constants constants;
  double f_star = 0.0;
  std::vector<double> x_star;
  std::string name;
};

inline void check_dim(const Problem& p, std::span<const double> x, const char* where) {
  if (static_cast<int>(x.size()) != p.dim)
    throw std::invalid_argument(std::string(where) + ": dimension mismatch");
}

// grad F(x) = (1/(MN)) sum_m sum_i grad f_i^m(x).
inline std::vector<double> global_gradient(const Problem& p, std::span<const double> x) {
  check_dim(p, x, "global_gradient");
  std::vector<double> acc(static_cast<std::size_t>(p.dim), 0.0);
  std::vector<double> g(static_cast<std::size_t>(p.dim));
  for (int m = 1; m <= p.machines; ++m)
    for (int i = 1; i <= p.components; ++i) {
      p.component_grad(m, i, x, g);
      for (int d = 0; d < p.dim; ++d) acc[static_cast<std::size_t>(d)] += g[static_cast<std::size_t>(d)];
    }
  const double scale = 1.0 / (static_cast<double>(p.machines) * p.components);
  for (double& v : acc) v *= scale;
  return acc;
}

// grad F^m(x) = (1/N) sum_i grad f_i^m(x).
inline std::vector<double> machine_gradient(const Problem& p, int m, std::span<const double> x) {
  check_dim(p, x, "machine_gradient");
  std::vector<double> acc(static_cast<std::size_t>(p.dim), 0.0);
  std::vector<double> g(static_cast<std::size_t>(p.dim));
  for (int i = 1; i <= p.components; ++i) {
    p.component_grad(m, i, x, g);
    for (int d = 0; d < p.dim; ++d) acc[static_cast<std::size_t>(d)] += g[static_cast<std::size_t>(d)];
  }
  for (double& v : acc) v /= p.components;
  return acc;
}

inline double global_value(const Problem& p, std::span<const double> x) {
  check_dim(p, x, "global_value");
  double acc = 0.0;
  for (int m = 1; m <= p.machines; ++m)
    for (int i = 1; i <= p.components; ++i) acc += p.component_value(m, i, x);
  return acc / (static_cast<double>(p.machines) * p.components);
}

inline double suboptimality(const Problem& p, std::span<const double> x) {
  return global_value(p, x) - p.f_star;
}

enum class SkewedKind { F1, F2, F3 };

namespace detail {

// Sign of component i: +1 for i <= N/2, -1 otherwise.
inline double component_sign(int i, int N) { return i <= N / 2 ? 1.0 : -1.0; }

// 1-D skewed-quadratic pieces. The indicator convention is 1_{x<=0} exactly:
// the steep branch L applies at x = 0.
inline double skew_value(SkewedKind kind, double L, double mu, double x) {
  switch (kind) {
    case SkewedKind::F1: return 0.5 * mu * x * x;
    case SkewedKind::F2: return 0.5 * (x <= 0.0 ? L : mu) * x * x;
    case SkewedKind::F3: return 0.5 * L * x * x;
  }
  return 0.0;
}

inline double skew_grad(SkewedKind kind, double L, double mu, double x) {
  switch (kind) {
    case SkewedKind::F1: return mu * x;
    case SkewedKind::F2: return (x <= 0.0 ? L : mu) * x;
    case SkewedKind::F3: return L * x;
  }
  return 0.0;
}

}  // namespace detail

// Worst-case 1-D families: components f_i(x) = q(x) + s_i * nu * x with signs
// split evenly, where q is mu x^2/2 (F1), the hinge (L 1_{x<=0} + mu 1_{x>0})
// x^2/2 (F2) or L x^2/2 (F3). Every machine holds the same component set, so
// tau = 0, rho = 1, lambda = 0; the global objective is q with minimum 0 at 0.
inline Problem make_skewed_quadratic_1d(SkewedKind kind, double L, double mu, double nu,
                                        int N, int M) {
  if (L < mu || mu <= 0.0) throw std::invalid_argument("make_skewed_quadratic_1d: need L >= mu > 0");
  if (nu < 0.0) throw std::invalid_argument("make_skewed_quadratic_1d: nu must be >= 0");
  if (N < 1 || M < 1) throw std::invalid_argument("make_skewed_quadratic_1d: N, M must be >= 1");
  if (N % 2 != 0 && (kind != SkewedKind::F1 || nu != 0.0))
    throw std::invalid_argument("make_skewed_quadratic_1d: N must be even");

  Problem p;
  p.machines = M;
  p.components = N;
  p.dim = 1;
  p.component_grad = [kind, L, mu, nu, N](int, int i, std::span<const double> x,
                                          std::span<double> out) {
    out[0] = detail::skew_grad(kind, L, mu, x[0]) + detail::component_sign(i, N) * nu;
  };
  p.component_value = [kind, L, mu, nu, N](int, int i, std::span<const double> x) {
    return detail::skew_value(kind, L, mu, x[0]) + detail::component_sign(i, N) * nu * x[0];
  };
  p.constants = Constants{L, mu, nu, 0.0, 1.0, 0.0};
  p.f_star = 0.0;
  p.x_star = {0.0};
  switch (kind) {
    case SkewedKind::F1: p.name = "f1"; break;
    case SkewedKind::F2: p.name = "f2"; break;
    case SkewedKind::F3: p.name = "f3"; break;
  }
  return p;
}

// Coordinate-separable 3-D composite F([x,y,z]) = F1(x) + F2(y) + F3(z);
// component i carries the sign-s_i 1-D pieces in all three coordinates, so
// the intra-machine deviation constant is sqrt(3) * nu.
inline Problem make_composite_3d(double L, double mu, double nu, int N, int M) {
  if (L < mu || mu <= 0.0) throw std::invalid_argument("make_composite_3d: need L >= mu > 0");
  if (nu < 0.0) throw std::invalid_argument("make_composite_3d: nu must be >= 0");
  if (N < 2 || N % 2 != 0) throw std::invalid_argument("make_composite_3d: N must be even");
  if (M < 1) throw std::invalid_argument("make_composite_3d: M must be >= 1");

  Problem p;
  p.machines = M;
  p.components = N;
  p.dim = 3;
  p.component_grad = [L, mu, nu, N](int, int i, std::span<const double> x, std::span<double> out) {
    const double s = detail::component_sign(i, N) * nu;
    out[0] = detail::skew_grad(SkewedKind::F1, L, mu, x[0]) + s;
    out[1] = detail::skew_grad(SkewedKind::F2, L, mu, x[1]) + s;
    out[2] = detail::skew_grad(SkewedKind::F3, L, mu, x[2]) + s;
  };
  p.component_value = [L, mu, nu, N](int, int i, std::span<const double> x) {
    const double s = detail::component_sign(i, N) * nu;
    return detail::skew_value(SkewedKind::F1, L, mu, x[0]) + s * x[0] +
           detail::skew_value(SkewedKind::F2, L, mu, x[1]) + s * x[1] +
           detail::skew_value(SkewedKind::F3, L, mu, x[2]) + s * x[2];
  };
  p.constants = Constants{L, mu, std::sqrt(3.0) * nu, 0.0, 1.0, 0.0};
  p.f_star = 0.0;
  p.x_star = {0.0, 0.0, 0.0};
  p.name = "composite3d";
  return p;
}

// Heterogeneous construction: machines 1..M/2 hold f1(x) = -tau x and the
// rest hold f2(x) = mu x^2 + tau x (all N components identical within a
// machine, nu = 0). F(x) = mu x^2 / 2 with the PL constant mu; component
// smoothness is 2 mu, so L must be at least 2 mu. The component-wise
// deviation |mu x + tau| is unbounded, hence lambda = infinity.
inline Problem make_hetero_linear_quadratic(double L, double mu, double tau, int N, int M) {
  if (mu <= 0.0) throw std::invalid_argument("make_hetero_linear_quadratic: mu must be > 0");
  if (L < 2.0 * mu)
    throw std::invalid_argument("make_hetero_linear_quadratic: need L >= 2*mu for L-smooth components");
  if (tau < 0.0) throw std::invalid_argument("make_hetero_linear_quadratic: tau must be >= 0");
  if (M < 2 || M % 2 != 0) throw std::invalid_argument("make_hetero_linear_quadratic: M must be even");
  if (N < 1) throw std::invalid_argument("make_hetero_linear_quadratic: N must be >= 1");

  const int half = M / 2;
  Problem p;
  p.machines = M;
  p.components = N;
  p.dim = 1;
  p.component_grad = [mu, tau, half](int m, int, std::span<const double> x, std::span<double> out) {
    out[0] = m <= half ? -tau : 2.0 * mu * x[0] + tau;
  };
  p.component_value = [mu, tau, half](int m, int, std::span<const double> x) {
    return m <= half ? -tau * x[0] : mu * x[0] * x[0] + tau * x[0];
  };
  p.constants = Constants{L, mu, 0.0, tau, 1.0, std::numeric_limits<double>::infinity()};
  p.f_star = 0.0;
  p.x_star = {0.0};
  p.name = "hetero";
  return p;
}

// Empirical estimates of the deviation constants, sampled over a hypercube.
struct ConstantsEstimate {
  double nu_hat = 0.0;
  double lambda_hat = 0.0;
  double tau_hat = 0.0;
  double rho_hat = 1.0;
  // Set when the problem declares analytic constants that the samples exceed.
  bool nu_violated = false;
  bool lambda_violated = false;
};

inline double default_sample_radius(const Problem& p) {
  const Constants& c = p.constants;
  if (c.nu > 0.0) return 10.0 * c.nu / c.mu;
  if (c.tau > 0.0) return 10.0 * c.tau / c.mu;
  return 10.0 / c.mu;
}

// Samples n_samples points uniformly from [-radius, radius]^dim and measures
// max ||grad f_i^m - grad F^m|| (nu_hat), max ||grad f_i^m - grad fbar_i||
// (lambda_hat), and an admissible (tau_hat, rho_hat) envelope for
// (1/M) sum_m ||grad F^m|| <= tau + rho ||grad F||. The envelope is a least
// squares line lifted to cover every sample, with rho clamped to >= 1.
inline ConstantsEstimate estimate_constants(const Problem& p, double radius, int n_samples,
                                            Rng& rng) {
  if (n_samples < 1) throw std::invalid_argument("estimate_constants: n_samples must be >= 1");
  if (radius <= 0.0) throw std::invalid_argument("estimate_constants: radius must be > 0");

  const auto dim = static_cast<std::size_t>(p.dim);
  std::vector<double> x(dim), g(dim), diff(dim);
  std::vector<std::vector<double>> machine_grads(static_cast<std::size_t>(p.machines));
  std::vector<std::vector<double>> mean_component(static_cast<std::size_t>(p.components));

  ConstantsEstimate est;
  std::vector<double> env_x, env_y;
  env_x.reserve(static_cast<std::size_t>(n_samples));
  env_y.reserve(static_cast<std::size_t>(n_samples));

  auto norm = [](std::span<const double> v) {
    double s = 0.0;
    for (double t : v) s += t * t;
    return std::sqrt(s);
  };

  for (int s = 0; s < n_samples; ++s) {
    for (auto& xi : x) xi = (2.0 * rng.unit() - 1.0) * radius;

    for (auto& mg : machine_grads) mg.assign(dim, 0.0);
    for (auto& mc : mean_component) mc.assign(dim, 0.0);

    for (int m = 1; m <= p.machines; ++m)
      for (int i = 1; i <= p.components; ++i) {
        p.component_grad(m, i, x, g);
        auto& mg = machine_grads[static_cast<std::size_t>(m - 1)];
        auto& mc = mean_component[static_cast<std::size_t>(i - 1)];
        for (std::size_t d = 0; d < dim; ++d) {
          mg[d] += g[d];
          mc[d] += g[d];
        }
      }
    for (auto& mg : machine_grads)
      for (double& v : mg) v /= p.components;
    for (auto& mc : mean_component)
      for (double& v : mc) v /= p.machines;

    std::vector<double> global(dim, 0.0);
    for (const auto& mg : machine_grads)
      for (std::size_t d = 0; d < dim; ++d) global[d] += mg[d];
    for (double& v : global) v /= p.machines;

    double mean_machine_norm = 0.0;
    for (const auto& mg : machine_grads) mean_machine_norm += norm(mg);
    mean_machine_norm /= p.machines;
    env_x.push_back(norm(global));
    env_y.push_back(mean_machine_norm);

    for (int m = 1; m <= p.machines; ++m)
      for (int i = 1; i <= p.components; ++i) {
        p.component_grad(m, i, x, g);
        const auto& mg = machine_grads[static_cast<std::size_t>(m - 1)];
        const auto& mc = mean_component[static_cast<std::size_t>(i - 1)];
        double dn = 0.0, dl = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
          dn += (g[d] - mg[d]) * (g[d] - mg[d]);
          dl += (g[d] - mc[d]) * (g[d] - mc[d]);
        }
        est.nu_hat = std::max(est.nu_hat, std::sqrt(dn));
        est.lambda_hat = std::max(est.lambda_hat, std::sqrt(dl));
      }
  }

  // Least-squares line through (||grad F||, mean ||grad F^m||), then lift the
  // intercept so the line is a true envelope over the samples.
  const auto n = static_cast<double>(env_x.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t j = 0; j < env_x.size(); ++j) {
    sx += env_x[j];
    sy += env_y[j];
    sxx += env_x[j] * env_x[j];
    sxy += env_x[j] * env_y[j];
  }
  const double denom = n * sxx - sx * sx;
  double rho = denom > 1e-30 ? (n * sxy - sx * sy) / denom : 1.0;
  rho = std::max(rho, 1.0);
  double tau = 0.0;
  for (std::size_t j = 0; j < env_x.size(); ++j)
    tau = std::max(tau, env_y[j] - rho * env_x[j]);
  est.rho_hat = rho;
  est.tau_hat = std::max(tau, 0.0);

  const double tol = 1e-9 * (1.0 + p.constants.nu);
  est.nu_violated = est.nu_hat > p.constants.nu + tol;
  est.lambda_violated = est.lambda_hat > p.constants.lambda + tol;
  return est;
}

}  // namespace shuffle_fl
