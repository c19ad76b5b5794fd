#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "shuffle_fl/algorithms.hpp"

using namespace shuffle_fl;
using Catch::Matchers::WithinAbs;

namespace {

PermutationSet perms_from(std::vector<std::vector<int>> maps) {
  PermutationSet set;
  for (auto& m : maps) set.per_machine.emplace_back(std::move(m));
  return set;
}

}  // namespace

TEST_CASE("minibatch RR hand-rolled two-step check on F3") {
  // M=1, B=1, N=2, perm [1,2], L=1, nu=1, eta=0.1, x0=0:
  // round 1: x = -0.1 * (0 + 1) = -0.1
  // round 2: x = -0.1 - 0.1 * (-0.1 - 1) = 0.01
  const Problem p = make_skewed_quadratic_1d(SkewedKind::F3, 1.0, 1.0, 1.0, 2, 1);
  std::vector<double> trace;
  const RoundHook hook = [&](std::span<const double> x) { trace.push_back(x[0]); };
  const std::vector<double> endpoint =
      minibatch_rr_epoch({0.0}, p, 0.1, 1, perms_from({{1, 2}}), hook);
  REQUIRE(trace.size() == 2);
  CHECK_THAT(trace[0], WithinAbs(-0.1, 1e-15));
  CHECK_THAT(endpoint[0], WithinAbs(0.01, 1e-15));
}

TEST_CASE("minibatch RR with B=N is one GD step for any permutations") {
  Rng rng(3);
  const Problem p = make_composite_3d(10.0, 1.0, 1.0, 8, 2);
  std::vector<double> x{0.4, -0.3, 0.9};
  for (int rep = 0; rep < 5; ++rep) {
    PermutationSet perms;
    for (int m = 0; m < 2; ++m) perms.per_machine.push_back(sample_uniform_permutation(8, rng));
    const std::vector<double> got = minibatch_rr_epoch(x, p, 0.05, 8, perms);
    const std::vector<double> g = global_gradient(p, x);
    for (std::size_t d = 0; d < 3; ++d)
      CHECK_THAT(got[d], WithinAbs(x[d] - 0.05 * g[d], 1e-12));
  }
}

TEST_CASE("local RR with B=1 equals minibatch RR with B=1") {
  Rng rng(9);
  const Problem p = make_skewed_quadratic_1d(SkewedKind::F2, 10.0, 1.0, 1.0, 6, 3);
  PermutationSet perms;
  for (int m = 0; m < 3; ++m) perms.per_machine.push_back(sample_uniform_permutation(6, rng));
  const std::vector<double> a = local_rr_epoch({0.7}, p, 0.02, 1, perms);
  const std::vector<double> b = minibatch_rr_epoch({0.7}, p, 0.02, 1, perms);
  // Identical update order; averaging iterates vs averaging gradients differs
  // only in rounding.
  CHECK_THAT(a[0], WithinAbs(b[0], 1e-12));
}

TEST_CASE("local RR with M=1 is single-machine reshuffled SGD") {
  const Problem p = make_skewed_quadratic_1d(SkewedKind::F3, 2.0, 1.0, 1.0, 4, 1);
  const PermutationSet perms = perms_from({{3, 1, 4, 2}});
  const std::vector<double> got = local_rr_epoch({0.5}, p, 0.1, 2, perms);

  double x = 0.5;
  std::vector<double> g(1);
  for (int i = 1; i <= 4; ++i) {
    p.component_grad(1, perms.per_machine[0](i), std::vector<double>{x}, g);
    x -= 0.1 * g[0];
  }
  CHECK_THAT(got[0], WithinAbs(x, 1e-15));
}

TEST_CASE("local RR on the heterogeneous construction matches the closed-form recursion") {
  // One round with mu=1, tau=1, eta=0.1, B=2, M=2, y0=0 gives y=0.01.
  const Problem p = make_hetero_linear_quadratic(4.0, 1.0, 1.0, 4, 2);
  PermutationSet perms = perms_from({{1, 2, 3, 4}, {1, 2, 3, 4}});
  std::vector<double> trace;
  const RoundHook hook = [&](std::span<const double> x) { trace.push_back(x[0]); };
  local_rr_epoch({0.0}, p, 0.1, 2, perms, hook);
  REQUIRE(trace.size() == 2);
  CHECK_THAT(trace[0], WithinAbs(0.01, 1e-12));
  CHECK_THAT(trace[1], WithinAbs(0.0182, 1e-12));
}

TEST_CASE("heterogeneous local RR is permutation independent") {
  // Each machine's components are identical, so the trajectory cannot depend
  // on the sampled orderings.
  const Problem p = make_hetero_linear_quadratic(4.0, 1.0, 0.5, 4, 2);
  Rng rng(17);
  std::vector<double> reference;
  for (int rep = 0; rep < 5; ++rep) {
    PermutationSet perms;
    for (int m = 0; m < 2; ++m) perms.per_machine.push_back(sample_uniform_permutation(4, rng));
    const std::vector<double> got = local_rr_epoch({0.3}, p, 0.05, 2, perms);
    if (rep == 0)
      reference = got;
    else
      CHECK(got[0] == reference[0]);
  }
}

TEST_CASE("rescaled-update equivalence for minibatch RR") {
  // The Algorithm-2 update with (eta, inner 1/B) equals the rescaled form
  // with eta' = eta/B and an unnormalized inner sum.
  Rng rng(23);
  const Problem p = make_composite_3d(10.0, 1.0, 1.0, 8, 2);
  PermutationSet perms;
  for (int m = 0; m < 2; ++m) perms.per_machine.push_back(sample_uniform_permutation(8, rng));
  const double eta = 0.04;
  const int B = 2;
  const std::vector<double> normalized = minibatch_rr_epoch({0.2, -0.1, 0.6}, p, eta, B, perms);

  // Independent rescaled-form replay.
  std::vector<double> x{0.2, -0.1, 0.6};
  std::vector<double> g(3);
  const double eta_rescaled = eta / B;
  for (int r = 1; r <= 8 / B; ++r) {
    std::vector<double> acc(3, 0.0);
    for (int m = 1; m <= 2; ++m)
      for (int j = (r - 1) * B + 1; j <= r * B; ++j) {
        p.component_grad(m, perms.per_machine[static_cast<std::size_t>(m - 1)](j), x, g);
        for (std::size_t d = 0; d < 3; ++d) acc[d] += g[d];
      }
    for (std::size_t d = 0; d < 3; ++d) x[d] -= eta_rescaled / 2.0 * acc[d];
  }
  for (std::size_t d = 0; d < 3; ++d) CHECK_THAT(normalized[d], WithinAbs(x[d], 1e-12));
}

TEST_CASE("machine simulation order does not affect the synchronized average") {
  // Aggregation reduces in machine-index order, so feeding machines in any
  // simulation order gives bit-identical results. Replay local RR with the
  // machine loop reversed and compare exactly.
  const Problem p = make_skewed_quadratic_1d(SkewedKind::F2, 10.0, 1.0, 1.0, 6, 3);
  Rng rng(31);
  PermutationSet perms;
  for (int m = 0; m < 3; ++m) perms.per_machine.push_back(sample_uniform_permutation(6, rng));
  const double eta = 0.03;
  const int B = 2;
  const std::vector<double> forward = local_rr_epoch({0.4}, p, eta, B, perms);

  std::vector<std::vector<double>> local(3, std::vector<double>{0.4});
  std::vector<double> g(1), avg(1);
  for (int i = 1; i <= 6; ++i) {
    for (int m = 3; m >= 1; --m) {  // reversed machine order
      auto& xm = local[static_cast<std::size_t>(m - 1)];
      p.component_grad(m, perms.per_machine[static_cast<std::size_t>(m - 1)](i), xm, g);
      xm[0] -= eta * g[0];
    }
    if (i % B == 0) {
      detail::average_machines(local, avg);
      for (auto& xm : local) xm = avg;
    }
  }
  CHECK(forward[0] == local[0][0]);
}

TEST_CASE("SGD baselines") {
  SECTION("homogeneous components make sampling irrelevant") {
    const Problem p = make_skewed_quadratic_1d(SkewedKind::F1, 10.0, 1.0, 0.0, 4, 2);
    std::vector<Rng> rngs{Rng(1), Rng(2)};
    const std::vector<double> sgd = minibatch_sgd_epoch({1.0}, p, 0.1, 2, rngs);
    PermutationSet perms = perms_from({{1, 2, 3, 4}, {4, 3, 2, 1}});
    const std::vector<double> rr = minibatch_rr_epoch({1.0}, p, 0.1, 2, perms);
    CHECK_THAT(sgd[0], WithinAbs(rr[0], 1e-15));
  }

  SECTION("one-round expectation on F3 is x - eta L x") {
    const Problem p = make_skewed_quadratic_1d(SkewedKind::F3, 2.0, 1.0, 1.0, 4, 1);
    const double x0 = 0.5, eta = 0.05;
    const int trials = 200000;
    double sum = 0.0;
    for (int t = 0; t < trials; ++t) {
      std::vector<Rng> rngs{Rng::substream(99, static_cast<std::uint64_t>(t), 1)};
      std::vector<double> x{x0};
      std::vector<double> g(1);
      const int idx = static_cast<int>(rngs[0].below(4)) + 1;
      p.component_grad(1, idx, x, g);
      sum += x0 - eta * g[0];
    }
    CHECK_THAT(sum / trials, WithinAbs(x0 - eta * 2.0 * x0, 5e-4));
  }

  SECTION("one-step variance on F3 from x=0 is eta^2 nu^2") {
    const Problem p = make_skewed_quadratic_1d(SkewedKind::F3, 2.0, 1.0, 1.5, 4, 1);
    const double eta = 0.1;
    const int trials = 100000;
    double sum = 0.0, sum_sq = 0.0;
    std::vector<double> g(1);
    for (int t = 0; t < trials; ++t) {
      Rng rng = Rng::substream(7, static_cast<std::uint64_t>(t), 1);
      const int idx = static_cast<int>(rng.below(4)) + 1;
      p.component_grad(1, idx, std::vector<double>{0.0}, g);
      const double x1 = -eta * g[0];
      sum += x1;
      sum_sq += x1 * x1;
    }
    const double mean = sum / trials;
    const double var = sum_sq / trials - mean * mean;
    CHECK_THAT(var, WithinAbs(eta * eta * 1.5 * 1.5, 1e-4));
  }
}

TEST_CASE("local SGD with B=1 matches minibatch SGD with B=1 on the same streams") {
  const Problem p = make_skewed_quadratic_1d(SkewedKind::F3, 2.0, 1.0, 1.0, 4, 2);
  std::vector<Rng> rngs_a{Rng(10), Rng(11)};
  std::vector<Rng> rngs_b{Rng(10), Rng(11)};
  const std::vector<double> a = local_sgd_epoch({0.5}, p, 0.05, 1, rngs_a);
  const std::vector<double> b = minibatch_sgd_epoch({0.5}, p, 0.05, 1, rngs_b);
  CHECK_THAT(a[0], WithinAbs(b[0], 1e-12));
}

TEST_CASE("epoch operations reject B not dividing N") {
  const Problem p = make_skewed_quadratic_1d(SkewedKind::F3, 2.0, 1.0, 1.0, 4, 1);
  PermutationSet perms = perms_from({{1, 2, 3, 4}});
  CHECK_THROWS_AS(minibatch_rr_epoch({0.0}, p, 0.1, 3, perms), std::invalid_argument);
  CHECK_THROWS_AS(local_rr_epoch({0.0}, p, 0.1, 3, perms), std::invalid_argument);
  std::vector<Rng> rngs{Rng(1)};
  CHECK_THROWS_AS(minibatch_sgd_epoch({0.0}, p, 0.1, 3, rngs), std::invalid_argument);
  CHECK_THROWS_AS(local_sgd_epoch({0.0}, p, 0.1, 3, rngs), std::invalid_argument);
}

TEST_CASE("run: per-round recording stores every synchronization point") {
  const Problem p = make_skewed_quadratic_1d(SkewedKind::F3, 2.0, 1.0, 1.0, 8, 2);
  RunConfig cfg;
  cfg.algorithm = Algorithm::LocalRR;
  cfg.M = 2;
  cfg.N = 8;
  cfg.K = 3;
  cfg.B = 2;
  cfg.eta = 0.02;
  cfg.seed = 2;
  cfg.record = Record::PerRound;
  const RunResult r = run(p, cfg);
  CHECK(r.suboptimality.size() == 1 + 8 * 3 / 2);  // initial plus NK/B rounds

  cfg.record = Record::PerEpoch;
  const RunResult re = run(p, cfg);
  CHECK(re.suboptimality.size() == 1 + 3);
  CHECK_THAT(re.suboptimality.back(), WithinAbs(r.suboptimality.back(), 1e-15));
}

TEST_CASE("run: GD on F1") {
  // eta=0.1, x0=1, K=1: one GD step to 0.9, suboptimality F(0.9) = 0.405.
  const Problem p = make_skewed_quadratic_1d(SkewedKind::F1, 1.0, 1.0, 0.0, 4, 1);
  RunConfig cfg;
  cfg.algorithm = Algorithm::GD;
  cfg.M = 1;
  cfg.N = 4;
  cfg.K = 1;
  cfg.B = 4;
  cfg.eta = 0.1;
  cfg.x0 = {1.0};
  const RunResult r = run(p, cfg);
  CHECK_THAT(r.suboptimality.back(), WithinAbs(0.405, 1e-12));
  CHECK_THAT(r.final_x[0], WithinAbs(0.9, 1e-15));
}

TEST_CASE("run: K=0 records the initial suboptimality and does no work") {
  const Problem p = make_skewed_quadratic_1d(SkewedKind::F3, 2.0, 1.0, 1.0, 4, 2);
  RunConfig cfg;
  cfg.algorithm = Algorithm::MinibatchRR;
  cfg.M = 2;
  cfg.N = 4;
  cfg.K = 0;
  cfg.B = 2;
  cfg.eta = 0.1;
  cfg.x0 = {0.5};
  const RunResult r = run(p, cfg);
  REQUIRE(r.suboptimality.size() == 1);
  CHECK_THAT(r.suboptimality[0], WithinAbs(global_value(p, cfg.x0) - p.f_star, 1e-15));
  CHECK(r.gradient_evaluations == 0);
}

TEST_CASE("run: determinism under a fixed seed") {
  const Problem p = make_composite_3d(10.0, 1.0, 1.0, 8, 2);
  RunConfig cfg;
  cfg.algorithm = Algorithm::LocalRR;
  cfg.M = 2;
  cfg.N = 8;
  cfg.K = 12;
  cfg.B = 2;
  cfg.seed = 424242;
  cfg.record = Record::PerEpoch;
  const RunResult a = run(p, cfg);
  const RunResult b = run(p, cfg);
  CHECK(a.suboptimality == b.suboptimality);
  CHECK(a.final_x == b.final_x);
}

TEST_CASE("run: budget accounting") {
  const Problem p = make_skewed_quadratic_1d(SkewedKind::F3, 2.0, 1.0, 1.0, 8, 3);
  RunConfig cfg;
  cfg.algorithm = Algorithm::MinibatchRR;
  cfg.M = 3;
  cfg.N = 8;
  cfg.K = 5;
  cfg.B = 2;
  cfg.seed = 1;
  const RunResult r = run(p, cfg);
  CHECK(r.gradient_evaluations == 3LL * 8 * 5);   // M N K
  CHECK(r.communication_rounds == 8LL * 5 / 2);   // N K / B
}

TEST_CASE("run: SyncShuf with M=1 equals plain RR") {
  const Problem p = make_skewed_quadratic_1d(SkewedKind::F3, 2.0, 1.0, 1.0, 8, 1);
  RunConfig cfg;
  cfg.algorithm = Algorithm::MinibatchRR;
  cfg.M = 1;
  cfg.N = 8;
  cfg.K = 6;
  cfg.B = 2;
  cfg.seed = 5;
  cfg.eta = 0.05;
  cfg.record = Record::PerEpoch;
  const RunResult plain = run(p, cfg);
  cfg.sync_shuf = true;
  const RunResult synced = run(p, cfg);
  CHECK(plain.suboptimality == synced.suboptimality);
  CHECK(plain.final_x == synced.final_x);
}

TEST_CASE("run: diverged iterates raise with the epoch index") {
  const Problem p = make_skewed_quadratic_1d(SkewedKind::F3, 2.0, 1.0, 1.0, 4, 1);
  RunConfig cfg;
  cfg.algorithm = Algorithm::MinibatchRR;
  cfg.M = 1;
  cfg.N = 4;
  cfg.K = 400;
  cfg.B = 2;
  cfg.eta = 1.5;  // eta L = 3, divergent
  cfg.x0 = {1.0};
  try {
    run(p, cfg);
    FAIL("expected divergence");
  } catch (const diverged_error& e) {
    CHECK(e.epoch() >= 1);
    CHECK(e.epoch() <= 400);
  }
}

TEST_CASE("run: config validation") {
  RunConfig cfg;
  cfg.algorithm = Algorithm::MinibatchRR;
  cfg.M = 2;
  cfg.N = 8;
  cfg.K = 1;
  cfg.B = 3;  // does not divide N
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  cfg.B = 8;  // B = N outside minibatch range without the relax flag
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.relax_batch_bounds = true;
  CHECK_NOTHROW(cfg.validate());

  cfg = RunConfig{};
  cfg.algorithm = Algorithm::LocalRR;
  cfg.M = 3;
  cfg.N = 8;
  cfg.K = 1;
  cfg.B = 1;  // B = 1 outside local range without the relax flag
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  cfg = RunConfig{};
  cfg.algorithm = Algorithm::LocalRR;
  cfg.M = 3;
  cfg.N = 8;
  cfg.K = 1;
  cfg.B = 2;
  cfg.sync_shuf = true;  // M does not divide N
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("monotone GD descent on the constructions when eta <= 1/L") {
  for (const Problem& p : {make_skewed_quadratic_1d(SkewedKind::F2, 10.0, 1.0, 1.0, 4, 1),
                           make_composite_3d(10.0, 1.0, 1.0, 4, 1)}) {
    RunConfig cfg;
    cfg.algorithm = Algorithm::GD;
    cfg.M = 1;
    cfg.N = 4;
    cfg.K = 30;
    cfg.B = 4;
    cfg.eta = 1.0 / p.constants.L;
    cfg.x0.assign(static_cast<std::size_t>(p.dim), 0.8);
    cfg.record = Record::PerEpoch;
    const RunResult r = run(p, cfg);
    for (std::size_t k = 1; k < r.suboptimality.size(); ++k)
      CHECK(r.suboptimality[k] <= r.suboptimality[k - 1] + 1e-15);
  }
}
