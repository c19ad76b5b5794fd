#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "shuffle_fl/rng.hpp"

namespace shuffle_fl {

// Index-from-1 modulo: a mod b := a - floor((a-1)/b) * b, so multiples of b
// map to b and the result is always in {1, ..., b}.
inline long long mod_index(long long a, long long b) {
  if (b <= 0) throw std::invalid_argument("mod_index: b must be positive");
  long long q = (a - 1) / b;
  if ((a - 1) % b < 0) --q;  // floor division for a <= 0
  return a - q * b;
}

// A permutation of {1,...,n}, 1-based in the public interface.
class Permutation {
 public:
  Permutation() = default;
  explicit Permutation(std::vector<int> mapping) : map_(std::move(mapping)) {}

  static Permutation identity(int n) {
    std::vector<int> m(static_cast<std::size_t>(n));
    std::iota(m.begin(), m.end(), 1);
    return Permutation(std::move(m));
  }

  int size() const { return static_cast<int>(map_.size()); }

  // sigma(i) for i in [n].
  int operator()(int i) const { return map_[static_cast<std::size_t>(i - 1)]; }

  const std::vector<int>& mapping() const { return map_; }

  bool is_bijection() const {
    std::vector<char> seen(map_.size(), 0);
    for (int v : map_) {
      if (v < 1 || v > size() || seen[static_cast<std::size_t>(v - 1)]) return false;
      seen[static_cast<std::size_t>(v - 1)] = 1;
    }
    return true;
  }

 private:
  std::vector<int> map_;
};

// Per-epoch component orderings, one permutation of [N] per machine.
struct PermutationSet {
  std::vector<Permutation> per_machine;
  int epoch_index = 1;

  int machines() const { return static_cast<int>(per_machine.size()); }
};

// Fisher-Yates over the caller's RNG stream; every permutation of [n] is
// equally likely and the result is a pure function of the stream state.
inline Permutation sample_uniform_permutation(int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample_uniform_permutation: n must be >= 1");
  std::vector<int> m(static_cast<std::size_t>(n));
  std::iota(m.begin(), m.end(), 1);
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(m[static_cast<std::size_t>(i)], m[j]);
  }
  return Permutation(std::move(m));
}

// Synchronized shuffling: machine m uses sigma shifted by (N/M)*pi(m)
// positions, sigma_m(i) = sigma((i + (N/M) pi(m)) mod N). Any N/M consecutive
// positions across the M machines then cover every component exactly once.
inline PermutationSet sync_shuf_permutations(const Permutation& sigma, const Permutation& pi,
                                             int N, int M) {
  if (N < 1 || M < 1) throw std::invalid_argument("sync_shuf_permutations: N, M must be >= 1");
  if (sigma.size() != N) throw std::invalid_argument("sync_shuf_permutations: sigma must permute [N]");
  if (pi.size() != M) throw std::invalid_argument("sync_shuf_permutations: pi must permute [M]");
  if (N % M != 0) throw std::invalid_argument("sync_shuf_permutations: M must divide N");

  const long long shift_unit = N / M;
  PermutationSet set;
  set.per_machine.reserve(static_cast<std::size_t>(M));
  for (int m = 1; m <= M; ++m) {
    std::vector<int> mapping(static_cast<std::size_t>(N));
    const long long shift = shift_unit * pi(m);
    for (int i = 1; i <= N; ++i) {
      mapping[static_cast<std::size_t>(i - 1)] =
          sigma(static_cast<int>(mod_index(i + shift, N)));
    }
    set.per_machine.emplace_back(std::move(mapping));
  }
  return set;
}

// Epoch-k orderings for a run. Machine m draws from substream
// (seed, epoch, m); under SyncShuf the shared sigma comes from machine 1's
// substream and pi from the server substream (machine index 0), so M = 1 with
// SyncShuf reproduces the plain single-machine stream exactly.
inline PermutationSet sample_permutation_set(int M, int N, std::uint64_t seed, int epoch,
                                             bool sync_shuf) {
  PermutationSet set;
  set.epoch_index = epoch;
  if (sync_shuf) {
    if (N % M != 0)
      throw std::invalid_argument("sample_permutation_set: M must divide N under SyncShuf");
    Rng sigma_rng = Rng::substream(seed, static_cast<std::uint64_t>(epoch), 1);
    Rng pi_rng = Rng::substream(seed, static_cast<std::uint64_t>(epoch), 0);
    const Permutation sigma = sample_uniform_permutation(N, sigma_rng);
    const Permutation pi = sample_uniform_permutation(M, pi_rng);
    set = sync_shuf_permutations(sigma, pi, N, M);
    set.epoch_index = epoch;
    return set;
  }
  set.per_machine.reserve(static_cast<std::size_t>(M));
  for (int m = 1; m <= M; ++m) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(epoch), static_cast<std::uint64_t>(m));
    set.per_machine.push_back(sample_uniform_permutation(N, rng));
  }
  return set;
}

}  // namespace shuffle_fl
