#pragma once

// Deterministic, counter-based test-matrix generation.
//
// The generator is SplitMix64 used in counter mode: draw k (k = 0, 1, ...)
// from a stream keyed by `seed` is
//
//     z = seed + (k + 1) * 0x9E3779B97F4A7C15          (mod 2^64)
//     z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//     z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//     x = z ^ (z >> 31)
//
// uniform() = (x >> 11) * 2^-53 ∈ [0, 1). normal() consumes two uniforms u1, u2
// and returns sqrt(-2 ln(1 - u1)) * cos(2π u2).
//
// random_spd(dim, cond, seed) draws, in this order, dim*dim normals filling a
// matrix G row by row, then dim uniforms u_i. With G = QR (Householder, then
// columns of Q flipped so that diag(R) ≥ 0) and λ_i = cond^(u_i - 1/2), the
// result is Q·diag(λ)·Qᵀ. Any language following these steps reproduces the
// same matrices up to rounding.

#include <cstdint>

#include "kubo/spd.hpp"

namespace kubo {

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64();
  double uniform();
  double normal();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64(std::uint64_t z);

/// Per-trial seed: the `index`-th draw of the stream keyed by `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

Matrix random_gaussian(int rows, int cols, CounterRng& rng);
Matrix random_orthogonal(int dim, CounterRng& rng);

/// Symmetric matrix with N(0,1) entries on and above the diagonal.
SymMatrix random_symmetric(int dim, CounterRng& rng);

/// Eigenvalues log-uniform in [1/√cond, √cond], conjugated by a random orthogonal matrix.
SpdMatrix random_spd(int dim, double cond, std::uint64_t seed);

/// A + Q·diag(u)·Qᵀ with u_i uniform in [0, scale]: a matrix dominating A in Löwner order.
SpdMatrix random_dominating(const SpdMatrix& a, double scale, CounterRng& rng);

}  // namespace kubo
