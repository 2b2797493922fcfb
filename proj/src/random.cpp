#include "kubo/random.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "kubo/error.hpp"

namespace kubo {

namespace {
constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t splitmix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t CounterRng::next_u64() {
  ++counter_;
  return splitmix64(seed_ + counter_ * kGamma);
}

double CounterRng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double CounterRng::normal() {
  double u1 = uniform();
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed + (index + 1) * kGamma);
}

Matrix random_gaussian(int rows, int cols, CounterRng& rng) {
  Matrix g(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) g(i, j) = rng.normal();
  return g;
}

Matrix random_orthogonal(int dim, CounterRng& rng) {
  Matrix g = random_gaussian(dim, dim, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(dim, dim);
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < dim; ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  return q;
}

SymMatrix random_symmetric(int dim, CounterRng& rng) {
  Matrix m(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j) m(i, j) = m(j, i) = rng.normal();
  return SymMatrix(m);
}

SpdMatrix random_spd(int dim, double cond, std::uint64_t seed) {
  if (dim < 1 || !(cond >= 1.0)) {
    std::ostringstream os;
    os << "random_spd: need dim >= 1 and cond >= 1 (got " << dim << ", " << cond << ")";
    throw RangeError(os.str());
  }
  CounterRng rng(seed);
  Matrix q = random_orthogonal(dim, rng);
  Vector lambda(dim);
  for (int i = 0; i < dim; ++i) lambda(i) = std::pow(cond, rng.uniform() - 0.5);
  return SpdMatrix(SymMatrix(q * lambda.asDiagonal() * q.transpose()));
}

SpdMatrix random_dominating(const SpdMatrix& a, double scale, CounterRng& rng) {
  const int n = a.dim();
  Matrix q = random_orthogonal(n, rng);
  Vector u(n);
  for (int i = 0; i < n; ++i) u(i) = scale * rng.uniform();
  return SpdMatrix(SymMatrix(a.matrix() + q * u.asDiagonal() * q.transpose()));
}

}  // namespace kubo
