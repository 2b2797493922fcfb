#include <doctest.h>

#include <cmath>

#include "kubo/error.hpp"
#include "kubo/random.hpp"

using namespace kubo;

TEST_CASE("counter generator matches the reference SplitMix64 stream") {
  // Published first outputs of SplitMix64 seeded with 0.
  CounterRng rng(0);
  CHECK(rng.next_u64() == 0xE220A8397B1DCDAFull);
  CHECK(rng.next_u64() == 0x6E789E6AA1B965F4ull);
  CHECK(rng.next_u64() == 0x06C45D188009454Full);
  CHECK(rng.counter() == 3);
}

TEST_CASE("uniform draws lie in [0,1) and are reproducible") {
  CounterRng a(99), b(99);
  for (int i = 0; i < 1000; ++i) {
    double u = a.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(u == b.uniform());
  }
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
}

TEST_CASE("random_orthogonal is orthogonal") {
  CounterRng rng(3);
  Matrix q = random_orthogonal(7, rng);
  CHECK((q.transpose() * q - Matrix::Identity(7, 7)).norm() < 1e-13);
}

TEST_CASE("random_spd") {
  SpdMatrix one = random_spd(1, 1, 12345);
  CHECK(one(0, 0) == doctest::Approx(1.0).epsilon(1e-15));

  SpdMatrix x = random_spd(4, 100, 7);
  SpdMatrix y = random_spd(4, 100, 7);
  CHECK((x.matrix() - y.matrix()).norm() == 0.0);

  for (int s = 0; s < 50; ++s) {
    SpdMatrix a = random_spd(4, 100, static_cast<std::uint64_t>(s));
    Spectrum sp = spectral_decompose(a.sym());
    const double lo = sp.eigenvalues(0), hi = sp.eigenvalues(3);
    CHECK(hi / lo <= 100 * (1 + 1e-10));
    CHECK(lo >= 0.1 * (1 - 1e-12));
    CHECK(hi <= 10 * (1 + 1e-12));
  }
  CHECK_THROWS_AS(random_spd(0, 10, 1), RangeError);
  CHECK_THROWS_AS(random_spd(2, 0.5, 1), RangeError);
}

TEST_CASE("random_dominating stays above its argument") {
  CounterRng rng(8);
  SpdMatrix a = random_spd(5, 100, 8);
  for (int i = 0; i < 10; ++i) {
    SpdMatrix c = random_dominating(a, 1.0, rng);
    Spectrum d = spectral_decompose(SymMatrix(c.matrix() - a.matrix()));
    CHECK(d.eigenvalues(0) >= -1e-14);
    CHECK(d.eigenvalues(4) <= 1.0 + 1e-14);
  }
}
