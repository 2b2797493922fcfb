#include <doctest.h>

#include <cmath>

#include "kubo/error.hpp"
#include "kubo/random.hpp"
#include "kubo/spd.hpp"
#include "test_util.hpp"

using namespace kubo;
using testutil::mat;

TEST_CASE("symmetric storage is exact and rejects bad shapes") {
  SymMatrix s(mat({{1, 2}, {2.5, 3}}));
  CHECK(s(0, 1) == s(1, 0));
  CHECK(s(0, 1) == doctest::Approx(2.25));
  CHECK_THROWS_AS(SymMatrix(Matrix(2, 3)), ShapeError);
  CHECK_THROWS_AS(SymMatrix(Matrix(0, 0)), ShapeError);
}

TEST_CASE("spectral_decompose") {
  Spectrum id = spectral_decompose(SymMatrix::identity(3));
  for (int i = 0; i < 3; ++i) CHECK(id.eigenvalues(i) == doctest::Approx(1.0));

  Spectrum d = spectral_decompose(SymMatrix::diagonal({3, 1}));
  CHECK(d.eigenvalues(0) == doctest::Approx(1.0));
  CHECK(d.eigenvalues(1) == doctest::Approx(3.0));
  CHECK(std::abs(d.basis(1, 0)) == doctest::Approx(1.0));

  CounterRng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    SymMatrix a = random_symmetric(5, rng);
    Spectrum s = spectral_decompose(a);
    Matrix rec = s.basis * s.eigenvalues.asDiagonal() * s.basis.transpose();
    CHECK((rec - a.matrix()).norm() <= 1e-12 * (1.0 + a.frobenius_norm()));
    CHECK((s.basis.transpose() * s.basis - Matrix::Identity(5, 5)).norm() <= 1e-13);
    for (int i = 1; i < 5; ++i) CHECK(s.eigenvalues(i - 1) <= s.eigenvalues(i));
  }
}

TEST_CASE("SpdMatrix qualification") {
  CHECK_NOTHROW(SpdMatrix(mat({{1, 0}, {0, -1e-12}})));
  CHECK_THROWS_AS(SpdMatrix(mat({{1, 0}, {0, -1e-3}})), PsdError);
  SpdMatrix singular(mat({{1, 0}, {0, 0}}));
  CHECK_FALSE(singular.strictly_pd());
  CHECK(SpdMatrix::identity(2).strictly_pd());
  CHECK(singular.shifted(0.5)(1, 1) == doctest::Approx(0.5));
  CHECK(default_psd_tolerance(9.0) == doctest::Approx(1e-9));
}

TEST_CASE("apply_spectral_function") {
  SymMatrix sq = apply_spectral_function(SpdMatrix::identity(3), [](double x) { return x * x; });
  CHECK((sq.matrix() - Matrix::Identity(3, 3)).norm() < 1e-15);

  SymMatrix r = apply_spectral_function(SpdMatrix::diagonal({1, 4}), [](double x) { return std::sqrt(x); });
  CHECK(r(0, 0) == doctest::Approx(1.0));
  CHECK(r(1, 1) == doctest::Approx(2.0));
  CHECK(std::abs(r(0, 1)) < 1e-15);

  SpdMatrix a = random_spd(6, 50, 3);
  SymMatrix same = apply_spectral_function(a, [](double x) { return x; });
  CHECK((same.matrix() - a.matrix()).norm() <= 1e-13 * a.spectral_norm() * 10);
  Matrix f = apply_spectral_function(a, [](double x) { return std::log(x); }).matrix();
  CHECK((f * a.matrix() - a.matrix() * f).norm() < 1e-12);

  CHECK_THROWS_AS(apply_spectral_function(SpdMatrix::diagonal({0, 1}), [](double x) { return 1.0 / x; }),
                  DomainError);
}

TEST_CASE("matrix_power") {
  SpdMatrix p = matrix_power(SpdMatrix::diagonal({4, 9}), 0.5);
  CHECK(p(0, 0) == doctest::Approx(2.0));
  CHECK(p(1, 1) == doctest::Approx(3.0));

  SpdMatrix a = random_spd(4, 100, 8);
  CHECK((matrix_power(a, 0.0).matrix() - Matrix::Identity(4, 4)).norm() < 1e-12);
  CHECK((matrix_power(a, 1.0).matrix() - a.matrix()).norm() < 1e-12 * a.spectral_norm());
  Matrix h = matrix_power(a, 0.5).matrix();
  CHECK((h * h - a.matrix()).norm() <= 1e-10 * a.spectral_norm());

  SpdMatrix proj = matrix_power(SpdMatrix::diagonal({2, 0}), 0.0);
  CHECK(proj(0, 0) == doctest::Approx(1.0));
  CHECK(proj(1, 1) == 0.0);
  CHECK_THROWS_AS(matrix_power(a, 1.5), RangeError);
}

TEST_CASE("loewner_leq") {
  CounterRng rng(4);
  SymMatrix a = random_symmetric(3, rng);
  CHECK(loewner_leq(a, a, 0.0));
  CHECK(loewner_leq(SymMatrix::zero(2), SymMatrix::identity(2), 0.0));
  CHECK_FALSE(loewner_leq(SymMatrix::diagonal({2, 0}), SymMatrix::diagonal({1, 1}), 1e-12));
  CHECK_THROWS_AS(loewner_leq(SymMatrix::identity(2), SymMatrix::identity(3), 0.0), ShapeError);
}

TEST_CASE("square root is operator monotone on dominated pairs") {
  CounterRng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    SpdMatrix a = random_spd(5, 100, derive_seed(21, trial));
    SpdMatrix b = random_dominating(a, 2.0, rng);
    CHECK(loewner_leq(a.sym(), b.sym(), 1e-12));
    auto root = [](double x) { return std::sqrt(x); };
    CHECK(loewner_leq(apply_spectral_function(a, root), apply_spectral_function(b, root), 1e-9));
  }
}

TEST_CASE("congruence") {
  SymMatrix a = SymMatrix::diagonal({1, 1});
  CHECK((congruence(SymMatrix::identity(2), a).matrix() - a.matrix()).norm() == 0.0);
  SymMatrix c = congruence(SymMatrix::diagonal({2, 1}), a);
  CHECK(c(0, 0) == doctest::Approx(4.0));
  CHECK(c(1, 1) == doctest::Approx(1.0));
  CounterRng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    SymMatrix x = random_symmetric(6, rng);
    SpdMatrix p = random_spd(6, 1e4, derive_seed(5, trial));
    CHECK_NOTHROW(SpdMatrix(congruence(x, p.sym())));
  }
  CHECK_THROWS_AS(congruence(SymMatrix::identity(2), SymMatrix::identity(3)), ShapeError);
}

TEST_CASE("inverse and relative distance") {
  SpdMatrix a = random_spd(5, 100, 17);
  CHECK((inverse(a).matrix() * a.matrix() - Matrix::Identity(5, 5)).norm() < 1e-12);
  CHECK_THROWS(inverse(SpdMatrix::diagonal({1, 0})));
  CHECK(relative_frobenius_distance(a.matrix(), a.matrix()) == 0.0);
}
