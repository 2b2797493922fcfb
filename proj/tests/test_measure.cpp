#include <doctest.h>

#include <cmath>
#include <numbers>

#include "kubo/error.hpp"
#include "kubo/measure.hpp"
#include "kubo/quadrature.hpp"

using namespace kubo;
using std::numbers::pi;

namespace {

UnitMeasure mixed() {
  return UnitMeasure::dirac(0.5, 0.3) + UnitMeasure::lebesgue(0.5) + UnitMeasure::singular(IfsMeasure::cantor(), 0.2);
}

UnitMeasure geometric_measure(double alpha) {
  return UnitMeasure::with_density(Density({DensityTerm::geometric(alpha)}));
}

UnitMeasure log_mean_measure() { return UnitMeasure::with_density(Density({DensityTerm::log_mean()})); }

double moment(const UnitMeasure& m, int k) {
  return integrate_scalar(m, [k](Point p) { return std::pow(p.t, k); }).value;
}

}  // namespace

TEST_CASE("total_mass") {
  CHECK(total_mass(UnitMeasure::dirac(0.0) + UnitMeasure::dirac(1.0)) == 2.0);
  CHECK(total_mass(UnitMeasure::lebesgue()) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(total_mass(log_mean_measure()) - 1.0) <= 1e-10);
  for (double a : {0.1, 0.25, 0.5, 0.75, 0.9}) {
    // Β(α, 1-α)·sin(απ)/π = 1
    CHECK(std::beta(a, 1 - a) * std::sin(a * pi) / pi == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(std::abs(total_mass(geometric_measure(a)) - 1.0) <= 1e-10);
  }
  CHECK(total_mass(mixed()) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("catalog densities at sample points") {
  CHECK(DensityTerm::geometric(0.5)(0.5) == doctest::Approx(2.0 / pi).epsilon(1e-15));
  CHECK(DensityTerm::log_mean()(0.5) == doctest::Approx(4.0 / (pi * pi)).epsilon(1e-15));
  const double t = 0.2, a = 0.3;
  CHECK(DensityTerm::geometric(a)(t) ==
        doctest::Approx(std::sin(a * pi) / pi * std::pow(t, a - 1) * std::pow(1 - t, -a)).epsilon(1e-14));
  const double u = std::log(t / (1 - t));
  CHECK(DensityTerm::log_mean()(t) == doctest::Approx(1.0 / (t * (1 - t) * (pi * pi + u * u))).epsilon(1e-14));
  Endpoints e = DensityTerm::geometric(a).exponents();
  CHECK(e.p == doctest::Approx(a - 1));
  CHECK(e.q == doctest::Approx(-a));
  CHECK(DensityTerm::geometric(a).scheme_hint() == SchemeHint::jacobi);
  CHECK(DensityTerm::log_mean().scheme_hint() == SchemeHint::logistic);
  CHECK(DensityTerm::lebesgue().scheme_hint() == SchemeHint::smooth);
  CHECK_THROWS_AS(DensityTerm::geometric(1.2), RangeError);
  CHECK_THROWS_AS(DensityTerm::lebesgue(-1), RangeError);
}

TEST_CASE("add and scale") {
  UnitMeasure d = UnitMeasure::dirac(0.0) + UnitMeasure::dirac(0.0);
  REQUIRE(d.atoms().size() == 1);
  CHECK(d.atoms()[0].weight == 2.0);

  UnitMeasure half = scale(UnitMeasure::dirac(0.5), 0.5);
  CHECK(structurally_equal(half, UnitMeasure::dirac(0.5, 0.5)));
  CHECK_THROWS_AS(scale(half, -1.0), RangeError);

  UnitMeasure m1 = geometric_measure(0.3) + UnitMeasure::dirac(0.2, 0.4);
  UnitMeasure m2 = log_mean_measure() + UnitMeasure::singular(IfsMeasure::cantor(), 0.7);
  CHECK(total_mass(m1 + m2) == doctest::Approx(total_mass(m1) + total_mass(m2)).epsilon(1e-12));

  UnitMeasure merged = UnitMeasure::dirac(0.3, 1.0) + UnitMeasure::dirac(0.3 + 1e-16, 1.0);
  CHECK(merged.atoms().size() == 1);
  CHECK_THROWS_AS(UnitMeasure::dirac(1.5), RangeError);
  CHECK_THROWS_AS(UnitMeasure::dirac(0.5, -0.1), RangeError);
}

TEST_CASE("pushforward_theta") {
  const double a = 0.3;
  UnitMeasure arith = UnitMeasure::atomic({{0.0, 1 - a}, {1.0, a}});
  CHECK(structurally_equal(pushforward_theta(arith), UnitMeasure::atomic({{0.0, a}, {1.0, 1 - a}})));
  CHECK(structurally_equal(pushforward_theta(UnitMeasure::lebesgue()), UnitMeasure::lebesgue()));

  UnitMeasure g = pushforward_theta(geometric_measure(a));
  UnitMeasure want = geometric_measure(1 - a);
  for (double t : {0.1, 0.3, 0.7}) {
    CHECK(std::abs(g.ac()(t) - want.ac()(t)) <= 1e-12);
    CHECK(std::abs(g.ac()(t) - geometric_measure(a).ac()(1 - t)) <= 1e-12);
  }

  UnitMeasure m = mixed() + geometric_measure(0.2) + UnitMeasure::dirac(0.1, 0.05);
  CHECK(structurally_equal(pushforward_theta(pushforward_theta(m)), m));
  CHECK(total_mass(pushforward_theta(m)) == doctest::Approx(total_mass(m)).epsilon(1e-12));
}

TEST_CASE("pushforward_psi and pullback_psi") {
  UnitMeasure a = pushforward_psi(HalfLineMeasure().add_atom(HalfLinePoint::at(1.0), 1.0));
  CHECK(structurally_equal(a, UnitMeasure::dirac(0.5)));
  UnitMeasure inf = pushforward_psi(HalfLineMeasure().add_atom(HalfLinePoint::infinity(), 0.4));
  CHECK(structurally_equal(inf, UnitMeasure::dirac(1.0, 0.4)));
  UnitMeasure zero = pushforward_psi(HalfLineMeasure().add_atom(HalfLinePoint::zero(), 0.6));
  CHECK(structurally_equal(zero, UnitMeasure::dirac(0.0, 0.6)));

  HalfLineMeasure nu = HalfLineMeasure().add_density(HalfLineDensity::geometric(0.5));
  UnitMeasure mu = pushforward_psi(nu);
  CHECK(structurally_equal(mu, geometric_measure(0.5)));
  CHECK(total_mass(mu) == doctest::Approx(1.0).epsilon(1e-10));

  // A density without a catalog form: ν(λ) = 1/(1+λ)² (mass 1), image is Lebesgue.
  HalfLineMeasure custom = HalfLineMeasure().add_density(
      HalfLineDensity::custom("cauchy", [](double l) { return 1.0 / ((1 + l) * (1 + l)); }, 0.0, 2.0));
  UnitMeasure img = pushforward_psi(custom);
  for (double t : {0.05, 0.5, 0.95}) CHECK(img.ac()(t) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(total_mass(img) == doctest::Approx(1.0).epsilon(1e-10));

  HalfLineMeasure back = pullback_psi(UnitMeasure::dirac(0.0, 0.2) + UnitMeasure::dirac(1.0, 0.3));
  CHECK(back.atom_weight_at_zero() == 0.2);
  CHECK(back.atom_weight_at_infinity() == 0.3);
  CHECK_THROWS_AS(pullback_psi(log_mean_measure()), DomainError);
  CHECK_THROWS_AS(pullback_psi(UnitMeasure::singular(IfsMeasure::cantor())), DomainError);
}

TEST_CASE("is_probability") {
  CHECK(is_probability(UnitMeasure::lebesgue(), 1e-12));
  CHECK_FALSE(is_probability(UnitMeasure::dirac(0.0) + UnitMeasure::dirac(1.0), 1e-12));
  CHECK(is_probability(UnitMeasure::singular(IfsMeasure::cantor()), 1e-15));
}

TEST_CASE("is_symmetric") {
  CHECK(is_symmetric(UnitMeasure::dirac(0.5), 1e-12));
  CHECK_FALSE(is_symmetric(UnitMeasure::atomic({{0.0, 0.7}, {1.0, 0.3}}), 1e-12));
  CHECK(is_symmetric(UnitMeasure::singular(IfsMeasure::cantor()), 1e-12));
  CHECK(is_symmetric(log_mean_measure(), 1e-12));
  CHECK(is_symmetric(geometric_measure(0.5), 1e-12));
  CHECK_FALSE(is_symmetric(geometric_measure(0.3), 1e-9));
  CHECK(is_symmetric(geometric_measure(0.3) + geometric_measure(0.7), 1e-9));

  UnitMeasure asym = mixed() + UnitMeasure::dirac(0.2, 0.1);
  CHECK(is_symmetric(asym, 1e-9) == is_symmetric(pushforward_theta(asym), 1e-9));
  CHECK(is_symmetric(mixed(), 1e-9) == is_symmetric(pushforward_theta(mixed()), 1e-9));
}

TEST_CASE("Cantor IFS: moments and reflection") {
  IfsMeasure c = IfsMeasure::cantor();
  std::vector<double> m = c.moments(4);
  // Exact values of the moment recursion: 1, 1/2, 3/8, 5/16, 87/320.
  CHECK(m[0] == 1.0);
  CHECK(m[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(m[2] == doctest::Approx(0.375).epsilon(1e-15));
  CHECK(m[3] == doctest::Approx(5.0 / 16).epsilon(1e-15));
  CHECK(m[4] == doctest::Approx(87.0 / 320).epsilon(1e-15));
  CHECK(c.contraction_ratio() == doctest::Approx(1.0 / 3));
  CHECK(c.reflected().approx_equal(c, 1e-15));

  CHECK_THROWS_AS(IfsMeasure({{0.5, 0.0}}, {1.0}), RangeError);
  CHECK_THROWS_AS(IfsMeasure({{0.5, 0.0}, {0.5, 0.5}}, {0.5, 0.5}), RangeError);    // Lebesgue, not singular
  CHECK_THROWS_AS(IfsMeasure({{0.4, 0.0}, {0.4, 0.7}}, {0.5, 0.6}), RangeError);    // probabilities
  CHECK_THROWS_AS(IfsMeasure({{0.4, 0.0}, {0.4, 0.8}}, {0.5, 0.5}), RangeError);    // leaves [0,1]
}

TEST_CASE("decompose_measure") {
  MeasureParts p = decompose_measure(mixed());
  CHECK(total_mass(p.ac) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(total_mass(p.sc) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(total_mass(p.sd) == doctest::Approx(0.3).epsilon(1e-15));
  UnitMeasure sum = p.ac + p.sc + p.sd;
  CHECK(structurally_equal(sum, mixed()));
  for (int k = 0; k < 8; ++k) CHECK(std::abs(moment(sum, k) - moment(mixed(), k)) <= 1e-10);

  MeasureParts d = decompose_measure(UnitMeasure::dirac(0.4));
  CHECK(d.ac.is_zero());
  CHECK(d.sc.is_zero());
  CHECK(structurally_equal(d.sd, UnitMeasure::dirac(0.4)));

  MeasureParts g = decompose_measure(geometric_measure(0.3));
  CHECK(structurally_equal(g.ac, geometric_measure(0.3)));
  CHECK(g.sc.is_zero());
  CHECK(g.sd.is_zero());
}

TEST_CASE("atom tail mass counts toward mass only") {
  UnitMeasure m = UnitMeasure::atomic({{0.5, 0.5}, {0.25, 0.25}}).with_atom_tail_mass(0.25);
  CHECK(total_mass(m) == 1.0);
  CHECK(m.atom_mass() == 1.0);
  CHECK_THROWS_AS(m.with_atom_tail_mass(-1.0), RangeError);
}

TEST_CASE("Chebyshev sample grid") {
  std::vector<double> g = chebyshev_grid(64);
  REQUIRE(g.size() == 64);
  for (double t : g) {
    CHECK(t > 0.0);
    CHECK(t < 1.0);
  }
  CHECK(g.front() + g.back() == doctest::Approx(1.0));
}
