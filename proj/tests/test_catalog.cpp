#include <doctest.h>

#include <cmath>
#include <numbers>

#include "kubo/catalog.hpp"
#include "kubo/error.hpp"
#include "test_util.hpp"

using namespace kubo;
using testutil::mat;
using testutil::ref_a;
using testutil::ref_b;
using testutil::rel_frob;

TEST_CASE("closed forms against high-precision references") {
  SpdMatrix a = ref_a(), b = ref_b();
  CHECK(rel_frob(closed_form_eval("geometric:0.5", a, b).matrix(), testutil::ref_geometric_half()) <= 1e-13);
  CHECK(rel_frob(closed_form_eval("geometric:0.25", a, b).matrix(), testutil::ref_geometric_quarter()) <= 1e-13);
  CHECK(rel_frob(closed_form_eval("log_mean", a, b).matrix(), testutil::ref_log_mean()) <= 1e-13);
  CHECK(rel_frob(closed_form_eval("dual_log", a, b).matrix(), testutil::ref_dual_log_mean()) <= 1e-13);
  CHECK(rel_frob(closed_form_eval("harmonic:0.3", a, b).matrix(), testutil::ref_harmonic_03()) <= 1e-14);
  CHECK(rel_frob(closed_form_eval("sum", a, b).matrix(), a.matrix() + b.matrix()) == 0.0);
  CHECK(rel_frob(closed_form_eval("left", a, b).matrix(), a.matrix()) == 0.0);
  CHECK(rel_frob(closed_form_eval("right", a, b).matrix(), b.matrix()) == 0.0);
  CHECK_THROWS_AS(closed_form_eval("cantor", a, b), UsageError);
}

TEST_CASE("closed forms on singular input") {
  SpdMatrix a(mat({{1, 1, 0}, {1, 1, 0}, {0, 0, 2}}));
  SpdMatrix b = ref_b();
  // A #_α B = B #_(1-α) A
  CHECK(rel_frob(closed_form_eval("geometric:0.3", a, b).matrix(), closed_form_eval("geometric:0.7", b, a).matrix()) <=
        1e-13);
  CHECK(rel_frob(closed_form_eval("log_mean", a, b).matrix(), evaluate(log_mean().connection, a, b).matrix()) <= 1e-7);
  Matrix g = closed_form_eval("geometric:0.5", SpdMatrix::diagonal({2, 0}), SpdMatrix::diagonal({8, 0})).matrix();
  CHECK(g(0, 0) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(std::abs(g(1, 1)) <= 1e-12);
}

TEST_CASE("scalar closed forms") {
  CHECK(representing_function_closed("geometric:0.5", 4.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(representing_function_closed("log_mean", std::numbers::e) == doctest::Approx(std::numbers::e - 1).epsilon(1e-15));
  CHECK(representing_function_closed("harmonic:0.5", 3.0) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(representing_function_closed("arithmetic:0.25", 0.0) == 0.75);
  CHECK(representing_function_closed("sum", 2.0) == 3.0);
  CHECK(representing_function_closed("parallel_sum", 1.0) == 0.5);
  CHECK(log_mean_scalar(1.0) == 1.0);
  CHECK(dual_log_mean_scalar(1.0) == 1.0);
  CHECK(log_mean_scalar(0.0) == 0.0);
  CHECK(dual_log_mean_scalar(0.0) == 0.0);
  // removable point: series against the defining quotient just outside the cancellation zone
  for (double x : {1 + 1e-9, 1 - 1e-7, 1 + 1e-4}) {
    CHECK(log_mean_scalar(x) == doctest::Approx(1 + (x - 1) / 2 - (x - 1) * (x - 1) / 12).epsilon(1e-12));
    CHECK(dual_log_mean_scalar(x) == doctest::Approx(1 + (x - 1) / 2 - (x - 1) * (x - 1) / 6).epsilon(1e-12));
  }
  CHECK(log_mean_scalar(0.5) == doctest::Approx(-0.5 / std::log(0.5)).epsilon(1e-15));
  CHECK_THROWS_AS(representing_function_closed("log_mean", -1.0), DomainError);
  CHECK_THROWS_AS(representing_function_closed("cantor", 2.0), UsageError);
}

TEST_CASE("closed and quadrature representing functions agree") {
  for (const CatalogEntry& e : catalog()) {
    if (!e.has_closed_scalar()) continue;
    for (double x : {0.1, 0.5, 1.0, 2.0, 10.0}) {
      double want = e.connection.closed_form()->scalar(x);
      CAPTURE(e.id);
      CAPTURE(x);
      CHECK(std::abs(representing_function(e.connection, x) - want) <= 1e-9 * (1 + std::abs(want)));
    }
  }
}

TEST_CASE("closed and quadrature matrices agree on the reference pair") {
  for (const CatalogEntry& e : catalog()) {
    if (!e.has_closed_matrix()) continue;
    CAPTURE(e.id);
    CHECK(rel_frob(evaluate(e.connection, ref_a(), ref_b()).matrix(),
                   e.connection.closed_form()->matrix(ref_a(), ref_b()).matrix()) <= 1e-8);
  }
}

TEST_CASE("catalog flags") {
  CHECK(log_mean().symmetric);
  CHECK(log_mean().is_mean);
  CHECK(cantor_mean().symmetric);
  CHECK_FALSE(cantor_mean().has_closed_matrix());
  CHECK_FALSE(sum_connection().is_mean);
  CHECK(sum_connection().symmetric);
  CHECK_FALSE(geometric(0.3).symmetric);
  CHECK(geometric(0.5).symmetric);
  CHECK(finite_atomic({{0.25, 0.5}, {0.75, 0.5}}).symmetric);
  CHECK_FALSE(finite_atomic({{0.25, 0.5}, {0.75, 0.25}}).is_mean);
  for (const CatalogEntry& e : catalog()) {
    CAPTURE(e.id);
    CHECK(is_symmetric_connection(e.connection, 1e-9) == e.symmetric);
    CHECK(is_mean(e.connection, 1e-9) == e.is_mean);
  }
}

TEST_CASE("lookup grammar") {
  CHECK(lookup("geometric:0.5").id == "geometric:0.5");
  CHECK(lookup("geometric:0").id == "left_trivial");
  CHECK(lookup("geometric:1").id == "right_trivial");
  CHECK(lookup("left").id == "left_trivial");
  CHECK(lookup("dual_log").id == "dual_log_mean");
  CHECK(lookup("cantor").id == "cantor_mean");
  CHECK(lookup("harmonic:0.3").connection.measure().atoms().size() == 1);

  CatalogEntry at = lookup("atomic:0@0.25,1@0.75");
  CHECK(at.is_mean);
  CHECK(representing_function(at.connection, 2.0) == doctest::Approx(2.0 / (0.25 * 2 + 0.75)).epsilon(1e-15));
  CHECK(lookup("finite_atomic:0.5@0,0.5@1").symmetric);

  for (const char* bad : {"", "foo", "geometric", "geometric:", "geometric:1.5", "geometric:x", "geometric:0.5,0.2",
                          "sum:1", "arithmetic:-0.1", "atomic:", "atomic:0.5", "atomic:-1@0.5", "atomic:1@2",
                          "harmonic:nan"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(lookup(bad), UsageError);
  }
}

TEST_CASE("dimension mismatch") {
  for (const char* id : {"geometric:0.5", "log_mean", "dual_log", "sum", "arithmetic:0.5", "atomic:1@0.3"}) {
    CAPTURE(id);
    CHECK_THROWS_AS(closed_form_eval(id, ref_a(), SpdMatrix::identity(2)), ShapeError);
  }
}
