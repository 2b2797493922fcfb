#pragma once

// Named connections with paired closed forms and associated measures.
//
// Mean ids:  name[:param[,param]]  or  atomic:w@t,w@t,...
//   left_trivial (left)     right_trivial (right)
//   arithmetic:α            harmonic:t            geometric:α
//   sum                     parallel_sum          log_mean
//   dual_log_mean (dual_log)                      cantor_mean (cantor)
//   atomic:w@t,...  (finite_atomic)

#include <optional>
#include <string>
#include <vector>

#include "kubo/connection.hpp"

namespace kubo {

struct CatalogEntry {
  std::string id;
  Connection connection;
  bool symmetric = false;
  bool is_mean = false;

  bool has_closed_matrix() const { return connection.has_closed_matrix(); }
  bool has_closed_scalar() const { return connection.has_closed_scalar(); }
};

CatalogEntry left_trivial();
CatalogEntry right_trivial();
CatalogEntry arithmetic(double alpha);
CatalogEntry harmonic(double t);
/// α ∈ [0,1]; α = 0 and α = 1 give the trivial means.
CatalogEntry geometric(double alpha);
CatalogEntry sum_connection();
CatalogEntry parallel_sum_connection();
CatalogEntry log_mean();
CatalogEntry dual_log_mean();
CatalogEntry finite_atomic(const std::vector<Atom>& atoms);
CatalogEntry cantor_mean();

/// Default instances: every family with representative parameters.
std::vector<CatalogEntry> catalog();

/// Parses a mean id. Throws UsageError for unknown names or bad parameters.
CatalogEntry lookup(const std::string& mean_id);

/// Closed-form matrix evaluation; throws UsageError for entries without one.
SpdMatrix closed_form_eval(const std::string& mean_id, const SpdMatrix& a, const SpdMatrix& b);

/// Exact scalar representing function; throws UsageError for entries without one.
double representing_function_closed(const std::string& mean_id, double x);

/// (x-1)/log x with the removable point x = 1; 0 at x = 0.
double log_mean_scalar(double x);
/// x·log x/(x-1) with the removable point x = 1; 0 at x = 0.
double dual_log_mean_scalar(double x);

/// A^½ f(A^-½ B A^-½) A^½ for strictly positive definite A; when only B is
/// invertible, B^½ g(B^-½ A B^-½) B^½ with g(x) = x·f(1/x).
SpdMatrix congruence_mean(const SpdMatrix& a, const SpdMatrix& b, const std::function<double(double)>& f);

}  // namespace kubo
