#pragma once

// Integration of scalar- and matrix-valued functions against UnitMeasure parts.
//
// Each part has its own integrator:
//   atoms      exact point evaluation
//   densities  one integral per density term, routed by the term's scheme hint
//              (adaptive Gauss–Jacobi panels, logistic substitution, adaptive
//              Gauss–Legendre, or tanh–sinh)
//   IFS parts  adaptive composite self-similar Gauss rule, or midpoint
//              placement on cylinders when ifs_recursion is forced
//
// Integrands receive the node as Point{t, 1 - t}; the complement is carried
// separately so integrands stay accurate near t = 1. Scalar and matrix
// integration share one templated core, so a 1×1 matrix integrand produces
// bitwise the same value as the equivalent scalar integrand.

#include <functional>
#include <vector>

#include "kubo/measure.hpp"
#include "kubo/quadrature_spec.hpp"
#include "kubo/spd.hpp"

namespace kubo {

struct Point {
  double t;
  double tc;  // 1 - t
};

/// Nodes on [0,1] (with their complements) and weights.
struct Rule {
  std::vector<double> nodes;
  std::vector<double> complements;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

/// Gauss rule for the weight t^p (1-t)^q on [0,1]; exact for degree ≤ 2n-1.
/// Throws RangeError unless p, q > -1 and n ≥ 1.
Rule jacobi_rule(double p, double q, int n);

Rule gauss_legendre_rule(int n);

/// Rule for the log-mean density: trapezoid in u = log(t/(1-t)) with step
/// 2U/(n-1), U = π√n, so that g(t)dt = du/(π²+u²). The mass beyond ±U is
/// carried by the two outermost nodes, so the weights sum to 1.
/// Throws RangeError for n < 2.
Rule logistic_rule(int n);

/// Mass of the Cauchy kernel du/(π²+u²) beyond |u| > U: (2/π)·atan(π/U).
double logistic_tail_mass(double U);

/// m-point Gauss rule for a self-similar measure, from its exact moments.
Rule ifs_gauss_rule(const IfsMeasure& m, int points);

template <class V>
struct Integral {
  V value;
  double error = 0.0;  // estimated absolute error (Frobenius norm for matrices)
  int nodes = 0;       // integrand evaluations
};

using ScalarIntegrand = std::function<double(Point)>;
using MatrixIntegrand = std::function<Matrix(Point)>;

/// Throws QuadratureError (best estimate, achieved error) when a part cannot
/// reach max(abs_tol, rel_tol·|part|) within the node budget.
Integral<double> integrate_scalar(const UnitMeasure& m, const ScalarIntegrand& h,
                                  const QuadratureSpec& spec = {});

/// H must return matrices of one fixed shape. The adaptive decisions use the
/// Frobenius norm of the matrix-valued differences.
Integral<Matrix> integrate_matrix(const UnitMeasure& m, const MatrixIntegrand& h,
                                  const QuadratureSpec& spec = {});

/// ∫h dμ for the self-similar measure by placing μ on the cylinder midpoints
/// of the given depth with product weights. Error ≤ Lip(h)·r^depth.
/// depth 0 derives the depth from 1e-10. Throws QuadratureError when the
/// number of atoms would exceed 2^24.
double integrate_ifs(const IfsMeasure& m, const std::function<double(double)>& h, int depth);

/// Depth for ifs_recursion: ⌈log(tol)/log r⌉ capped at 24.
int ifs_depth_for(const IfsMeasure& m, double tol);

/// Density part only, routed by spec.scheme; exposed for diagnostics.
Integral<double> integrate_density(const Density& g, const ScalarIntegrand& h,
                                   const QuadratureSpec& spec = {});

/// Node table used by integrate_scalar for each part (t, 1-t, weight); atoms
/// appear with their weights. Used by the CLI `nodes` verb.
struct NodeRow {
  std::string part;
  double t;
  double tc;
  double weight;
};
std::vector<NodeRow> node_table(const UnitMeasure& m, const ScalarIntegrand& h,
                                const QuadratureSpec& spec = {});

// ---------------------------------------------------------------------------
// Half-line integration for the canonical representation.

/// ∫_(0,∞) K(λ) f(λ) dλ by the substitution λ = exp(π sinh s) with level
/// doubling. Uses the density's decay metadata only for diagnostics.
Integral<Matrix> integrate_half_line(const HalfLineDensity& f, const std::function<Matrix(double)>& k,
                                     const QuadratureSpec& spec = {});

}  // namespace kubo
