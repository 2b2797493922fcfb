#pragma once

// Operator connections realized through their associated measures:
// A σ B = ∫ A !ₜ B dμ(t).

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "kubo/measure.hpp"
#include "kubo/quadrature.hpp"
#include "kubo/spd.hpp"

namespace kubo {

/// Closed-form evaluators attached to a catalog connection. Either member may be empty.
struct ClosedForm {
  std::string id;
  std::function<SpdMatrix(const SpdMatrix&, const SpdMatrix&)> matrix;
  std::function<double(double)> scalar;
};

class Connection {
 public:
  Connection(UnitMeasure measure, std::string label, std::shared_ptr<const ClosedForm> closed_form = nullptr)
      : measure_(std::move(measure)), label_(std::move(label)), closed_form_(std::move(closed_form)) {}

  const UnitMeasure& measure() const { return measure_; }
  const std::string& label() const { return label_; }
  const ClosedForm* closed_form() const { return closed_form_.get(); }
  bool has_closed_matrix() const { return closed_form_ && static_cast<bool>(closed_form_->matrix); }
  bool has_closed_scalar() const { return closed_form_ && static_cast<bool>(closed_form_->scalar); }

 private:
  UnitMeasure measure_;
  std::string label_;
  std::shared_ptr<const ClosedForm> closed_form_;
};

/// The ε schedule used when an inverse is needed on singular input.
inline const std::vector<double>& regularization_schedule() {
  static const std::vector<double> eps{1e-4, 1e-6, 1e-8};
  return eps;
}

using PairFn = std::function<Matrix(const SpdMatrix&, const SpdMatrix&)>;
using PairTest = std::function<bool(const SpdMatrix&, const SpdMatrix&)>;

/// Evaluates a connection-valued `compute` on possibly singular input.
/// Returns compute(A, B) when direct_ok(A, B). Otherwise the common kernel
/// ker A ∩ ker B (eigenvalues of A+B at or below 1e-13·‖A+B‖) is removed:
/// with V an orthonormal basis of its complement, the value is
/// V·σ(VᵀAV, VᵀBV)·Vᵀ, computed directly when direct_ok holds for the
/// compressed pair. If it still does not, compute runs on (A+εI, B+εI) along
/// the schedule and the last value is returned once two successive values
/// differ by < 1e-6·(1 + ‖A‖ + ‖B‖) in Frobenius norm; SingularityError
/// otherwise. `used_eps` receives the accepted ε (0 without the schedule).
Matrix regularized(const SpdMatrix& a, const SpdMatrix& b, const PairFn& compute, const PairTest& direct_ok,
                   double* used_eps = nullptr);

/// λ_min(M) > 1e-13·‖M‖, the eigenvalue floor for inversion.
bool invertible_beyond_floor(const Matrix& m);

/// A !ₜ B = B((1-t)B + tA)⁻¹A, symmetrized; A at t = 0 and B at t = 1.
/// Throws RangeError for t ∉ [0,1], ShapeError on dimension mismatch.
SpdMatrix weighted_harmonic(const SpdMatrix& a, const SpdMatrix& b, double t);

/// A : B = A(A+B)⁻¹B, symmetrized.
SpdMatrix parallel_sum(const SpdMatrix& a, const SpdMatrix& b);

/// Unchecked solve-form kernel B(tc·B + t·A)⁻¹A used at quadrature nodes.
Matrix harmonic_kernel(const Matrix& a, const Matrix& b, double t, double tc);

struct Evaluation {
  Matrix value;
  double error = 0.0;
  int nodes = 0;
  bool regularized = false;
  double epsilon = 0.0;
};

/// Full evaluation record; evaluate() returns only the matrix.
Evaluation evaluate_detailed(const Connection& sigma, const SpdMatrix& a, const SpdMatrix& b,
                             const QuadratureSpec& spec = {});

SpdMatrix evaluate(const Connection& sigma, const SpdMatrix& a, const SpdMatrix& b, const QuadratureSpec& spec = {});

/// f(x) = ∫ 1 !ₜ x dμ(t); f(0) = μ({0}). Throws DomainError for x < 0.
double representing_function(const Connection& sigma, double x, const QuadratureSpec& spec = {});
Integral<double> representing_function_detailed(const Connection& sigma, double x, const QuadratureSpec& spec = {});

/// αA + βB + ∫(λ+1)/λ·((λA):B) dν(λ).
SpdMatrix evaluate_canonical(const HalfLineMeasure& nu, const SpdMatrix& a, const SpdMatrix& b,
                             const QuadratureSpec& spec = {});

Connection transpose(const Connection& sigma);

/// ∫ x !ₜ 1 dμ(t), the representing function of the transpose; value μ({1}) at x = 0.
double transpose_rep_function(const Connection& sigma, double x, const QuadratureSpec& spec = {});

/// Mass test and f(1) test; throws Error if the two disagree.
bool is_mean(const Connection& sigma, double tol, const QuadratureSpec& spec = {});

bool is_symmetric_connection(const Connection& sigma, double tol, const QuadratureSpec& spec = {});

/// Measure ½(μ + μΘ).
Connection symmetrize(const Connection& sigma);

Connection add_connections(const Connection& a, const Connection& b);
/// Throws RangeError for k < 0.
Connection scale_connection(const Connection& sigma, double k);

struct RepFunction {
  std::function<double(double)> eval;
  std::string source;

  double operator()(double x) const { return eval(x); }
};

RepFunction rep_function(const Connection& sigma, const QuadratureSpec& spec = {});

struct ConnectionParts {
  Connection ac;
  Connection sc;
  Connection sd;
  RepFunction f_ac;
  RepFunction f_sc;
  RepFunction f_sd;
};

ConnectionParts decompose_connection(const Connection& sigma, const QuadratureSpec& spec = {});

struct PartialSum {
  Matrix value;
  /// Σ_tail aₜ · max(‖A‖, ‖B‖), the bound on the omitted atoms.
  double truncation_bound = 0.0;
};

/// Σ aₜ (A !ₜ B) over the stored atoms of σ's discrete part.
PartialSum discrete_partial_sum(const Connection& sigma, const SpdMatrix& a, const SpdMatrix& b);

struct ConvexPart {
  double k = 0.0;
  /// Normalized probability measure; absent when the part has zero mass.
  std::optional<Connection> mean;
};

struct ConvexDecomposition {
  ConvexPart ac;
  ConvexPart sc;
  ConvexPart sd;
};

/// Mass of each part (exact for catalog densities and IFS/atom weights) and
/// the normalized parts. Throws DomainError unless σ is a mean.
ConvexDecomposition mean_convex_decomposition(const Connection& sigma, double tol = 1e-9,
                                              const QuadratureSpec& spec = {});

/// Mass of the density part: exact when every term has a known unit mass,
/// otherwise by quadrature.
double density_mass(const Density& g, const QuadratureSpec& spec = {});

}  // namespace kubo
