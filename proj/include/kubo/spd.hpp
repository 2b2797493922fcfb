#pragma once

// Finite-dimensional positive-operator arithmetic on real symmetric matrices.

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace kubo {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Real symmetric n×n matrix. Storage is symmetrized on construction, so
/// entries(i, j) == entries(j, i) holds bit-for-bit.
class SymMatrix {
 public:
  /// Symmetrizes as (M + Mᵀ)/2. Throws ShapeError for empty or non-square input.
  explicit SymMatrix(const Matrix& m);

  static SymMatrix identity(int n);
  static SymMatrix zero(int n);
  static SymMatrix diagonal(const std::vector<double>& d);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

  double spectral_norm() const;
  double frobenius_norm() const { return m_.norm(); }

  friend SymMatrix operator+(const SymMatrix& a, const SymMatrix& b);
  friend SymMatrix operator-(const SymMatrix& a, const SymMatrix& b);
  friend SymMatrix operator*(double k, const SymMatrix& a);

 private:
  Matrix m_;
};

struct Spectrum {
  Vector eigenvalues;  // ascending
  Matrix basis;        // orthonormal columns, basis·diag(λ)·basisᵀ = A
};

/// Throws EigenError (carrying dim and a condition estimate) if the solver fails.
Spectrum spectral_decompose(const SymMatrix& a);

double min_eigenvalue(const SymMatrix& a);

/// Default tolerance for PSD qualification: 1e-10·(1 + ‖A‖).
double default_psd_tolerance(double norm);

/// Positive semidefinite matrix, qualified up to tol_psd. Records whether the
/// matrix is strictly positive definite (λ_min > eig_floor).
class SpdMatrix {
 public:
  /// Throws PsdError if some eigenvalue is below -tol_psd.
  explicit SpdMatrix(SymMatrix base);
  SpdMatrix(SymMatrix base, double tol_psd);
  explicit SpdMatrix(const Matrix& m) : SpdMatrix(SymMatrix(m)) {}

  static SpdMatrix identity(int n) { return SpdMatrix(SymMatrix::identity(n)); }
  static SpdMatrix diagonal(const std::vector<double>& d) { return SpdMatrix(SymMatrix::diagonal(d)); }

  const SymMatrix& sym() const { return base_; }
  const Matrix& matrix() const { return base_.matrix(); }
  int dim() const { return base_.dim(); }
  double operator()(int i, int j) const { return base_(i, j); }

  double eig_floor() const { return eig_floor_; }
  double min_eigenvalue() const { return min_eig_; }
  double spectral_norm() const { return norm_; }
  bool strictly_pd() const { return min_eig_ > eig_floor_; }

  /// A + εI
  SpdMatrix shifted(double eps) const;

 private:
  SymMatrix base_;
  double eig_floor_ = 0.0;
  double min_eig_ = 0.0;
  double norm_ = 0.0;
};

/// basis · diag(f(λᵢ)) · basisᵀ. Eigenvalues within tolerance below zero are
/// clamped to 0 before f is applied. Throws DomainError naming the eigenvalue
/// when f is not finite there.
SymMatrix apply_spectral_function(const SpdMatrix& a, const std::function<double(double)>& f);

/// A^α for α ∈ [0,1], with 0^α = 0 on the kernel (so A^0 is the range projection).
SpdMatrix matrix_power(const SpdMatrix& a, double alpha);

/// Löwner order test: λ_min(B - A) ≥ -tol·(1 + ‖A‖ + ‖B‖).
bool loewner_leq(const SymMatrix& a, const SymMatrix& b, double tol);

/// C·A·C, re-symmetrized.
SymMatrix congruence(const SymMatrix& c, const SymMatrix& a);

/// Symmetric inverse via the eigendecomposition; requires a strictly PD matrix.
SpdMatrix inverse(const SpdMatrix& a);

double relative_frobenius_distance(const Matrix& x, const Matrix& reference);

}  // namespace kubo
