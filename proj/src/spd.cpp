#include "kubo/spd.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kubo/error.hpp"

namespace kubo {

namespace {

void require_same_dim(const SymMatrix& a, const SymMatrix& b, const char* op) {
  if (a.dim() != b.dim()) {
    std::ostringstream os;
    os << op << ": dimension mismatch (" << a.dim() << " vs " << b.dim() << ")";
    throw ShapeError(os.str());
  }
}

double condition_estimate(const Matrix& m) {
  Eigen::LDLT<Matrix> ldlt(m);
  double rc = ldlt.rcond();
  return rc > 0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
}

}  // namespace

SymMatrix::SymMatrix(const Matrix& m) {
  if (m.rows() == 0 || m.rows() != m.cols()) {
    std::ostringstream os;
    os << "SymMatrix requires a non-empty square matrix, got " << m.rows() << "x" << m.cols();
    throw ShapeError(os.str());
  }
  m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::identity(int n) { return SymMatrix(Matrix::Identity(n, n)); }

SymMatrix SymMatrix::zero(int n) { return SymMatrix(Matrix::Zero(n, n)); }

SymMatrix SymMatrix::diagonal(const std::vector<double>& d) {
  Vector v = Eigen::Map<const Vector>(d.data(), static_cast<Eigen::Index>(d.size()));
  return SymMatrix(Matrix(v.asDiagonal()));
}

double SymMatrix::spectral_norm() const {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw EigenError("eigensolver did not converge computing spectral norm", dim(),
                     condition_estimate(m_));
  }
  const Vector& ev = es.eigenvalues();
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

SymMatrix operator+(const SymMatrix& a, const SymMatrix& b) {
  require_same_dim(a, b, "operator+");
  return SymMatrix(a.m_ + b.m_);
}

SymMatrix operator-(const SymMatrix& a, const SymMatrix& b) {
  require_same_dim(a, b, "operator-");
  return SymMatrix(a.m_ - b.m_);
}

SymMatrix operator*(double k, const SymMatrix& a) { return SymMatrix(k * a.m_); }

Spectrum spectral_decompose(const SymMatrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a.matrix());
  if (es.info() != Eigen::Success) {
    std::ostringstream os;
    os << "eigensolver did not converge (dim " << a.dim() << ")";
    throw EigenError(os.str(), a.dim(), condition_estimate(a.matrix()));
  }
  return {es.eigenvalues(), es.eigenvectors()};
}

double min_eigenvalue(const SymMatrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a.matrix(), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw EigenError("eigensolver did not converge", a.dim(), condition_estimate(a.matrix()));
  }
  return es.eigenvalues()(0);
}

double default_psd_tolerance(double norm) { return 1e-10 * (1.0 + norm); }

SpdMatrix::SpdMatrix(SymMatrix base) : SpdMatrix(base, -1.0) {}

SpdMatrix::SpdMatrix(SymMatrix base, double tol_psd) : base_(std::move(base)) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(base_.matrix(), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw EigenError("eigensolver did not converge", base_.dim(), condition_estimate(base_.matrix()));
  }
  const Vector& ev = es.eigenvalues();
  min_eig_ = ev(0);
  norm_ = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  if (tol_psd < 0) tol_psd = default_psd_tolerance(norm_);
  if (min_eig_ < -tol_psd) {
    std::ostringstream os;
    os << "matrix is not positive semidefinite: smallest eigenvalue " << min_eig_
       << " is below -" << tol_psd;
    throw PsdError(os.str());
  }
  eig_floor_ = 1e-13 * norm_;
}

SpdMatrix SpdMatrix::shifted(double eps) const {
  return SpdMatrix(SymMatrix(base_.matrix() + eps * Matrix::Identity(dim(), dim())));
}

SymMatrix apply_spectral_function(const SpdMatrix& a, const std::function<double(double)>& f) {
  Spectrum s = spectral_decompose(a.sym());
  Vector fv(s.eigenvalues.size());
  for (Eigen::Index i = 0; i < fv.size(); ++i) {
    double lambda = std::max(0.0, s.eigenvalues(i));
    double v = f(lambda);
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os << "spectral function is not finite at eigenvalue " << lambda;
      throw DomainError(os.str());
    }
    fv(i) = v;
  }
  return SymMatrix(s.basis * fv.asDiagonal() * s.basis.transpose());
}

SpdMatrix matrix_power(const SpdMatrix& a, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    std::ostringstream os;
    os << "matrix_power: exponent " << alpha << " outside [0,1]";
    throw RangeError(os.str());
  }
  if (alpha == 1.0) return a;
  const double floor = a.eig_floor();
  return SpdMatrix(apply_spectral_function(a, [alpha, floor](double x) {
    if (x <= floor) return 0.0;
    return alpha == 0.0 ? 1.0 : std::pow(x, alpha);
  }));
}

bool loewner_leq(const SymMatrix& a, const SymMatrix& b, double tol) {
  require_same_dim(a, b, "loewner_leq");
  double scale = 1.0 + a.spectral_norm() + b.spectral_norm();
  return min_eigenvalue(b - a) >= -tol * scale;
}

SymMatrix congruence(const SymMatrix& c, const SymMatrix& a) {
  require_same_dim(c, a, "congruence");
  return SymMatrix(c.matrix() * a.matrix() * c.matrix());
}

SpdMatrix inverse(const SpdMatrix& a) {
  if (!a.strictly_pd()) {
    std::ostringstream os;
    os << "inverse: smallest eigenvalue " << a.min_eigenvalue() << " is below the floor "
       << a.eig_floor();
    throw SingularityError(os.str());
  }
  return SpdMatrix(apply_spectral_function(a, [](double x) { return 1.0 / x; }));
}

double relative_frobenius_distance(const Matrix& x, const Matrix& reference) {
  double denom = reference.norm();
  double num = (x - reference).norm();
  return denom > 0 ? num / denom : num;
}

}  // namespace kubo
