#include "kubo/connection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "kubo/error.hpp"

namespace kubo {

namespace {

void require_same_dim(const SpdMatrix& a, const SpdMatrix& b, const char* what) {
  if (a.dim() != b.dim()) {
    std::ostringstream os;
    os << what << ": dimension mismatch (" << a.dim() << " vs " << b.dim() << ")";
    throw ShapeError(os.str());
  }
}

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// M⁻¹·R via Cholesky, falling back to LDLT for semidefinite M.
Matrix solve_spd(const Matrix& m, const Matrix& rhs) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() == Eigen::Success) return llt.solve(rhs);
  Eigen::LDLT<Matrix> ldlt(m);
  return ldlt.solve(rhs);
}

SpdMatrix as_result(const Matrix& m, double extra_tol) {
  SymMatrix s(m);
  return SpdMatrix(s, default_psd_tolerance(s.spectral_norm()) + extra_tol);
}

double spectral_norm_of(const SpdMatrix& a) { return a.spectral_norm(); }

bool sum_invertible(const SpdMatrix& a, const SpdMatrix& b) { return invertible_beyond_floor(a.matrix() + b.matrix()); }

}  // namespace

bool invertible_beyond_floor(const Matrix& m) {
  if (m.rows() == 1) return m(0, 0) > 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double norm = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  return ev(0) > 1e-13 * norm;
}

namespace {

Matrix epsilon_schedule(const SpdMatrix& a, const SpdMatrix& b, const PairFn& compute, double* used_eps) {
  const double scale = 1.0 + spectral_norm_of(a) + spectral_norm_of(b);
  Matrix prev;
  double last_diff = std::numeric_limits<double>::infinity();
  for (double eps : regularization_schedule()) {
    Matrix cur = compute(a.shifted(eps), b.shifted(eps));
    if (prev.size() != 0) {
      last_diff = (cur - prev).norm();
      if (last_diff < 1e-6 * scale) {
        if (used_eps) *used_eps = eps;
        return cur;
      }
    }
    prev = std::move(cur);
  }
  std::ostringstream os;
  os << "regularization did not settle: successive results differ by " << last_diff << " (threshold "
     << 1e-6 * scale << ")";
  throw SingularityError(os.str());
}

SpdMatrix compressed(const Matrix& v, const SpdMatrix& x) {
  SymMatrix c(v.transpose() * x.matrix() * v);
  return SpdMatrix(c, default_psd_tolerance(c.spectral_norm()));
}

}  // namespace

Matrix regularized(const SpdMatrix& a, const SpdMatrix& b, const PairFn& compute, const PairTest& direct_ok,
                   double* used_eps) {
  if (used_eps) *used_eps = 0.0;
  if (direct_ok(a, b)) return compute(a, b);
  const int n = a.dim();
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(a.matrix() + b.matrix()));
  const auto& ev = es.eigenvalues();
  const double floor = 1e-13 * std::max(std::abs(ev(0)), std::abs(ev(n - 1)));
  int kernel = 0;
  while (kernel < n && ev(kernel) <= floor) ++kernel;
  if (kernel == 0) return epsilon_schedule(a, b, compute, used_eps);
  if (kernel == n) return Matrix::Zero(n, n);
  // Both matrices vanish on the common kernel, and so does every connection of them.
  const Matrix v = es.eigenvectors().rightCols(n - kernel);
  const SpdMatrix ac = compressed(v, a);
  const SpdMatrix bc = compressed(v, b);
  Matrix inner = direct_ok(ac, bc) ? compute(ac, bc) : epsilon_schedule(ac, bc, compute, used_eps);
  return symmetrized(v * inner * v.transpose());
}

Matrix harmonic_kernel(const Matrix& a, const Matrix& b, double t, double tc) {
  if (t == 0.0) return a;
  if (tc == 0.0) return b;
  if (a.rows() == 1) {
    Matrix r(1, 1);
    r(0, 0) = b(0, 0) * a(0, 0) / (tc * b(0, 0) + t * a(0, 0));
    return r;
  }
  Matrix m = tc * b + t * a;
  return symmetrized(b * solve_spd(m, a));
}

SpdMatrix weighted_harmonic(const SpdMatrix& a, const SpdMatrix& b, double t) {
  require_same_dim(a, b, "weighted_harmonic");
  if (!(t >= 0.0 && t <= 1.0)) {
    std::ostringstream os;
    os << "weighted_harmonic: weight must lie in [0,1], got " << t;
    throw RangeError(os.str());
  }
  if (t == 0.0) return a;
  if (t == 1.0) return b;
  const double tc = 1.0 - t;
  Matrix r = regularized(
      a, b, [t, tc](const SpdMatrix& x, const SpdMatrix& y) { return harmonic_kernel(x.matrix(), y.matrix(), t, tc); },
      [t, tc](const SpdMatrix& x, const SpdMatrix& y) {
        return invertible_beyond_floor(tc * y.matrix() + t * x.matrix());
      });
  return as_result(r, 0.0);
}

SpdMatrix parallel_sum(const SpdMatrix& a, const SpdMatrix& b) {
  require_same_dim(a, b, "parallel_sum");
  auto kernel = [](const Matrix& x, const Matrix& y) {
    return symmetrized(x * solve_spd(Matrix(x + y), y));
  };
  Matrix r = regularized(
      a, b, [&](const SpdMatrix& x, const SpdMatrix& y) { return kernel(x.matrix(), y.matrix()); }, sum_invertible);
  return as_result(r, 0.0);
}

// ---------------------------------------------------------------------------

namespace {

// With A + B = LLᵀ and L⁻¹AL⁻ᵀ = QΛQᵀ, every A !ₜ B is G·diag(aᵢ !ₜ bᵢ)·Gᵀ for
// G = LQ, aᵢ = Λᵢ and bᵢ = (QᵀL⁻¹BL⁻ᵀQ)ᵢᵢ. Node evaluations need no solve, so
// they stay accurate as t approaches an endpoint with A or B singular.
struct PairBasis {
  Matrix g;
  Vector a;
  Vector b;

  static std::optional<PairBasis> build(const Matrix& am, const Matrix& bm) {
    Eigen::LLT<Matrix> llt(symmetrized(am + bm));
    if (llt.info() != Eigen::Success) return std::nullopt;
    const auto l = llt.matrixL();
    Matrix ca = l.solve(l.solve(am).transpose());
    Matrix cb = l.solve(l.solve(bm).transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(ca));
    if (es.info() != Eigen::Success) return std::nullopt;
    const Matrix& q = es.eigenvectors();
    PairBasis pb;
    pb.g = Matrix(l) * q;
    pb.a = es.eigenvalues().cwiseMax(0.0);
    pb.b = (q.transpose() * cb * q).diagonal().cwiseMax(0.0);
    // aᵢ + bᵢ = 1; parts at the inversion floor are zero, as in invertible_beyond_floor.
    for (Eigen::Index i = 0; i < pb.a.size(); ++i) {
      if (pb.a(i) <= 1e-13) pb.a(i) = 0.0;
      if (pb.b(i) <= 1e-13) pb.b(i) = 0.0;
    }
    return pb;
  }

  Matrix assemble(const Vector& d) const { return symmetrized(g * d.asDiagonal() * g.transpose()); }

  Matrix harmonic(double t, double tc) const {
    Vector d(a.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      const double den = tc * b(i) + t * a(i);
      d(i) = den > 0.0 ? a(i) * b(i) / den : 0.0;
    }
    return assemble(d);
  }

  /// (λ+1)/λ · (λA):B
  Matrix canonical(double lambda) const {
    Vector d(a.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      const double den = lambda * a(i) + b(i);
      d(i) = den > 0.0 ? (lambda + 1.0) * a(i) * b(i) / den : 0.0;
    }
    return assemble(d);
  }
};

Evaluation evaluate_direct(const UnitMeasure& mu, const SpdMatrix& a, const SpdMatrix& b, const QuadratureSpec& spec) {
  const Matrix& am = a.matrix();
  const Matrix& bm = b.matrix();
  Evaluation ev;
  if (mu.is_zero()) {
    ev.value = Matrix::Zero(a.dim(), a.dim());
    return ev;
  }
  std::optional<PairBasis> basis;
  if (a.dim() > 1) basis = PairBasis::build(am, bm);
  auto h = [&am, &bm, &basis](Point p) -> Matrix {
    if (!basis || p.t == 0.0 || p.tc == 0.0) return harmonic_kernel(am, bm, p.t, p.tc);
    return basis->harmonic(p.t, p.tc);
  };
  Integral<Matrix> r = integrate_matrix(mu, h, spec);
  ev.value = std::move(r.value);
  ev.error = r.error;
  ev.nodes = r.nodes;
  return ev;
}

}  // namespace

Evaluation evaluate_detailed(const Connection& sigma, const SpdMatrix& a, const SpdMatrix& b,
                             const QuadratureSpec& spec) {
  require_same_dim(a, b, "evaluate");
  const UnitMeasure& mu = sigma.measure();
  if (!mu.charges_interior() || sum_invertible(a, b)) return evaluate_direct(mu, a, b, spec);
  Evaluation last;
  double eps = 0.0;
  Matrix value = regularized(
      a, b,
      [&](const SpdMatrix& x, const SpdMatrix& y) {
        last = evaluate_direct(mu, x, y, spec);
        return last.value;
      },
      sum_invertible, &eps);
  last.value = std::move(value);
  last.regularized = true;
  last.epsilon = eps;
  return last;
}

SpdMatrix evaluate(const Connection& sigma, const SpdMatrix& a, const SpdMatrix& b, const QuadratureSpec& spec) {
  Evaluation ev = evaluate_detailed(sigma, a, b, spec);
  return as_result(ev.value, 10.0 * ev.error);
}

Integral<double> representing_function_detailed(const Connection& sigma, double x, const QuadratureSpec& spec) {
  if (!(x >= 0.0) || !std::isfinite(x)) {
    std::ostringstream os;
    os << "representing function: x must be finite and nonnegative, got " << x;
    throw DomainError(os.str());
  }
  const UnitMeasure& mu = sigma.measure();
  if (x == 0.0) return {mu.atom_weight_at(0.0), 0.0, 0};
  return integrate_scalar(mu, [x](Point p) { return x / (p.tc * x + p.t); }, spec);
}

double representing_function(const Connection& sigma, double x, const QuadratureSpec& spec) {
  return representing_function_detailed(sigma, x, spec).value;
}

double transpose_rep_function(const Connection& sigma, double x, const QuadratureSpec& spec) {
  if (!(x >= 0.0) || !std::isfinite(x)) {
    std::ostringstream os;
    os << "transpose representing function: x must be finite and nonnegative, got " << x;
    throw DomainError(os.str());
  }
  const UnitMeasure& mu = sigma.measure();
  if (x == 0.0) return mu.atom_weight_at(1.0);
  return integrate_scalar(mu, [x](Point p) { return x / (p.tc + p.t * x); }, spec).value;
}

SpdMatrix evaluate_canonical(const HalfLineMeasure& nu, const SpdMatrix& a, const SpdMatrix& b,
                             const QuadratureSpec& spec) {
  require_same_dim(a, b, "evaluate_canonical");
  auto compute = [&nu, &spec](const SpdMatrix& x, const SpdMatrix& y) {
    const Matrix& am = x.matrix();
    const Matrix& bm = y.matrix();
    std::optional<PairBasis> basis;
    if (x.dim() > 1) basis = PairBasis::build(am, bm);
    // (λ+1)/λ · (λA):B
    auto kernel = [&am, &bm, &basis](double lambda) -> Matrix {
      if (basis) return basis->canonical(lambda);
      Matrix la = lambda * am;
      Matrix ps = symmetrized(la * solve_spd(Matrix(la + bm), bm));
      return ((lambda + 1.0) / lambda) * ps;
    };
    std::vector<Matrix> pieces;
    for (const auto& atom : nu.atoms()) {
      if (atom.weight == 0.0) continue;
      if (atom.point.is_zero()) {
        pieces.push_back(atom.weight * am);
      } else if (atom.point.is_infinity()) {
        pieces.push_back(atom.weight * bm);
      } else {
        pieces.push_back(atom.weight * kernel(atom.point.value()));
      }
    }
    for (const auto& d : nu.densities()) {
      if (d.weight == 0.0) continue;
      pieces.push_back(d.weight * integrate_half_line(d.density, kernel, spec).value);
    }
    Matrix sum = Matrix::Zero(am.rows(), am.cols());
    for (const auto& p : pieces) sum += p;
    return sum;
  };
  return as_result(regularized(a, b, compute, sum_invertible), 0.0);
}

// ---------------------------------------------------------------------------

Connection transpose(const Connection& sigma) {
  std::shared_ptr<const ClosedForm> cf;
  if (const ClosedForm* src = sigma.closed_form()) {
    auto t = std::make_shared<ClosedForm>();
    t->id = "transpose(" + src->id + ")";
    if (src->matrix) {
      auto m = src->matrix;
      t->matrix = [m](const SpdMatrix& a, const SpdMatrix& b) { return m(b, a); };
    }
    if (src->scalar) {
      auto f = src->scalar;
      double at_zero = sigma.measure().atom_weight_at(1.0);
      t->scalar = [f, at_zero](double x) { return x == 0.0 ? at_zero : x * f(1.0 / x); };
    }
    cf = t;
  }
  return Connection(pushforward_theta(sigma.measure()), "transpose(" + sigma.label() + ")", cf);
}

bool is_mean(const Connection& sigma, double tol, const QuadratureSpec& spec) {
  const bool by_mass = is_probability(sigma.measure(), tol, spec);
  const double f1 = representing_function(sigma, 1.0, spec);
  const bool by_f = std::abs(f1 - 1.0) <= tol;
  if (by_mass != by_f) {
    std::ostringstream os;
    os << "is_mean: mass and f(1) tests disagree for " << sigma.label() << " (f(1) = " << f1 << ")";
    throw Error(os.str());
  }
  return by_mass;
}

bool is_symmetric_connection(const Connection& sigma, double tol, const QuadratureSpec& spec) {
  return is_symmetric(sigma.measure(), tol, spec);
}

Connection symmetrize(const Connection& sigma) {
  UnitMeasure mu = scale(add(sigma.measure(), pushforward_theta(sigma.measure())), 0.5);
  std::shared_ptr<const ClosedForm> cf;
  if (const ClosedForm* src = sigma.closed_form()) {
    auto s = std::make_shared<ClosedForm>();
    s->id = "symmetrize(" + src->id + ")";
    if (src->matrix) {
      auto m = src->matrix;
      s->matrix = [m](const SpdMatrix& a, const SpdMatrix& b) {
        return as_result(0.5 * (m(a, b).matrix() + m(b, a).matrix()), 0.0);
      };
    }
    if (src->scalar) {
      auto f = src->scalar;
      double w0 = sigma.measure().atom_weight_at(0.0);
      double w1 = sigma.measure().atom_weight_at(1.0);
      s->scalar = [f, w0, w1](double x) { return x == 0.0 ? 0.5 * (w0 + w1) : 0.5 * (f(x) + x * f(1.0 / x)); };
    }
    cf = s;
  }
  return Connection(std::move(mu), "symmetrize(" + sigma.label() + ")", cf);
}

Connection add_connections(const Connection& a, const Connection& b) {
  std::shared_ptr<const ClosedForm> cf;
  const ClosedForm* x = a.closed_form();
  const ClosedForm* y = b.closed_form();
  if (x && y) {
    auto s = std::make_shared<ClosedForm>();
    s->id = x->id + "+" + y->id;
    if (x->matrix && y->matrix) {
      auto f = x->matrix;
      auto g = y->matrix;
      s->matrix = [f, g](const SpdMatrix& p, const SpdMatrix& q) {
        return as_result(f(p, q).matrix() + g(p, q).matrix(), 0.0);
      };
    }
    if (x->scalar && y->scalar) {
      auto f = x->scalar;
      auto g = y->scalar;
      s->scalar = [f, g](double v) { return f(v) + g(v); };
    }
    cf = s;
  }
  return Connection(add(a.measure(), b.measure()), a.label() + " + " + b.label(), cf);
}

Connection scale_connection(const Connection& sigma, double k) {
  UnitMeasure mu = scale(sigma.measure(), k);
  std::shared_ptr<const ClosedForm> cf;
  if (const ClosedForm* src = sigma.closed_form()) {
    auto s = std::make_shared<ClosedForm>();
    std::ostringstream id;
    id << k << "*" << src->id;
    s->id = id.str();
    if (src->matrix) {
      auto f = src->matrix;
      s->matrix = [f, k](const SpdMatrix& a, const SpdMatrix& b) { return as_result(k * f(a, b).matrix(), 0.0); };
    }
    if (src->scalar) {
      auto f = src->scalar;
      s->scalar = [f, k](double x) { return k * f(x); };
    }
    cf = s;
  }
  std::ostringstream label;
  label << k << "·" << sigma.label();
  return Connection(std::move(mu), label.str(), cf);
}

RepFunction rep_function(const Connection& sigma, const QuadratureSpec& spec) {
  return {[sigma, spec](double x) { return representing_function(sigma, x, spec); }, sigma.label()};
}

ConnectionParts decompose_connection(const Connection& sigma, const QuadratureSpec& spec) {
  MeasureParts parts = decompose_measure(sigma.measure());
  Connection ac(parts.ac, sigma.label() + "_ac");
  Connection sc(parts.sc, sigma.label() + "_sc");
  Connection sd(parts.sd, sigma.label() + "_sd");
  return {ac, sc, sd, rep_function(ac, spec), rep_function(sc, spec), rep_function(sd, spec)};
}

PartialSum discrete_partial_sum(const Connection& sigma, const SpdMatrix& a, const SpdMatrix& b) {
  require_same_dim(a, b, "discrete_partial_sum");
  const UnitMeasure& mu = sigma.measure();
  PartialSum out;
  out.value = Matrix::Zero(a.dim(), a.dim());
  for (const auto& atom : mu.atoms()) {
    if (atom.weight == 0.0) continue;
    out.value += atom.weight * weighted_harmonic(a, b, atom.location).matrix();
  }
  out.truncation_bound = mu.atom_tail_mass() * std::max(a.spectral_norm(), b.spectral_norm());
  return out;
}

double density_mass(const Density& g, const QuadratureSpec& spec) {
  double exact = 0.0;
  for (const auto& t : g.terms()) {
    auto m = t.unit_mass();
    if (!m) return integrate_density(g, [](Point) { return 1.0; }, spec).value;
    exact += t.weight() * *m;
  }
  return exact;
}

ConvexDecomposition mean_convex_decomposition(const Connection& sigma, double tol, const QuadratureSpec& spec) {
  if (!is_mean(sigma, tol, spec)) {
    throw DomainError("mean_convex_decomposition: " + sigma.label() + " is not a mean (mass differs from 1)");
  }
  MeasureParts parts = decompose_measure(sigma.measure());
  auto normalized = [&](const UnitMeasure& part, double k, const std::string& tag) -> ConvexPart {
    ConvexPart out;
    out.k = k;
    if (k > 0.0) out.mean = Connection(scale(part, 1.0 / k), sigma.label() + "_" + tag + "/k");
    return out;
  };
  const UnitMeasure& mu = sigma.measure();
  return {normalized(parts.ac, density_mass(mu.ac(), spec), "ac"), normalized(parts.sc, mu.sc_mass(), "sc"),
          normalized(parts.sd, mu.atom_mass(), "sd")};
}

}  // namespace kubo
