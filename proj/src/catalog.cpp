#include "kubo/catalog.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include "kubo/error.hpp"

namespace kubo {

namespace {

std::string fmt(double x) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::shared_ptr<const ClosedForm> closed(std::string id,
                                         std::function<SpdMatrix(const SpdMatrix&, const SpdMatrix&)> matrix,
                                         std::function<double(double)> scalar) {
  auto cf = std::make_shared<ClosedForm>();
  cf->id = std::move(id);
  cf->matrix = std::move(matrix);
  cf->scalar = std::move(scalar);
  return cf;
}

CatalogEntry entry(std::string id, UnitMeasure mu, std::shared_ptr<const ClosedForm> cf, bool symmetric,
                   bool mean) {
  Connection c(std::move(mu), id, std::move(cf));
  return {std::move(id), std::move(c), symmetric, mean};
}

void require_unit(double x, const char* what) {
  if (!(x >= 0.0 && x <= 1.0)) {
    std::ostringstream os;
    os << what << ": parameter must lie in [0,1], got " << x;
    throw UsageError(os.str());
  }
}

SpdMatrix shifted_pair_result(const Matrix& m) {
  SymMatrix s(m);
  return SpdMatrix(s, default_psd_tolerance(s.spectral_norm()));
}

bool either_pd(const SpdMatrix& a, const SpdMatrix& b) { return a.strictly_pd() || b.strictly_pd(); }

double harmonic_scalar(double t, double x) {
  if (x == 0.0) return t == 0.0 ? 1.0 : 0.0;
  return x / ((1.0 - t) * x + t);
}

}  // namespace

// ---------------------------------------------------------------------------

double log_mean_scalar(double x) {
  if (!(x >= 0.0)) throw DomainError("log mean: x must be nonnegative");
  if (x == 0.0) return 0.0;
  const double y = x - 1.0;
  if (std::abs(y) < 1e-4) {
    return 1.0 + y * (1.0 / 2 + y * (-1.0 / 12 + y * (1.0 / 24 + y * (-19.0 / 720 + y * (3.0 / 160 + y * (-863.0 / 60480))))));
  }
  return y / std::log(x);
}

double dual_log_mean_scalar(double x) {
  if (!(x >= 0.0)) throw DomainError("dual log mean: x must be nonnegative");
  if (x == 0.0) return 0.0;
  const double y = x - 1.0;
  if (std::abs(y) < 1e-4) {
    return 1.0 + y * (1.0 / 2 + y * (-1.0 / 6 + y * (1.0 / 12 + y * (-1.0 / 20 + y * (1.0 / 30 + y * (-1.0 / 42))))));
  }
  return x * std::log(x) / y;
}

SpdMatrix congruence_mean(const SpdMatrix& a, const SpdMatrix& b, const std::function<double(double)>& f) {
  if (a.dim() != b.dim()) throw ShapeError("congruence_mean: dimension mismatch");
  // With A singular and B invertible, use A σ B = B σ' A with f'(x) = x·f(1/x),
  // taking f(y)/y → 0 as y → ∞ at x = 0.
  auto transposed = [&f](double x) { return x == 0.0 ? 0.0 : x * f(1.0 / x); };
  auto compute = [&f, &transposed](const SpdMatrix& a0, const SpdMatrix& b0) -> Matrix {
    const bool swap = !a0.strictly_pd() && b0.strictly_pd();
    const SpdMatrix& x = swap ? b0 : a0;
    const SpdMatrix& y = swap ? a0 : b0;
    Spectrum s = spectral_decompose(x.sym());
    Vector root = s.eigenvalues.cwiseMax(0.0).cwiseSqrt();
    Matrix half = s.basis * root.asDiagonal() * s.basis.transpose();
    Matrix inv_half = s.basis * root.cwiseInverse().asDiagonal() * s.basis.transpose();
    SymMatrix middle(inv_half * y.matrix() * inv_half);
    SpdMatrix mid(middle, default_psd_tolerance(middle.spectral_norm()) * 10.0);
    const double floor = 1e-13 * mid.spectral_norm();
    auto snapped = [floor](const std::function<double(double)>& g) {
      return [floor, g](double v) { return g(v <= floor ? 0.0 : v); };
    };
    Matrix fm = swap ? apply_spectral_function(mid, snapped(transposed)).matrix()
                     : apply_spectral_function(mid, snapped(f)).matrix();
    return half * fm * half;
  };
  return shifted_pair_result(regularized(a, b, compute, either_pd));
}

// ---------------------------------------------------------------------------

CatalogEntry left_trivial() {
  return entry("left_trivial", UnitMeasure::dirac(0.0),
               closed("left_trivial", [](const SpdMatrix& a, const SpdMatrix&) { return a; },
                      [](double) { return 1.0; }),
               false, true);
}

CatalogEntry right_trivial() {
  return entry("right_trivial", UnitMeasure::dirac(1.0),
               closed("right_trivial", [](const SpdMatrix&, const SpdMatrix& b) { return b; },
                      [](double x) { return x; }),
               false, true);
}

CatalogEntry arithmetic(double alpha) {
  require_unit(alpha, "arithmetic");
  std::string id = "arithmetic:" + fmt(alpha);
  UnitMeasure mu = UnitMeasure::atomic({{0.0, 1.0 - alpha}, {1.0, alpha}});
  auto cf = closed(
      id,
      [alpha](const SpdMatrix& a, const SpdMatrix& b) {
        if (a.dim() != b.dim()) throw ShapeError("arithmetic: dimension mismatch");
        return shifted_pair_result((1.0 - alpha) * a.matrix() + alpha * b.matrix());
      },
      [alpha](double x) { return (1.0 - alpha) + alpha * x; });
  return entry(id, std::move(mu), cf, alpha == 0.5, true);
}

CatalogEntry harmonic(double t) {
  require_unit(t, "harmonic");
  std::string id = "harmonic:" + fmt(t);
  auto cf = closed(
      id, [t](const SpdMatrix& a, const SpdMatrix& b) { return weighted_harmonic(a, b, t); },
      [t](double x) { return harmonic_scalar(t, x); });
  return entry(id, UnitMeasure::dirac(t), cf, t == 0.5, true);
}

CatalogEntry geometric(double alpha) {
  require_unit(alpha, "geometric");
  if (alpha == 0.0) return left_trivial();
  if (alpha == 1.0) return right_trivial();
  std::string id = "geometric:" + fmt(alpha);
  UnitMeasure mu = UnitMeasure::with_density(Density({DensityTerm::geometric(alpha)}));
  auto cf = closed(
      id,
      [alpha](const SpdMatrix& a, const SpdMatrix& b) {
        if (a.dim() != b.dim()) throw ShapeError("geometric: dimension mismatch");
        auto compute = [alpha](const SpdMatrix& a0, const SpdMatrix& b0) -> Matrix {
          // A #_α B = B #_(1-α) A; the base must be invertible.
          const bool swap = !a0.strictly_pd() && b0.strictly_pd();
          const SpdMatrix& x = swap ? b0 : a0;
          const SpdMatrix& y = swap ? a0 : b0;
          const double power = swap ? 1.0 - alpha : alpha;
          Spectrum s = spectral_decompose(x.sym());
          Vector root = s.eigenvalues.cwiseMax(0.0).cwiseSqrt();
          Matrix half = s.basis * root.asDiagonal() * s.basis.transpose();
          Matrix inv_half = s.basis * root.cwiseInverse().asDiagonal() * s.basis.transpose();
          SymMatrix middle(inv_half * y.matrix() * inv_half);
          SpdMatrix mid(middle, default_psd_tolerance(middle.spectral_norm()) * 10.0);
          const double floor = 1e-13 * mid.spectral_norm();
          auto pw = [floor, power](double v) { return v <= floor ? 0.0 : std::pow(v, power); };
          return half * apply_spectral_function(mid, pw).matrix() * half;
        };
        return shifted_pair_result(regularized(a, b, compute, either_pd));
      },
      [alpha](double x) { return std::pow(x, alpha); });
  return entry(id, std::move(mu), cf, alpha == 0.5, true);
}

CatalogEntry sum_connection() {
  auto cf = closed(
      "sum",
      [](const SpdMatrix& a, const SpdMatrix& b) {
        if (a.dim() != b.dim()) throw ShapeError("sum: dimension mismatch");
        return shifted_pair_result(a.matrix() + b.matrix());
      },
      [](double x) { return 1.0 + x; });
  return entry("sum", UnitMeasure::atomic({{0.0, 1.0}, {1.0, 1.0}}), cf, true, false);
}

CatalogEntry parallel_sum_connection() {
  auto cf = closed(
      "parallel_sum", [](const SpdMatrix& a, const SpdMatrix& b) { return parallel_sum(a, b); },
      [](double x) { return x / (1.0 + x); });
  return entry("parallel_sum", UnitMeasure::dirac(0.5, 0.5), cf, true, false);
}

CatalogEntry log_mean() {
  auto cf = closed(
      "log_mean", [](const SpdMatrix& a, const SpdMatrix& b) { return congruence_mean(a, b, log_mean_scalar); },
      log_mean_scalar);
  return entry("log_mean", UnitMeasure::with_density(Density({DensityTerm::log_mean()})), cf, true, true);
}

CatalogEntry dual_log_mean() {
  auto cf = closed(
      "dual_log_mean",
      [](const SpdMatrix& a, const SpdMatrix& b) {
        if (a.dim() != b.dim()) throw ShapeError("dual_log_mean: dimension mismatch");
        auto compute = [](const SpdMatrix& x, const SpdMatrix& y) -> Matrix {
          SpdMatrix lm = congruence_mean(inverse(y), inverse(x), log_mean_scalar);
          return inverse(lm).matrix();
        };
        return shifted_pair_result(regularized(a, b, compute, [](const SpdMatrix& x, const SpdMatrix& y) {
          return x.strictly_pd() && y.strictly_pd();
        }));
      },
      dual_log_mean_scalar);
  return entry("dual_log_mean", UnitMeasure::lebesgue(), cf, true, true);
}

CatalogEntry finite_atomic(const std::vector<Atom>& atoms) {
  if (atoms.empty()) throw UsageError("atomic: need at least one atom");
  std::string id = "atomic:";
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (i) id += ",";
    id += fmt(atoms[i].weight) + "@" + fmt(atoms[i].location);
  }
  UnitMeasure mu;
  try {
    mu = UnitMeasure::atomic(atoms);
  } catch (const RangeError& e) {
    throw UsageError(std::string("atomic: ") + e.what());
  }
  std::vector<Atom> stored = mu.atoms();
  double mass = 0.0;
  for (const auto& a : stored) mass += a.weight;
  bool symmetric = true;
  for (const auto& a : stored) {
    bool found = false;
    for (const auto& b : stored) {
      if (std::abs(b.location - (1.0 - a.location)) <= kAtomMergeTolerance && b.weight == a.weight) found = true;
    }
    symmetric = symmetric && found;
  }
  auto cf = closed(
      id,
      [stored](const SpdMatrix& a, const SpdMatrix& b) {
        if (a.dim() != b.dim()) throw ShapeError("atomic: dimension mismatch");
        Matrix m = Matrix::Zero(a.dim(), a.dim());
        for (const auto& atom : stored) m += atom.weight * weighted_harmonic(a, b, atom.location).matrix();
        return shifted_pair_result(m);
      },
      [stored](double x) {
        double s = 0.0;
        for (const auto& atom : stored) s += atom.weight * harmonic_scalar(atom.location, x);
        return s;
      });
  return entry(id, std::move(mu), cf, symmetric, std::abs(mass - 1.0) <= 1e-12);
}

CatalogEntry cantor_mean() {
  return entry("cantor_mean", UnitMeasure::singular(IfsMeasure::cantor()), nullptr, true, true);
}

std::vector<CatalogEntry> catalog() {
  return {left_trivial(),
          right_trivial(),
          arithmetic(0.3),
          harmonic(0.3),
          geometric(0.25),
          geometric(0.5),
          geometric(0.75),
          sum_connection(),
          parallel_sum_connection(),
          log_mean(),
          dual_log_mean(),
          finite_atomic({{0.1, 0.2}, {0.5, 0.5}, {0.8, 0.3}}),
          cantor_mean()};
}

// ---------------------------------------------------------------------------

namespace {

double parse_number(const std::string& text, const std::string& mean_id) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  auto res = std::from_chars(first, last, v);
  if (text.empty() || res.ec != std::errc() || res.ptr != last || !std::isfinite(v)) {
    throw UsageError("mean id '" + mean_id + "': cannot parse number '" + text + "'");
  }
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

CatalogEntry lookup(const std::string& mean_id) {
  const auto colon = mean_id.find(':');
  const std::string name = mean_id.substr(0, colon);
  const std::string rest = colon == std::string::npos ? std::string() : mean_id.substr(colon + 1);
  const bool has_params = colon != std::string::npos;
  std::vector<double> params;
  auto require_params = [&](std::size_t n) {
    if (!has_params) {
      if (n == 0) return;
      throw UsageError("mean id '" + mean_id + "': '" + name + "' needs a parameter");
    }
    if (n == 0) throw UsageError("mean id '" + mean_id + "': '" + name + "' takes no parameters");
    for (const auto& p : split(rest, ',')) params.push_back(parse_number(p, mean_id));
    if (params.size() != n) throw UsageError("mean id '" + mean_id + "': wrong number of parameters");
  };

  if (name == "left_trivial" || name == "left") {
    require_params(0);
    return left_trivial();
  }
  if (name == "right_trivial" || name == "right") {
    require_params(0);
    return right_trivial();
  }
  if (name == "arithmetic") {
    require_params(1);
    return arithmetic(params[0]);
  }
  if (name == "harmonic") {
    require_params(1);
    return harmonic(params[0]);
  }
  if (name == "geometric") {
    require_params(1);
    return geometric(params[0]);
  }
  if (name == "sum") {
    require_params(0);
    return sum_connection();
  }
  if (name == "parallel_sum") {
    require_params(0);
    return parallel_sum_connection();
  }
  if (name == "log_mean") {
    require_params(0);
    return log_mean();
  }
  if (name == "dual_log_mean" || name == "dual_log") {
    require_params(0);
    return dual_log_mean();
  }
  if (name == "cantor_mean" || name == "cantor") {
    require_params(0);
    return cantor_mean();
  }
  if (name == "atomic" || name == "finite_atomic") {
    if (!has_params || rest.empty()) throw UsageError("mean id '" + mean_id + "': atomic needs w@t pairs");
    std::vector<Atom> atoms;
    for (const auto& item : split(rest, ',')) {
      auto at = item.find('@');
      if (at == std::string::npos) throw UsageError("mean id '" + mean_id + "': expected w@t, got '" + item + "'");
      double w = parse_number(item.substr(0, at), mean_id);
      double t = parse_number(item.substr(at + 1), mean_id);
      atoms.push_back({t, w});
    }
    return finite_atomic(atoms);
  }
  throw UsageError("unknown mean id '" + mean_id + "'");
}

SpdMatrix closed_form_eval(const std::string& mean_id, const SpdMatrix& a, const SpdMatrix& b) {
  CatalogEntry e = lookup(mean_id);
  if (!e.has_closed_matrix()) throw UsageError("'" + e.id + "' has no closed-form matrix evaluator");
  return e.connection.closed_form()->matrix(a, b);
}

double representing_function_closed(const std::string& mean_id, double x) {
  if (!(x >= 0.0)) throw DomainError("representing function: x must be nonnegative");
  CatalogEntry e = lookup(mean_id);
  if (!e.has_closed_scalar()) throw UsageError("'" + e.id + "' has no closed-form representing function");
  return e.connection.closed_form()->scalar(x);
}

}  // namespace kubo
