#include "kubo/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "kubo/error.hpp"

namespace kubo {

namespace {

constexpr double kPi = std::numbers::pi;

void require_nonnegative_weight(double w, const char* what) {
  if (!(w >= 0.0) || !std::isfinite(w)) {
    std::ostringstream os;
    os << what << ": weight must be finite and nonnegative, got " << w;
    throw RangeError(os.str());
  }
}

void require_open_unit(double alpha, const char* what) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    std::ostringstream os;
    os << what << ": parameter must lie in (0,1), got " << alpha;
    throw RangeError(os.str());
  }
}

}  // namespace

std::string to_string(SchemeHint h) {
  switch (h) {
    case SchemeHint::smooth: return "smooth";
    case SchemeHint::jacobi: return "jacobi";
    case SchemeHint::logistic: return "logistic";
  }
  return "?";
}

// ---------------------------------------------------------------------------

HalfLineDensity HalfLineDensity::geometric(double alpha) {
  require_open_unit(alpha, "HalfLineDensity::geometric");
  HalfLineDensity d;
  d.kind_ = Kind::geometric;
  d.alpha_ = alpha;
  d.name_ = "geometric";
  d.p0_ = alpha - 1.0;
  d.decay_ = 2.0 - alpha;
  return d;
}

HalfLineDensity HalfLineDensity::custom(std::string name, std::function<double(double)> f,
                                        double exponent_at_zero, double decay_at_infinity) {
  if (!(exponent_at_zero > -1.0) || !(decay_at_infinity > 1.0)) {
    throw RangeError("HalfLineDensity::custom: need exponent_at_zero > -1 and decay_at_infinity > 1");
  }
  HalfLineDensity d;
  d.kind_ = Kind::custom;
  d.name_ = std::move(name);
  d.f_ = std::move(f);
  d.p0_ = exponent_at_zero;
  d.decay_ = decay_at_infinity;
  return d;
}

double HalfLineDensity::operator()(double lambda) const {
  if (kind_ == Kind::geometric) {
    return std::sin(alpha_ * kPi) / kPi * std::pow(lambda, alpha_ - 1.0) / (1.0 + lambda);
  }
  return f_(lambda);
}

// ---------------------------------------------------------------------------

DensityTerm DensityTerm::lebesgue(double weight) {
  require_nonnegative_weight(weight, "DensityTerm::lebesgue");
  DensityTerm d;
  d.kind_ = DensityKind::lebesgue;
  d.weight_ = weight;
  return d;
}

DensityTerm DensityTerm::geometric(double alpha, double weight) {
  require_open_unit(alpha, "DensityTerm::geometric");
  require_nonnegative_weight(weight, "DensityTerm::geometric");
  DensityTerm d;
  d.kind_ = DensityKind::geometric;
  d.alpha_ = alpha;
  d.weight_ = weight;
  return d;
}

DensityTerm DensityTerm::log_mean(double weight) {
  require_nonnegative_weight(weight, "DensityTerm::log_mean");
  DensityTerm d;
  d.kind_ = DensityKind::log_mean;
  d.weight_ = weight;
  return d;
}

DensityTerm DensityTerm::psi_image(const HalfLineDensity& source, double weight) {
  require_nonnegative_weight(weight, "DensityTerm::psi_image");
  DensityTerm d;
  d.kind_ = DensityKind::psi_image;
  d.weight_ = weight;
  d.source_ = std::make_shared<const HalfLineDensity>(source);
  return d;
}

double DensityTerm::eval(double t, double tc) const {
  if (reflected_) std::swap(t, tc);
  switch (kind_) {
    case DensityKind::lebesgue:
      return weight_;
    case DensityKind::geometric:
      return weight_ * std::sin(alpha_ * kPi) / kPi * std::pow(t, alpha_ - 1.0) * std::pow(tc, -alpha_);
    case DensityKind::log_mean: {
      double l = std::log(t) - std::log(tc);
      return weight_ / (t * tc * (kPi * kPi + l * l));
    }
    case DensityKind::psi_image:
      return weight_ * (*source_)(t / tc) / (tc * tc);
  }
  return 0.0;
}

Endpoints DensityTerm::exponents() const {
  Endpoints e{0.0, 0.0};
  switch (kind_) {
    case DensityKind::lebesgue: break;
    case DensityKind::geometric: e = {alpha_ - 1.0, -alpha_}; break;
    // g ~ 1/(t log² t): integrable, but below every power t^p with p > -1.
    case DensityKind::log_mean: e = {-1.0, -1.0}; break;
    case DensityKind::psi_image:
      e = {source_->exponent_at_zero(), source_->decay_at_infinity() - 2.0};
      break;
  }
  if (reflected_) std::swap(e.p, e.q);
  return e;
}

double DensityTerm::regular(double t, double tc) const {
  if (kind_ == DensityKind::geometric) {
    return weight_ * std::sin(alpha_ * kPi) / kPi;
  }
  Endpoints e = exponents();
  double w = 1.0;
  if (e.p != 0.0) w *= std::pow(t, e.p);
  if (e.q != 0.0) w *= std::pow(tc, e.q);
  return eval(t, tc) / w;
}

SchemeHint DensityTerm::scheme_hint() const {
  switch (kind_) {
    case DensityKind::lebesgue: return SchemeHint::smooth;
    case DensityKind::log_mean: return SchemeHint::logistic;
    case DensityKind::geometric:
    case DensityKind::psi_image: return SchemeHint::jacobi;
  }
  return SchemeHint::smooth;
}

std::optional<double> DensityTerm::unit_mass() const {
  if (kind_ == DensityKind::psi_image) return std::nullopt;
  return 1.0;
}

bool DensityTerm::reflection_invariant() const {
  return kind_ == DensityKind::lebesgue || kind_ == DensityKind::log_mean;
}

DensityTerm DensityTerm::reflected_term() const {
  DensityTerm d = *this;
  if (kind_ == DensityKind::geometric) {
    d.alpha_ = 1.0 - alpha_;
  } else if (!reflection_invariant()) {
    d.reflected_ = !reflected_;
  }
  return d;
}

DensityTerm DensityTerm::scaled(double k) const {
  require_nonnegative_weight(k, "DensityTerm::scaled");
  DensityTerm d = *this;
  d.weight_ *= k;
  return d;
}

DensityTerm DensityTerm::with_weight(double w) const {
  require_nonnegative_weight(w, "DensityTerm::with_weight");
  DensityTerm d = *this;
  d.weight_ = w;
  return d;
}

bool DensityTerm::same_shape(const DensityTerm& other, double alpha_tol) const {
  if (kind_ != other.kind_ || reflected_ != other.reflected_) return false;
  if (kind_ == DensityKind::geometric) return std::abs(alpha_ - other.alpha_) <= alpha_tol;
  if (kind_ == DensityKind::psi_image) return source_ == other.source_;
  return true;
}

std::string DensityTerm::id() const {
  switch (kind_) {
    case DensityKind::lebesgue: return "lebesgue";
    case DensityKind::geometric: return "geometric";
    case DensityKind::log_mean: return "log_mean";
    case DensityKind::psi_image: return "psi";
  }
  return "?";
}

// ---------------------------------------------------------------------------

Density::Density(std::vector<DensityTerm> terms) {
  for (const auto& t : terms) add_term(t);
}

void Density::add_term(const DensityTerm& term) {
  for (auto& existing : terms_) {
    if (existing.same_shape(term)) {
      existing = existing.with_weight(existing.weight() + term.weight());
      return;
    }
  }
  terms_.push_back(term);
}

double Density::eval(double t, double tc) const {
  double s = 0.0;
  for (const auto& term : terms_) s += term.eval(t, tc);
  return s;
}

Endpoints Density::endpoint_exponents() const {
  Endpoints e{0.0, 0.0};
  for (const auto& term : terms_) {
    Endpoints x = term.exponents();
    e.p = std::min(e.p, x.p);
    e.q = std::min(e.q, x.q);
  }
  return e;
}

SchemeHint Density::scheme_hint() const {
  SchemeHint hint = SchemeHint::smooth;
  for (const auto& term : terms_) {
    if (term.scheme_hint() == SchemeHint::logistic) return SchemeHint::logistic;
    if (term.scheme_hint() == SchemeHint::jacobi) hint = SchemeHint::jacobi;
  }
  return hint;
}

Density Density::reflected() const {
  std::vector<DensityTerm> out;
  out.reserve(terms_.size());
  for (const auto& t : terms_) out.push_back(t.reflected_term());
  return Density(std::move(out));
}

Density Density::scaled(double k) const {
  std::vector<DensityTerm> out;
  out.reserve(terms_.size());
  for (const auto& t : terms_) out.push_back(t.scaled(k));
  return Density(std::move(out));
}

Density Density::plus(const Density& other) const {
  Density d = *this;
  for (const auto& t : other.terms_) d.add_term(t);
  return d;
}

// ---------------------------------------------------------------------------

IfsMeasure::IfsMeasure(std::vector<AffineMap> maps, std::vector<double> probs)
    : maps_(std::move(maps)), probs_(std::move(probs)) {
  if (maps_.size() < 2 || maps_.size() != probs_.size()) {
    throw RangeError("IfsMeasure: need at least two maps and one probability per map");
  }
  constexpr double eps = 1e-15;
  double psum = 0.0;
  double rsum = 0.0;
  int positive = 0;
  std::vector<std::pair<double, double>> images;
  for (std::size_t i = 0; i < maps_.size(); ++i) {
    const AffineMap& m = maps_[i];
    double lo = std::min(m(0.0), m(1.0));
    double hi = std::max(m(0.0), m(1.0));
    if (!(std::abs(m.ratio) < 1.0) || m.ratio == 0.0 || lo < -eps || hi > 1.0 + eps) {
      std::ostringstream os;
      os << "IfsMeasure: map " << i << " (" << m.ratio << "·t + " << m.shift
         << ") is not a nondegenerate contraction of [0,1] into itself";
      throw RangeError(os.str());
    }
    if (!(probs_[i] >= 0.0)) throw RangeError("IfsMeasure: probabilities must be nonnegative");
    psum += probs_[i];
    rsum += std::abs(m.ratio);
    if (probs_[i] > 0.0) ++positive;
    images.emplace_back(lo, hi);
  }
  if (std::abs(psum - 1.0) > eps) {
    std::ostringstream os;
    os << "IfsMeasure: probabilities sum to " << psum << ", not 1";
    throw RangeError(os.str());
  }
  if (positive < 2) throw RangeError("IfsMeasure: fewer than two maps carry mass (measure would be atomic)");
  if (!(rsum < 1.0)) throw RangeError("IfsMeasure: Σ|ratio| must be < 1 for a Lebesgue-singular attractor");
  std::sort(images.begin(), images.end());
  for (std::size_t i = 1; i < images.size(); ++i) {
    if (images[i].first < images[i - 1].second - eps) {
      throw RangeError("IfsMeasure: map images overlap");
    }
  }
}

IfsMeasure IfsMeasure::cantor() {
  return IfsMeasure({{1.0 / 3.0, 0.0}, {1.0 / 3.0, 2.0 / 3.0}}, {0.5, 0.5});
}

double IfsMeasure::contraction_ratio() const {
  double r = 0.0;
  for (const auto& m : maps_) r = std::max(r, std::abs(m.ratio));
  return r;
}

IfsMeasure IfsMeasure::reflected() const {
  // Θ∘φ∘Θ(t) = 1 - (r(1-t) + b) = r·t + (1 - r - b)
  std::vector<AffineMap> out;
  out.reserve(maps_.size());
  for (const auto& m : maps_) out.push_back({m.ratio, 1.0 - m.ratio - m.shift});
  return IfsMeasure(std::move(out), probs_);
}

std::vector<double> IfsMeasure::moments(int order) const {
  // M_k (1 - Σ p_i r_i^k) = Σ_i p_i Σ_{j<k} C(k,j) r_i^j b_i^(k-j) M_j
  std::vector<double> m(static_cast<std::size_t>(order) + 1, 0.0);
  m[0] = 1.0;
  for (int k = 1; k <= order; ++k) {
    double rhs = 0.0;
    double diag = 1.0;
    for (std::size_t i = 0; i < maps_.size(); ++i) {
      const double r = maps_[i].ratio;
      const double b = maps_[i].shift;
      diag -= probs_[i] * std::pow(r, k);
      double binom = 1.0;
      double inner = 0.0;
      for (int j = 0; j < k; ++j) {
        inner += binom * std::pow(r, j) * std::pow(b, k - j) * m[static_cast<std::size_t>(j)];
        binom = binom * (k - j) / (j + 1);
      }
      rhs += probs_[i] * inner;
    }
    m[static_cast<std::size_t>(k)] = rhs / diag;
  }
  return m;
}

bool IfsMeasure::approx_equal(const IfsMeasure& other, double tol) const {
  if (maps_.size() != other.maps_.size()) return false;
  std::vector<bool> used(maps_.size(), false);
  for (std::size_t i = 0; i < maps_.size(); ++i) {
    bool found = false;
    for (std::size_t j = 0; j < other.maps_.size(); ++j) {
      if (used[j]) continue;
      if (std::abs(maps_[i].ratio - other.maps_[j].ratio) <= tol &&
          std::abs(maps_[i].shift - other.maps_[j].shift) <= tol &&
          std::abs(probs_[i] - other.probs_[j]) <= tol) {
        used[j] = true;
        found = true;
        break;
      }
    }
    if (!found) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

UnitMeasure UnitMeasure::dirac(double t, double weight) { return atomic({{t, weight}}); }

UnitMeasure UnitMeasure::atomic(const std::vector<Atom>& atoms) {
  UnitMeasure m;
  for (const auto& a : atoms) m.insert_atom(a);
  return m;
}

UnitMeasure UnitMeasure::lebesgue(double weight) {
  return with_density(Density({DensityTerm::lebesgue(weight)}));
}

UnitMeasure UnitMeasure::with_density(Density density) {
  UnitMeasure m;
  m.ac_ = std::move(density);
  return m;
}

UnitMeasure UnitMeasure::singular(IfsMeasure ifs, double weight) {
  require_nonnegative_weight(weight, "UnitMeasure::singular");
  UnitMeasure m;
  m.insert_singular({std::move(ifs), weight});
  return m;
}

UnitMeasure UnitMeasure::with_atom_tail_mass(double tail) const {
  require_nonnegative_weight(tail, "UnitMeasure::with_atom_tail_mass");
  UnitMeasure m = *this;
  m.tail_ = tail;
  return m;
}

void UnitMeasure::insert_atom(Atom a) {
  if (!(a.location >= 0.0 && a.location <= 1.0)) {
    std::ostringstream os;
    os << "atom location " << a.location << " outside [0,1]";
    throw RangeError(os.str());
  }
  require_nonnegative_weight(a.weight, "atom");
  auto it = std::lower_bound(atoms_.begin(), atoms_.end(), a.location - kAtomMergeTolerance,
                             [](const Atom& x, double loc) { return x.location < loc; });
  if (it != atoms_.end() && std::abs(it->location - a.location) <= kAtomMergeTolerance) {
    it->weight += a.weight;
    return;
  }
  atoms_.insert(it, a);
}

void UnitMeasure::insert_singular(const SingularPart& part) {
  for (auto& existing : sc_) {
    if (existing.ifs.approx_equal(part.ifs, kAtomMergeTolerance)) {
      existing.weight += part.weight;
      return;
    }
  }
  sc_.push_back(part);
}

double UnitMeasure::atom_mass() const {
  double s = tail_;
  for (const auto& a : atoms_) s += a.weight;
  return s;
}

double UnitMeasure::sc_mass() const {
  double s = 0.0;
  for (const auto& p : sc_) s += p.weight;
  return s;
}

double UnitMeasure::atom_weight_at(double t) const {
  for (const auto& a : atoms_)
    if (std::abs(a.location - t) <= kAtomMergeTolerance) return a.weight;
  return 0.0;
}

bool UnitMeasure::is_zero() const {
  if (tail_ > 0.0) return false;
  for (const auto& a : atoms_)
    if (a.weight > 0.0) return false;
  for (const auto& t : ac_.terms())
    if (t.weight() > 0.0) return false;
  return sc_mass() == 0.0;
}

bool UnitMeasure::charges_interior() const {
  for (const auto& a : atoms_)
    if (a.weight > 0.0 && a.location > 0.0 && a.location < 1.0) return true;
  for (const auto& t : ac_.terms())
    if (t.weight() > 0.0) return true;
  return sc_mass() > 0.0;
}

UnitMeasure add(const UnitMeasure& a, const UnitMeasure& b) {
  UnitMeasure m = a;
  for (const auto& atom : b.atoms_) m.insert_atom(atom);
  m.ac_ = a.ac_.plus(b.ac_);
  for (const auto& part : b.sc_) m.insert_singular(part);
  m.tail_ = a.tail_ + b.tail_;
  return m;
}

UnitMeasure scale(const UnitMeasure& m, double k) {
  if (!(k >= 0.0) || !std::isfinite(k)) {
    std::ostringstream os;
    os << "scale: factor must be finite and nonnegative, got " << k;
    throw RangeError(os.str());
  }
  UnitMeasure out = m;
  for (auto& a : out.atoms_) a.weight *= k;
  out.ac_ = m.ac_.scaled(k);
  for (auto& p : out.sc_) p.weight *= k;
  out.tail_ *= k;
  return out;
}

UnitMeasure pushforward_theta(const UnitMeasure& m) {
  UnitMeasure out;
  for (const auto& a : m.atoms_) out.insert_atom({1.0 - a.location, a.weight});
  out.ac_ = m.ac_.reflected();
  for (const auto& p : m.sc_) out.insert_singular({p.ifs.reflected(), p.weight});
  out.tail_ = m.tail_;
  return out;
}

MeasureParts decompose_measure(const UnitMeasure& m) {
  MeasureParts parts;
  parts.ac = UnitMeasure::with_density(m.ac());
  for (const auto& p : m.sc()) parts.sc = add(parts.sc, UnitMeasure::singular(p.ifs, p.weight));
  parts.sd = UnitMeasure::atomic(m.atoms()).with_atom_tail_mass(m.atom_tail_mass());
  return parts;
}

bool structurally_equal(const UnitMeasure& a, const UnitMeasure& b, double tol) {
  auto close = [tol](double x, double y) { return std::abs(x - y) <= tol * (1.0 + std::abs(y)); };
  if (!close(a.atom_tail_mass(), b.atom_tail_mass())) return false;
  if (a.atoms().size() != b.atoms().size()) return false;
  for (std::size_t i = 0; i < a.atoms().size(); ++i) {
    if (!close(a.atoms()[i].location, b.atoms()[i].location) ||
        !close(a.atoms()[i].weight, b.atoms()[i].weight))
      return false;
  }
  const auto& ta = a.ac().terms();
  const auto& tb = b.ac().terms();
  if (ta.size() != tb.size()) return false;
  for (const auto& x : ta) {
    bool found = false;
    for (const auto& y : tb) {
      if (x.same_shape(y, tol) && close(x.weight(), y.weight())) {
        found = true;
        break;
      }
    }
    if (!found) return false;
  }
  if (a.sc().size() != b.sc().size()) return false;
  for (const auto& x : a.sc()) {
    bool found = false;
    for (const auto& y : b.sc()) {
      if (x.ifs.approx_equal(y.ifs, tol) && close(x.weight, y.weight)) {
        found = true;
        break;
      }
    }
    if (!found) return false;
  }
  return true;
}

std::vector<double> chebyshev_grid(int n) {
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    g[static_cast<std::size_t>(k)] = 0.5 * (1.0 - std::cos((2.0 * k + 1.0) * kPi / (2.0 * n)));
  }
  return g;
}

// ---------------------------------------------------------------------------

HalfLinePoint HalfLinePoint::at(double lambda) {
  if (!(lambda >= 0.0)) throw RangeError("HalfLinePoint: λ must be nonnegative");
  if (lambda == 0.0) return zero();
  if (std::isinf(lambda)) return infinity();
  return HalfLinePoint(Tag::finite, lambda);
}

double HalfLinePoint::value() const {
  switch (tag_) {
    case Tag::zero: return 0.0;
    case Tag::finite: return value_;
    case Tag::infinity: return std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

HalfLineMeasure& HalfLineMeasure::add_atom(HalfLinePoint point, double weight) {
  require_nonnegative_weight(weight, "HalfLineMeasure::add_atom");
  for (auto& a : atoms_) {
    bool same = (a.point.is_zero() && point.is_zero()) ||
                (a.point.is_infinity() && point.is_infinity()) ||
                (a.point.is_finite_positive() && point.is_finite_positive() &&
                 a.point.value() == point.value());
    if (same) {
      a.weight += weight;
      return *this;
    }
  }
  atoms_.push_back({point, weight});
  return *this;
}

HalfLineMeasure& HalfLineMeasure::add_density(HalfLineDensity density, double weight) {
  require_nonnegative_weight(weight, "HalfLineMeasure::add_density");
  densities_.push_back({std::move(density), weight});
  return *this;
}

double HalfLineMeasure::atom_weight_at_zero() const {
  for (const auto& a : atoms_)
    if (a.point.is_zero()) return a.weight;
  return 0.0;
}

double HalfLineMeasure::atom_weight_at_infinity() const {
  for (const auto& a : atoms_)
    if (a.point.is_infinity()) return a.weight;
  return 0.0;
}

UnitMeasure pushforward_psi(const HalfLineMeasure& nu) {
  UnitMeasure mu;
  for (const auto& a : nu.atoms()) {
    double t = 0.0;
    if (a.point.is_infinity()) {
      t = 1.0;
    } else if (a.point.is_finite_positive()) {
      double lambda = a.point.value();
      t = lambda / (lambda + 1.0);
    }
    mu = add(mu, UnitMeasure::dirac(t, a.weight));
  }
  for (const auto& d : nu.densities()) {
    // dλ = dt/(1-t)²; the geometric image has the closed form of #_α on [0,1]
    DensityTerm term = d.density.kind() == HalfLineDensity::Kind::geometric
                           ? DensityTerm::geometric(d.density.alpha(), d.weight)
                           : DensityTerm::psi_image(d.density, d.weight);
    mu = add(mu, UnitMeasure::with_density(Density({term})));
  }
  return mu;
}

HalfLineMeasure pullback_psi(const UnitMeasure& mu) {
  if (!mu.sc().empty()) throw DomainError("pullback_psi: IFS parts have no half-line density");
  if (mu.atom_tail_mass() > 0.0) throw DomainError("pullback_psi: truncated atom families are not supported");
  HalfLineMeasure nu;
  for (const auto& a : mu.atoms()) {
    if (a.location >= 1.0) {
      nu.add_atom(HalfLinePoint::infinity(), a.weight);
    } else {
      nu.add_atom(HalfLinePoint::at(a.location / (1.0 - a.location)), a.weight);
    }
  }
  for (const auto& term : mu.ac().terms()) {
    switch (term.kind()) {
      case DensityKind::lebesgue:
        nu.add_density(HalfLineDensity::custom(
                           "lebesgue", [](double l) { return 1.0 / ((1.0 + l) * (1.0 + l)); }, 0.0, 2.0),
                       term.weight());
        break;
      case DensityKind::geometric:
        nu.add_density(HalfLineDensity::geometric(term.reflected() ? 1.0 - term.alpha() : term.alpha()),
                       term.weight());
        break;
      case DensityKind::psi_image: {
        const HalfLineDensity& src = *term.source();
        if (!term.reflected()) {
          nu.add_density(src, term.weight());
        } else {
          // t ↦ 1-t corresponds to λ ↦ 1/λ
          HalfLineDensity flipped = HalfLineDensity::custom(
              src.name() + "_reflected", [src](double l) { return src(1.0 / l) / (l * l); },
              src.decay_at_infinity() - 2.0, src.exponent_at_zero() + 2.0);
          nu.add_density(flipped, term.weight());
        }
        break;
      }
      case DensityKind::log_mean:
        throw DomainError("pullback_psi: the log-mean density has no supported half-line form");
    }
  }
  return nu;
}

}  // namespace kubo
