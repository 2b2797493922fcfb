#pragma once

// Finite Borel measures on [0,1] stored already decomposed into a discrete
// part (atoms), an absolutely continuous part (a sum of catalog densities) and
// a singular continuous part (weighted self-similar IFS measures), plus the
// half-line measures of the canonical representation.

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kubo/quadrature_spec.hpp"

namespace kubo {

/// Locations closer than this are the same atom.
inline constexpr double kAtomMergeTolerance = 1e-14;

struct Atom {
  double location;
  double weight;
};

/// Behaviour near the endpoints: density ~ c·t^p at 0 and ~ c'·(1-t)^q at 1.
struct Endpoints {
  double p;
  double q;
};

enum class SchemeHint { smooth, jacobi, logistic };

std::string to_string(SchemeHint h);

// ---------------------------------------------------------------------------
// Half-line densities (needed for the image of a [0,∞] measure under Ψ)

class HalfLineDensity {
 public:
  enum class Kind { geometric, custom };

  /// sin(απ)/π · λ^(α-1)/(1+λ), the representing density of #_α.
  static HalfLineDensity geometric(double alpha);

  /// A user density on (0,∞) with f(λ) ~ λ^p0 near 0 (p0 > -1) and
  /// f(λ) ~ λ^(-decay) at ∞ (decay > 1).
  static HalfLineDensity custom(std::string name, std::function<double(double)> f,
                                double exponent_at_zero, double decay_at_infinity);

  double operator()(double lambda) const;

  Kind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  const std::string& name() const { return name_; }
  double exponent_at_zero() const { return p0_; }
  double decay_at_infinity() const { return decay_; }

 private:
  HalfLineDensity() = default;
  Kind kind_ = Kind::custom;
  double alpha_ = 0.0;
  std::string name_;
  std::function<double(double)> f_;
  double p0_ = 0.0;
  double decay_ = 2.0;
};

// ---------------------------------------------------------------------------
// Densities on (0,1)

enum class DensityKind {
  lebesgue,   // g ≡ 1
  geometric,  // sin(απ)/π · t^(α-1) (1-t)^(-α)
  log_mean,   // 1 / (t(1-t)(π² + log²(t/(1-t))))
  psi_image,  // ν(t/(1-t)) / (1-t)², image of a half-line density under Ψ
};

/// One catalog density times a nonnegative weight.
class DensityTerm {
 public:
  static DensityTerm lebesgue(double weight = 1.0);
  static DensityTerm geometric(double alpha, double weight = 1.0);
  static DensityTerm log_mean(double weight = 1.0);
  static DensityTerm psi_image(const HalfLineDensity& source, double weight = 1.0);

  DensityKind kind() const { return kind_; }
  double weight() const { return weight_; }
  double alpha() const { return alpha_; }
  bool reflected() const { return reflected_; }
  const HalfLineDensity* source() const { return source_.get(); }

  /// weight · g(t); tc must equal 1 - t (passed separately for accuracy near 1).
  double eval(double t, double tc) const;
  double operator()(double t) const { return eval(t, 1.0 - t); }

  /// eval(t, tc) / (t^p tc^q) for the term's endpoint exponents.
  double regular(double t, double tc) const;

  Endpoints exponents() const;
  SchemeHint scheme_hint() const;

  /// ∫g over (0,1) for the unit-weight density when known exactly (all catalog kinds).
  std::optional<double> unit_mass() const;

  /// True when g∘Θ = g holds identically for this kind.
  bool reflection_invariant() const;

  /// g∘Θ. The geometric family is closed under reflection (α ↦ 1-α).
  DensityTerm reflected_term() const;
  DensityTerm scaled(double k) const;
  DensityTerm with_weight(double w) const;

  /// Same underlying density (kind, parameter within alpha_tol, orientation), possibly different weight.
  bool same_shape(const DensityTerm& other, double alpha_tol = kAtomMergeTolerance) const;

  /// Catalog id used in serialization ("lebesgue", "geometric", "log_mean", "psi").
  std::string id() const;

 private:
  DensityKind kind_ = DensityKind::lebesgue;
  double weight_ = 1.0;
  double alpha_ = 0.0;
  bool reflected_ = false;
  std::shared_ptr<const HalfLineDensity> source_;
};

/// Nonnegative integrable function on (0,1), stored as a sum of catalog terms.
/// Integration is termwise, so each term keeps its own quadrature scheme.
class Density {
 public:
  Density() = default;
  explicit Density(std::vector<DensityTerm> terms);

  const std::vector<DensityTerm>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  double eval(double t, double tc) const;
  double operator()(double t) const { return eval(t, 1.0 - t); }

  /// Worst case over the terms (componentwise minimum).
  Endpoints endpoint_exponents() const;
  SchemeHint scheme_hint() const;

  Density reflected() const;
  Density scaled(double k) const;
  Density plus(const Density& other) const;

 private:
  void add_term(const DensityTerm& term);
  std::vector<DensityTerm> terms_;
};

// ---------------------------------------------------------------------------
// Self-similar (IFS) measures

struct AffineMap {
  double ratio;
  double shift;
  double operator()(double t) const { return ratio * t + shift; }
};

/// Self-similar probability measure of affine contractions of [0,1].
/// Invariants: each map sends [0,1] into [0,1]; probabilities sum to 1;
/// images overlap in at most a point; Σ|ratio| < 1 (so the attractor is
/// Lebesgue-null and the measure is singular continuous); at least two maps
/// carry positive probability.
class IfsMeasure {
 public:
  IfsMeasure(std::vector<AffineMap> maps, std::vector<double> probs);

  /// Maps t/3 and (t+2)/3 with probabilities 1/2, 1/2.
  static IfsMeasure cantor();

  const std::vector<AffineMap>& maps() const { return maps_; }
  const std::vector<double>& probs() const { return probs_; }
  double contraction_ratio() const;

  /// The image measure under t ↦ 1-t (maps conjugated by the reflection).
  IfsMeasure reflected() const;

  /// Exact moments ∫t^k dμ for k = 0..order, from the self-similarity recursion.
  std::vector<double> moments(int order) const;

  /// Same (map, probability) pairs up to permutation, within tol.
  bool approx_equal(const IfsMeasure& other, double tol) const;

 private:
  std::vector<AffineMap> maps_;
  std::vector<double> probs_;
};

struct SingularPart {
  IfsMeasure ifs;
  double weight;
};

// ---------------------------------------------------------------------------

/// Finite Borel measure on [0,1]: atoms + density + IFS parts. The three parts
/// are mutually singular by construction. `atom_tail_mass` accounts for the
/// omitted atoms of a truncated countable family: it counts toward the total
/// mass but is not integrated.
class UnitMeasure {
 public:
  UnitMeasure() = default;

  static UnitMeasure dirac(double t, double weight = 1.0);
  static UnitMeasure atomic(const std::vector<Atom>& atoms);
  static UnitMeasure lebesgue(double weight = 1.0);
  static UnitMeasure with_density(Density density);
  static UnitMeasure singular(IfsMeasure ifs, double weight = 1.0);

  const std::vector<Atom>& atoms() const { return atoms_; }
  const Density& ac() const { return ac_; }
  const std::vector<SingularPart>& sc() const { return sc_; }
  double atom_tail_mass() const { return tail_; }

  UnitMeasure with_atom_tail_mass(double tail) const;

  /// Σ atom weights + tail mass.
  double atom_mass() const;
  double sc_mass() const;
  double atom_weight_at(double t) const;

  bool is_zero() const;
  /// Whether some part may charge the open interval (0,1).
  bool charges_interior() const;
  bool has_ac() const { return !ac_.empty(); }
  bool has_sc() const { return !sc_.empty(); }

  friend UnitMeasure add(const UnitMeasure& a, const UnitMeasure& b);
  friend UnitMeasure scale(const UnitMeasure& m, double k);
  friend UnitMeasure pushforward_theta(const UnitMeasure& m);

 private:
  void insert_atom(Atom a);
  void insert_singular(const SingularPart& part);

  std::vector<Atom> atoms_;  // sorted by location, merged
  Density ac_;
  std::vector<SingularPart> sc_;
  double tail_ = 0.0;
};

UnitMeasure add(const UnitMeasure& a, const UnitMeasure& b);
/// Throws RangeError for k < 0.
UnitMeasure scale(const UnitMeasure& m, double k);
inline UnitMeasure operator+(const UnitMeasure& a, const UnitMeasure& b) { return add(a, b); }
inline UnitMeasure operator*(double k, const UnitMeasure& m) { return scale(m, k); }

/// Image under Θ(t) = 1 - t.
UnitMeasure pushforward_theta(const UnitMeasure& m);

struct MeasureParts {
  UnitMeasure ac;
  UnitMeasure sc;
  UnitMeasure sd;
};

MeasureParts decompose_measure(const UnitMeasure& m);

/// Structural comparison: atoms, density terms (as a multiset) and IFS parts within tol.
bool structurally_equal(const UnitMeasure& a, const UnitMeasure& b, double tol = 1e-12);

/// Σ atoms + ∫density + Σ sc weights, each part by its own integrator.
/// Throws QuadratureError if the density integral does not converge.
double total_mass(const UnitMeasure& m, const QuadratureSpec& spec = {});

bool is_probability(const UnitMeasure& m, double tol, const QuadratureSpec& spec = {});

/// μΘ = μ: atoms matched within tol, densities compared on 64 interior
/// Chebyshev points and by their first 8 moments, IFS parts conjugate-equal.
bool is_symmetric(const UnitMeasure& m, double tol, const QuadratureSpec& spec = {});

/// The 64 interior Chebyshev points of [0,1] used for density comparisons.
std::vector<double> chebyshev_grid(int n = 64);

// ---------------------------------------------------------------------------
// Measures on [0,∞]

class HalfLinePoint {
 public:
  static HalfLinePoint zero() { return HalfLinePoint(Tag::zero, 0.0); }
  static HalfLinePoint infinity() { return HalfLinePoint(Tag::infinity, 0.0); }
  /// λ ≥ 0; λ == 0 is normalized to zero().
  static HalfLinePoint at(double lambda);

  bool is_zero() const { return tag_ == Tag::zero; }
  bool is_infinity() const { return tag_ == Tag::infinity; }
  bool is_finite_positive() const { return tag_ == Tag::finite; }
  double value() const;  // +inf for infinity()

 private:
  enum class Tag { zero, finite, infinity };
  HalfLinePoint(Tag tag, double v) : tag_(tag), value_(v) {}
  Tag tag_;
  double value_;
};

struct HalfLineAtom {
  HalfLinePoint point;
  double weight;
};

struct HalfLineDensityTerm {
  HalfLineDensity density;
  double weight;
};

/// Finite Borel measure on [0,∞]: atoms (0 and ∞ explicitly tagged) plus densities on (0,∞).
class HalfLineMeasure {
 public:
  HalfLineMeasure() = default;

  HalfLineMeasure& add_atom(HalfLinePoint point, double weight);
  HalfLineMeasure& add_density(HalfLineDensity density, double weight = 1.0);

  const std::vector<HalfLineAtom>& atoms() const { return atoms_; }
  const std::vector<HalfLineDensityTerm>& densities() const { return densities_; }

  double atom_weight_at_zero() const;
  double atom_weight_at_infinity() const;

 private:
  std::vector<HalfLineAtom> atoms_;
  std::vector<HalfLineDensityTerm> densities_;
};

/// μ = νΨ⁻¹ with Ψ(λ) = λ/(λ+1), Ψ(∞) = 1.
UnitMeasure pushforward_psi(const HalfLineMeasure& nu);

/// The inverse correspondence for measures whose parts have half-line
/// counterparts (atoms, Lebesgue, geometric and psi-image densities).
/// Throws DomainError for log-mean densities and IFS parts.
HalfLineMeasure pullback_psi(const UnitMeasure& mu);

}  // namespace kubo
