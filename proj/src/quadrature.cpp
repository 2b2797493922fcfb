#include "kubo/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <queue>
#include <sstream>
#include <tuple>

#include <Eigen/Eigenvalues>

#include "kubo/error.hpp"

namespace kubo {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Rule-pair order for adaptive panels (n and 2n points per panel).
constexpr int kPanelOrder = 20;
// Half-width of the truncated u-range in the logistic engine.
constexpr double kLogisticHalfWidth = 40.0;
// Beyond this, tc = e^-u underflows for the kernel's purposes.
constexpr double kLogisticMaxHalfWidth = 640.0;
// Half-width of the s-range for tanh-sinh on (0,1) and exp-sinh on (0,∞).
constexpr double kTanhSinhHalfWidth = 6.0;
constexpr double kExpSinhHalfWidth = 5.5;
// Points of the self-similar Gauss rule used on IFS cells.
constexpr int kIfsPoints = 4;
constexpr std::size_t kIfsMaxAtoms = std::size_t{1} << 24;

// --- value-type helpers ------------------------------------------------------

double vnorm(double x) { return std::abs(x); }
double vnorm(const Matrix& m) { return m.size() == 1 ? std::abs(m(0, 0)) : m.norm(); }

template <class V>
V pairwise_sum(const std::vector<V>& x, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return x[lo];
  if (hi - lo == 2) return V(x[lo] + x[lo + 1]);
  std::size_t mid = lo + (hi - lo) / 2;
  return V(pairwise_sum(x, lo, mid) + pairwise_sum(x, mid, hi));
}

template <class V>
V pairwise_sum(const std::vector<V>& x, const V& zero) {
  if (x.empty()) return zero;
  return pairwise_sum(x, 0, x.size());
}

// Weighted sum Σ c_i F_i with a rounding floor on the error.
template <class V>
struct Accumulator {
  std::vector<V> terms;
  double abs_sum = 0.0;

  void add(double c, const V& f) {
    terms.push_back(V(c * f));
    abs_sum += std::abs(c) * vnorm(f);
  }
};

double rounding_floor(double abs_sum) { return 16.0 * kEps * abs_sum; }

[[noreturn]] void throw_budget(const std::string& what, double best, double err) {
  std::ostringstream os;
  os << what << ": tolerance not reached within the node budget (best estimate " << best
     << ", achieved error " << err << ")";
  throw QuadratureError(os.str(), best, err);
}

// --- rule construction -------------------------------------------------------

// Golub–Welsch for the recurrence (alpha_k, beta_k), k = 0..n-1, on [-1,1]
// mapped to [0,1]; mu0 is the total mass of the weight on [0,1].
Rule golub_welsch(const std::vector<double>& alpha, const std::vector<double>& beta, double mu0) {
  const int n = static_cast<int>(alpha.size());
  Rule r;
  if (n == 1) {
    double x = alpha[0];
    r.nodes = {0.5 * (1.0 + x)};
    r.complements = {0.5 * (1.0 - x)};
    r.weights = {mu0};
    return r;
  }
  Vector diag(n);
  Vector sub(n - 1);
  for (int i = 0; i < n; ++i) diag(i) = alpha[static_cast<std::size_t>(i)];
  for (int i = 1; i < n; ++i) sub(i - 1) = std::sqrt(beta[static_cast<std::size_t>(i)]);
  Eigen::SelfAdjointEigenSolver<Matrix> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  r.nodes.resize(static_cast<std::size_t>(n));
  r.complements.resize(static_cast<std::size_t>(n));
  r.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double x = es.eigenvalues()(i);
    double v0 = es.eigenvectors()(0, i);
    r.nodes[static_cast<std::size_t>(i)] = 0.5 * (1.0 + x);
    r.complements[static_cast<std::size_t>(i)] = 0.5 * (1.0 - x);
    r.weights[static_cast<std::size_t>(i)] = mu0 * v0 * v0;
  }
  return r;
}

Rule build_jacobi(double p, double q, int n) {
  // Weight (1-x)^a (1+x)^b on [-1,1] with t = (1+x)/2: b = p, a = q.
  const double a = q;
  const double b = p;
  std::vector<double> alpha(static_cast<std::size_t>(n));
  std::vector<double> beta(static_cast<std::size_t>(n), 0.0);
  for (int k = 0; k < n; ++k) {
    const double s = 2.0 * k + a + b;
    if (k == 0) {
      alpha[0] = (b - a) / (a + b + 2.0);
    } else {
      alpha[static_cast<std::size_t>(k)] = (b * b - a * a) / (s * (s + 2.0));
    }
    if (k == 1) {
      beta[1] = 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + a + b) * (2.0 + a + b) * (3.0 + a + b));
    } else if (k > 1) {
      beta[static_cast<std::size_t>(k)] =
          4.0 * k * (k + a) * (k + b) * (k + a + b) / (s * s * (s + 1.0) * (s - 1.0));
    }
  }
  const double mu0 = std::exp(std::lgamma(p + 1.0) + std::lgamma(q + 1.0) - std::lgamma(p + q + 2.0));
  return golub_welsch(alpha, beta, mu0);
}

std::shared_ptr<const Rule> cached_jacobi(double p, double q, int n) {
  static std::mutex mu;
  static std::map<std::tuple<double, double, int>, std::shared_ptr<const Rule>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_tuple(p, q, n);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto rule = std::make_shared<const Rule>(build_jacobi(p, q, n));
  if (cache.size() > 4096) cache.clear();
  cache.emplace(key, rule);
  return rule;
}

// Chebyshev algorithm on ordinary moments (long double), then Golub–Welsch.
Rule build_ifs_gauss(const IfsMeasure& m, int points) {
  // Moments of x = 2t - 1; the map t ↦ r t + b becomes x ↦ r x + (2b + r - 1).
  const int order = 2 * points;
  std::vector<long double> mom(static_cast<std::size_t>(order) + 1, 0.0L);
  mom[0] = 1.0L;
  for (int k = 1; k <= order; ++k) {
    long double rhs = 0.0L;
    long double diag = 1.0L;
    for (std::size_t i = 0; i < m.maps().size(); ++i) {
      const long double r = m.maps()[i].ratio;
      const long double c = 2.0L * m.maps()[i].shift + r - 1.0L;
      const long double p = m.probs()[i];
      diag -= p * std::pow(r, static_cast<long double>(k));
      long double binom = 1.0L;
      long double inner = 0.0L;
      for (int j = 0; j < k; ++j) {
        inner += binom * std::pow(r, static_cast<long double>(j)) * std::pow(c, static_cast<long double>(k - j)) *
                 mom[static_cast<std::size_t>(j)];
        binom = binom * (k - j) / (j + 1);
      }
      rhs += p * inner;
    }
    mom[static_cast<std::size_t>(k)] = rhs / diag;
  }
  // Chebyshev algorithm (Gautschi): sigma_{-1,l} = 0, sigma_{0,l} = mu_l.
  const int n = points;
  std::vector<long double> a(static_cast<std::size_t>(n)), bb(static_cast<std::size_t>(n));
  std::vector<long double> prev(static_cast<std::size_t>(order) + 1, 0.0L);
  std::vector<long double> cur(mom.begin(), mom.end());
  a[0] = mom[1] / mom[0];
  bb[0] = mom[0];
  for (int k = 1; k < n; ++k) {
    std::vector<long double> next(static_cast<std::size_t>(order) + 1, 0.0L);
    for (int l = k; l <= order - k; ++l) {
      next[static_cast<std::size_t>(l)] = cur[static_cast<std::size_t>(l + 1)] -
                                          a[static_cast<std::size_t>(k - 1)] * cur[static_cast<std::size_t>(l)] -
                                          bb[static_cast<std::size_t>(k - 1)] * prev[static_cast<std::size_t>(l)];
    }
    a[static_cast<std::size_t>(k)] = next[static_cast<std::size_t>(k + 1)] / next[static_cast<std::size_t>(k)] -
                                     cur[static_cast<std::size_t>(k)] / cur[static_cast<std::size_t>(k - 1)];
    bb[static_cast<std::size_t>(k)] = next[static_cast<std::size_t>(k)] / cur[static_cast<std::size_t>(k - 1)];
    prev = std::move(cur);
    cur = std::move(next);
  }
  using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  using LVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  Rule r;
  r.nodes.resize(static_cast<std::size_t>(n));
  r.complements.resize(static_cast<std::size_t>(n));
  r.weights.resize(static_cast<std::size_t>(n));
  if (n == 1) {
    r.nodes[0] = static_cast<double>(0.5L * (1.0L + a[0]));
    r.complements[0] = static_cast<double>(0.5L * (1.0L - a[0]));
    r.weights[0] = 1.0;
    return r;
  }
  LVector diag(n);
  LVector sub(n - 1);
  for (int i = 0; i < n; ++i) diag(i) = a[static_cast<std::size_t>(i)];
  for (int i = 1; i < n; ++i) sub(i - 1) = std::sqrt(bb[static_cast<std::size_t>(i)]);
  Eigen::SelfAdjointEigenSolver<LMatrix> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  for (int i = 0; i < n; ++i) {
    long double x = es.eigenvalues()(i);
    long double v0 = es.eigenvectors()(0, i);
    r.nodes[static_cast<std::size_t>(i)] = static_cast<double>(0.5L * (1.0L + x));
    r.complements[static_cast<std::size_t>(i)] = static_cast<double>(0.5L * (1.0L - x));
    r.weights[static_cast<std::size_t>(i)] = static_cast<double>(v0 * v0);
  }
  return r;
}

// --- integration context -----------------------------------------------------

struct Sink {
  std::vector<NodeRow>* rows = nullptr;
  std::string part;

  void record(const Point& p, double w) const {
    if (rows) rows->push_back({part, p.t, p.tc, w});
  }
};

template <class V>
using Fn = std::function<V(Point)>;

// Weight-stripped density: density = R(t, tc) · t^p · tc^q.
struct Stripped {
  std::function<double(double, double)> regular;
  double p = 0.0;
  double q = 0.0;
};

// --- adaptive panels ---------------------------------------------------------

enum class PanelKind { whole, left, right, interior };

template <class V>
struct Panel {
  PanelKind kind;
  double a, b;    // [a, b] in t
  double ac, bc;  // 1 - a, 1 - b
  int depth;
  V value;
  double error;
  std::vector<std::pair<Point, double>> nodes;  // fine-rule nodes with effective weights
};

template <class V>
class PanelIntegrator {
 public:
  PanelIntegrator(const Stripped& g, const Fn<V>& h, const V& zero)
      : g_(g), h_(h), zero_(zero) {
    const int n = kPanelOrder;
    whole_n_ = cached_jacobi(g.p, g.q, n);
    whole_2n_ = cached_jacobi(g.p, g.q, 2 * n);
    left_n_ = cached_jacobi(g.p, 0.0, n);
    left_2n_ = cached_jacobi(g.p, 0.0, 2 * n);
    right_n_ = cached_jacobi(g.q, 0.0, n);
    right_2n_ = cached_jacobi(g.q, 0.0, 2 * n);
    inner_n_ = cached_jacobi(0.0, 0.0, n);
    inner_2n_ = cached_jacobi(0.0, 0.0, 2 * n);
  }

  int evaluations() const { return evals_; }

  Panel<V> make(PanelKind kind, double a, double b, double ac, double bc, int depth) {
    Panel<V> p{kind, a, b, ac, bc, depth, zero_, 0.0, {}};
    Accumulator<V> coarse;
    Accumulator<V> fine;
    apply(p, kind == PanelKind::whole ? *whole_n_ : kind == PanelKind::left ? *left_n_
                                                : kind == PanelKind::right  ? *right_n_
                                                                            : *inner_n_,
          coarse, nullptr);
    apply(p, kind == PanelKind::whole ? *whole_2n_ : kind == PanelKind::left ? *left_2n_
                                                 : kind == PanelKind::right  ? *right_2n_
                                                                             : *inner_2n_,
          fine, &p.nodes);
    V qc = pairwise_sum(coarse.terms, zero_);
    p.value = pairwise_sum(fine.terms, zero_);
    p.error = std::max(vnorm(V(p.value - qc)), rounding_floor(fine.abs_sum));
    return p;
  }

  std::pair<Panel<V>, Panel<V>> split(const Panel<V>& p) {
    const int d = p.depth + 1;
    switch (p.kind) {
      case PanelKind::whole:
        return {make(PanelKind::left, 0.0, 0.5, 1.0, 0.5, d), make(PanelKind::right, 0.5, 1.0, 0.5, 0.0, d)};
      case PanelKind::left: {
        const double m = 0.5 * p.b;
        return {make(PanelKind::left, 0.0, m, 1.0, 1.0 - m, d),
                make(PanelKind::interior, m, p.b, 1.0 - m, p.bc, d)};
      }
      case PanelKind::right: {
        const double mc = 0.5 * p.ac;
        return {make(PanelKind::interior, p.a, 1.0 - mc, p.ac, mc, d),
                make(PanelKind::right, 1.0 - mc, 1.0, mc, 0.0, d)};
      }
      case PanelKind::interior: {
        const double half = 0.5 * (p.b - p.a);
        const double m = p.a + half;
        const double mc = p.bc + half;
        return {make(PanelKind::interior, p.a, m, p.ac, mc, d), make(PanelKind::interior, m, p.b, mc, p.bc, d)};
      }
    }
    throw std::logic_error("unreachable");
  }

 private:
  void apply(const Panel<V>& p, const Rule& rule, Accumulator<V>& acc,
             std::vector<std::pair<Point, double>>* nodes) {
    for (std::size_t i = 0; i < rule.size(); ++i) {
      const double s = rule.nodes[i];
      const double sc = rule.complements[i];
      Point pt{};
      double c = 0.0;
      switch (p.kind) {
        case PanelKind::whole:
          pt = {s, sc};
          c = rule.weights[i] * g_.regular(pt.t, pt.tc);
          break;
        case PanelKind::left:
          // t = b·s; density = R·t^p·tc^q with t^p absorbed by the rule.
          pt = {p.b * s, p.bc + p.b * sc};
          c = rule.weights[i] * std::pow(p.b, g_.p + 1.0) * g_.regular(pt.t, pt.tc) * pow_or_one(pt.tc, g_.q);
          break;
        case PanelKind::right:
          // tc = ac·s
          pt = {p.a + p.ac * sc, p.ac * s};
          c = rule.weights[i] * std::pow(p.ac, g_.q + 1.0) * g_.regular(pt.t, pt.tc) * pow_or_one(pt.t, g_.p);
          break;
        case PanelKind::interior: {
          const double w = p.b - p.a;
          pt = {p.a + w * s, p.bc + w * sc};
          c = rule.weights[i] * w * g_.regular(pt.t, pt.tc) * pow_or_one(pt.t, g_.p) * pow_or_one(pt.tc, g_.q);
          break;
        }
      }
      ++evals_;
      acc.add(c, h_(pt));
      if (nodes) nodes->push_back({pt, c});
    }
  }

  static double pow_or_one(double x, double e) { return e == 0.0 ? 1.0 : std::pow(x, e); }

  const Stripped& g_;
  const Fn<V>& h_;
  V zero_;
  int evals_ = 0;
  std::shared_ptr<const Rule> whole_n_, whole_2n_, left_n_, left_2n_, right_n_, right_2n_, inner_n_, inner_2n_;
};

template <class V>
Integral<V> integrate_panels(const Stripped& g, const Fn<V>& h, const V& zero, const QuadratureSpec& spec,
                             int parts, const Sink& sink) {
  PanelIntegrator<V> engine(g, h, zero);
  std::vector<Panel<V>> panels;
  panels.push_back(engine.make(PanelKind::whole, 0.0, 1.0, 1.0, 0.0, 0));
  const int per_split = 2 * 3 * kPanelOrder;

  auto total = [&]() {
    std::vector<V> vals;
    vals.reserve(panels.size());
    double err = 0.0;
    for (const auto& p : panels) {
      vals.push_back(p.value);
      err += p.error;
    }
    return std::make_pair(pairwise_sum(vals, zero), err);
  };

  while (true) {
    auto [value, err] = total();
    const double tol = std::max(spec.abs_tol, spec.rel_tol * vnorm(value)) / parts;
    if (err <= tol) break;
    // Largest splittable panel; ties broken by position for determinism.
    std::size_t pick = panels.size();
    for (std::size_t i = 0; i < panels.size(); ++i) {
      if (panels[i].depth >= spec.max_depth) continue;
      if (pick == panels.size() || panels[i].error > panels[pick].error) pick = i;
    }
    if (pick == panels.size() || engine.evaluations() + per_split > spec.max_nodes) {
      throw_budget("adaptive panel quadrature", vnorm(value), err);
    }
    auto [l, r] = engine.split(panels[pick]);
    panels[pick] = std::move(l);
    panels.insert(panels.begin() + static_cast<std::ptrdiff_t>(pick) + 1, std::move(r));
  }
  auto [value, err] = total();
  if (sink.rows) {
    for (const auto& p : panels)
      for (const auto& [pt, w] : p.nodes) sink.record(pt, w);
  }
  return {value, err, engine.evaluations()};
}

// --- logistic substitution ---------------------------------------------------

Point logistic_point(double u) {
  // t = 1/(1+e^-u), tc = 1/(1+e^u), both accurate in their own tails.
  return {1.0 / (1.0 + std::exp(-u)), 1.0 / (1.0 + std::exp(u))};
}

template <class V>
Integral<V> integrate_logistic(double weight, const Fn<V>& h, const V& zero, const QuadratureSpec& spec, int parts,
                               const Sink& sink) {
  // Nested trapezoid grids with step 2^-level on u ∈ [-U, U]; values are cached
  // by u. The mass beyond ±U is carried by the outermost nodes, which is exact
  // only once h has levelled off there, so U doubles until the change of h over
  // the last unit before ±U, times the tail mass, is within tolerance.
  double U = kLogisticHalfWidth;
  std::map<long long, V> cache;  // key: u · 2^20
  const double key_scale = 1048576.0;
  int evals = 0;
  auto value_at = [&](double u) -> const V& {
    long long key = std::llround(u * key_scale);
    auto it = cache.find(key);
    if (it == cache.end()) {
      ++evals;
      it = cache.emplace(key, h(logistic_point(u))).first;
    }
    return it->second;
  };
  auto level_sum = [&](double step, std::vector<std::pair<Point, double>>* nodes) {
    const long long k_max = static_cast<long long>(std::ceil(U / step));
    std::vector<double> w;
    std::vector<double> u;
    double inner = 0.0;
    for (long long k = -k_max; k <= k_max; ++k) {
      double uk = static_cast<double>(k) * step;
      u.push_back(uk);
      w.push_back(step / (kPi * kPi + uk * uk));
    }
    // Σ over all integers of step/(π²+(k·step)²) equals coth(π²/step) ≈ 1; the
    // part beyond the grid goes to the two outermost nodes.
    std::vector<double> ws = w;
    std::sort(ws.begin(), ws.end());
    for (double x : ws) inner += x;
    const double lump = 0.5 * (1.0 - inner);
    w.front() += lump;
    w.back() += lump;
    Accumulator<V> acc;
    for (std::size_t i = 0; i < u.size(); ++i) {
      acc.add(weight * w[i], value_at(u[i]));
      if (nodes) nodes->push_back({logistic_point(u[i]), weight * w[i]});
    }
    return std::make_pair(pairwise_sum(acc.terms, zero), rounding_floor(acc.abs_sum));
  };
  auto tail_error = [&]() {
    const double drift = std::max(vnorm(V(value_at(U) - value_at(U - 1.0))), vnorm(V(value_at(-U) - value_at(1.0 - U))));
    return weight * 0.5 * logistic_tail_mass(U) * drift;
  };
  double step = 0.5;
  auto [prev, floor_prev] = level_sum(step, nullptr);
  (void)floor_prev;
  while (true) {
    const double half = step * 0.5;
    auto [cur, floor] = level_sum(half, nullptr);
    const double tail = tail_error();
    const double err = std::max({vnorm(V(cur - prev)), floor, tail});
    const double tol = std::max(spec.abs_tol, spec.rel_tol * vnorm(cur)) / parts;
    if (err <= tol) {
      if (sink.rows) {
        std::vector<std::pair<Point, double>> nodes;
        level_sum(half, &nodes);
        for (const auto& [pt, w] : nodes) sink.record(pt, w);
      }
      return {cur, err, evals};
    }
    const bool widen = tail > 0.5 * tol && U < kLogisticMaxHalfWidth;
    const double next_u = widen ? 2.0 * U : U;
    const double next_step = widen ? step : half;
    if (evals + static_cast<int>(2.0 * next_u / (0.5 * next_step)) + 1 > spec.max_nodes) {
      throw_budget("logistic substitution", vnorm(cur), err);
    }
    if (widen) {
      U = next_u;
      prev = level_sum(step, nullptr).first;
    } else {
      step = half;
      prev = cur;
    }
  }
}

// --- tanh-sinh on (0,1) ------------------------------------------------------

template <class V>
Integral<V> integrate_tanh_sinh(const std::function<double(double, double)>& g, const Fn<V>& h, const V& zero,
                                const QuadratureSpec& spec, int parts, const Sink& sink) {
  const double S = kTanhSinhHalfWidth;
  std::map<long long, std::pair<V, double>> cache;  // key: s · 2^20 → (h, density·jacobian)
  int evals = 0;
  auto node = [](double s) {
    const double u = kPi * std::sinh(s);
    Point p = logistic_point(u);
    return std::make_pair(p, kPi * std::cosh(s) * p.t * p.tc);
  };
  auto level_sum = [&](double step, bool record) {
    const long long k_max = static_cast<long long>(std::floor(S / step));
    Accumulator<V> acc;
    for (long long k = -k_max; k <= k_max; ++k) {
      const double s = static_cast<double>(k) * step;
      auto [p, jac] = node(s);
      if (p.t <= 0.0 || p.tc <= 0.0) continue;
      long long key = std::llround(s * 1048576.0);
      auto it = cache.find(key);
      if (it == cache.end()) {
        ++evals;
        it = cache.emplace(key, std::make_pair(h(p), g(p.t, p.tc) * jac)).first;
      }
      const double c = step * it->second.second;
      acc.add(c, it->second.first);
      if (record) sink.record(p, c);
    }
    return std::make_pair(pairwise_sum(acc.terms, zero), rounding_floor(acc.abs_sum));
  };
  double step = 0.5;
  auto [prev, f0] = level_sum(step, false);
  (void)f0;
  while (true) {
    step *= 0.5;
    auto [cur, floor] = level_sum(step, false);
    const double err = std::max(vnorm(V(cur - prev)), floor);
    const double tol = std::max(spec.abs_tol, spec.rel_tol * vnorm(cur)) / parts;
    if (err <= tol) {
      if (sink.rows) level_sum(step, true);
      return {cur, err, evals};
    }
    if (evals + static_cast<int>(2.0 * S / step) + 1 > spec.max_nodes) {
      throw_budget("tanh-sinh", vnorm(cur), err);
    }
    prev = cur;
  }
}

// --- self-similar measures ---------------------------------------------------

std::shared_ptr<const Rule> cached_ifs_rule(const IfsMeasure& m) {
  static std::mutex mu;
  static std::vector<std::pair<IfsMeasure, std::shared_ptr<const Rule>>> cache;
  std::lock_guard<std::mutex> lock(mu);
  for (const auto& [key, rule] : cache)
    if (key.approx_equal(m, 0.0)) return rule;
  auto rule = std::make_shared<const Rule>(build_ifs_gauss(m, kIfsPoints));
  if (cache.size() > 64) cache.clear();
  cache.emplace_back(m, rule);
  return rule;
}

// Cylinder φ_w(s) = R s + B, with C = 1 - B - R so that 1 - φ_w(s) = C + R(1 - s).
struct Cell {
  double R, B, C, P;
  int depth;
};

template <class V>
class IfsIntegrator {
 public:
  IfsIntegrator(const IfsMeasure& m, const Fn<V>& h, const V& zero)
      : m_(m), h_(h), zero_(zero), rule_(cached_ifs_rule(m)) {}

  int evaluations() const { return evals_; }

  std::vector<Cell> children(const Cell& c) const {
    std::vector<Cell> out;
    for (std::size_t i = 0; i < m_.maps().size(); ++i) {
      const double p = m_.probs()[i];
      if (p == 0.0) continue;
      const double r = m_.maps()[i].ratio;
      const double b = m_.maps()[i].shift;
      const double ci = 1.0 - r - b;
      out.push_back({c.R * r, c.B + c.R * b, c.C + c.R * ci, c.P * p, c.depth + 1});
    }
    return out;
  }

  std::pair<V, double> cell_rule(const Cell& c, std::vector<std::pair<Point, double>>* nodes) {
    Accumulator<V> acc;
    for (std::size_t j = 0; j < rule_->size(); ++j) {
      const double s = rule_->nodes[j];
      const double sc = rule_->complements[j];
      Point pt{c.B + c.R * s, c.C + c.R * sc};
      const double w = c.P * rule_->weights[j];
      ++evals_;
      acc.add(w, h_(pt));
      if (nodes) nodes->push_back({pt, w});
    }
    return {pairwise_sum(acc.terms, zero_), acc.abs_sum};
  }

 private:
  const IfsMeasure& m_;
  const Fn<V>& h_;
  V zero_;
  std::shared_ptr<const Rule> rule_;
  int evals_ = 0;
};

template <class V>
Integral<V> integrate_ifs_adaptive(const IfsMeasure& m, double weight, const Fn<V>& h, const V& zero,
                                   const QuadratureSpec& spec, int parts, const Sink& sink) {
  IfsIntegrator<V> engine(m, h, zero);
  struct Leaf {
    Cell cell;
    V coarse;
    std::vector<V> child_values;
    V fine;
    double error;
  };
  auto make_leaf = [&](const Cell& c, const V* known_coarse) {
    Leaf leaf{c, zero, {}, zero, 0.0};
    double abs_sum = 0.0;
    if (known_coarse) {
      leaf.coarse = *known_coarse;
    } else {
      auto [v, a] = engine.cell_rule(c, nullptr);
      leaf.coarse = v;
      abs_sum += a;
    }
    for (const auto& ch : engine.children(c)) {
      auto [v, a] = engine.cell_rule(ch, nullptr);
      leaf.child_values.push_back(v);
      abs_sum += a;
    }
    leaf.fine = pairwise_sum(leaf.child_values, zero);
    leaf.error = std::max(vnorm(V(leaf.fine - leaf.coarse)), rounding_floor(abs_sum));
    return leaf;
  };
  std::vector<Leaf> leaves;
  leaves.push_back(make_leaf({1.0, 0.0, 0.0, 1.0, 0}, nullptr));
  const int per_split = static_cast<int>(m.maps().size() * m.maps().size()) * kIfsPoints;

  auto total = [&]() {
    std::vector<V> vals;
    double err = 0.0;
    for (const auto& l : leaves) {
      vals.push_back(l.fine);
      err += l.error;
    }
    return std::make_pair(V(weight * pairwise_sum(vals, zero)), weight * err);
  };
  while (true) {
    auto [value, err] = total();
    const double tol = std::max(spec.abs_tol, spec.rel_tol * vnorm(value)) / parts;
    if (err <= tol) break;
    std::size_t pick = leaves.size();
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      if (leaves[i].cell.depth >= 60) continue;
      if (pick == leaves.size() || leaves[i].error > leaves[pick].error) pick = i;
    }
    if (pick == leaves.size() || engine.evaluations() + per_split > spec.max_nodes) {
      throw_budget("self-similar Gauss quadrature", vnorm(value), err);
    }
    Leaf parent = std::move(leaves[pick]);
    auto kids = engine.children(parent.cell);
    std::vector<Leaf> replacement;
    for (std::size_t i = 0; i < kids.size(); ++i) replacement.push_back(make_leaf(kids[i], &parent.child_values[i]));
    leaves.erase(leaves.begin() + static_cast<std::ptrdiff_t>(pick));
    leaves.insert(leaves.begin() + static_cast<std::ptrdiff_t>(pick), std::make_move_iterator(replacement.begin()),
                  std::make_move_iterator(replacement.end()));
  }
  auto [value, err] = total();
  if (sink.rows) {
    for (const auto& l : leaves) {
      for (const auto& ch : engine.children(l.cell)) {
        std::vector<std::pair<Point, double>> nodes;
        engine.cell_rule(ch, &nodes);
        for (const auto& [pt, w] : nodes) sink.record(pt, weight * w);
      }
    }
  }
  return {value, err, engine.evaluations()};
}

template <class V>
V ifs_midpoint(const IfsMeasure& m, const Fn<V>& h, const Cell& c, int depth, const V& zero, int& evals,
               const Sink& sink) {
  if (depth == 0) {
    Point pt{c.B + 0.5 * c.R, c.C + 0.5 * c.R};
    ++evals;
    sink.record(pt, c.P);
    return V(c.P * h(pt));
  }
  std::vector<V> parts;
  for (std::size_t i = 0; i < m.maps().size(); ++i) {
    const double p = m.probs()[i];
    if (p == 0.0) continue;
    const double r = m.maps()[i].ratio;
    const double b = m.maps()[i].shift;
    Cell ch{c.R * r, c.B + c.R * b, c.C + c.R * (1.0 - r - b), c.P * p, c.depth + 1};
    parts.push_back(ifs_midpoint(m, h, ch, depth - 1, zero, evals, sink));
  }
  return pairwise_sum(parts, zero);
}

std::size_t ifs_atoms(const IfsMeasure& m, int depth) {
  std::size_t k = 0;
  for (double p : m.probs())
    if (p > 0.0) ++k;
  std::size_t n = 1;
  for (int i = 0; i < depth; ++i) {
    n *= k;
    if (n > kIfsMaxAtoms) return n;
  }
  return n;
}

template <class V>
Integral<V> integrate_ifs_midpoint(const IfsMeasure& m, double weight, const Fn<V>& h, const V& zero, int depth,
                                   const Sink& sink) {
  if (ifs_atoms(m, depth) > kIfsMaxAtoms) {
    std::ostringstream os;
    os << "ifs recursion: depth " << depth << " exceeds the budget of 2^24 atoms";
    throw QuadratureError(os.str(), std::numeric_limits<double>::quiet_NaN(),
                          std::numeric_limits<double>::infinity());
  }
  int evals = 0;
  Sink scaled = sink;
  std::vector<NodeRow> rows;
  if (sink.rows) scaled.rows = &rows;
  V v = ifs_midpoint(m, h, {1.0, 0.0, 0.0, 1.0, 0}, depth, zero, evals, scaled);
  if (sink.rows)
    for (auto& r : rows) sink.rows->push_back({r.part, r.t, r.tc, weight * r.weight});
  // Lip(h)·r^depth with Lip(h) unknown: report r^depth·‖h‖ scale as the estimate.
  const double err = weight * std::pow(m.contraction_ratio(), depth) * std::max(1.0, vnorm(v));
  return {V(weight * v), err, evals};
}

// --- dispatch ----------------------------------------------------------------

Stripped stripped_for(const DensityTerm& term) {
  Endpoints e = term.exponents();
  return {[term](double t, double tc) { return term.regular(t, tc); }, e.p, e.q};
}

template <class V>
Integral<V> integrate_term(const DensityTerm& term, const Fn<V>& h, const V& zero, const QuadratureSpec& spec,
                           int parts, const Sink& sink) {
  auto generic = [&](double p, double q) {
    Stripped s{[term, p, q](double t, double tc) {
                 double w = 1.0;
                 if (p != 0.0) w *= std::pow(t, p);
                 if (q != 0.0) w *= std::pow(tc, q);
                 return term.eval(t, tc) / w;
               },
               p, q};
    return integrate_panels<V>(s, h, zero, spec, parts, sink);
  };
  switch (spec.scheme) {
    case Scheme::gauss_legendre:
      return generic(0.0, 0.0);
    case Scheme::gauss_jacobi:
      return generic(spec.jacobi_p, spec.jacobi_q);
    case Scheme::tanh_sinh:
      return integrate_tanh_sinh<V>([term](double t, double tc) { return term.eval(t, tc); }, h, zero, spec, parts,
                                    sink);
    case Scheme::logistic_substitution:
      if (term.kind() != DensityKind::log_mean) {
        throw DomainError("logistic substitution applies to the log-mean density only");
      }
      return integrate_logistic<V>(term.weight(), h, zero, spec, parts, sink);
    case Scheme::automatic:
    case Scheme::ifs_recursion:
      break;
  }
  switch (term.scheme_hint()) {
    case SchemeHint::logistic:
      return integrate_logistic<V>(term.weight(), h, zero, spec, parts, sink);
    case SchemeHint::jacobi:
    case SchemeHint::smooth:
      break;
  }
  // Boundary layers thinner than the bisection depth resolves go to tanh-sinh.
  try {
    return integrate_panels<V>(stripped_for(term), h, zero, spec, parts, sink);
  } catch (const QuadratureError& first) {
    try {
      Integral<V> r = integrate_tanh_sinh<V>([term](double t, double tc) { return term.eval(t, tc); }, h, zero,
                                             spec, parts, sink);
      r.nodes += spec.max_nodes;
      return r;
    } catch (const QuadratureError&) {
      throw first;
    }
  }
}

template <class V>
Integral<V> integrate_measure(const UnitMeasure& m, const Fn<V>& h, const V& zero, const QuadratureSpec& spec,
                              std::vector<NodeRow>* rows) {
  spec.validate();
  std::vector<V> pieces;
  double error = 0.0;
  int nodes = 0;
  Sink atom_sink{rows, "atom"};
  for (const auto& a : m.atoms()) {
    if (a.weight == 0.0) continue;
    Point pt{a.location, 1.0 - a.location};
    pieces.push_back(V(a.weight * h(pt)));
    atom_sink.record(pt, a.weight);
    ++nodes;
  }
  int parts = 0;
  for (const auto& t : m.ac().terms())
    if (t.weight() > 0.0) ++parts;
  for (const auto& s : m.sc())
    if (s.weight > 0.0) ++parts;
  parts = std::max(parts, 1);
  for (const auto& t : m.ac().terms()) {
    if (t.weight() == 0.0) continue;
    Integral<V> r = integrate_term<V>(t, h, zero, spec, parts, Sink{rows, "ac:" + t.id()});
    pieces.push_back(r.value);
    error += r.error;
    nodes += r.nodes;
  }
  for (const auto& s : m.sc()) {
    if (s.weight == 0.0) continue;
    Integral<V> r{zero, 0.0, 0};
    Sink sink{rows, "sc"};
    if (spec.scheme == Scheme::ifs_recursion) {
      int depth = spec.ifs_depth > 0 ? spec.ifs_depth : ifs_depth_for(s.ifs, spec.abs_tol);
      r = integrate_ifs_midpoint<V>(s.ifs, s.weight, h, zero, depth, sink);
    } else {
      r = integrate_ifs_adaptive<V>(s.ifs, s.weight, h, zero, spec, parts, sink);
    }
    pieces.push_back(r.value);
    error += r.error;
    nodes += r.nodes;
  }
  return {pairwise_sum(pieces, zero), error, nodes};
}

// Shape probe for matrix integrands on measures with no atoms.
Matrix matrix_zero(const UnitMeasure& m, const MatrixIntegrand& h) {
  (void)m;
  Matrix probe = h({0.5, 0.5});
  return Matrix::Zero(probe.rows(), probe.cols());
}

}  // namespace

// ---------------------------------------------------------------------------

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::automatic: return "automatic";
    case Scheme::gauss_legendre: return "gauss_legendre";
    case Scheme::gauss_jacobi: return "gauss_jacobi";
    case Scheme::logistic_substitution: return "logistic_substitution";
    case Scheme::tanh_sinh: return "tanh_sinh";
    case Scheme::ifs_recursion: return "ifs_recursion";
  }
  return "?";
}

Scheme parse_scheme(const std::string& name) {
  for (Scheme s : {Scheme::automatic, Scheme::gauss_legendre, Scheme::gauss_jacobi, Scheme::logistic_substitution,
                   Scheme::tanh_sinh, Scheme::ifs_recursion}) {
    if (to_string(s) == name) return s;
  }
  if (name == "auto") return Scheme::automatic;
  if (name == "logistic") return Scheme::logistic_substitution;
  if (name == "ifs") return Scheme::ifs_recursion;
  throw UsageError("unknown quadrature scheme '" + name + "'");
}

void QuadratureSpec::validate() const {
  if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) throw RangeError("QuadratureSpec: tolerances must be positive");
  if (max_nodes < 2) throw RangeError("QuadratureSpec: max_nodes must be at least 2");
  if (scheme == Scheme::gauss_jacobi && (!(jacobi_p > -1.0) || !(jacobi_q > -1.0))) {
    throw RangeError("QuadratureSpec: Jacobi exponents must exceed -1");
  }
  if (ifs_depth < 0) throw RangeError("QuadratureSpec: ifs depth must be positive (0 selects it from the tolerance)");
  if (max_depth < 0) throw RangeError("QuadratureSpec: max_depth must be nonnegative");
}

Rule jacobi_rule(double p, double q, int n) {
  if (!(p > -1.0) || !(q > -1.0) || n < 1) {
    std::ostringstream os;
    os << "jacobi_rule: need p, q > -1 and n >= 1 (got " << p << ", " << q << ", " << n << ")";
    throw RangeError(os.str());
  }
  return *cached_jacobi(p, q, n);
}

Rule gauss_legendre_rule(int n) { return jacobi_rule(0.0, 0.0, n); }

double logistic_tail_mass(double U) { return 2.0 / kPi * std::atan(kPi / U); }

Rule logistic_rule(int n) {
  if (n < 2) throw RangeError("logistic_rule: need n >= 2");
  const double U = kPi * std::sqrt(static_cast<double>(n));
  const double step = 2.0 * U / (n - 1);
  Rule r;
  double inner = 0.0;
  for (int k = 0; k < n; ++k) {
    const double u = -U + k * step;
    Point p = logistic_point(u);
    r.nodes.push_back(p.t);
    r.complements.push_back(p.tc);
    r.weights.push_back(step / (kPi * kPi + u * u));
  }
  std::vector<double> ws = r.weights;
  std::sort(ws.begin(), ws.end());
  for (double w : ws) inner += w;
  const double lump = 0.5 * (1.0 - inner);
  r.weights.front() += lump;
  r.weights.back() += lump;
  return r;
}

Rule ifs_gauss_rule(const IfsMeasure& m, int points) {
  if (points < 1 || points > 8) throw RangeError("ifs_gauss_rule: points must lie in 1..8");
  return build_ifs_gauss(m, points);
}

int ifs_depth_for(const IfsMeasure& m, double tol) {
  const double r = m.contraction_ratio();
  int depth = static_cast<int>(std::ceil(std::log(tol) / std::log(r)));
  return std::clamp(depth, 1, 24);
}

Integral<double> integrate_scalar(const UnitMeasure& m, const ScalarIntegrand& h, const QuadratureSpec& spec) {
  return integrate_measure<double>(m, h, 0.0, spec, nullptr);
}

Integral<Matrix> integrate_matrix(const UnitMeasure& m, const MatrixIntegrand& h, const QuadratureSpec& spec) {
  Matrix zero = matrix_zero(m, h);
  return integrate_measure<Matrix>(m, h, zero, spec, nullptr);
}

double integrate_ifs(const IfsMeasure& m, const std::function<double(double)>& h, int depth) {
  if (depth < 0) throw RangeError("integrate_ifs: depth must be nonnegative");
  if (depth == 0) depth = ifs_depth_for(m, 1e-10);
  Fn<double> fn = [&h](Point p) { return h(p.t); };
  return integrate_ifs_midpoint<double>(m, 1.0, fn, 0.0, depth, Sink{}).value;
}

Integral<double> integrate_density(const Density& g, const ScalarIntegrand& h, const QuadratureSpec& spec) {
  return integrate_scalar(UnitMeasure::with_density(g), h, spec);
}

std::vector<NodeRow> node_table(const UnitMeasure& m, const ScalarIntegrand& h, const QuadratureSpec& spec) {
  std::vector<NodeRow> rows;
  integrate_measure<double>(m, h, 0.0, spec, &rows);
  return rows;
}

Integral<Matrix> integrate_half_line(const HalfLineDensity& f, const std::function<Matrix(double)>& k,
                                     const QuadratureSpec& spec) {
  spec.validate();
  const double S = kExpSinhHalfWidth;
  std::map<long long, std::pair<Matrix, double>> cache;
  int evals = 0;
  Matrix zero;
  auto level_sum = [&](double step) {
    const long long k_max = static_cast<long long>(std::floor(S / step));
    Accumulator<Matrix> acc;
    for (long long i = -k_max; i <= k_max; ++i) {
      const double s = static_cast<double>(i) * step;
      const double u = kPi * std::sinh(s);
      const double lambda = std::exp(u);
      if (!(lambda > 0.0) || !std::isfinite(lambda)) continue;
      long long key = std::llround(s * 1048576.0);
      auto it = cache.find(key);
      if (it == cache.end()) {
        ++evals;
        it = cache.emplace(key, std::make_pair(k(lambda), f(lambda) * lambda * kPi * std::cosh(s))).first;
      }
      if (zero.size() == 0) zero = Matrix::Zero(it->second.first.rows(), it->second.first.cols());
      acc.add(step * it->second.second, it->second.first);
    }
    return std::make_pair(pairwise_sum(acc.terms, zero), rounding_floor(acc.abs_sum));
  };
  double step = 0.5;
  auto [prev, f0] = level_sum(step);
  (void)f0;
  while (true) {
    step *= 0.5;
    auto [cur, floor] = level_sum(step);
    const double err = std::max(vnorm(Matrix(cur - prev)), floor);
    const double tol = std::max(spec.abs_tol, spec.rel_tol * vnorm(cur));
    if (err <= tol) return {cur, err, evals};
    if (evals + static_cast<int>(2.0 * S / step) + 1 > spec.max_nodes) {
      throw_budget("half-line quadrature", vnorm(cur), err);
    }
    prev = cur;
  }
}

// ---------------------------------------------------------------------------
// Measure-level quantities that need an integrator.

double total_mass(const UnitMeasure& m, const QuadratureSpec& spec) {
  double mass = m.atom_mass() + m.sc_mass();
  if (m.has_ac()) {
    mass += integrate_density(m.ac(), [](Point) { return 1.0; }, spec).value;
  }
  return mass;
}

bool is_probability(const UnitMeasure& m, double tol, const QuadratureSpec& spec) {
  return std::abs(total_mass(m, spec) - 1.0) <= tol;
}

namespace {

bool atoms_symmetric(const UnitMeasure& m, double tol) {
  for (const auto& a : m.atoms()) {
    if (a.weight == 0.0) continue;
    double mirrored = 0.0;
    for (const auto& b : m.atoms()) {
      if (std::abs(b.location - (1.0 - a.location)) <= tol) mirrored += b.weight;
    }
    if (std::abs(mirrored - a.weight) > tol * (1.0 + a.weight)) return false;
  }
  return true;
}

bool density_symmetric(const Density& g, double tol, const QuadratureSpec& spec) {
  if (g.empty()) return true;
  for (double t : chebyshev_grid(64)) {
    const double tc = 1.0 - t;
    const double x = g.eval(t, tc);
    const double y = g.eval(tc, t);
    if (std::abs(x - y) > tol * (1.0 + std::abs(x))) return false;
  }
  for (int k = 1; k <= 8; ++k) {
    auto mk = integrate_density(g, [k](Point p) { return std::pow(p.t, k); }, spec).value;
    auto rk = integrate_density(g, [k](Point p) { return std::pow(p.tc, k); }, spec).value;
    if (std::abs(mk - rk) > tol * (1.0 + std::abs(mk))) return false;
  }
  return true;
}

std::vector<double> sc_moments(const std::vector<SingularPart>& parts, int order) {
  std::vector<double> out(static_cast<std::size_t>(order) + 1, 0.0);
  for (const auto& p : parts) {
    auto m = p.ifs.moments(order);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += p.weight * m[k];
  }
  return out;
}

bool sc_symmetric(const std::vector<SingularPart>& parts, double tol) {
  if (parts.empty()) return true;
  bool structural = true;
  for (const auto& p : parts) {
    IfsMeasure r = p.ifs.reflected();
    bool found = false;
    for (const auto& q : parts) {
      if (q.ifs.approx_equal(r, tol) && std::abs(q.weight - p.weight) <= tol * (1.0 + p.weight)) {
        found = true;
        break;
      }
    }
    structural = structural && found;
  }
  if (structural) return true;
  std::vector<SingularPart> reflected;
  for (const auto& p : parts) reflected.push_back({p.ifs.reflected(), p.weight});
  auto a = sc_moments(parts, 8);
  auto b = sc_moments(reflected, 8);
  for (std::size_t k = 0; k < a.size(); ++k)
    if (std::abs(a[k] - b[k]) > tol * (1.0 + std::abs(a[k]))) return false;
  return true;
}

}  // namespace

bool is_symmetric(const UnitMeasure& m, double tol, const QuadratureSpec& spec) {
  return atoms_symmetric(m, tol) && density_symmetric(m.ac(), tol, spec) && sc_symmetric(m.sc(), tol);
}

}  // namespace kubo
