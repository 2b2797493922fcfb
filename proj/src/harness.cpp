#include "kubo/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <thread>

#include <Eigen/Eigenvalues>

#include "kubo/error.hpp"
#include "kubo/random.hpp"

namespace kubo {

namespace {

const std::map<std::string, double>& tolerance_table() {
  static const std::map<std::string, double> t{
      {"monotonicity", 1e-8},         {"transformer", 1e-8},
      {"continuity", 1e-6},           {"congruence_eq", 1e-7},
      {"norm_bound", 1e-9},           {"scalar_reduction", 1e-9},
      {"ordering", 1e-8},             {"transpose_duality", 1e-8},
      {"crosscheck_closed_form", 1e-6}, {"representation_agreement", 1e-6},
      {"decomposition_roundtrip", 1e-9},
  };
  return t;
}

double lambda_min(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double deficit(const Matrix& lower, const Matrix& upper, double scale) {
  return std::max(0.0, -lambda_min(upper - lower)) / scale;
}

double rel_frob(const Matrix& x, const Matrix& ref) {
  const double denom = std::max(ref.norm(), std::numeric_limits<double>::min());
  return (x - ref).norm() / denom;
}

// Weight parameter of the one-parameter families, if the entry has one.
std::optional<double> family_weight(const std::string& id) {
  const auto colon = id.find(':');
  if (colon == std::string::npos) return std::nullopt;
  const std::string name = id.substr(0, colon);
  if (name != "arithmetic" && name != "harmonic" && name != "geometric") return std::nullopt;
  return std::stod(id.substr(colon + 1));
}

struct Trial {
  const CatalogEntry& entry;
  std::uint64_t seed;
  int dim;
  double cond;

  SpdMatrix a() const { return random_spd(dim, cond, derive_seed(seed, 0)); }
  SpdMatrix b() const { return random_spd(dim, cond, derive_seed(seed, 1)); }
  CounterRng rng() const { return CounterRng(derive_seed(seed, 2)); }
  const Connection& sigma() const { return entry.connection; }
  static double scale(const SpdMatrix& x, const SpdMatrix& y) { return 1.0 + x.spectral_norm() + y.spectral_norm(); }
};

using TrialFn = std::function<double(const Trial&)>;

double monotonicity(const Trial& tr) {
  SpdMatrix A = tr.a(), B = tr.b();
  CounterRng rng = tr.rng();
  SpdMatrix C = random_dominating(A, 1.0, rng);
  SpdMatrix D = random_dominating(B, 1.0, rng);
  Matrix lo = evaluate(tr.sigma(), A, B).matrix();
  Matrix hi = evaluate(tr.sigma(), C, D).matrix();
  return deficit(lo, hi, Trial::scale(C, D));
}

// Q·diag(d)·Qᵀ with k ≥ 1 zero eigenvalues (dim > 1) and |dᵢ| ∈ [0.1, 2] otherwise.
// The inequality is strict only for singular X.
SymMatrix random_singular_symmetric(int dim, CounterRng& rng) {
  Matrix q = random_orthogonal(dim, rng);
  const int zeros = dim > 1 ? 1 + static_cast<int>(rng.uniform() * (dim - 1)) : 0;
  Vector d(dim);
  for (int i = 0; i < dim; ++i) {
    d(i) = i < zeros ? 0.0 : rng.uniform(0.1, 2.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
  }
  return SymMatrix(q * d.asDiagonal() * q.transpose());
}

double transformer(const Trial& tr) {
  SpdMatrix A = tr.a(), B = tr.b();
  CounterRng rng = tr.rng();
  SymMatrix X = random_singular_symmetric(tr.dim, rng);
  SpdMatrix XAX(congruence(X, A.sym()));
  SpdMatrix XBX(congruence(X, B.sym()));
  Matrix lhs = congruence(X, evaluate(tr.sigma(), A, B).sym()).matrix();
  Matrix rhs = evaluate(tr.sigma(), XAX, XBX).matrix();
  return deficit(lhs, rhs, Trial::scale(XAX, XBX));
}

double continuity(const Trial& tr) {
  SpdMatrix A = tr.a(), B = tr.b();
  const double scale = Trial::scale(A, B);
  Matrix base = evaluate(tr.sigma(), A, B).matrix();
  double prev = std::numeric_limits<double>::infinity();
  double growth = 0.0;
  double last = 0.0;
  for (int k = 2; k <= 8; ++k) {
    const double eps = std::pow(10.0, -k);
    Matrix v = evaluate(tr.sigma(), A.shifted(eps), B.shifted(eps)).matrix();
    last = (v - base).norm();
    if (last > prev) growth = std::max(growth, last - prev);
    prev = last;
  }
  return std::max(growth, last) / scale;
}

SymMatrix random_invertible_symmetric(int dim, CounterRng& rng) {
  Matrix q = random_orthogonal(dim, rng);
  Vector s(dim);
  for (int i = 0; i < dim; ++i) s(i) = rng.uniform(0.5, 2.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
  return SymMatrix(q * s.asDiagonal() * q.transpose());
}

double congruence_eq(const Trial& tr) {
  SpdMatrix A = tr.a(), B = tr.b();
  CounterRng rng = tr.rng();
  SymMatrix X = random_invertible_symmetric(tr.dim, rng);
  SpdMatrix XAX(congruence(X, A.sym()));
  SpdMatrix XBX(congruence(X, B.sym()));
  Matrix lhs = congruence(X, evaluate(tr.sigma(), A, B).sym()).matrix();
  Matrix rhs = evaluate(tr.sigma(), XAX, XBX).matrix();
  return (lhs - rhs).norm() / Trial::scale(XAX, XBX);
}

double norm_bound(const Trial& tr) {
  SpdMatrix A = tr.a(), B = tr.b();
  const double mass = total_mass(tr.sigma().measure());
  const double bound = std::max(A.spectral_norm(), B.spectral_norm()) * mass;
  const double norm = evaluate(tr.sigma(), A, B).spectral_norm();
  if (bound == 0.0) return norm;
  return std::max(0.0, norm / bound - 1.0);
}

double scalar_reduction(const Trial& tr) {
  CounterRng rng = tr.rng();
  const double half = 0.5 * std::log(tr.cond);
  const double a = std::exp(rng.uniform(-half, half));
  const double b = std::exp(rng.uniform(-half, half));
  const double got = evaluate(tr.sigma(), SpdMatrix::diagonal({a}), SpdMatrix::diagonal({b}))(0, 0);
  const double f = tr.sigma().has_closed_scalar() ? tr.sigma().closed_form()->scalar(b / a)
                                                  : representing_function(tr.sigma(), b / a);
  const double want = a * f;
  return std::abs(got - want) / std::max(std::abs(want), std::numeric_limits<double>::min());
}

double ordering(const Trial& tr) {
  SpdMatrix A = tr.a(), B = tr.b();
  CounterRng rng = tr.rng();
  double t = rng.uniform(0.05, 0.95);
  if (auto w = family_weight(tr.entry.id)) t = *w;
  const double scale = Trial::scale(A, B);
  Matrix h = weighted_harmonic(A, B, t).matrix();
  Matrix g = evaluate(geometric(t).connection, A, B).matrix();
  Matrix m = evaluate(arithmetic(t).connection, A, B).matrix();
  return std::max(deficit(h, g, scale), deficit(g, m, scale));
}

double transpose_duality(const Trial& tr) {
  CounterRng rng = tr.rng();
  const double lc = std::log(tr.cond);
  std::vector<double> xs{0.25, 0.5, 2.0, 4.0, std::exp(rng.uniform(-lc, lc))};
  Connection t = transpose(tr.sigma());
  double worst = 0.0;
  for (double x : xs) {
    const double lhs = representing_function(t, x);
    const double rhs = x * representing_function(tr.sigma(), 1.0 / x);
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

double crosscheck(const Trial& tr) {
  SpdMatrix A = tr.a(), B = tr.b();
  Matrix q = evaluate(tr.sigma(), A, B).matrix();
  Matrix c = tr.sigma().closed_form()->matrix(A, B).matrix();
  return rel_frob(q, c);
}

double representation_agreement(const Trial& tr) {
  SpdMatrix A = tr.a(), B = tr.b();
  HalfLineMeasure nu = pullback_psi(tr.sigma().measure());
  Matrix canonical = evaluate_canonical(nu, A, B).matrix();
  Matrix unit = evaluate(Connection(pushforward_psi(nu), "image"), A, B).matrix();
  return rel_frob(canonical, unit);
}

double decomposition_roundtrip(const Trial& tr) {
  SpdMatrix A = tr.a(), B = tr.b();
  CounterRng rng = tr.rng();
  const double lc = std::log(tr.cond);
  const double x = std::exp(rng.uniform(-lc, lc));
  ConnectionParts parts = decompose_connection(tr.sigma());
  const double f = representing_function(tr.sigma(), x);
  const double fs = parts.f_ac(x) + parts.f_sc(x) + parts.f_sd(x);
  const double scalar_err = std::abs(f - fs) / (1.0 + std::abs(f));
  Matrix whole = evaluate(tr.sigma(), A, B).matrix();
  Matrix summed = evaluate(parts.ac, A, B).matrix() + evaluate(parts.sc, A, B).matrix() +
                  evaluate(parts.sd, A, B).matrix();
  const double matrix_err = (whole - summed).norm() / Trial::scale(A, B);
  return std::max(scalar_err, matrix_err);
}

const std::map<std::string, TrialFn>& trial_table() {
  static const std::map<std::string, TrialFn> t{
      {"monotonicity", monotonicity},
      {"transformer", transformer},
      {"continuity", continuity},
      {"congruence_eq", congruence_eq},
      {"norm_bound", norm_bound},
      {"scalar_reduction", scalar_reduction},
      {"ordering", ordering},
      {"transpose_duality", transpose_duality},
      {"crosscheck_closed_form", crosscheck},
      {"representation_agreement", representation_agreement},
      {"decomposition_roundtrip", decomposition_roundtrip},
  };
  return t;
}

// Empty string when applicable, otherwise the reason.
std::string inapplicable_reason(const std::string& suite, const CatalogEntry& entry) {
  if (suite == "crosscheck_closed_form" && !entry.has_closed_matrix()) return "no closed-form matrix evaluator";
  if (suite == "representation_agreement") {
    try {
      pullback_psi(entry.connection.measure());
    } catch (const DomainError& e) {
      return e.what();
    }
  }
  return {};
}

}  // namespace

const std::vector<std::string>& suite_ids() {
  static const std::vector<std::string> ids{
      "monotonicity",      "transformer", "continuity",        "congruence_eq",
      "norm_bound",        "scalar_reduction", "ordering",     "transpose_duality",
      "crosscheck_closed_form", "representation_agreement", "decomposition_roundtrip",
  };
  return ids;
}

double default_tolerance(const std::string& suite) {
  auto it = tolerance_table().find(suite);
  if (it == tolerance_table().end()) throw UsageError("unknown suite '" + suite + "'");
  return it->second;
}

int worker_threads(int requested) {
  if (requested > 0) return requested;
  int n = 0;
  if (const char* env = std::getenv("KUBO_MEANS_THREADS")) {
    try {
      n = std::stoi(env);
    } catch (const std::exception&) {
      throw UsageError(std::string("KUBO_MEANS_THREADS: not an integer: '") + env + "'");
    }
    if (n < 0) throw UsageError("KUBO_MEANS_THREADS must be non-negative");
  }
  if (n == 0) n = static_cast<int>(std::thread::hardware_concurrency());
  return std::max(n, 1);
}

SuiteReport run_suite(const std::string& suite, const CatalogEntry& entry, int trials, int dim, double cond,
                      std::uint64_t seed, double tol, int threads) {
  auto fn = trial_table().find(suite);
  if (fn == trial_table().end()) throw UsageError("unknown suite '" + suite + "'");
  if (trials < 1) throw UsageError("trials must be positive");
  if (dim < 1) throw UsageError("dim must be positive");
  if (!(cond >= 1.0)) throw UsageError("cond must be at least 1");
  if (!(tol > 0.0)) throw UsageError("tolerance must be positive");

  SuiteReport r;
  r.suite = suite;
  r.mean = entry.id;
  r.trials = trials;
  r.dim = dim;
  r.cond = cond;
  r.seed = seed;
  r.tolerance = tol;
  if (suite == "scalar_reduction") r.dim = 1;

  const auto start = std::chrono::steady_clock::now();
  r.note = inapplicable_reason(suite, entry);
  if (!r.note.empty()) {
    r.applicable = false;
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
  }

  std::vector<double> violation(static_cast<std::size_t>(trials), 0.0);
  std::vector<std::string> message(static_cast<std::size_t>(trials));
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(trials));
  std::atomic<int> next{0};
  auto work = [&] {
    for (int i = next++; i < trials; i = next++) {
      const auto k = static_cast<std::size_t>(i);
      seeds[k] = derive_seed(seed, static_cast<std::uint64_t>(i));
      Trial tr{entry, seeds[k], dim, cond};
      try {
        violation[k] = fn->second(tr);
        if (!std::isfinite(violation[k])) message[k] = "non-finite violation";
      } catch (const std::exception& e) {
        violation[k] = std::numeric_limits<double>::infinity();
        message[k] = e.what();
      }
    }
  };
  const int nt = std::min(worker_threads(threads), trials);
  if (nt <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nt; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  for (std::size_t k = 0; k < violation.size(); ++k) {
    r.max_violation = std::max(r.max_violation, violation[k]);
    if (!message[k].empty() || violation[k] > tol) r.failures.push_back({seeds[k], violation[k], message[k]});
  }
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

SuiteReport run_suite(const std::string& suite, const std::string& mean_id, int trials, int dim, double cond,
                      std::uint64_t seed, double tol, int threads) {
  return run_suite(suite, lookup(mean_id), trials, dim, cond, seed, tol, threads);
}

Profile parse_profile(const std::string& name) {
  if (name == "quick") return Profile::quick;
  if (name == "full") return Profile::full;
  throw UsageError("unknown profile '" + name + "' (expected quick or full)");
}

std::vector<SuiteReport> run_all(Profile profile, std::uint64_t seed, int threads) {
  const std::vector<int> dims = profile == Profile::quick ? std::vector<int>{4} : std::vector<int>{2, 6, 12};
  const int trials = profile == Profile::quick ? 20 : 200;
  std::vector<SuiteReport> out;
  std::uint64_t k = 0;
  for (const auto& entry : catalog()) {
    for (const auto& suite : suite_ids()) {
      for (int dim : dims) {
        out.push_back(run_suite(suite, entry, trials, dim, 100.0, derive_seed(seed, k++), default_tolerance(suite),
                                threads));
      }
    }
  }
  return out;
}

namespace {

nlohmann::json number_or_null(double x) {
  if (std::isfinite(x)) return x;
  return nullptr;
}

}  // namespace

nlohmann::json to_json(const SuiteReport& r, bool timings) {
  nlohmann::json j = {
      {"suite", r.suite},   {"mean", r.mean},
      {"trials", r.trials}, {"dim", r.dim},
      {"cond", r.cond},     {"seed", r.seed},
      {"tolerance", r.tolerance}, {"applicable", r.applicable},
      {"passed", r.passed()},     {"max_violation", number_or_null(r.max_violation)},
  };
  if (!r.note.empty()) j["note"] = r.note;
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& f : r.failures) {
    nlohmann::json fj = {{"seed", f.seed}, {"violation", number_or_null(f.violation)}};
    if (!f.message.empty()) fj["error"] = f.message;
    failures.push_back(fj);
  }
  j["failures"] = failures;
  if (timings) j["wall_seconds"] = r.wall_seconds;
  return j;
}

nlohmann::json to_json(const std::vector<SuiteReport>& reports, bool timings) {
  nlohmann::json arr = nlohmann::json::array();
  int failed = 0;
  int skipped = 0;
  for (const auto& r : reports) {
    arr.push_back(to_json(r, timings));
    if (!r.passed()) ++failed;
    if (!r.applicable) ++skipped;
  }
  return {{"reports", arr},
          {"summary",
           {{"total", reports.size()}, {"failed", failed}, {"not_applicable", skipped}, {"passed", failed == 0}}}};
}

}  // namespace kubo
