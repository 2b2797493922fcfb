#pragma once

// Randomized property suites over catalog connections.
//
// Every trial draws its matrices from derive_seed(seed, trial), so reports do
// not depend on the number of worker threads. Violations are measured
// relative to scale = 1 + ‖A‖ + ‖B‖ of the pair being evaluated, except where
// a suite states an absolute or relative error.
//
//   monotonicity             λ_min(σ(C,D) - σ(A,B)) deficit, A ≤ C, B ≤ D
//   transformer              λ_min((XAX)σ(XBX) - X(AσB)X) deficit, X symmetric and singular
//   continuity               growth of ‖σ(A+εI,B+εI) - σ(A,B)‖ along ε = 1e-2..1e-8,
//                            and its final value
//   congruence_eq            ‖X(AσB)X - (XAX)σ(XBX)‖_F, X symmetric invertible
//   norm_bound               ‖AσB‖ / (max(‖A‖,‖B‖)·mass) - 1, positive part
//   scalar_reduction         relative error of [[a]]σ[[b]] against a·f(b/a)
//   ordering                 deficits in A!ₜB ≤ A#ₜB ≤ A∇ₜB
//   transpose_duality        |f_T(x) - x·f(1/x)| (absolute)
//   crosscheck_closed_form   relative Frobenius distance, quadrature vs closed form
//   representation_agreement relative Frobenius distance, canonical form vs [0,1] form
//   decomposition_roundtrip  parts re-summed against the whole (f and matrices)

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "kubo/catalog.hpp"

namespace kubo {

const std::vector<std::string>& suite_ids();

/// Throws UsageError for unknown suite ids.
double default_tolerance(const std::string& suite);

struct SuiteFailure {
  std::uint64_t seed;
  double violation;
  std::string message;  // set when the trial raised an error
};

struct SuiteReport {
  std::string suite;
  std::string mean;
  int trials = 0;
  int dim = 0;
  double cond = 1.0;
  std::uint64_t seed = 0;
  double tolerance = 0.0;
  bool applicable = true;
  std::string note;
  std::vector<SuiteFailure> failures;
  double max_violation = 0.0;
  double wall_seconds = 0.0;

  bool passed() const { return failures.empty(); }
};

/// threads = 0 reads KUBO_MEANS_THREADS (0 or unset: hardware concurrency).
SuiteReport run_suite(const std::string& suite, const CatalogEntry& entry, int trials, int dim, double cond,
                      std::uint64_t seed, double tol, int threads = 0);
SuiteReport run_suite(const std::string& suite, const std::string& mean_id, int trials, int dim, double cond,
                      std::uint64_t seed, double tol, int threads = 0);

enum class Profile { quick, full };
Profile parse_profile(const std::string& name);

/// quick: 20 trials per suite at dim 4; full: 200 trials at dims 2, 6, 12.
/// Every catalog entry × every suite; condition number 100.
std::vector<SuiteReport> run_all(Profile profile, std::uint64_t seed, int threads = 0);

/// Wall time is included only when `timings` is set, so reports from equal
/// seeds serialize identically.
nlohmann::json to_json(const SuiteReport& r, bool timings = false);
nlohmann::json to_json(const std::vector<SuiteReport>& reports, bool timings = false);

int worker_threads(int requested = 0);

}  // namespace kubo
