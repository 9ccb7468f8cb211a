#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rer/report.hpp"

namespace rer {

inline constexpr double kExpansionTol = 1e-10;
inline constexpr double kRelaxTol = 1e-12;
inline constexpr double kContractionTol = 1e-12;
inline constexpr double kDecompositionTol = 1e-10;
inline constexpr double kGridSpotTol = 1e-12;

/// Pascal, rising-sum and interval identities for every n <= max_n, plus
/// per-(L, k, l) slot counts, per-(L, k) totals, and the weighted sum
/// against its enumerated oracle for L <= max_L.  Comparisons with the
/// printed closed form and its l-bounds are `recorded`.
std::vector<VerificationReport> verify_combinatorics(int max_L, int max_n = 30);

struct GammaSuiteOptions {
  int max_L = 4;
  std::vector<int> dims{2, 3};
  std::vector<double> etas{0.1, 0.5, 0.9};
  int seeds = 20;
  long relax_trials = 10000;
  std::uint64_t seed = 0;
};

/// Expansion identity (including eta = 0), relaxation inequality, trivial
/// contraction on every generated sequence, and the bound grid with its two
/// hand-evaluated spot cells.
std::vector<VerificationReport> verify_gamma(const GammaSuiteOptions& opts);

/// Residual of the bias/variance split over random (MDP, w1, window, eta)
/// draws with window length up to max_L.
std::vector<VerificationReport> verify_decomposition(int trials, int max_L, std::uint64_t seed);

/// Dispatches "all", "combinatorics", "gamma" or "decomposition".  Throws
/// UsageError for unknown suites or max_L outside [1, cap], where the cap is
/// kEnumerationMaxL for combinatorics and kExpansionMaxL otherwise.
std::vector<VerificationReport> run_verify(const std::string& suite, int max_L, std::uint64_t seed);

}  // namespace rer
