#pragma once

// Exact counting identities behind the expansion of Gamma_L^T Gamma_L.
//
// The palindromic slot array for a window of length L is
//   [L, L-1, ..., 1, 1, ..., L-1, L]
// (2L positions).  Every increasing subset of positions is one high-order
// term of the expansion; after the first/last relaxation each subset
// contributes 1/2 to the slot of its first position and 1/2 to the slot of
// its last position.

#include <boost/multiprecision/cpp_int.hpp>

#include <map>
#include <vector>

namespace rer::comb {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// Exhaustive enumeration refuses windows longer than this (2^24 subsets).
inline constexpr int kEnumerationMaxL = 12;

struct SlotCountQuery {
  int L;
  int k;
  int l;

  /// Throws PreconditionError unless 2 <= k <= 2L and 1 <= l <= L.
  void validate() const;
};

/// (L, l, eta) for the alternating weighted sum over k.  `eta` is exact.
struct WeightedSumParams {
  int L;
  int l;
  Rational eta;

  /// Throws PreconditionError unless 0 < eta < 1 and 1 <= l <= L.
  void validate() const;
};

/// C(n, k), zero outside 0 <= k <= n.
BigInt binomial(long n, long k);

bool pascal_identity_holds(long n, long k);
bool rising_sum_identity_holds(long n, long m);
bool vandermonde_interval_identity_holds(long k, long q, long n);

/// Slot value (1..L) at 0-based position `pos` of the palindromic array.
int palindromic_slot(int L, int pos);

/// Per-slot totals by brute force over all C(2L, k) position subsets.
/// Keys are slots 1..L; every slot is present.  Throws EnumerationRefused
/// when L > kEnumerationMaxL.
std::map<int, Rational> enumerate_slot_counts(int L, int k);

/// C(L+l-2, k-1) + C(L-l, k-1) + C(2l-2, k-2).
Rational slot_count_formula(const SlotCountQuery& q);

/// sum_{k=2}^{2L} (-eta)^k * slot_count_formula(L, k, l), exact.
Rational weighted_sum_direct(const WeightedSumParams& p);

/// Floating-point version with compensated summation, for irrational eta.
double weighted_sum_direct(int L, int l, double eta);

/// Oracle: sum over every position subset of size >= 2 of
/// (-eta)^|subset| * (1/2 per first/last position landing on slot l).
Rational enumerated_weighted_sum(const WeightedSumParams& p);

/// (1-eta)^{L+l-2} + (1-eta)^{L-l} + eta^2 (1-eta)^{2l-2} + eta(2L-2) - 2,
/// evaluated verbatim.  Requires L > 1.
double closed_form_paper(int L, int l, double eta);
Rational closed_form_paper(const WeightedSumParams& p);

/// The three geometric terms of closed_form_paper without the affine tail.
Rational geometric_terms(int L, int l, const Rational& eta);

template <typename T>
struct LBounds {
  T lower;
  T upper;
};

/// l-independent bounds on geometric_terms for 0 < l < L.
LBounds<double> closed_form_l_bounds(int L, double eta);
LBounds<Rational> closed_form_l_bounds(int L, const Rational& eta);

/// Checks lower <= geometric_terms(L, l, eta) <= upper for every 0 < l < L.
/// The slot l = L lies outside the stated range and is not checked.
bool l_bounds_sweep_holds(int L, const Rational& eta);

}  // namespace rer::comb
