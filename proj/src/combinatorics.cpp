#include "rer/combinatorics.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>

#include "rer/errors.hpp"

namespace rer::comb {

namespace {

template <typename T>
T ipow(T base, long e) {
  T out{1};
  for (long i = 0; i < e; ++i) out *= base;
  return out;
}

void check_enumerable(int L) {
  if (L < 1) throw PreconditionError("slot enumeration needs L >= 1");
  if (L > kEnumerationMaxL) {
    throw EnumerationRefused("slot enumeration refused for L = " + std::to_string(L) +
                             " (cap " + std::to_string(kEnumerationMaxL) +
                             "); use the closed formula");
  }
}

// hits[k][l] = number of half-unit contributions to slot l from subsets of
// size k, over a single pass of every position subset.
std::vector<std::vector<std::uint64_t>> slot_hit_table(int L) {
  check_enumerable(L);
  const int n = 2 * L;
  std::vector<std::vector<std::uint64_t>> hits(n + 1, std::vector<std::uint64_t>(L + 1, 0));
  const std::uint32_t end = std::uint32_t{1} << n;
  for (std::uint32_t mask = 1; mask < end; ++mask) {
    const int k = std::popcount(mask);
    if (k < 2) continue;
    const int first = std::countr_zero(mask);
    const int last = 31 - std::countl_zero(mask);
    ++hits[k][palindromic_slot(L, first)];
    ++hits[k][palindromic_slot(L, last)];
  }
  return hits;
}

// Neumaier's variant of Kahan summation.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

template <typename T>
T closed_form_impl(int L, int l, const T& eta) {
  const T one{1};
  const T q = one - eta;
  return ipow(q, L + l - 2) + ipow(q, L - l) + eta * eta * ipow(q, 2 * l - 2) +
         eta * T(2 * L - 2) - T(2);
}

template <typename T>
LBounds<T> l_bounds_impl(int L, const T& eta) {
  const T one{1};
  const T q = one - eta;
  return {ipow(q, 2 * L - 3) + ipow(q, L - 1) + eta * eta * ipow(q, 2 * L - 4),
          ipow(q, L - 1) + eta * eta + one};
}

void check_closed_form_domain(int L, int l) {
  if (L <= 1) throw PreconditionError("closed form requires L > 1");
  if (l < 1 || l > L) throw PreconditionError("slot l must lie in [1, L]");
}

}  // namespace

void SlotCountQuery::validate() const {
  if (L < 1 || k < 2 || k > 2 * L || l < 1 || l > L) {
    std::ostringstream os;
    os << "invalid slot query (L=" << L << ", k=" << k << ", l=" << l << ")";
    throw PreconditionError(os.str());
  }
}

void WeightedSumParams::validate() const {
  if (!(eta > 0 && eta < 1)) throw PreconditionError("eta must lie in (0, 1)");
  if (L < 1 || l < 1 || l > L) throw PreconditionError("slot l must lie in [1, L]");
}

BigInt binomial(long n, long k) {
  if (n < 0) throw PreconditionError("binomial requires n >= 0");
  if (k < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  BigInt out = 1;
  for (long i = 1; i <= k; ++i) {
    out *= n - k + i;
    out /= i;
  }
  return out;
}

bool pascal_identity_holds(long n, long k) {
  if (n < 1 || k < 1 || k > n - 1) {
    throw PreconditionError("Pascal recursion requires 1 <= k <= n-1");
  }
  return binomial(n - 1, k) + binomial(n - 1, k - 1) == binomial(n, k);
}

bool rising_sum_identity_holds(long n, long m) {
  if (n < 0 || m < 0) throw PreconditionError("rising sum requires n, m >= 0");
  BigInt sum = 0;
  for (long j = 0; j <= m; ++j) sum += binomial(n + j, n);
  return sum == binomial(n + m + 1, n + 1) && sum == binomial(n + m + 1, m);
}

bool vandermonde_interval_identity_holds(long k, long q, long n) {
  if (k < 0 || q < 0 || n < q) {
    throw PreconditionError("interval identity requires k, q >= 0 and n >= q");
  }
  BigInt sum = 0;
  for (long i = q; i <= n; ++i) sum += binomial(i, k);
  return sum == binomial(n + 1, k + 1) - binomial(q, k + 1);
}

int palindromic_slot(int L, int pos) {
  if (pos < 0 || pos >= 2 * L) throw PreconditionError("position outside the slot array");
  return pos < L ? L - pos : pos - L + 1;
}

std::map<int, Rational> enumerate_slot_counts(int L, int k) {
  check_enumerable(L);
  SlotCountQuery{L, k, 1}.validate();
  const int n = 2 * L;
  std::vector<std::uint64_t> halves(L + 1, 0);
  // Gosper's hack: walk every n-bit mask with exactly k bits set.
  std::uint32_t mask = (std::uint32_t{1} << k) - 1;
  const std::uint32_t limit = std::uint32_t{1} << n;
  while (mask < limit) {
    const int first = std::countr_zero(mask);
    const int last = 31 - std::countl_zero(mask);
    ++halves[palindromic_slot(L, first)];
    ++halves[palindromic_slot(L, last)];
    const std::uint32_t c = mask & (~mask + 1);
    const std::uint32_t r = mask + c;
    mask = (((r ^ mask) >> 2) / c) | r;
  }
  std::map<int, Rational> out;
  for (int l = 1; l <= L; ++l) out[l] = Rational(BigInt(halves[l]), BigInt(2));
  return out;
}

Rational slot_count_formula(const SlotCountQuery& q) {
  q.validate();
  const BigInt total = binomial(q.L + q.l - 2, q.k - 1) + binomial(q.L - q.l, q.k - 1) +
                       binomial(2 * q.l - 2, q.k - 2);
  return Rational(total);
}

Rational weighted_sum_direct(const WeightedSumParams& p) {
  p.validate();
  Rational sum = 0;
  const Rational neg = -p.eta;
  Rational power = neg * neg;
  for (int k = 2; k <= 2 * p.L; ++k) {
    sum += power * slot_count_formula({p.L, k, p.l});
    power *= neg;
  }
  return sum;
}

double weighted_sum_direct(int L, int l, double eta) {
  if (!(eta > 0.0 && eta < 1.0)) throw PreconditionError("eta must lie in (0, 1)");
  if (L < 1 || l < 1 || l > L) throw PreconditionError("slot l must lie in [1, L]");
  CompensatedSum sum;
  double power = eta * eta;
  for (int k = 2; k <= 2 * L; ++k) {
    sum.add(power * slot_count_formula({L, k, l}).convert_to<double>());
    power *= -eta;
  }
  return sum.value();
}

Rational enumerated_weighted_sum(const WeightedSumParams& p) {
  p.validate();
  const auto hits = slot_hit_table(p.L);
  Rational sum = 0;
  const Rational neg = -p.eta;
  Rational power = neg * neg;
  for (int k = 2; k <= 2 * p.L; ++k) {
    sum += power * Rational(BigInt(hits[k][p.l]), BigInt(2));
    power *= neg;
  }
  return sum;
}

double closed_form_paper(int L, int l, double eta) {
  check_closed_form_domain(L, l);
  return closed_form_impl<double>(L, l, eta);
}

Rational closed_form_paper(const WeightedSumParams& p) {
  p.validate();
  check_closed_form_domain(p.L, p.l);
  return closed_form_impl<Rational>(p.L, p.l, p.eta);
}

Rational geometric_terms(int L, int l, const Rational& eta) {
  const Rational q = Rational(1) - eta;
  return ipow(q, L + l - 2) + ipow(q, L - l) + eta * eta * ipow(q, 2 * l - 2);
}

LBounds<double> closed_form_l_bounds(int L, double eta) {
  if (L <= 1) throw PreconditionError("l-bounds require L > 1");
  if (!(eta > 0.0 && eta < 1.0)) throw PreconditionError("eta must lie in (0, 1)");
  return l_bounds_impl<double>(L, eta);
}

LBounds<Rational> closed_form_l_bounds(int L, const Rational& eta) {
  if (L <= 1) throw PreconditionError("l-bounds require L > 1");
  if (!(eta > 0 && eta < 1)) throw PreconditionError("eta must lie in (0, 1)");
  return l_bounds_impl<Rational>(L, eta);
}

bool l_bounds_sweep_holds(int L, const Rational& eta) {
  const auto b = closed_form_l_bounds(L, eta);
  for (int l = 1; l < L; ++l) {
    const Rational v = geometric_terms(L, l, eta);
    if (v < b.lower || v > b.upper) return false;
  }
  return true;
}

}  // namespace rer::comb
