#include "rer/gamma.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <thread>

#include "rer/combinatorics.hpp"
#include "rer/errors.hpp"
#include "rer/features.hpp"
#include "rer/rng.hpp"

namespace rer {

FeatureSequence::FeatureSequence(std::vector<Vector> features) : features_(std::move(features)) {
  if (features_.empty()) throw InvalidSequence("feature sequence must hold at least one vector");
  const auto d = features_.front().size();
  if (d < 1) throw InvalidSequence("feature dimension must be >= 1");
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (features_[i].size() != d) {
      throw InvalidSequence("feature " + std::to_string(i + 1) + " has dimension " +
                            std::to_string(features_[i].size()) + ", expected " + std::to_string(d));
    }
    if (!(features_[i].squaredNorm() <= 1.0 + kNormSlack)) {
      throw InvalidSequence("feature " + std::to_string(i + 1) + " lies outside the unit ball");
    }
  }
}

namespace {

Matrix projector(const Vector& phi) { return phi * phi.transpose(); }

// Rank-one update factor I - eta phi phi^T applied on the right: m <- m (I - eta phi phi^T).
void right_multiply_factor(Matrix& m, const Vector& phi, double eta) {
  const Vector mphi = m * phi;
  m.noalias() -= eta * mphi * phi.transpose();
}

}  // namespace

GammaProduct gamma_product(const FeatureSequence& seq, double eta) {
  Matrix g = Matrix::Identity(seq.dim(), seq.dim());
  for (int i = 0; i < seq.length(); ++i) right_multiply_factor(g, seq.at(i), eta);
  return {std::move(g), eta, seq.length()};
}

std::vector<Matrix> gamma_prefixes(const FeatureSequence& seq, double eta) {
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(seq.length() + 1));
  out.push_back(Matrix::Identity(seq.dim(), seq.dim()));
  for (int i = 0; i < seq.length(); ++i) {
    Matrix next = out.back();
    right_multiply_factor(next, seq.at(i), eta);
    out.push_back(std::move(next));
  }
  return out;
}

Matrix gram_expansion(const FeatureSequence& seq, double eta) {
  const int L = seq.length();
  if (L > kExpansionMaxL) {
    throw EnumerationRefused("expansion refused for L = " + std::to_string(L) + " (cap " +
                             std::to_string(kExpansionMaxL) + ")");
  }
  const int d = seq.dim();
  std::vector<Matrix> slot_proj;
  slot_proj.reserve(static_cast<std::size_t>(L));
  for (int i = 0; i < L; ++i) slot_proj.push_back(projector(seq.at(i)));

  // I - 2 eta sum_l P_l + sum_{k >= 2} (-eta)^k (ordered products).
  Matrix out = Matrix::Identity(d, d);
  for (const auto& p : slot_proj) out -= 2.0 * eta * p;

  const int n = 2 * L;
  std::vector<int> slot_of(static_cast<std::size_t>(n));
  for (int pos = 0; pos < n; ++pos) slot_of[static_cast<std::size_t>(pos)] = comb::palindromic_slot(L, pos);
  const std::uint32_t end = std::uint32_t{1} << n;
  Matrix term(d, d);
  for (std::uint32_t mask = 1; mask < end; ++mask) {
    const int k = std::popcount(mask);
    if (k < 2) continue;
    bool first = true;
    for (int pos = 0; pos < n; ++pos) {
      if (!(mask >> pos & 1U)) continue;
      const Matrix& p = slot_proj[static_cast<std::size_t>(slot_of[static_cast<std::size_t>(pos)] - 1)];
      if (first) {
        term = p;
        first = false;
      } else {
        term = term * p;
      }
    }
    out += std::pow(-eta, k) * term;
  }
  return out;
}

RelaxTerms relax_terms(const FeatureSequence& seq, std::span<const int> positions, const Vector& x) {
  const int L = seq.length();
  if (positions.size() < 2) throw PreconditionError("relaxation needs at least two factors");
  if (x.size() != seq.dim()) throw PreconditionError("test vector dimension mismatch");
  if (x.isZero(0.0)) throw PreconditionError("test vector must be nonzero");
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (positions[i] < 0 || positions[i] >= 2 * L || (i > 0 && positions[i] <= positions[i - 1])) {
      throw PreconditionError("positions must be strictly increasing indices into the slot array");
    }
  }
  const auto phi_at = [&](int pos) -> const Vector& { return seq.at(comb::palindromic_slot(L, pos) - 1); };
  Matrix prod = projector(phi_at(positions[0]));
  for (std::size_t i = 1; i < positions.size(); ++i) prod = prod * projector(phi_at(positions[i]));
  const Vector& f = phi_at(positions.front());
  const Vector& g = phi_at(positions.back());
  const double fx = f.dot(x);
  const double gx = g.dot(x);
  return {std::abs(x.dot(prod * x)), 0.5 * (fx * fx + gx * gx)};
}

bool relax_inequality_holds(const FeatureSequence& seq, std::span<const int> positions, const Vector& x,
                            double tol) {
  const RelaxTerms t = relax_terms(seq, positions, x);
  return t.lhs <= t.rhs + tol;
}

double theorem_main_coeff(double eta, int L, double kappa) {
  if (!(eta >= 0.0 && eta < 1.0)) throw PreconditionError("eta must lie in [0, 1)");
  if (L < 2) throw PreconditionError("theorem multiplier requires L > 1");
  if (!(kappa > 0.0)) throw PreconditionError("kappa must be positive");
  const double bracket = eta * (4.0 - 2.0 * L) - std::pow(1.0 - eta, L - 1) - eta * eta + 1.0;
  return 1.0 - bracket * L / kappa;
}

std::optional<double> previous_bound_coeff(double eta, int L, double kappa) {
  if (!(kappa > 0.0)) throw PreconditionError("kappa must be positive");
  if (eta * L > 1.0 / 3.0) return std::nullopt;
  return 1.0 - eta * L / kappa;
}

double bias_decay_envelope(double eta, int L, double kappa, int N, double delta) {
  if (!(kappa > 0.0)) throw PreconditionError("kappa must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw PreconditionError("delta must lie in (0, 1)");
  if (N < 0) throw PreconditionError("number of syncs must be >= 0");
  const double bracket = eta * (4.0 - 2.0 * L) - eta * eta + 1.0;
  return std::exp(-bracket * N * L / kappa) * std::sqrt(kappa / delta);
}

std::vector<GridRow> bound_compare_grid(std::span<const double> etas, std::span<const int> Ls) {
  std::vector<GridRow> rows;
  rows.reserve(etas.size() * Ls.size());
  for (const double eta : etas) {
    for (const int L : Ls) {
      const double value_new = (eta * (4.0 - 2.0 * L) - std::pow(1.0 - eta, L - 1) - eta * eta + 1.0) * L;
      const double value_old = eta * L;
      rows.push_back({eta, L, value_new, value_old, value_new > value_old});
    }
  }
  return rows;
}

double lambda_max_sym(const Matrix& a) {
  const Matrix s = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(s, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

double lambda_min_sym(const Matrix& a) {
  const Matrix s = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(s, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

bool psd_leq(const Matrix& a, const Matrix& b, double tol) { return lambda_min_sym(b - a) >= -tol; }

namespace {

constexpr long kBlockSize = 256;

// Recursive halving keeps the rounding pattern fixed by the input order.
Matrix pairwise_sum(std::vector<Matrix>& items, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return items[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  return pairwise_sum(items, lo, mid) + pairwise_sum(items, mid, hi);
}

template <typename BlockFn>
void for_each_block(long num_blocks, unsigned workers, BlockFn&& fn) {
  if (workers == 0) workers = std::max(1U, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<long>(workers, num_blocks));
  if (workers <= 1) {
    for (long b = 0; b < num_blocks; ++b) fn(b);
    return;
  }
  std::atomic<long> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (long b = next.fetch_add(1); b < num_blocks; b = next.fetch_add(1)) fn(b);
    });
  }
  for (auto& t : pool) t.join();
}

Matrix trial_gram(const SequenceGenerator& gen, double eta, int L, std::uint64_t seed, long trial) {
  Rng rng(child_seed(seed, static_cast<std::uint64_t>(trial)));
  const FeatureSequence seq(gen.draw(L, rng));
  const Matrix g = gamma_product(seq, eta).matrix;
  return g.transpose() * g;
}

}  // namespace

BoundReport mc_gram_spectrum(const SequenceGenerator& gen, double eta, int L, long trials, std::uint64_t seed,
                             unsigned workers) {
  if (trials < 1) throw PreconditionError("trials must be >= 1");
  if (L < 1) throw PreconditionError("L must be >= 1");
  const int d = gen.dim();
  const long num_blocks = (trials + kBlockSize - 1) / kBlockSize;

  std::vector<Matrix> block_sums(static_cast<std::size_t>(num_blocks));
  for_each_block(num_blocks, workers, [&](long b) {
    const long lo = b * kBlockSize;
    const long hi = std::min(trials, lo + kBlockSize);
    std::vector<Matrix> grams;
    grams.reserve(static_cast<std::size_t>(hi - lo));
    for (long i = lo; i < hi; ++i) grams.push_back(trial_gram(gen, eta, L, seed, i));
    block_sums[static_cast<std::size_t>(b)] = pairwise_sum(grams, 0, grams.size());
  });
  const Matrix total = pairwise_sum(block_sums, 0, block_sums.size());

  BoundReport rep;
  rep.eta = eta;
  rep.L = L;
  rep.kappa = gen.kappa();
  rep.trials = trials;
  rep.mean = total / static_cast<double>(trials);
  const Matrix sym = 0.5 * (rep.mean + rep.mean.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  rep.lambda_max = es.eigenvalues()(d - 1);
  const Vector top = es.eigenvectors().col(d - 1);

  // Second pass over the same child streams for the spread of v^T G_i v.
  std::vector<double> block_sq(static_cast<std::size_t>(num_blocks), 0.0);
  for_each_block(num_blocks, workers, [&](long b) {
    const long lo = b * kBlockSize;
    const long hi = std::min(trials, lo + kBlockSize);
    double acc = 0.0;
    for (long i = lo; i < hi; ++i) {
      const double dev = top.dot(trial_gram(gen, eta, L, seed, i) * top) - rep.lambda_max;
      acc += dev * dev;
    }
    block_sq[static_cast<std::size_t>(b)] = acc;
  });
  double sq = 0.0;
  for (const double v : block_sq) sq += v;
  rep.lambda_max_stderr = trials > 1 ? std::sqrt(sq / static_cast<double>(trials - 1) / static_cast<double>(trials)) : 0.0;

  const double band = std::max(kEigenTol, 3.0 * rep.lambda_max_stderr);
  if (L >= 2 && eta >= 0.0 && eta < 1.0) rep.coeff_new = theorem_main_coeff(eta, L, rep.kappa);
  rep.coeff_old = previous_bound_coeff(eta, L, rep.kappa);
  rep.holds_new = rep.coeff_new && rep.lambda_max <= *rep.coeff_new + band;
  rep.holds_old = rep.coeff_old && rep.lambda_max <= *rep.coeff_old + band;
  rep.holds_trivial = rep.lambda_max <= 1.0 + kEigenTol;
  rep.vacuous_new = rep.coeff_new && is_vacuous(*rep.coeff_new);
  return rep;
}

}  // namespace rer
