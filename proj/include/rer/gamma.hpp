#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rer {

class SequenceGenerator;

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Ordered features phi_1..phi_L of one window, all of one dimension, each
/// with phi^T phi <= 1.
class FeatureSequence {
 public:
  /// Slack allowed on phi^T phi <= 1 for renormalized floating features.
  static constexpr double kNormSlack = 1e-12;

  /// Throws InvalidSequence on empty input, mixed dimensions, or a feature
  /// outside the unit ball.
  explicit FeatureSequence(std::vector<Vector> features);

  int length() const { return static_cast<int>(features_.size()); }
  int dim() const { return static_cast<int>(features_.front().size()); }

  /// 0-based: at(0) is phi_1.
  const Vector& at(int i) const { return features_.at(static_cast<std::size_t>(i)); }
  const std::vector<Vector>& features() const { return features_; }

 private:
  std::vector<Vector> features_;
};

struct GammaProduct {
  Matrix matrix;
  double eta;
  int length;
};

/// prod_{l=1}^{L} (I - eta phi_l phi_l^T), l = 1 leftmost.
GammaProduct gamma_product(const FeatureSequence& seq, double eta);

/// Prefix products G_0 = I, G_j = prod_{i=1}^{j} (I - eta phi_i phi_i^T).
/// G_L equals gamma_product(seq, eta).matrix.
std::vector<Matrix> gamma_prefixes(const FeatureSequence& seq, double eta);

inline constexpr int kExpansionMaxL = 8;

/// Gamma_L^T Gamma_L rebuilt from its term-by-term expansion over every
/// increasing subset of the palindromic slot array.  Brute force; throws
/// EnumerationRefused when L > kExpansionMaxL.
Matrix gram_expansion(const FeatureSequence& seq, double eta);

struct RelaxTerms {
  double lhs;  ///< |x^T P_{l_1} ... P_{l_k} x|
  double rhs;  ///< (1/2) x^T (P_{l_1} + P_{l_k}) x
};

/// `positions` are strictly increasing 0-based indices into the
/// palindromic array of length 2L.  Requires |positions| >= 2 and x != 0.
RelaxTerms relax_terms(const FeatureSequence& seq, std::span<const int> positions,
                       const Vector& x);

bool relax_inequality_holds(const FeatureSequence& seq, std::span<const int> positions,
                            const Vector& x, double tol = 1e-12);

/// 1 - (eta(4-2L) - (1-eta)^{L-1} - eta^2 + 1) L / kappa.
double theorem_main_coeff(double eta, int L, double kappa);

/// The multiplier is vacuous as a contraction once it reaches 1.
inline bool is_vacuous(double coeff) { return coeff >= 1.0; }

/// 1 - eta L / kappa when eta L <= 1/3, otherwise absent.
std::optional<double> previous_bound_coeff(double eta, int L, double kappa);

/// exp(-(eta(4-2L) - eta^2 + 1) N L / kappa) * sqrt(kappa / delta).
double bias_decay_envelope(double eta, int L, double kappa, int N, double delta);

struct GridRow {
  double eta;
  int L;
  double value_new;  ///< (eta(4-2L) - (1-eta)^{L-1} - eta^2 + 1) L
  double value_old;  ///< eta L
  bool new_gt_old;
};

std::vector<GridRow> bound_compare_grid(std::span<const double> etas, std::span<const int> Ls);

/// Largest / smallest eigenvalue of (A + A^T) / 2.
double lambda_max_sym(const Matrix& a);
double lambda_min_sym(const Matrix& a);

/// A <= B in the PSD order: lambda_min(B - A) >= -tol.
bool psd_leq(const Matrix& a, const Matrix& b, double tol = 1e-10);

struct BoundReport {
  double eta = 0.0;
  int L = 0;
  double kappa = 0.0;
  std::optional<double> coeff_new;  ///< theorem_main_coeff; absent for L = 1
  std::optional<double> coeff_old;  ///< previous_bound_coeff
  double lambda_max = 0.0;          ///< of the symmetrized Monte Carlo mean
  double lambda_max_stderr = 0.0;   ///< along the estimated top eigenvector
  long trials = 0;
  bool holds_new = false;
  bool holds_old = false;
  bool holds_trivial = false;
  bool vacuous_new = false;
  Matrix mean;
};

/// Exact-claim tolerance used for deterministic eigenvalue comparisons.
inline constexpr double kEigenTol = 1e-10;

/// Monte Carlo estimate of E[Gamma_L^T Gamma_L] over sequences drawn from
/// `gen`.  Trial i uses the child stream child_seed(seed, i), and partial
/// sums are merged pairwise over fixed blocks, so the result is identical
/// for any `workers` value (0 = hardware concurrency).
BoundReport mc_gram_spectrum(const SequenceGenerator& gen, double eta, int L, long trials,
                             std::uint64_t seed, unsigned workers = 0);

}  // namespace rer
