#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace rer {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Finite MDP with reward r(s,a) = <w_r, phi(s,a)> and transition kernel
/// P(.|s,a) = sum_j phi_j(s,a) nu_j(.) for stored anchor distributions nu_j.
/// Immutable once built.
class LinearMDP {
 public:
  /// Builds and validates.  `features` is indexed by pair(s, a); `anchors`
  /// is dim x num_states with one distribution per row.  Throws
  /// ConstructionError when any invariant fails.
  LinearMDP(int num_states, int num_actions, double gamma, std::vector<Vector> features,
            Vector reward_weights, Matrix anchors);

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  int num_pairs() const { return num_states_ * num_actions_; }
  int dim() const { return static_cast<int>(reward_weights_.size()); }
  double gamma() const { return gamma_; }

  int pair(int s, int a) const { return s * num_actions_ + a; }
  const Vector& feature(int s, int a) const { return features_[static_cast<std::size_t>(pair(s, a))]; }
  const std::vector<Vector>& features() const { return features_; }
  const Vector& reward_weights() const { return reward_weights_; }
  const Matrix& anchors() const { return anchors_; }
  /// (num_pairs x num_states); row pair(s,a) is P(.|s,a).
  const Matrix& transition() const { return transition_; }

  double reward(int s, int a) const { return reward_weights_.dot(feature(s, a)); }

  /// Re-checks every invariant; throws ConstructionError on failure.
  void validate() const;

 private:
  int num_states_;
  int num_actions_;
  double gamma_;
  std::vector<Vector> features_;
  Vector reward_weights_;
  Matrix anchors_;
  Matrix transition_;
};

/// One-hot features over all (s, a) pairs; d = num_states * num_actions.
LinearMDP build_tabular(int num_states, int num_actions, double gamma, std::uint64_t seed);

/// Simplex features with dim anchor distributions.  Throws ConstructionError
/// when dim > num_states * num_actions.
LinearMDP build_random_linear(int dim, int num_states, int num_actions, double gamma,
                              std::uint64_t seed);

/// Deterministic single-action chain s_0 -> s_1 -> ... -> s_{n-1}, where
/// s_{n-1} is an absorbing zero-reward state and the only reward (1) is
/// earned leaving s_{n-2}.  Tabular features.  Requires n >= 2.
LinearMDP build_chain(int num_states, double gamma);

/// policy[s][a] = probability of action a in state s.
using Policy = std::vector<std::vector<double>>;

Policy uniform_policy(const LinearMDP& mdp);

struct QTable {
  int num_states = 0;
  int num_actions = 0;
  std::vector<double> values;  ///< indexed by s * num_actions + a

  double at(int s, int a) const { return values[static_cast<std::size_t>(s * num_actions + a)]; }
  /// Greedy action, lowest id on ties.
  int greedy_action(int s) const;
  double max_value(int s) const;
};

/// With probability epsilon act uniformly, otherwise greedily w.r.t. q
/// (lowest action id on ties).
Policy epsilon_greedy_policy(const QTable& q, double epsilon);

QTable bellman_apply(const LinearMDP& mdp, const QTable& q);
double bellman_residual(const LinearMDP& mdp, const QTable& q);

/// Value iteration with the gamma-contraction stopping rule; the returned
/// table satisfies bellman_residual <= tol.
QTable optimal_q(const LinearMDP& mdp, double tol);

/// w* with <w*, phi(s,a)> = Q*(s,a): w_r + gamma * anchors * V*.
Vector optimal_weights(const LinearMDP& mdp, const QTable& q_star);

/// Q-table of a linear weight vector.
QTable q_from_weights(const LinearMDP& mdp, const Vector& w);

struct StationaryDistribution {
  std::vector<double> weights;  ///< over pairs, indexed like LinearMDP::pair
};

inline constexpr long kStationaryMaxIterations = 100000;

/// Power iteration on the state-action chain induced by `policy`, from two
/// different starts.  Throws NonErgodic if either fails to converge within
/// kStationaryMaxIterations or the two limits disagree.
StationaryDistribution stationary_distribution(const LinearMDP& mdp, const Policy& policy,
                                               double tol);

/// Pair-to-pair transition matrix of the induced chain.
Matrix state_action_chain(const LinearMDP& mdp, const Policy& policy);

/// sum_{(s,a)} mu(s,a) phi(s,a) phi(s,a)^T.
Matrix feature_gram(const LinearMDP& mdp, const StationaryDistribution& mu);

/// 1 / lambda_min(feature_gram).  Throws KappaUndefined when
/// lambda_min <= 1e-12.
double kappa_of(const LinearMDP& mdp, const StationaryDistribution& mu);

/// Versioned JSON document ("rer.linear_mdp", version 1).
std::string mdp_to_json(const LinearMDP& mdp);
/// Throws ValidationError on malformed documents, ConstructionError when
/// the decoded instance breaks an invariant.
LinearMDP mdp_from_json(const std::string& text);

}  // namespace rer
