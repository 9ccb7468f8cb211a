#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rer/gamma.hpp"
#include "rer/mdp.hpp"
#include "rer/replay.hpp"

namespace rer {

enum class Strategy { ER, RER };

std::string to_string(Strategy s);
/// Accepts "ER" / "RER" (case-insensitive); throws ValidationError.
Strategy parse_strategy(const std::string& s);

struct LearnerConfig {
  double eta = 0.3;
  int L = 8;
  int N = 5;   ///< target sync period, episodes
  int T = 2000;
  double epsilon_explore = 0.1;
  std::uint64_t seed = 7;
  Strategy strategy = Strategy::RER;
  int episode_length = 0;             ///< 0 selects 2L
  std::size_t buffer_capacity = 100000;
  WindowSource window_source = WindowSource::Random;
  int er_batch = 0;                   ///< 0 selects L (same update count as RER)
  bool track_decomposition = false;

  int effective_episode_length() const { return episode_length > 0 ? episode_length : 2 * L; }
  int effective_er_batch() const { return er_batch > 0 ? er_batch : L; }

  /// Throws ValidationError naming every offending field.
  void validate() const;
};

enum class PassOrder { Forward, Reverse };

/// Where the bootstrap value max_a' <., phi(s', a')> comes from.
enum class Bootstrap {
  Target,  ///< the frozen target weights
  Online,  ///< the weights being updated, as of the current step
};

/// One TD sweep over `steps`:
///   eps = r + gamma max_a' <b, phi(s', a')> - <w, phi(s, a)>,  w += eta eps phi(s, a)
/// with b = theta or the running w.  Throws ValidationError when a step's
/// ids fall outside the MDP or a window is not chain-consistent.
Vector td_pass(const Vector& w, const Vector& theta, std::span<const Transition> steps, const LinearMDP& mdp,
               double eta, PassOrder order, Bootstrap bootstrap);

/// Reverse sweep over a forward-ordered window with the target held fixed.
Vector rer_window_update(const Vector& w, const Vector& theta, std::span<const Transition> window,
                         const LinearMDP& mdp, double eta);

/// In-order sweep over a batch with the target held fixed.
Vector er_batch_update(const Vector& w, const Vector& theta, std::span<const Transition> batch,
                       const LinearMDP& mdp, double eta);

struct EpisodeMetrics {
  int episode = 0;
  double sup_error = 0.0;
  double weight_distance = 0.0;
  std::optional<double> bias_norm;
  std::optional<double> variance_norm;
  int target_version = 0;
  bool updated = false;
};

struct RunMetrics {
  std::vector<EpisodeMetrics> episodes;
  long skipped_updates = 0;
  Vector final_weights;
  Vector final_target;
};

/// Episodic linear Q-learning with replay and a target network.  Each
/// episode: act epsilon-greedily for the configured horizon from a uniformly
/// drawn start state, store the episode, retrieve a
/// window (RER) or batch (ER), sweep, sync the target every N episodes, and
/// re-extract the greedy policy.  Weights start at zero.  Deterministic per
/// seed.
RunMetrics train(const LinearMDP& mdp, const LearnerConfig& config);
RunMetrics train(const LinearMDP& mdp, const LearnerConfig& config, const QTable& q_star);

/// Independent runs in parallel; result order matches `configs`.
std::vector<RunMetrics> train_many(const LinearMDP& mdp, const std::vector<LearnerConfig>& configs);

struct DecompositionTerms {
  Vector w_final;   ///< reverse sweep from w1 with target w1
  Vector bias;      ///< Gamma_L (w1 - w*)
  Vector variance;  ///< eta sum_j eps_j G_{j-1} phi_j
  std::vector<double> noise;  ///< eps_j per window step
  double residual = 0.0;      ///< ||(w_final - w*) - (bias + variance)||
};

/// Checks the bias/variance split of one reverse sweep.  The noise of step
/// j is assembled from MDP quantities:
///   eps_j = (r_j - R_j) + gamma (max<w1, phi(s_{j+1}, .)> - E_{s'} max<w1, phi(s', .)>)
///           + (R_j + gamma E_{s'} max<w1, phi(s', .)> - <w*, phi_j>)
/// where the last bracket vanishes whenever w* solves the Bellman equation
/// against the target w1.
DecompositionTerms decompose_window(const Vector& w1, const Vector& w_star, std::span<const Transition> window,
                                    const LinearMDP& mdp, double eta);

double decomposition_residual(const Vector& w1, const Vector& w_star, std::span<const Transition> window,
                              const LinearMDP& mdp, double eta);

struct BiasDecayTrace {
  std::vector<double> l2;   ///< ||x_j||, j = 0..num_syncs (x_0 = x0)
  std::vector<double> phi;  ///< max_{(s,a)} |<phi(s,a), x_j>|
  double kappa = 0.0;       ///< of the behavior chain's stationary distribution
};

/// Applies num_syncs independently drawn window products Gamma_L^{(j)} to
/// x0.  Windows are length-L trajectory pieces of the epsilon-greedy (w.r.t.
/// Q*) behavior chain started from its stationary distribution.
BiasDecayTrace bias_decay_trace(const LinearMDP& mdp, const LearnerConfig& config, const Vector& x0,
                                int num_syncs);

struct BiasDecayRow {
  int sync;
  double l2;
  double phi;
  double phi_ratio;  ///< phi / phi[0]
  double envelope;   ///< bias_decay_envelope(eta, L, kappa, sync, delta)
};

std::vector<BiasDecayRow> bias_decay_report(const BiasDecayTrace& trace, double eta, int L, double delta);

}  // namespace rer
