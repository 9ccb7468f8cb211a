#include "rer/qlearn.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <future>
#include <memory>
#include <sstream>

#include "rer/errors.hpp"
#include "rer/features.hpp"
#include "rer/rng.hpp"

namespace rer {

std::string to_string(Strategy s) { return s == Strategy::ER ? "ER" : "RER"; }

Strategy parse_strategy(const std::string& s) {
  std::string up = s;
  std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (up == "ER") return Strategy::ER;
  if (up == "RER") return Strategy::RER;
  throw ValidationError("strategy: expected ER or RER, got '" + s + "'");
}

void LearnerConfig::validate() const {
  std::vector<std::string> problems;
  if (!(eta > 0.0 && eta < 1.0)) problems.push_back("eta must lie in (0, 1)");
  if (L < 1) problems.push_back("L must be >= 1");
  if (N < 1) problems.push_back("N must be >= 1");
  if (T < 0) problems.push_back("T must be >= 0");
  if (!(epsilon_explore >= 0.0 && epsilon_explore <= 1.0)) problems.push_back("epsilon_explore must lie in [0, 1]");
  if (episode_length < 0) problems.push_back("episode_length must be >= 0 (0 selects 2L)");
  if (er_batch < 0) problems.push_back("er_batch must be >= 0 (0 selects L)");
  if (buffer_capacity == 0) problems.push_back("buffer_capacity must be positive");
  if (buffer_capacity < static_cast<std::size_t>(std::max(1, effective_episode_length()))) {
    problems.push_back("buffer_capacity must hold at least one episode");
  }
  if (!problems.empty()) {
    std::string msg = "invalid learner config:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ValidationError(msg);
  }
}

namespace {

double max_next_value(const LinearMDP& mdp, const Vector& w, int s) {
  double best = w.dot(mdp.feature(s, 0));
  for (int a = 1; a < mdp.num_actions(); ++a) best = std::max(best, w.dot(mdp.feature(s, a)));
  return best;
}

void check_ids(const LinearMDP& mdp, const Transition& t) {
  if (t.state < 0 || t.state >= mdp.num_states() || t.next_state < 0 || t.next_state >= mdp.num_states() ||
      t.action < 0 || t.action >= mdp.num_actions()) {
    throw ValidationError("transition ids fall outside the MDP");
  }
}

void check_window(std::span<const Transition> window) {
  for (std::size_t i = 1; i < window.size(); ++i) {
    if (window[i - 1].next_state != window[i].state) throw ValidationError("window is not chain-consistent");
  }
}

int greedy(const LinearMDP& mdp, const Vector& w, int s) {
  int best = 0;
  double best_v = w.dot(mdp.feature(s, 0));
  for (int a = 1; a < mdp.num_actions(); ++a) {
    const double v = w.dot(mdp.feature(s, a));
    if (v > best_v) {
      best = a;
      best_v = v;
    }
  }
  return best;
}

int sample_row(const Matrix& m, int row, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double x = u(rng);
  double acc = 0.0;
  int last = 0;
  for (int j = 0; j < m.cols(); ++j) {
    const double p = m(row, j);
    if (p <= 0.0) continue;
    acc += p;
    last = j;
    if (x < acc) return j;
  }
  return last;
}

double sup_error(const LinearMDP& mdp, const Vector& w, const QTable& q_star) {
  double err = 0.0;
  for (int p = 0; p < mdp.num_pairs(); ++p) {
    err = std::max(err, std::abs(w.dot(mdp.features()[static_cast<std::size_t>(p)]) -
                                 q_star.values[static_cast<std::size_t>(p)]));
  }
  return err;
}

FeatureSequence window_features(const LinearMDP& mdp, std::span<const Transition> steps) {
  std::vector<Vector> f;
  f.reserve(steps.size());
  for (const auto& t : steps) f.push_back(mdp.feature(t.state, t.action));
  return FeatureSequence(std::move(f));
}

}  // namespace

Vector td_pass(const Vector& w, const Vector& theta, std::span<const Transition> steps, const LinearMDP& mdp,
               double eta, PassOrder order, Bootstrap bootstrap) {
  if (w.size() != mdp.dim() || theta.size() != mdp.dim()) throw ValidationError("weight dimension mismatch");
  for (const auto& t : steps) check_ids(mdp, t);
  Vector out = w;
  const auto n = static_cast<std::ptrdiff_t>(steps.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& t = steps[static_cast<std::size_t>(order == PassOrder::Reverse ? n - 1 - i : i)];
    const Vector& phi = mdp.feature(t.state, t.action);
    const Vector& boot = bootstrap == Bootstrap::Target ? theta : out;
    const double td = t.reward + mdp.gamma() * max_next_value(mdp, boot, t.next_state) - out.dot(phi);
    out += eta * td * phi;
  }
  return out;
}

Vector rer_window_update(const Vector& w, const Vector& theta, std::span<const Transition> window,
                         const LinearMDP& mdp, double eta) {
  check_window(window);
  return td_pass(w, theta, window, mdp, eta, PassOrder::Reverse, Bootstrap::Target);
}

Vector er_batch_update(const Vector& w, const Vector& theta, std::span<const Transition> batch, const LinearMDP& mdp,
                       double eta) {
  if (batch.empty()) throw PreconditionError("batch must be nonempty");
  return td_pass(w, theta, batch, mdp, eta, PassOrder::Forward, Bootstrap::Target);
}

RunMetrics train(const LinearMDP& mdp, const LearnerConfig& config) {
  return train(mdp, config, optimal_q(mdp, 1e-10));
}

RunMetrics train(const LinearMDP& mdp, const LearnerConfig& config, const QTable& q_star) {
  config.validate();
  const Vector w_star = optimal_weights(mdp, q_star);
  Rng act_rng(child_seed(config.seed, 1));
  Rng replay_rng(child_seed(config.seed, 2));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<int> any_action(0, mdp.num_actions() - 1);
  std::uniform_int_distribution<int> any_state(0, mdp.num_states() - 1);

  RunMetrics metrics;
  metrics.episodes.reserve(static_cast<std::size_t>(config.T));
  ReplayBuffer buffer(config.buffer_capacity);
  Vector w = Vector::Zero(mdp.dim());
  Vector theta = w;
  int target_version = 0;
  std::vector<int> policy(static_cast<std::size_t>(mdp.num_states()));
  for (int s = 0; s < mdp.num_states(); ++s) policy[static_cast<std::size_t>(s)] = greedy(mdp, w, s);
  const int horizon = config.effective_episode_length();

  for (int t = 1; t <= config.T; ++t) {
    std::vector<Transition> steps;
    steps.reserve(static_cast<std::size_t>(horizon));
    int state = any_state(act_rng);
    for (int i = 0; i < horizon; ++i) {
      const int a = u01(act_rng) < config.epsilon_explore ? any_action(act_rng) : policy[static_cast<std::size_t>(state)];
      const int next = sample_row(mdp.transition(), mdp.pair(state, a), act_rng);
      steps.push_back({state, a, mdp.reward(state, a), next});
      state = next;
    }
    buffer.append_episode(Episode(std::move(steps)));

    EpisodeMetrics rec;
    rec.episode = t;
    const Vector w_before = w;
    std::vector<Transition> used;
    try {
      if (config.strategy == Strategy::RER) {
        used = buffer.sample_window(config.L, replay_rng, config.window_source);
        w = rer_window_update(w, theta, used, mdp, config.eta);
      } else {
        used = buffer.sample_uniform(config.effective_er_batch(), replay_rng);
        w = er_batch_update(w, theta, used, mdp, config.eta);
      }
      rec.updated = true;
    } catch (const InsufficientData&) {
      ++metrics.skipped_updates;
    }

    if (config.track_decomposition && rec.updated) {
      // The reverse sweep contracts by Gamma of the window in forward
      // order; an in-order sweep by Gamma of the reversed batch.
      if (config.strategy == Strategy::ER) std::reverse(used.begin(), used.end());
      const Matrix g = gamma_product(window_features(mdp, used), config.eta).matrix;
      const Vector bias = g * (w_before - w_star);
      rec.bias_norm = bias.norm();
      rec.variance_norm = ((w - w_star) - bias).norm();
    }

    if (t % config.N == 0) {
      theta = w;
      ++target_version;
    }
    for (int s = 0; s < mdp.num_states(); ++s) policy[static_cast<std::size_t>(s)] = greedy(mdp, w, s);

    rec.sup_error = sup_error(mdp, w, q_star);
    rec.weight_distance = (w - w_star).norm();
    rec.target_version = target_version;
    metrics.episodes.push_back(rec);
  }
  metrics.final_weights = w;
  metrics.final_target = theta;
  return metrics;
}

std::vector<RunMetrics> train_many(const LinearMDP& mdp, const std::vector<LearnerConfig>& configs) {
  const QTable q_star = optimal_q(mdp, 1e-10);
  std::vector<std::future<RunMetrics>> futures;
  futures.reserve(configs.size());
  for (const auto& c : configs) {
    futures.push_back(std::async(std::launch::async, [&mdp, &q_star, c] { return train(mdp, c, q_star); }));
  }
  std::vector<RunMetrics> out;
  out.reserve(configs.size());
  for (auto& f : futures) out.push_back(f.get());
  return out;
}

DecompositionTerms decompose_window(const Vector& w1, const Vector& w_star, std::span<const Transition> window,
                                    const LinearMDP& mdp, double eta) {
  if (window.empty()) throw PreconditionError("window must be nonempty");
  DecompositionTerms out;
  out.w_final = rer_window_update(w1, w1, window, mdp, eta);

  const FeatureSequence seq = window_features(mdp, window);
  const std::vector<Matrix> prefix = gamma_prefixes(seq, eta);
  const int L = seq.length();

  Vector next_max(mdp.num_states());
  for (int s = 0; s < mdp.num_states(); ++s) next_max(s) = max_next_value(mdp, w1, s);

  out.bias = prefix[static_cast<std::size_t>(L)] * (w1 - w_star);
  out.variance = Vector::Zero(mdp.dim());
  out.noise.reserve(window.size());
  for (int j = 0; j < L; ++j) {
    const Transition& t = window[static_cast<std::size_t>(j)];
    const Vector& phi = seq.at(j);
    const double mean_reward = mdp.reward(t.state, t.action);
    const double expected_next = mdp.transition().row(mdp.pair(t.state, t.action)).dot(next_max);
    const double reward_noise = t.reward - mean_reward;
    const double transition_noise = mdp.gamma() * (next_max(t.next_state) - expected_next);
    const double bellman_gap = mean_reward + mdp.gamma() * expected_next - w_star.dot(phi);
    const double eps = reward_noise + transition_noise + bellman_gap;
    out.noise.push_back(eps);
    out.variance += eta * eps * (prefix[static_cast<std::size_t>(j)] * phi);
  }
  out.residual = ((out.w_final - w_star) - (out.bias + out.variance)).norm();
  return out;
}

double decomposition_residual(const Vector& w1, const Vector& w_star, std::span<const Transition> window,
                              const LinearMDP& mdp, double eta) {
  return decompose_window(w1, w_star, window, mdp, eta).residual;
}

BiasDecayTrace bias_decay_trace(const LinearMDP& mdp, const LearnerConfig& config, const Vector& x0, int num_syncs) {
  if (x0.size() != mdp.dim()) throw PreconditionError("x0 dimension mismatch");
  if (x0.isZero(0.0)) throw PreconditionError("x0 must be nonzero");
  if (num_syncs < 0) throw PreconditionError("num_syncs must be >= 0");
  const QTable q_star = optimal_q(mdp, 1e-10);
  auto shared = std::make_shared<const LinearMDP>(mdp);
  const MdpTrajectoryGenerator gen(shared, epsilon_greedy_policy(q_star, config.epsilon_explore));

  const auto phi_norm = [&](const Vector& x) {
    double m = 0.0;
    for (const auto& f : mdp.features()) m = std::max(m, std::abs(f.dot(x)));
    return m;
  };

  BiasDecayTrace trace;
  trace.kappa = gen.kappa();
  Vector x = x0;
  trace.l2.push_back(x.norm());
  trace.phi.push_back(phi_norm(x));
  Rng rng(child_seed(config.seed, 3));
  for (int j = 0; j < num_syncs; ++j) {
    const FeatureSequence seq(gen.draw(config.L, rng));
    x = gamma_product(seq, config.eta).matrix * x;
    trace.l2.push_back(x.norm());
    trace.phi.push_back(phi_norm(x));
  }
  return trace;
}

std::vector<BiasDecayRow> bias_decay_report(const BiasDecayTrace& trace, double eta, int L, double delta) {
  std::vector<BiasDecayRow> rows;
  rows.reserve(trace.l2.size());
  const double phi0 = trace.phi.empty() ? 0.0 : trace.phi.front();
  for (std::size_t j = 0; j < trace.l2.size(); ++j) {
    rows.push_back({static_cast<int>(j), trace.l2[j], trace.phi[j], phi0 > 0.0 ? trace.phi[j] / phi0 : 0.0,
                    bias_decay_envelope(eta, L, trace.kappa, static_cast<int>(j), delta)});
  }
  return rows;
}

}  // namespace rer
