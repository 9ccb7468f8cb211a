#include "rer/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "rer/errors.hpp"
#include "rer/rng.hpp"

namespace rer {

namespace {

constexpr double kStochasticTol = 1e-12;

std::vector<double> random_distribution(int n, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(static_cast<std::size_t>(n));
  double z = 0.0;
  for (auto& x : p) {
    x = u(rng) + 1e-3;
    z += x;
  }
  for (auto& x : p) x /= z;
  return p;
}

void expect(bool ok, const std::string& what) {
  if (!ok) throw ConstructionError("invalid linear MDP: " + what);
}

}  // namespace

LinearMDP::LinearMDP(int num_states, int num_actions, double gamma, std::vector<Vector> features,
                     Vector reward_weights, Matrix anchors)
    : num_states_(num_states),
      num_actions_(num_actions),
      gamma_(gamma),
      features_(std::move(features)),
      reward_weights_(std::move(reward_weights)),
      anchors_(std::move(anchors)) {
  expect(num_states_ >= 1 && num_actions_ >= 1, "need at least one state and one action");
  expect(static_cast<int>(features_.size()) == num_pairs(), "feature table size != S*A");
  expect(reward_weights_.size() >= 1, "feature dimension must be >= 1");
  for (const auto& f : features_) expect(f.size() == reward_weights_.size(), "feature dimension mismatch");
  expect(anchors_.rows() == reward_weights_.size() && anchors_.cols() == num_states_,
         "anchor table must be dim x num_states");
  transition_ = Matrix(num_pairs(), num_states_);
  for (int p = 0; p < num_pairs(); ++p) {
    transition_.row(p) = features_[static_cast<std::size_t>(p)].transpose() * anchors_;
  }
  validate();
}

void LinearMDP::validate() const {
  expect(gamma_ > 0.0 && gamma_ < 1.0, "gamma must lie in (0, 1)");
  for (int p = 0; p < num_pairs(); ++p) {
    const Vector& f = features_[static_cast<std::size_t>(p)];
    expect(f.squaredNorm() <= 1.0 + 1e-12, "feature norm exceeds 1 at pair " + std::to_string(p));
    const double r = reward_weights_.dot(f);
    expect(r >= -1e-12 && r <= 1.0 + 1e-12, "reward outside [0,1] at pair " + std::to_string(p));
  }
  for (Eigen::Index j = 0; j < anchors_.rows(); ++j) {
    expect(anchors_.row(j).minCoeff() >= 0.0, "negative anchor probability");
    expect(std::abs(anchors_.row(j).sum() - 1.0) <= kStochasticTol, "anchor row does not sum to 1");
  }
  for (int p = 0; p < num_pairs(); ++p) {
    expect(transition_.row(p).minCoeff() >= -kStochasticTol, "negative transition probability");
    expect(std::abs(transition_.row(p).sum() - 1.0) <= kStochasticTol,
           "transition row does not sum to 1 at pair " + std::to_string(p));
  }
}

LinearMDP build_tabular(int num_states, int num_actions, double gamma, std::uint64_t seed) {
  if (num_states < 1 || num_actions < 1) throw ConstructionError("need at least one state and action");
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int m = num_states * num_actions;
  std::vector<Vector> features(static_cast<std::size_t>(m), Vector::Zero(m));
  Matrix anchors(m, num_states);
  Vector w(m);
  for (int p = 0; p < m; ++p) {
    features[static_cast<std::size_t>(p)](p) = 1.0;
    const auto row = random_distribution(num_states, rng);
    for (int s = 0; s < num_states; ++s) anchors(p, s) = row[static_cast<std::size_t>(s)];
    w(p) = u(rng);
  }
  return LinearMDP(num_states, num_actions, gamma, std::move(features), std::move(w), std::move(anchors));
}

LinearMDP build_random_linear(int dim, int num_states, int num_actions, double gamma,
                              std::uint64_t seed) {
  if (num_states < 1 || num_actions < 1 || dim < 1) {
    throw ConstructionError("need at least one state, action, and feature");
  }
  if (dim > num_states * num_actions) {
    throw ConstructionError("feature dimension " + std::to_string(dim) + " exceeds S*A = " +
                            std::to_string(num_states * num_actions));
  }
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);
  Matrix anchors(dim, num_states);
  for (int j = 0; j < dim; ++j) {
    const auto row = random_distribution(num_states, rng);
    for (int s = 0; s < num_states; ++s) anchors(j, s) = row[static_cast<std::size_t>(s)];
  }
  const int m = num_states * num_actions;
  std::vector<Vector> features;
  features.reserve(static_cast<std::size_t>(m));
  for (int p = 0; p < m; ++p) {
    // Flat Dirichlet draw: a point on the probability simplex.
    Vector f(dim);
    for (int j = 0; j < dim; ++j) f(j) = expo(rng);
    f /= f.sum();
    features.push_back(std::move(f));
  }
  Vector w(dim);
  for (int j = 0; j < dim; ++j) w(j) = u(rng);
  return LinearMDP(num_states, num_actions, gamma, std::move(features), std::move(w), std::move(anchors));
}

LinearMDP build_chain(int num_states, double gamma) {
  if (num_states < 2) throw ConstructionError("a chain needs at least two states");
  const int n = num_states;
  std::vector<Vector> features(static_cast<std::size_t>(n), Vector::Zero(n));
  Matrix anchors = Matrix::Zero(n, n);
  Vector w = Vector::Zero(n);
  for (int s = 0; s < n; ++s) {
    features[static_cast<std::size_t>(s)](s) = 1.0;
    anchors(s, std::min(s + 1, n - 1)) = 1.0;
  }
  w(n - 2) = 1.0;
  return LinearMDP(n, 1, gamma, std::move(features), std::move(w), std::move(anchors));
}

Policy uniform_policy(const LinearMDP& mdp) {
  return Policy(static_cast<std::size_t>(mdp.num_states()),
                std::vector<double>(static_cast<std::size_t>(mdp.num_actions()), 1.0 / mdp.num_actions()));
}

int QTable::greedy_action(int s) const {
  int best = 0;
  for (int a = 1; a < num_actions; ++a) {
    if (at(s, a) > at(s, best)) best = a;
  }
  return best;
}

double QTable::max_value(int s) const { return at(s, greedy_action(s)); }

Policy epsilon_greedy_policy(const QTable& q, double epsilon) {
  if (epsilon < 0.0 || epsilon > 1.0) throw PreconditionError("epsilon must lie in [0, 1]");
  Policy pi(static_cast<std::size_t>(q.num_states),
            std::vector<double>(static_cast<std::size_t>(q.num_actions), epsilon / q.num_actions));
  for (int s = 0; s < q.num_states; ++s) {
    pi[static_cast<std::size_t>(s)][static_cast<std::size_t>(q.greedy_action(s))] += 1.0 - epsilon;
  }
  return pi;
}

QTable bellman_apply(const LinearMDP& mdp, const QTable& q) {
  Vector v(mdp.num_states());
  for (int s = 0; s < mdp.num_states(); ++s) v(s) = q.max_value(s);
  const Vector next = mdp.transition() * v;
  QTable out{mdp.num_states(), mdp.num_actions(), std::vector<double>(static_cast<std::size_t>(mdp.num_pairs()))};
  for (int s = 0; s < mdp.num_states(); ++s) {
    for (int a = 0; a < mdp.num_actions(); ++a) {
      const int p = mdp.pair(s, a);
      out.values[static_cast<std::size_t>(p)] = mdp.reward(s, a) + mdp.gamma() * next(p);
    }
  }
  return out;
}

double bellman_residual(const LinearMDP& mdp, const QTable& q) {
  const QTable tq = bellman_apply(mdp, q);
  double r = 0.0;
  for (std::size_t i = 0; i < q.values.size(); ++i) r = std::max(r, std::abs(tq.values[i] - q.values[i]));
  return r;
}

QTable optimal_q(const LinearMDP& mdp, double tol) {
  if (!(tol > 0.0)) throw PreconditionError("value iteration tolerance must be positive");
  const double stop = tol * (1.0 - mdp.gamma()) / (2.0 * mdp.gamma());
  QTable q{mdp.num_states(), mdp.num_actions(), std::vector<double>(static_cast<std::size_t>(mdp.num_pairs()), 0.0)};
  for (;;) {
    QTable next = bellman_apply(mdp, q);
    double diff = 0.0;
    for (std::size_t i = 0; i < q.values.size(); ++i) diff = std::max(diff, std::abs(next.values[i] - q.values[i]));
    q = std::move(next);
    if (diff <= stop) return q;
  }
}

Vector optimal_weights(const LinearMDP& mdp, const QTable& q_star) {
  Vector v(mdp.num_states());
  for (int s = 0; s < mdp.num_states(); ++s) v(s) = q_star.max_value(s);
  return mdp.reward_weights() + mdp.gamma() * (mdp.anchors() * v);
}

QTable q_from_weights(const LinearMDP& mdp, const Vector& w) {
  QTable q{mdp.num_states(), mdp.num_actions(), std::vector<double>(static_cast<std::size_t>(mdp.num_pairs()))};
  for (int p = 0; p < mdp.num_pairs(); ++p) {
    q.values[static_cast<std::size_t>(p)] = w.dot(mdp.features()[static_cast<std::size_t>(p)]);
  }
  return q;
}

Matrix state_action_chain(const LinearMDP& mdp, const Policy& policy) {
  if (static_cast<int>(policy.size()) != mdp.num_states()) {
    throw PreconditionError("policy must have one row per state");
  }
  const int m = mdp.num_pairs();
  Matrix chain = Matrix::Zero(m, m);
  for (int p = 0; p < m; ++p) {
    for (int s2 = 0; s2 < mdp.num_states(); ++s2) {
      const double ps = mdp.transition()(p, s2);
      if (ps == 0.0) continue;
      const auto& row = policy[static_cast<std::size_t>(s2)];
      for (int a2 = 0; a2 < mdp.num_actions(); ++a2) {
        chain(p, mdp.pair(s2, a2)) += ps * row[static_cast<std::size_t>(a2)];
      }
    }
  }
  return chain;
}

namespace {

Eigen::RowVectorXd power_iterate(const Matrix& chain, Eigen::RowVectorXd mu, double tol) {
  for (long it = 0; it < kStationaryMaxIterations; ++it) {
    Eigen::RowVectorXd next = mu * chain;
    const double diff = (next - mu).lpNorm<1>();
    mu = std::move(next);
    if (diff <= tol) return mu;
  }
  throw NonErgodic("state-action chain did not converge within " +
                   std::to_string(kStationaryMaxIterations) + " iterations (periodic or slowly mixing)");
}

}  // namespace

StationaryDistribution stationary_distribution(const LinearMDP& mdp, const Policy& policy, double tol) {
  if (!(tol > 0.0)) throw PreconditionError("stationary tolerance must be positive");
  const Matrix chain = state_action_chain(mdp, policy);
  const int m = mdp.num_pairs();
  Eigen::RowVectorXd point = Eigen::RowVectorXd::Zero(m);
  point(0) = 1.0;
  const Eigen::RowVectorXd from_point = power_iterate(chain, point, tol);
  const Eigen::RowVectorXd from_uniform =
      power_iterate(chain, Eigen::RowVectorXd::Constant(m, 1.0 / m), tol);
  if ((from_point - from_uniform).lpNorm<1>() > std::max(1e-8, std::sqrt(tol))) {
    throw NonErgodic("power iteration reached different limits from different starts (reducible chain)");
  }
  StationaryDistribution out;
  out.weights.assign(from_point.data(), from_point.data() + m);
  double z = 0.0;
  for (double& x : out.weights) {
    x = std::max(x, 0.0);
    z += x;
  }
  for (double& x : out.weights) x /= z;
  return out;
}

Matrix feature_gram(const LinearMDP& mdp, const StationaryDistribution& mu) {
  if (static_cast<int>(mu.weights.size()) != mdp.num_pairs()) {
    throw PreconditionError("distribution size does not match the number of pairs");
  }
  Matrix g = Matrix::Zero(mdp.dim(), mdp.dim());
  for (int p = 0; p < mdp.num_pairs(); ++p) {
    const Vector& f = mdp.features()[static_cast<std::size_t>(p)];
    g += mu.weights[static_cast<std::size_t>(p)] * (f * f.transpose());
  }
  return g;
}

double kappa_of(const LinearMDP& mdp, const StationaryDistribution& mu) {
  const Matrix g = feature_gram(mdp, mu);
  Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  if (lmin <= 1e-12) {
    std::ostringstream os;
    os << "feature Gram matrix is singular (lambda_min = " << lmin << "); kappa undefined";
    throw KappaUndefined(os.str());
  }
  return 1.0 / lmin;
}

namespace {

constexpr const char* kMdpSchema = "rer.linear_mdp";
constexpr int kMdpVersion = 1;

nlohmann::json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector json_vec(const nlohmann::json& j, const char* field) {
  if (!j.is_array()) throw ValidationError(std::string("field '") + field + "' must be an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ValidationError(std::string("field '") + field + "' must hold numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

const nlohmann::json& require(const nlohmann::json& doc, const char* field) {
  if (!doc.contains(field)) throw ValidationError(std::string("missing field '") + field + "'");
  return doc.at(field);
}

}  // namespace

std::string mdp_to_json(const LinearMDP& mdp) {
  nlohmann::json doc;
  doc["schema"] = kMdpSchema;
  doc["version"] = kMdpVersion;
  doc["num_states"] = mdp.num_states();
  doc["num_actions"] = mdp.num_actions();
  doc["dim"] = mdp.dim();
  doc["gamma"] = mdp.gamma();
  nlohmann::json feats = nlohmann::json::array();
  for (const auto& f : mdp.features()) feats.push_back(vec_json(f));
  doc["features"] = feats;
  doc["reward_weights"] = vec_json(mdp.reward_weights());
  nlohmann::json anchors = nlohmann::json::array();
  for (Eigen::Index j = 0; j < mdp.anchors().rows(); ++j) anchors.push_back(vec_json(mdp.anchors().row(j).transpose()));
  doc["anchors"] = anchors;
  nlohmann::json trans = nlohmann::json::array();
  for (Eigen::Index p = 0; p < mdp.transition().rows(); ++p) trans.push_back(vec_json(mdp.transition().row(p).transpose()));
  doc["transition"] = trans;
  return doc.dump(2);
}

LinearMDP mdp_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("MDP document is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("MDP document must be a JSON object");
  if (require(doc, "schema") != kMdpSchema) throw ValidationError("unexpected schema tag");
  if (require(doc, "version") != kMdpVersion) throw ValidationError("unsupported MDP document version");
  const auto int_field = [&](const char* name) {
    const auto& v = require(doc, name);
    if (!v.is_number_integer()) throw ValidationError(std::string("field '") + name + "' must be an integer");
    return v.get<int>();
  };
  const int s = int_field("num_states");
  const int a = int_field("num_actions");
  const int d = int_field("dim");
  const auto& g = require(doc, "gamma");
  if (!g.is_number()) throw ValidationError("field 'gamma' must be a number");
  const auto& feats = require(doc, "features");
  if (!feats.is_array()) throw ValidationError("field 'features' must be an array");
  std::vector<Vector> features;
  for (const auto& f : feats) features.push_back(json_vec(f, "features"));
  Vector w = json_vec(require(doc, "reward_weights"), "reward_weights");
  const auto& anc = require(doc, "anchors");
  if (!anc.is_array() || static_cast<int>(anc.size()) != d) {
    throw ValidationError("field 'anchors' must hold dim rows");
  }
  Matrix anchors(d, s);
  for (int j = 0; j < d; ++j) {
    const Vector row = json_vec(anc[static_cast<std::size_t>(j)], "anchors");
    if (row.size() != s) throw ValidationError("anchor rows must have num_states entries");
    anchors.row(j) = row.transpose();
  }
  if (w.size() != d) throw ValidationError("reward_weights must have dim entries");
  LinearMDP mdp(s, a, g.get<double>(), std::move(features), std::move(w), std::move(anchors));
  if (doc.contains("transition")) {
    const auto& trans = doc.at("transition");
    if (!trans.is_array() || static_cast<int>(trans.size()) != mdp.num_pairs()) {
      throw ValidationError("field 'transition' must hold one row per pair");
    }
    for (int p = 0; p < mdp.num_pairs(); ++p) {
      const Vector row = json_vec(trans[static_cast<std::size_t>(p)], "transition");
      if (row.size() != s || (row.transpose() - mdp.transition().row(p)).cwiseAbs().maxCoeff() > 1e-12) {
        throw ValidationError("stored transition table disagrees with features x anchors");
      }
    }
  }
  return mdp;
}

}  // namespace rer
