#include "rer/features.hpp"

#include <cmath>

#include "rer/errors.hpp"

namespace rer {

namespace {

template <typename Weights>
int draw_index(const Weights& w, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double x = u(rng);
  double acc = 0.0;
  int last_positive = 0;
  for (int i = 0; i < static_cast<int>(w.size()); ++i) {
    const double wi = w[static_cast<std::size_t>(i)];
    if (wi <= 0.0) continue;
    acc += wi;
    last_positive = i;
    if (x < acc) return i;
  }
  return last_positive;
}

}  // namespace

OneHotGenerator::OneHotGenerator(int dim) : dim_(dim) {
  if (dim < 1) throw PreconditionError("generator dimension must be >= 1");
}

std::vector<Vector> OneHotGenerator::draw(int L, Rng& rng) const {
  std::uniform_int_distribution<int> pick(0, dim_ - 1);
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(L));
  for (int i = 0; i < L; ++i) {
    Vector v = Vector::Zero(dim_);
    v(pick(rng)) = 1.0;
    out.push_back(std::move(v));
  }
  return out;
}

GaussianDirectionGenerator::GaussianDirectionGenerator(int dim) : dim_(dim) {
  if (dim < 1) throw PreconditionError("generator dimension must be >= 1");
}

std::vector<Vector> GaussianDirectionGenerator::draw(int L, Rng& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> radius(0.0, 1.0);
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(L));
  for (int i = 0; i < L; ++i) {
    Vector v(dim_);
    double n2 = 0.0;
    do {
      for (int j = 0; j < dim_; ++j) v(j) = normal(rng);
      n2 = v.squaredNorm();
    } while (n2 == 0.0);
    v *= radius(rng) / std::sqrt(n2);
    out.push_back(std::move(v));
  }
  return out;
}

MdpTrajectoryGenerator::MdpTrajectoryGenerator(std::shared_ptr<const LinearMDP> mdp, Policy policy)
    : mdp_(std::move(mdp)), policy_(std::move(policy)) {
  mu_ = stationary_distribution(*mdp_, policy_, 1e-13);
  kappa_ = kappa_of(*mdp_, mu_);
}

std::vector<Vector> MdpTrajectoryGenerator::draw(int L, Rng& rng) const {
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(L));
  const int start = draw_index(mu_.weights, rng);
  int s = start / mdp_->num_actions();
  int a = start % mdp_->num_actions();
  for (int i = 0; i < L; ++i) {
    out.push_back(mdp_->feature(s, a));
    const int p = mdp_->pair(s, a);
    std::vector<double> probs(static_cast<std::size_t>(mdp_->num_states()));
    for (int j = 0; j < mdp_->num_states(); ++j) probs[static_cast<std::size_t>(j)] = mdp_->transition()(p, j);
    s = draw_index(probs, rng);
    a = draw_index(policy_[static_cast<std::size_t>(s)], rng);
  }
  return out;
}

std::unique_ptr<SequenceGenerator> make_generator(const std::string& name, int dim, std::uint64_t seed) {
  if (name == "onehot") return std::make_unique<OneHotGenerator>(dim);
  if (name == "gaussian") return std::make_unique<GaussianDirectionGenerator>(dim);
  if (name == "mdp") {
    if (dim < 1) throw PreconditionError("generator dimension must be >= 1");
    const int actions = dim % 2 == 0 ? 2 : 1;
    auto mdp = std::make_shared<const LinearMDP>(build_tabular(dim / actions, actions, 0.9, seed));
    Policy pi = uniform_policy(*mdp);
    return std::make_unique<MdpTrajectoryGenerator>(std::move(mdp), std::move(pi));
  }
  throw UsageError("unknown generator '" + name + "' (expected onehot, gaussian, or mdp)");
}

}  // namespace rer
