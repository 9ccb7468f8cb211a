#pragma once

#include <memory>
#include <string>
#include <vector>

#include "rer/gamma.hpp"
#include "rer/mdp.hpp"
#include "rer/rng.hpp"

namespace rer {

/// Source of feature windows phi_1..phi_L.  Implementations are stateless
/// apart from immutable setup, so one instance can serve many threads.
class SequenceGenerator {
 public:
  virtual ~SequenceGenerator() = default;

  virtual std::string name() const = 0;
  virtual int dim() const = 0;
  /// 1 / lambda_min(E[phi phi^T]) under the generator's marginal.
  virtual double kappa() const = 0;
  virtual std::vector<Vector> draw(int L, Rng& rng) const = 0;
};

/// i.i.d. uniformly chosen basis vectors e_1..e_d; kappa = d.
class OneHotGenerator final : public SequenceGenerator {
 public:
  explicit OneHotGenerator(int dim);
  std::string name() const override { return "onehot"; }
  int dim() const override { return dim_; }
  double kappa() const override { return dim_; }
  std::vector<Vector> draw(int L, Rng& rng) const override;

 private:
  int dim_;
};

/// i.i.d. u * r with u a normalized Gaussian direction and r ~ U(0, 1);
/// E[phi phi^T] = I / (3d), so kappa = 3d.
class GaussianDirectionGenerator final : public SequenceGenerator {
 public:
  explicit GaussianDirectionGenerator(int dim);
  std::string name() const override { return "gaussian"; }
  int dim() const override { return dim_; }
  double kappa() const override { return 3.0 * dim_; }
  std::vector<Vector> draw(int L, Rng& rng) const override;

 private:
  int dim_;
};

/// Consecutive features along a trajectory of `mdp` under `policy`, with the
/// first pair drawn from the stationary distribution of the induced chain.
class MdpTrajectoryGenerator final : public SequenceGenerator {
 public:
  MdpTrajectoryGenerator(std::shared_ptr<const LinearMDP> mdp, Policy policy);
  std::string name() const override { return "mdp"; }
  int dim() const override { return mdp_->dim(); }
  double kappa() const override { return kappa_; }
  std::vector<Vector> draw(int L, Rng& rng) const override;

  const StationaryDistribution& stationary() const { return mu_; }

 private:
  std::shared_ptr<const LinearMDP> mdp_;
  Policy policy_;
  StationaryDistribution mu_;
  double kappa_;
};

/// "onehot", "gaussian", or "mdp" (tabular instance built from `seed` with
/// `dim` state-action pairs split as dim/2 states x 2 actions when even).
/// Throws UsageError for unknown names.
std::unique_ptr<SequenceGenerator> make_generator(const std::string& name, int dim, std::uint64_t seed);

}  // namespace rer
