#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rer/errors.hpp"
#include "rer/features.hpp"
#include "rer/gamma.hpp"
#include "rer/rng.hpp"

using namespace rer;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

FeatureSequence random_sequence(int L, int d, std::uint64_t seed) {
  GaussianDirectionGenerator gen(d);
  Rng rng = make_rng(seed);
  return FeatureSequence(gen.draw(L, rng));
}

// Cyclic Jacobi eigenvalues of a symmetric matrix; independent of Eigen's
// solver.
std::vector<double> jacobi_eigenvalues(Matrix a) {
  const Eigen::Index n = a.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev;
  for (Eigen::Index i = 0; i < n; ++i) ev.push_back(a(i, i));
  std::sort(ev.begin(), ev.end());
  return ev;
}

}  // namespace

TEST(FeatureSequence, Validation) {
  EXPECT_THROW(FeatureSequence({}), InvalidSequence);
  EXPECT_THROW(FeatureSequence({vec({1, 0}), vec({1, 0, 0})}), InvalidSequence);
  EXPECT_THROW(FeatureSequence({vec({1, 0.1})}), InvalidSequence);
  const FeatureSequence ok({vec({0.6, 0.8}), vec({0, 1})});
  EXPECT_EQ(ok.length(), 2);
  EXPECT_EQ(ok.dim(), 2);
}

TEST(GammaProduct, SingleFactorAndOrder) {
  const Vector a = vec({1, 0});
  const Vector b = vec({std::sqrt(0.5), std::sqrt(0.5)});
  const double eta = 0.3;
  const FeatureSequence one({a});
  const Matrix I = Matrix::Identity(2, 2);
  EXPECT_TRUE(gamma_product(one, eta).matrix.isApprox(I - eta * a * a.transpose()));
  const FeatureSequence two({a, b});
  const Matrix expected = (I - eta * a * a.transpose()) * (I - eta * b * b.transpose());
  EXPECT_LE((gamma_product(two, eta).matrix - expected).norm(), 1e-15);
}

TEST(GammaProduct, PrefixesEndAtProduct) {
  const auto seq = random_sequence(5, 3, 1);
  const auto pre = gamma_prefixes(seq, 0.4);
  ASSERT_EQ(pre.size(), 6u);
  EXPECT_TRUE(pre[0].isIdentity(0.0));
  EXPECT_LE((pre[5] - gamma_product(seq, 0.4).matrix).norm(), 1e-15);
}

TEST(GramExpansion, MatchesDirectProduct) {
  for (int L = 1; L <= 6; ++L) {
    for (double eta : {0.0, 0.1, 0.5, 0.9}) {
      const auto seq = random_sequence(L, 3, static_cast<std::uint64_t>(L * 100 + eta * 10));
      const Matrix g = gamma_product(seq, eta).matrix;
      EXPECT_LE((gram_expansion(seq, eta) - g.transpose() * g).norm(), 1e-10) << L << " " << eta;
    }
  }
}

TEST(GramExpansion, EtaZeroIsIdentity) {
  const auto seq = random_sequence(4, 2, 9);
  EXPECT_EQ(gram_expansion(seq, 0.0), Matrix::Identity(2, 2));
}

TEST(GramExpansion, RefusesLongWindows) {
  EXPECT_THROW(gram_expansion(random_sequence(kExpansionMaxL + 1, 2, 3), 0.5), EnumerationRefused);
}

TEST(Relax, HoldsOnRandomDraws) {
  Rng rng = make_rng(11);
  std::normal_distribution<double> normal;
  for (int t = 0; t < 2000; ++t) {
    const int L = 1 + t % 5;
    const auto seq = random_sequence(L, 3, 1000 + static_cast<std::uint64_t>(t));
    std::vector<int> pos;
    for (int p = 0; p < 2 * L; ++p) {
      if (std::bernoulli_distribution(0.6)(rng)) pos.push_back(p);
    }
    if (pos.size() < 2) continue;
    const Vector x = vec({normal(rng), normal(rng), normal(rng)});
    EXPECT_TRUE(relax_inequality_holds(seq, pos, x));
  }
}

TEST(Relax, TwoIdenticalFactorsAreTight) {
  const FeatureSequence seq({vec({0.6, 0.8})});
  const int pos[] = {0, 1};
  const RelaxTerms r = relax_terms(seq, pos, vec({1.0, 2.0}));
  EXPECT_NEAR(r.lhs, r.rhs, 1e-15);
}

TEST(Relax, Preconditions) {
  const auto seq = random_sequence(2, 2, 4);
  const int one[] = {0};
  const int unsorted[] = {2, 1};
  const int outside[] = {0, 4};
  const Vector x = vec({1, 1});
  EXPECT_THROW(relax_terms(seq, one, x), PreconditionError);
  EXPECT_THROW(relax_terms(seq, unsorted, x), PreconditionError);
  EXPECT_THROW(relax_terms(seq, outside, x), PreconditionError);
  const int ok[] = {0, 3};
  EXPECT_THROW(relax_terms(seq, ok, Vector::Zero(2)), PreconditionError);
}

TEST(Bounds, HandEvaluatedCoefficients) {
  EXPECT_NEAR(theorem_main_coeff(0.5, 2, 4.0), 0.875, 1e-15);
  EXPECT_NEAR(theorem_main_coeff(0.5, 4, 4.0), 2.375, 1e-15);
  EXPECT_TRUE(is_vacuous(theorem_main_coeff(0.5, 4, 4.0)));
  EXPECT_FALSE(is_vacuous(theorem_main_coeff(0.5, 2, 4.0)));
  ASSERT_TRUE(previous_bound_coeff(0.1, 2, 4.0).has_value());
  EXPECT_NEAR(*previous_bound_coeff(0.1, 2, 4.0), 0.95, 1e-15);
  EXPECT_FALSE(previous_bound_coeff(0.5, 2, 4.0).has_value());
  EXPECT_THROW(theorem_main_coeff(0.5, 1, 4.0), PreconditionError);
  EXPECT_THROW(theorem_main_coeff(0.5, 2, 0.0), PreconditionError);
}

TEST(Bounds, Envelope) {
  EXPECT_NEAR(bias_decay_envelope(0.1, 2, 4.0, 10, 0.1), std::exp(-4.95) * std::sqrt(40.0), 1e-14);
  EXPECT_NEAR(bias_decay_envelope(0.1, 2, 4.0, 0, 0.1), std::sqrt(40.0), 1e-14);
  EXPECT_THROW(bias_decay_envelope(0.1, 2, 4.0, 1, 1.0), PreconditionError);
}

TEST(Bounds, Grid) {
  std::vector<double> etas;
  for (int i = 1; i <= 9; i += 2) etas.push_back(i / 10.0);
  std::vector<int> Ls{2, 3, 4, 5, 6, 7, 8, 9, 10};
  const auto rows = bound_compare_grid(etas, Ls);
  ASSERT_EQ(rows.size(), 45u);
  const double e5[] = {0.5};
  const int l2[] = {2}, l4[] = {4};
  const GridRow a = bound_compare_grid(e5, l2).front();
  EXPECT_NEAR(a.value_new, 0.5, 1e-12);
  EXPECT_NEAR(a.value_old, 1.0, 1e-12);
  EXPECT_FALSE(a.new_gt_old);
  const GridRow b = bound_compare_grid(e5, l4).front();
  EXPECT_NEAR(b.value_new, -5.5, 1e-12);
  EXPECT_NEAR(b.value_old, 2.0, 1e-12);
}

TEST(Spectrum, EigenAgreesWithJacobi) {
  Rng rng = make_rng(5);
  std::normal_distribution<double> normal;
  for (int t = 0; t < 20; ++t) {
    Matrix a(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) a(i, j) = normal(rng);
    const Matrix s = (a + a.transpose()) / 2;
    const auto ev = jacobi_eigenvalues(s);
    EXPECT_NEAR(lambda_min_sym(a), ev.front(), 1e-10);
    EXPECT_NEAR(lambda_max_sym(a), ev.back(), 1e-10);
  }
}

TEST(Spectrum, PsdOrder) {
  const Matrix I = Matrix::Identity(3, 3);
  EXPECT_TRUE(psd_leq(0.5 * I, I));
  EXPECT_FALSE(psd_leq(2.0 * I, I));
  EXPECT_TRUE(psd_leq(I, I));
}

TEST(Spectrum, TrivialContraction) {
  for (int t = 0; t < 500; ++t) {
    const auto seq = random_sequence(1 + t % 10, 1 + t % 4, 7000 + static_cast<std::uint64_t>(t));
    const Matrix g = gamma_product(seq, 0.05 + 0.9 * (t % 7) / 6.0).matrix;
    EXPECT_LE(lambda_max_sym(g.transpose() * g), 1.0 + 1e-12);
  }
}

TEST(MonteCarlo, OneHotMatchesExactExpectation) {
  // Four equally likely sequences: two repeat a basis vector, two alternate.
  const OneHotGenerator gen(2);
  const double eta = 0.1;
  const double expected = std::pow(1.0 + (1.0 - eta) * (1.0 - eta), 2) / 4.0;
  const BoundReport r = mc_gram_spectrum(gen, eta, 2, 100000, 42);
  ASSERT_NEAR(expected, 0.819025, 1e-12);
  EXPECT_GT(r.lambda_max_stderr, 0.0);
  EXPECT_LE(std::abs(r.lambda_max - expected), 3.0 * r.lambda_max_stderr + 1e-12);
  EXPECT_TRUE(r.holds_trivial);
  EXPECT_EQ(r.trials, 100000);
  EXPECT_DOUBLE_EQ(r.kappa, 2.0);
}

TEST(MonteCarlo, EtaZeroGivesOne) {
  const GaussianDirectionGenerator gen(3);
  const BoundReport r = mc_gram_spectrum(gen, 0.0, 4, 1000, 1);
  EXPECT_EQ(r.lambda_max, 1.0);
  EXPECT_TRUE(r.holds_trivial);
}

TEST(MonteCarlo, WorkerCountDoesNotChangeResult) {
  const GaussianDirectionGenerator gen(3);
  const BoundReport a = mc_gram_spectrum(gen, 0.3, 5, 3000, 99, 1);
  const BoundReport b = mc_gram_spectrum(gen, 0.3, 5, 3000, 99, 3);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.lambda_max, b.lambda_max);
  EXPECT_EQ(a.lambda_max_stderr, b.lambda_max_stderr);
}

TEST(MonteCarlo, LengthOneHasNoTheoremCoefficient) {
  const OneHotGenerator gen(2);
  const BoundReport r = mc_gram_spectrum(gen, 0.2, 1, 100, 3);
  EXPECT_FALSE(r.coeff_new.has_value());
}

TEST(Generators, Factory) {
  EXPECT_EQ(make_generator("onehot", 3, 0)->kappa(), 3.0);
  EXPECT_EQ(make_generator("gaussian", 3, 0)->kappa(), 9.0);
  EXPECT_EQ(make_generator("mdp", 4, 0)->dim(), 4);
  EXPECT_THROW(make_generator("nope", 3, 0), UsageError);
}
