#include "rer/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "rer/combinatorics.hpp"
#include "rer/errors.hpp"
#include "rer/features.hpp"
#include "rer/mdp.hpp"
#include "rer/qlearn.hpp"
#include "rer/rng.hpp"

namespace rer {

namespace {

using comb::BigInt;
using comb::Rational;

std::string str(const Rational& r) { return r.str(); }
std::string str(long v) { return std::to_string(v); }

double abs_diff(const Rational& a, const Rational& b) {
  const Rational d = a > b ? Rational(a - b) : Rational(b - a);
  return d.convert_to<double>();
}

VerificationReport helper_check(const std::string& id, long cases, long failures, long max_n) {
  return gated(id, {{"max_n", str(max_n)}}, str(cases) + " cases", str(cases - failures) + " hold",
               static_cast<double>(failures), 0.0);
}

}  // namespace

std::vector<VerificationReport> verify_combinatorics(int max_L, int max_n) {
  std::vector<VerificationReport> out;

  long cases = 0, failures = 0;
  for (long n = 2; n <= max_n; ++n) {
    for (long k = 1; k <= n - 1; ++k, ++cases) failures += comb::pascal_identity_holds(n, k) ? 0 : 1;
  }
  out.push_back(helper_check("helper.pascal", cases, failures, max_n));

  cases = failures = 0;
  for (long n = 0; n <= max_n; ++n) {
    for (long m = 0; n + m + 1 <= max_n; ++m, ++cases) failures += comb::rising_sum_identity_holds(n, m) ? 0 : 1;
  }
  out.push_back(helper_check("helper.rising_sum", cases, failures, max_n));

  cases = failures = 0;
  for (long n = 0; n <= max_n; ++n) {
    for (long q = 0; q <= n; ++q) {
      for (long k = 0; k <= max_n; ++k, ++cases) {
        failures += comb::vandermonde_interval_identity_holds(k, q, n) ? 0 : 1;
      }
    }
  }
  out.push_back(helper_check("helper.interval_sum", cases, failures, max_n));

  for (int L = 1; L <= max_L; ++L) {
    for (int k = 2; k <= 2 * L; ++k) {
      const auto counts = comb::enumerate_slot_counts(L, k);
      Rational total = 0;
      for (int l = 1; l <= L; ++l) {
        const Rational& enumerated = counts.at(l);
        total += enumerated;
        const Rational formula = comb::slot_count_formula({L, k, l});
        out.push_back(gated("counting.slot", {{"L", str(L)}, {"k", str(k)}, {"l", str(l)}}, str(enumerated),
                            str(formula), abs_diff(enumerated, formula), 0.0));
      }
      const Rational expected(comb::binomial(2 * L, k));
      out.push_back(gated("counting.total", {{"L", str(L)}, {"k", str(k)}}, str(total), str(expected),
                          abs_diff(total, expected), 0.0));
    }
  }

  const Rational etas[] = {Rational(1, 10), Rational(1, 2), Rational(9, 10)};
  for (int L = 1; L <= max_L; ++L) {
    for (const Rational& eta : etas) {
      for (int l = 1; l <= L; ++l) {
        const comb::WeightedSumParams p{L, l, eta};
        const std::map<std::string, std::string> in{{"L", str(L)}, {"l", str(l)}, {"eta", str(eta)}};
        const Rational direct = comb::weighted_sum_direct(p);
        const Rational oracle = comb::enumerated_weighted_sum(p);
        out.push_back(gated("weighted.direct_vs_enumerated", in, str(oracle), str(direct), abs_diff(oracle, direct),
                            0.0));
        if (L > 1) {
          const Rational printed = comb::closed_form_paper(p);
          out.push_back(recorded("weighted.direct_vs_closed_form", in, str(direct), str(printed),
                                 abs_diff(direct, printed)));
        }
      }
      if (L > 1) {
        const auto b = comb::closed_form_l_bounds(L, eta);
        const bool holds = comb::l_bounds_sweep_holds(L, eta);
        out.push_back(recorded("weighted.l_bounds", {{"L", str(L)}, {"eta", str(eta)}},
                               "[" + str(b.lower) + ", " + str(b.upper) + "]", holds ? "within" : "outside",
                               holds ? 0.0 : 1.0));
      }
    }
  }
  return out;
}

std::vector<VerificationReport> verify_gamma(const GammaSuiteOptions& opts) {
  std::vector<VerificationReport> out;
  double worst_contraction = -1.0;
  long sequences = 0;
  const auto track_contraction = [&](const FeatureSequence& seq, double eta) {
    if (!(eta > 0.0 && eta < 1.0)) return;
    const Matrix g = gamma_product(seq, eta).matrix;
    worst_contraction = std::max(worst_contraction, lambda_max_sym(g.transpose() * g) - 1.0);
    ++sequences;
  };

  std::vector<double> etas = opts.etas;
  etas.insert(etas.begin(), 0.0);
  std::uint64_t stream = 0;
  for (int L = 1; L <= opts.max_L; ++L) {
    for (int d : opts.dims) {
      const GaussianDirectionGenerator gen(d);
      for (double eta : etas) {
        double worst = 0.0;
        for (int s = 0; s < opts.seeds; ++s) {
          Rng rng(child_seed(opts.seed, stream++));
          const FeatureSequence seq(gen.draw(L, rng));
          const Matrix g = gamma_product(seq, eta).matrix;
          worst = std::max(worst, (gram_expansion(seq, eta) - g.transpose() * g).norm());
          track_contraction(seq, eta);
        }
        out.push_back(gated("gamma.expansion",
                            {{"L", str(L)}, {"d", str(d)}, {"eta", format_double(eta)}, {"seeds", str(opts.seeds)}},
                            "Gamma^T Gamma", "expansion", worst, kExpansionTol));
      }
    }
  }

  {
    Rng rng(child_seed(opts.seed, 1u << 20));
    std::uniform_int_distribution<int> pick_L(1, 6);
    std::uniform_int_distribution<int> pick_d(1, 4);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> pick_eta(0.01, 0.99);
    double worst = 0.0;
    for (long t = 0; t < opts.relax_trials; ++t) {
      const int L = pick_L(rng);
      const int d = pick_d(rng);
      const GaussianDirectionGenerator gen(d);
      const FeatureSequence seq(gen.draw(L, rng));
      std::vector<int> positions;
      while (positions.size() < 2) {
        positions.clear();
        for (int p = 0; p < 2 * L; ++p) {
          if (std::bernoulli_distribution(0.5)(rng)) positions.push_back(p);
        }
      }
      Vector x(d);
      do {
        for (int i = 0; i < d; ++i) x(i) = normal(rng);
      } while (x.isZero(0.0));
      const RelaxTerms r = relax_terms(seq, positions, x);
      worst = std::max(worst, r.lhs - r.rhs);
      track_contraction(seq, pick_eta(rng));
    }
    out.push_back(gated("gamma.relax", {{"trials", str(opts.relax_trials)}}, "lhs", "rhs", std::max(0.0, worst),
                        kRelaxTol));
  }

  out.push_back(gated("gamma.trivial_contraction", {{"sequences", str(sequences)}}, "lambda_max - 1", "0",
                      std::max(0.0, worst_contraction), kContractionTol));

  std::vector<double> grid_etas;
  for (int i = 1; i <= 9; i += 2) grid_etas.push_back(i / 10.0);
  std::vector<int> grid_Ls;
  for (int L = 2; L <= 10; ++L) grid_Ls.push_back(L);
  for (const GridRow& row : bound_compare_grid(grid_etas, grid_Ls)) {
    out.push_back(recorded("grid.direction", {{"eta", format_double(row.eta)}, {"L", str(row.L)}},
                           format_double(row.value_new), format_double(row.value_old),
                           row.value_new - row.value_old));
  }
  struct Spot {
    double eta;
    int L;
    double value_new;
    double value_old;
  };
  for (const Spot& s : {Spot{0.5, 2, 0.5, 1.0}, Spot{0.5, 4, -5.5, 2.0}}) {
    const double eta[] = {s.eta};
    const int Ls[] = {s.L};
    const GridRow row = bound_compare_grid(eta, Ls).front();
    const double dev = std::max(std::abs(row.value_new - s.value_new), std::abs(row.value_old - s.value_old));
    out.push_back(gated("grid.spot", {{"eta", format_double(s.eta)}, {"L", str(s.L)}},
                        format_double(s.value_new) + "," + format_double(s.value_old),
                        format_double(row.value_new) + "," + format_double(row.value_old), dev, kGridSpotTol));
  }
  return out;
}

std::vector<VerificationReport> verify_decomposition(int trials, int max_L, std::uint64_t seed) {
  std::vector<VerificationReport> out;
  for (int t = 0; t < trials; ++t) {
    Rng rng(child_seed(seed, static_cast<std::uint64_t>(t)));
    std::uniform_int_distribution<int> pick_states(2, 6);
    std::uniform_int_distribution<int> pick_actions(1, 3);
    std::uniform_int_distribution<int> pick_L(1, max_L);
    std::uniform_real_distribution<double> pick_eta(0.0, 1.0);
    std::uniform_real_distribution<double> pick_gamma(0.1, 0.95);
    std::uniform_real_distribution<double> noise(-0.2, 0.2);
    std::normal_distribution<double> normal;

    const int S = pick_states(rng);
    const int A = pick_actions(rng);
    const double gamma = pick_gamma(rng);
    const bool tabular = t % 2 == 0;
    const std::uint64_t mdp_seed = rng();
    const LinearMDP mdp = tabular ? build_tabular(S, A, gamma, mdp_seed)
                                  : build_random_linear(std::max(1, S * A / 2), S, A, gamma, mdp_seed);
    const Vector w_star = optimal_weights(mdp, optimal_q(mdp, 1e-12));
    const int L = pick_L(rng);
    const double eta = pick_eta(rng);
    Vector w1(mdp.dim());
    for (int i = 0; i < mdp.dim(); ++i) w1(i) = normal(rng);

    std::vector<Transition> window;
    std::uniform_int_distribution<int> any_state(0, S - 1);
    std::uniform_int_distribution<int> any_action(0, A - 1);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    int s = any_state(rng);
    for (int j = 0; j < L; ++j) {
      const int a = any_action(rng);
      const auto row = mdp.transition().row(mdp.pair(s, a));
      const double x = u01(rng);
      double acc = 0.0;
      int next = S - 1;
      for (int k = 0; k < S; ++k) {
        acc += row(k);
        if (x < acc) {
          next = k;
          break;
        }
      }
      window.push_back({s, a, mdp.reward(s, a) + noise(rng), next});
      s = next;
    }
    const double residual = decomposition_residual(w1, w_star, window, mdp, eta);
    out.push_back(gated("decomposition.residual",
                        {{"trial", str(t)}, {"L", str(L)}, {"eta", format_double(eta)},
                         {"mdp", tabular ? "tabular" : "linear"}},
                        "w_final - w*", "bias + variance", residual, kDecompositionTol));
  }
  return out;
}

std::vector<VerificationReport> run_verify(const std::string& suite, int max_L, std::uint64_t seed) {
  const bool all = suite == "all";
  if (!all && suite != "combinatorics" && suite != "gamma" && suite != "decomposition") {
    throw UsageError("unknown suite '" + suite + "'");
  }
  const int cap = suite == "combinatorics" ? comb::kEnumerationMaxL : kExpansionMaxL;
  if (max_L < 1 || max_L > cap) {
    throw UsageError("max_L must lie in [1, " + std::to_string(cap) + "] for suite " + suite);
  }
  std::vector<VerificationReport> out;
  const auto append = [&out](std::vector<VerificationReport> part) {
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  };
  if (all || suite == "combinatorics") append(verify_combinatorics(max_L));
  if (all || suite == "gamma") {
    GammaSuiteOptions opts;
    opts.max_L = max_L;
    opts.seed = child_seed(seed, 101);
    append(verify_gamma(opts));
  }
  if (all || suite == "decomposition") append(verify_decomposition(100, max_L, child_seed(seed, 202)));
  return out;
}

}  // namespace rer
