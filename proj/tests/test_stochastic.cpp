#include "nilflow/stochastic.hpp"
#include "nilflow/zoo.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace nilflow;
using nilflow::testing::random_element;

namespace {

std::vector<Element> random_elements(const ExtensionSpec& spec, int count, std::uint64_t seed) {
  PhiloxStream rng(seed, 0);
  std::vector<Element> out;
  for (int i = 0; i < count; ++i) out.push_back(random_element(spec, rng));
  return out;
}

Eigen::VectorXd apply_tensor(const DenseTensor& t, const std::vector<Element>& ks) {
  std::vector<Eigen::VectorXd> in;
  for (const auto& k : ks) in.push_back(k.coords());
  return t.apply(in);
}

}  // namespace

TEST(Permutations, DescentCounts) {
  EXPECT_EQ(error_count(std::vector<int>{0, 1, 2}), 0);
  EXPECT_EQ(error_count(std::vector<int>{2, 1, 0}), 2);
  EXPECT_EQ(error_count(std::vector<int>{1, 0, 2}), 1);
  EXPECT_EQ(all_permutations(4).size(), 24u);
}

TEST(Permutations, Coefficients) {
  EXPECT_EQ(c_coefficient(2, std::vector<int>{0, 1}), Rational(1, 4));
  EXPECT_EQ(c_coefficient(2, std::vector<int>{1, 0}), Rational(-1, 4));
  for (const auto& t : perm_terms(3)) {
    if (t.errors == 1)
      EXPECT_EQ(t.c, Rational(-1, 18));
    else
      EXPECT_EQ(t.c, Rational(1, 9));
  }
  EXPECT_THROW(c_coefficient(3, std::vector<int>{0, 0, 1}), ShapeError);
}

TEST(Polynomial, IntegrateAndSubstitute) {
  // int_0^{x1} x0 dx0 = x1^2 / 2
  const Polynomial x0 = Polynomial::variable(2, 0);
  const Polynomial r = x0.integrate(0, -1, 1);
  const Polynomial x1 = Polynomial::variable(2, 1);
  EXPECT_EQ(r, (x1 * x1).scaled(Rational(1, 2)));
  EXPECT_EQ(r.degree(), 2);
  const std::vector<double> pt{5.0, 3.0};
  EXPECT_DOUBLE_EQ(r.evaluate(pt), 4.5);
  EXPECT_EQ(x0.substitute(0, -1).is_zero(), true);
  EXPECT_EQ((x0 - x0).is_zero(), true);
}

TEST(Polynomial, SelectRejectsLiveVariables) {
  const Polynomial p = Polynomial::variable(3, 1);
  EXPECT_THROW(p.select({0, 2}), ShapeError);
  EXPECT_EQ(p.select({1}), Polynomial::variable(1, 0));
}

TEST(ItoConversion, WordsAndWeights) {
  const auto t3 = strat_to_ito_terms(3);
  ASSERT_EQ(t3.size(), 3u);
  EXPECT_EQ(t3[0].alpha, (ItoWord{1, 1, 1}));
  EXPECT_EQ(t3[0].weight, Rational(1));
  EXPECT_EQ(t3[1].alpha, (ItoWord{1, 2}));
  EXPECT_EQ(t3[1].weight, Rational(1, 2));
  EXPECT_EQ(t3[2].alpha, (ItoWord{2, 1}));
  const auto t4 = strat_to_ito_terms(4);
  ASSERT_EQ(t4.size(), 5u);
  EXPECT_EQ(t4.back().alpha, (ItoWord{2, 2}));
  EXPECT_EQ(t4.back().weight, Rational(1, 4));
}

TEST(ItoConversion, FAlphaPolynomials) {
  const std::vector<std::string> st{"s", "t"};
  // Variables are (s_1, ..., s_p, t).
  const Polynomial s = Polynomial::variable(2, 0), t = Polynomial::variable(2, 1);
  EXPECT_EQ(f_alpha_polynomial({1, 2}), t - s);
  EXPECT_EQ(f_alpha_polynomial({2, 1}), s);
  EXPECT_EQ(f_alpha_polynomial({1, 2}).to_string(st), "-s + t");
  const Polynomial t1 = Polynomial::variable(1, 0);
  EXPECT_EQ(f_alpha_polynomial({2}), t1);
  EXPECT_EQ(f_alpha_polynomial({2, 2}), (t1 * t1).scaled(Rational(1, 2)));
  const Polynomial a = Polynomial::variable(3, 0), b = Polynomial::variable(3, 1);
  EXPECT_EQ(f_alpha_polynomial({1, 2, 1}), b - a);
  const Polynomial u = Polynomial::variable(2, 0), tt = Polynomial::variable(2, 1);
  EXPECT_EQ(f_alpha_polynomial({2, 1, 2}), u * tt - u * u);
  EXPECT_EQ(f_alpha_polynomial({1, 1}), Polynomial::constant(3, Rational(1)));
}

TEST(DenseTensors, PermuteSlotsComposes) {
  const auto spec = build_beta_upper_triangular(5).spec;
  const DenseTensor f = nested_bracket_tensor(spec, 3);
  const std::vector<int> sigma{1, 2, 0}, rho{2, 0, 1};
  std::vector<int> rho_sigma(3);
  for (int j = 0; j < 3; ++j) rho_sigma[j] = rho[sigma[j]];
  const DenseTensor a = permute_slots(permute_slots(f, sigma), rho);
  const DenseTensor b = permute_slots(f, rho_sigma);
  ASSERT_EQ(a.data.size(), b.data.size());
  for (std::size_t i = 0; i < a.data.size(); ++i) ASSERT_EQ(a.data[i], b.data[i]);
}

TEST(DenseTensors, PermutedTensorIsNestedBracket) {
  const auto spec = build_beta_upper_triangular(5).spec;
  const auto ks = random_elements(spec, 4, 3);
  const DenseTensor f = nested_bracket_tensor(spec, 4);
  const std::vector<int> sigma{3, 1, 0, 2};
  const Eigen::VectorXd got = apply_tensor(permute_slots(f, sigma), ks);
  const Element expected = nested_bracket(spec, sigma, ks);
  EXPECT_LT((got - expected.v_part()).norm(), 1e-12);
}

TEST(SymmetrizedOperator, OrderTwoIsHalfBracket) {
  const auto spec = build_step3_R6(3, default_Omega(3), default_gamma(3)).spec;
  const auto ks = random_elements(spec, 2, 4);
  const Eigen::VectorXd got = apply_tensor(symmetrized_operator(spec, 2), ks);
  EXPECT_LT((got - 0.5 * bracket(spec, ks[0], ks[1]).v_part()).norm(), 1e-12);
}

TEST(SymmetrizedOperator, OrderThreeClosedForm) {
  for (const auto& md : default_zoo()) {
    const auto& spec = md.spec;
    const auto ks = random_elements(spec, 3, 5);
    const Eigen::VectorXd got = apply_tensor(symmetrized_operator(spec, 3), ks);
    const Element expected =
        (1.0 / 6.0) * bracket(spec, bracket(spec, ks[0], ks[1]), ks[2]) +
        (1.0 / 6.0) * bracket(spec, bracket(spec, ks[2], ks[1]), ks[0]);
    EXPECT_LT((got - expected.v_part()).norm(), 1e-12) << md.name;
  }
}

TEST(TauMaps, MovePairsToTheRear) {
  EXPECT_EQ(tau_for({1, 2}, TauChoice::StablePairs), (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(tau_for({2, 1}, TauChoice::StablePairs), (std::vector<int>{1, 2, 0}));
  EXPECT_EQ(tau_for({2, 2}, TauChoice::ReversedPairs), (std::vector<int>{2, 3, 0, 1}));
  EXPECT_EQ(tau_for({2, 1, 2}, TauChoice::StablePairs), (std::vector<int>{1, 2, 0, 3, 4}));
}

TEST(FHat, SlotMapRouteMatchesDirectContraction) {
  // Summing tau o sigma tensors with c_n^sigma must reproduce the contraction of
  // the symmetrized operator at every order up to 4, for both pair orders.
  const auto spec = build_beta_upper_triangular(5).spec;
  for (int n = 2; n <= 4; ++n) {
    const DenseTensor g = symmetrized_operator(spec, n);
    for (const auto& [alpha, weight] : strat_to_ito_terms(n)) {
      const DenseTensor direct = contract_pairs(g, alpha);
      for (auto choice : {TauChoice::StablePairs, TauChoice::ReversedPairs}) {
        std::vector<double> sum(direct.data.size(), 0.0);
        for (const auto& term : perm_terms(n)) {
          const DenseTensor fh = f_hat_tensor(spec, n, term.sigma, alpha, choice);
          const double c = boost::rational_cast<double>(term.c);
          for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += c * fh.data[i];
        }
        double err = 0.0;
        for (std::size_t i = 0; i < sum.size(); ++i)
          err = std::max(err, std::abs(sum[i] - direct.data[i]));
        EXPECT_LT(err, 1e-12) << "n = " << n;
      }
    }
  }
}

TEST(Drivers, DeterministicAndProjectable) {
  SimConfig cfg;
  cfg.steps = 16;
  cfg.seed = 42;
  const auto a = sample_driver(cfg, 3, 2, 5), b = sample_driver(cfg, 3, 2, 5);
  EXPECT_EQ(a.increments, b.increments);
  EXPECT_DOUBLE_EQ(a.times.back(), 1.0);
  const auto p = project_driver(a, 1);
  EXPECT_EQ(p.increments.row(0), a.increments.row(0));
  EXPECT_TRUE(p.increments.row(1).isZero());
  EXPECT_TRUE(p.increments.row(2).isZero());
  EXPECT_EQ(p.increments.row(3), a.increments.row(3));
  EXPECT_EQ(project_driver(a, 3).increments, a.increments);
  EXPECT_THROW(project_driver(a, 4), DomainError);
}

TEST(Drivers, ConfigValidation) {
  SimConfig cfg;
  cfg.t = -1.0;
  EXPECT_THROW(validate_config(cfg), DomainError);
  cfg.t = 1.0;
  cfg.steps = 0;
  EXPECT_THROW(validate_config(cfg), DomainError);
  EXPECT_EQ(parse_engine("signature"), Engine::Signature);
  EXPECT_EQ(engine_name(Engine::Expansion), "expansion");
  EXPECT_THROW(parse_engine("euler"), DomainError);
}

TEST(Chen, RolloutEqualsSignatureOnEveryZooModel) {
  SimConfig cfg;
  cfg.steps = 10;
  cfg.seed = 2024;
  for (const auto& md : default_zoo()) {
    const GroupLaw law(md.spec);
    const SignatureEvaluator sig(md.spec);
    double worst = 0.0;
    for (std::uint64_t k = 0; k < 20; ++k) {
      const auto drv = sample_driver(cfg, md.spec.m(), md.spec.n(), k);
      worst = std::max(worst, (rollout(law, drv).endpoint - sig.evaluate(drv)).norm());
    }
    EXPECT_LT(worst, 1e-9) << md.name;
  }
}

namespace {

/// B_t + 1/2 sum_{i<j} [dB_i, dB_j] + 1/6 sum_{i<j<k} ([[dB_i,dB_j],dB_k] + [[dB_k,dB_j],dB_i])
///     + c t sum_a [[B_t, h_a], h_a]
Element step3_closed_form(const ExtensionSpec& spec, const BrownianDriver& drv, double c2,
                          double c3, double ct) {
  const int s = drv.steps();
  std::vector<Element> db;
  for (int k = 0; k < s; ++k) db.emplace_back(spec.m(), Eigen::VectorXd(drv.increments.col(k)));
  Element total(spec.m(), spec.n());
  for (const auto& x : db) total += x;
  Element out = total;
  for (int i = 0; i < s; ++i)
    for (int j = i + 1; j < s; ++j) {
      const Element bij = bracket(spec, db[i], db[j]);
      out += c2 * bij;
      for (int k = j + 1; k < s; ++k)
        out += c3 * (bracket(spec, bij, db[k]) +
                     bracket(spec, bracket(spec, db[k], db[j]), db[i]));
    }
  for (int a = 0; a < spec.dim(); ++a) {
    const Element h = basis_element(spec.m(), spec.n(), a);
    out += (ct * drv.t) * bracket(spec, bracket(spec, total, h), h);
  }
  return out;
}

}  // namespace

TEST(Expansion, StepThreeClosedFormPathwise) {
  SimConfig cfg;
  cfg.steps = 12;
  cfg.t = 0.7;
  for (const auto& md : {build_step3_R6(3, default_Omega(3), default_gamma(3)),
                         build_path_space_example(3), build_beta_upper_triangular(4)}) {
    const ExpansionEngine eng(md.spec);
    for (std::uint64_t k = 0; k < 5; ++k) {
      const auto drv = sample_driver(cfg, md.spec.m(), md.spec.n(), k);
      const Element got = eng.evaluate(drv);
      const Element want = step3_closed_form(md.spec, drv, 0.5, 1.0 / 6.0, 1.0 / 12.0);
      EXPECT_LT((got - want).norm(), 1e-11) << md.name;
      // Halving both higher coefficients gives a different process.
      const Element halved = step3_closed_form(md.spec, drv, 0.5, 1.0 / 12.0, 1.0 / 24.0);
      EXPECT_GT((got - halved).norm(), 1e-6) << md.name;
    }
  }
}

TEST(Expansion, StepTwoIsLevyArea) {
  SimConfig cfg;
  cfg.steps = 9;
  const auto md = build_heisenberg();
  const auto drv = sample_driver(cfg, 2, 1, 0);
  const Element got = expansion_endpoint(md.spec, drv);
  const Element want = step3_closed_form(md.spec, drv, 0.5, 0.0, 0.0);
  EXPECT_LT((got - want).norm(), 1e-13);
  EXPECT_LT((got - rollout(md.spec, drv).endpoint).norm(), 1e-13);
}

TEST(Expansion, ConvergesToRolloutAtStepFour) {
  // Both engines approximate the same g_t pathwise; the level-4 terms only agree
  // when the permutation convention is right.
  const auto md = build_beta_upper_triangular(5);
  const ExpansionEngine eng(md.spec);
  const GroupLaw law(md.spec);
  double coarse = 0.0, fine = 0.0;
  for (std::uint64_t k = 0; k < 4; ++k) {
    SimConfig cfg;
    cfg.steps = 4096;
    const auto drv = sample_driver(cfg, md.spec.m(), md.spec.n(), k);
    fine += (eng.evaluate(drv) - rollout(law, drv).endpoint).norm();
    // Coarse driver: sums of 64 consecutive fine increments.
    BrownianDriver c = drv;
    const int block = 64;
    c.increments.resize(drv.increments.rows(), cfg.steps / block);
    c.times.clear();
    for (int j = 0; j < cfg.steps / block; ++j) {
      c.increments.col(j) = drv.increments.middleCols(j * block, block).rowwise().sum();
      c.times.push_back(drv.times[j * block]);
    }
    c.times.push_back(drv.times.back());
    coarse += (eng.evaluate(c) - rollout(law, c).endpoint).norm();
  }
  EXPECT_LT(fine, 0.5 * coarse);
  EXPECT_LT(fine / 4.0, 0.1);
}

TEST(Sampling, IndependentOfThreadCount) {
  const auto spec = build_step2_R2R(2, default_Omega(2), default_gamma(2)).spec;
  SimConfig cfg;
  cfg.steps = 32;
  cfg.trials = 300;
  cfg.seed = 9;
  const Eigen::MatrixXd one = sample_endpoints(spec, cfg);
  cfg.threads = 3;
  const Eigen::MatrixXd three = sample_endpoints(spec, cfg);
  EXPECT_EQ(one, three);
  cfg.engine = Engine::Signature;
  EXPECT_LT((sample_endpoints(spec, cfg) - one).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Sampling, ParallelForPropagatesErrors) {
  EXPECT_THROW(parallel_for(100, 3,
                            [](long long i) {
                              if (i == 57) throw DomainError("boom");
                            }),
               DomainError);
}
