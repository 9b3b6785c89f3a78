#include "nilflow/group.hpp"
#include "nilflow/zoo.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace nilflow;
using nilflow::testing::random_element;

TEST(BetaExtension, KernelOfBetaIsCentralDirection) {
  // k3 = k1 + k2 shares its image with the pair, so k1 + k2 - k3 brackets to zero.
  const auto md = build_beta_upper_triangular(4);
  const auto& spec = md.spec;
  Element z(spec.m(), spec.n());
  z[0] = 1.0;
  z[1] = 1.0;
  z[2] = -1.0;
  PhiloxStream rng(3, 0);
  for (int k = 0; k < 5; ++k)
    EXPECT_LT(bracket(spec, z, random_element(spec, rng)).norm(), 1e-14);
}

TEST(BetaExtension, MatrixIsomorphismRespectsBrackets) {
  const auto alg = strictly_upper_triangular_algebra(4);
  PhiloxStream rng(4, 0);
  for (int k = 0; k < 5; ++k) {
    Eigen::VectorXd a(alg.dim()), b(alg.dim());
    for (int i = 0; i < alg.dim(); ++i) {
      a[i] = rng.normal();
      b[i] = rng.normal();
    }
    const Eigen::MatrixXd A = alg.to_matrix(a), B = alg.to_matrix(b);
    Eigen::VectorXd br = Eigen::VectorXd::Zero(alg.dim());
    for (int i = 0; i < alg.dim(); ++i)
      for (int j = 0; j < alg.dim(); ++j)
        for (int c = 0; c < alg.dim(); ++c)
          br[c] += a[i] * b[j] * alg.bracket[(i * alg.dim() + j) * alg.dim() + c];
    EXPECT_LT((alg.to_matrix(br) - (A * B - B * A)).norm(), 1e-13);
    EXPECT_LT((alg.from_matrix(A) - a).norm(), 1e-15);
  }
}

TEST(BetaExtension, NilpotentLogInvertsExponential) {
  const auto alg = strictly_upper_triangular_algebra(5);
  PhiloxStream rng(6, 0);
  Eigen::VectorXd a(alg.dim());
  for (int i = 0; i < alg.dim(); ++i) a[i] = rng.normal();
  const Eigen::MatrixXd A = alg.to_matrix(a);
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(5, 5);
  // log(e^A e^0) = A.
  EXPECT_LT((nilpotent_log_of_product(A, zero) - A).norm(), 1e-12);
  // log(e^A e^{-A}) = 0.
  EXPECT_LT(nilpotent_log_of_product(A, -A).norm(), 1e-12);
}

TEST(PathSpace, LowestBracketIsFirstCentreDirection) {
  const int k = 4;
  const auto md = build_path_space_example(k);
  const auto& spec = md.spec;
  EXPECT_EQ(spec.m(), 3 * k);
  EXPECT_EQ(spec.n(), 3);
  // sigma-block to tau-block brackets land on the first v direction.
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      const Element x = basis_element(spec.m(), spec.n(), 3 * i);
      const Element y = basis_element(spec.m(), spec.n(), 3 * j + 1);
      const Element b = bracket(spec, x, y);
      EXPECT_TRUE(b.w_part().isZero());
      EXPECT_NEAR(b[spec.m() + 1], 0.0, 1e-15);
      EXPECT_NEAR(b[spec.m() + 2], 0.0, 1e-15);
    }
}

TEST(PathSpace, TripleBracketsVanish) {
  const auto md = build_path_space_example(3);
  const auto& spec = md.spec;
  PhiloxStream rng(8, 0);
  for (int k = 0; k < 5; ++k) {
    const Element a = random_element(spec, rng), b = random_element(spec, rng);
    const Element c = random_element(spec, rng), d = random_element(spec, rng);
    EXPECT_LT(bracket(spec, bracket(spec, bracket(spec, a, b), c), d).norm(), 1e-12);
  }
  EXPECT_EQ(spec.step(), 3);
}

TEST(PathSpace, GroupLawMatchesMatrixModelOnFinerGrids) {
  for (int k : {2, 5}) {
    const auto md = build_path_space_example(k);
    PhiloxStream rng(9, k);
    const Element g = random_element(md.spec, rng), h = random_element(md.spec, rng);
    EXPECT_LT((bchd_multiply(md.spec, g, h) - md.oracle(g, h)).norm(), 1e-12);
  }
}

TEST(StepThree, AlphaAnnihilatesOmega) {
  const int m = 3;
  const auto md = build_step3_R6(m, default_Omega(m), default_gamma(m));
  const auto& spec = md.spec;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int l = 0; l < m; ++l) {
        Eigen::VectorXd om(spec.n());
        for (int c = 0; c < spec.n(); ++c) om[c] = spec.omega(j, l, c);
        const Eigen::VectorXd r = spec.alpha_matrix(Eigen::VectorXd::Unit(m, i)) * om;
        EXPECT_LT(r.cwiseAbs().maxCoeff(), 1e-14);
      }
}

TEST(Builders, RejectNonSkewOmega) {
  std::vector<double> omega(4, 0.0);
  omega[1] = 1.0;  // omega(0, 1) without omega(1, 0) = -1
  EXPECT_THROW(build_heisenberg_like(2, 1, omega), SpecError);
  EXPECT_THROW(build_heisenberg_like(2, 1, std::vector<double>(3, 0.0)), SpecError);
}

TEST(Builders, NamedModels) {
  for (const char* name : {"heisenberg", "beta", "beta5", "pathspace", "step2", "step3", "abelian"}) {
    const auto md = build_named_model(name, 3, 3);
    EXPECT_EQ(md.name.empty(), false) << name;
    EXPECT_TRUE(validate_extension(md.spec).passed()) << name;
  }
  EXPECT_THROW(build_named_model("sl2", 2, 2), DomainError);
}

TEST(Builders, DefaultParameters) {
  const auto om = default_Omega(3);
  ASSERT_EQ(om.size(), 9u);
  EXPECT_DOUBLE_EQ(om[0 * 3 + 1], 0.5);
  EXPECT_DOUBLE_EQ(om[1 * 3 + 0], -0.5);
  EXPECT_DOUBLE_EQ(om[1 * 3 + 2], 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(om[0], 0.0);
  const auto g = default_gamma(3);
  EXPECT_DOUBLE_EQ(g[2], 1.0 / 3.0);
}
