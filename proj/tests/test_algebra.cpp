#include "nilflow/algebra.hpp"
#include "nilflow/group.hpp"
#include "nilflow/zoo.hpp"
#include "mutants.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace nilflow;
using nilflow::testing::random_element;
using nilflow::testing::random_valid_spec;
using namespace nilflow::testing;

namespace {

bool has_failed(const ValidationReport& rep, const std::string& name) {
  const auto f = rep.failed_checks();
  return std::find(f.begin(), f.end(), name) != f.end();
}

ExtensionSpec heisenberg3() { return build_heisenberg().spec; }

}  // namespace

TEST(Element, ShapesAndArithmetic) {
  Element a(2, 1), b = basis_element(2, 1, 2);
  EXPECT_EQ(a.dim(), 3);
  EXPECT_EQ(a.n(), 1);
  a[0] = 3.0;
  const Element c = a + 2.0 * b;
  EXPECT_DOUBLE_EQ(c[0], 3.0);
  EXPECT_DOUBLE_EQ(c[2], 2.0);
  EXPECT_DOUBLE_EQ((-c)[0], -3.0);
  EXPECT_THROW(a + Element(1, 2), ShapeError);
  EXPECT_THROW(basis_element(2, 1, 3), ShapeError);
}

TEST(ExtensionSpec, RejectsBadShapes) {
  EXPECT_THROW(ExtensionSpec(2, 1, 2, {0.0}, {0, 0}, {0}), ShapeError);
  EXPECT_THROW(ExtensionSpec(1, 0, 1, {}, {}, {}), ShapeError);
  EXPECT_THROW(ExtensionSpec(1, 1, 0, {0}, {0}, {0}), ShapeError);
}

TEST(Bracket, HeisenbergCanonical) {
  const auto spec = heisenberg3();
  const Element k1 = basis_element(2, 1, 0), k2 = basis_element(2, 1, 1);
  const Element v = bracket(spec, k1, k2);
  EXPECT_DOUBLE_EQ(v[0], 0.0);
  EXPECT_DOUBLE_EQ(v[1], 0.0);
  EXPECT_DOUBLE_EQ(v[2], 1.0);
  EXPECT_DOUBLE_EQ(bracket(spec, k2, k1)[2], -1.0);
}

TEST(Bracket, MatchesComponentFormula) {
  // [(X1,V1),(X2,V2)] = (0, omega(X1,X2) + alpha_X1 V2 - alpha_X2 V1 + [V1,V2]_v)
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ExtensionSpec spec = random_valid_spec(seed);
    PhiloxStream rng(seed, 1);
    const Element x = random_element(spec, rng), y = random_element(spec, rng);
    const Eigen::VectorXd x1 = x.w_part(), x2 = y.w_part(), v1 = x.v_part(), v2 = y.v_part();
    const Eigen::VectorXd expected = spec.omega_of(x1, x2) + spec.alpha_matrix(x1) * v2 -
                                     spec.alpha_matrix(x2) * v1 + spec.v_bracket_of(v1, v2);
    const Element got = bracket(spec, x, y);
    EXPECT_LT(got.w_part().norm(), 1e-15);
    EXPECT_LT((got.v_part() - expected).norm(), 1e-12 * (1.0 + expected.norm()));
  }
}

TEST(Bracket, SkewAndBilinear) {
  const ExtensionSpec spec = random_valid_spec(3);
  PhiloxStream rng(3, 2);
  const Element x = random_element(spec, rng), y = random_element(spec, rng),
                z = random_element(spec, rng);
  EXPECT_LT((bracket(spec, x, y) + bracket(spec, y, x)).norm(), 1e-12);
  const Element lhs = bracket(spec, 2.0 * x + z, y);
  const Element rhs = 2.0 * bracket(spec, x, y) + bracket(spec, z, y);
  EXPECT_LT((lhs - rhs).norm(), 1e-12);
}

TEST(NestedBracket, LeftNestedOrder) {
  const ExtensionSpec spec = build_beta_upper_triangular(4).spec;
  PhiloxStream rng(11, 0);
  std::vector<Element> ks;
  for (int i = 0; i < 3; ++i) ks.push_back(random_element(spec, rng));
  const std::vector<int> sigma{2, 0, 1};
  const Element expected = bracket(spec, bracket(spec, ks[2], ks[0]), ks[1]);
  EXPECT_LT((nested_bracket(spec, sigma, ks) - expected).norm(), 1e-12);
  const std::vector<int> one{0};
  EXPECT_LT((nested_bracket(spec, one, std::span(ks).first(1)) - ks[0]).norm(), 0.0 + 1e-15);
  const std::vector<int> bad{0, 0, 1};
  EXPECT_THROW(nested_bracket(spec, bad, ks), ShapeError);
}

TEST(Validation, ZooModelsPass) {
  for (const auto& md : default_zoo()) {
    const auto rep = validate_extension(md.spec, 1e-10);
    EXPECT_TRUE(rep.passed()) << md.name;
    EXPECT_EQ(rep.detected_step, md.spec.step()) << md.name;
    EXPECT_EQ(rep.checks.size(), validation_check_names().size());
  }
}

TEST(Validation, RandomValidSpecsPass) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto spec = random_valid_spec(seed);
    const auto rep = validate_extension(spec, 1e-9);
    EXPECT_TRUE(rep.passed()) << "seed " << seed;
  }
}

// Six single-violation mutants.
TEST(ValidationMutant, NonSkewOmega) {
  const auto rep = validate_extension(mutant_non_skew_omega());
  EXPECT_TRUE(has_failed(rep, "skewness"));
  EXPECT_TRUE(rep.check("leibniz").passed);
  EXPECT_TRUE(rep.check("c1").passed);
  EXPECT_TRUE(rep.check("c2").passed);
}

TEST(ValidationMutant, AlphaNotADerivation) {
  const auto rep = validate_extension(mutant_alpha_not_derivation());
  EXPECT_TRUE(has_failed(rep, "leibniz"));
  EXPECT_TRUE(rep.check("skewness").passed);
  EXPECT_TRUE(rep.check("c1").passed);
  EXPECT_TRUE(rep.check("c2").passed);
  EXPECT_TRUE(rep.check("step").passed);
}

TEST(ValidationMutant, NonCommutingAlpha) {
  const auto rep = validate_extension(mutant_non_commuting_alpha());
  EXPECT_TRUE(has_failed(rep, "c1"));
  EXPECT_TRUE(rep.check("skewness").passed);
  EXPECT_TRUE(rep.check("leibniz").passed);
  EXPECT_TRUE(rep.check("c2").passed);
  EXPECT_TRUE(rep.check("step").passed);
}

TEST(ValidationMutant, CyclicConditionViolated) {
  const auto rep = validate_extension(mutant_cyclic_condition());
  EXPECT_TRUE(has_failed(rep, "c2"));
  EXPECT_TRUE(rep.check("skewness").passed);
  EXPECT_TRUE(rep.check("leibniz").passed);
  EXPECT_TRUE(rep.check("c1").passed);
  EXPECT_TRUE(rep.check("step").passed);
}

TEST(ValidationMutant, VBracketJacobiViolated) {
  const auto rep = validate_extension(mutant_v_jacobi());
  EXPECT_TRUE(has_failed(rep, "jacobi"));
  EXPECT_TRUE(rep.check("skewness").passed);
  EXPECT_TRUE(rep.check("leibniz").passed);
  EXPECT_TRUE(rep.check("c1").passed);
  EXPECT_TRUE(rep.check("c2").passed);
}

TEST(ValidationMutant, WrongDeclaredStep) {
  const auto rep = validate_extension(mutant_wrong_step());
  EXPECT_EQ(rep.failed_checks(), std::vector<std::string>{"step"});
  EXPECT_EQ(rep.detected_step, 2);
}

TEST(DetectStep, KnownAlgebras) {
  EXPECT_EQ(detect_step(build_abelian(3, 2).spec), 1);
  EXPECT_EQ(detect_step(heisenberg3()), 2);
  EXPECT_EQ(detect_step(build_beta_upper_triangular(4).spec), 3);
  EXPECT_EQ(detect_step(build_beta_upper_triangular(5).spec), 4);
  // [e0, e1] = e1 never terminates.
  std::vector<double> vb(8, 0.0);
  vb[idx(0, 1, 1, 2, 2)] = 1.0;
  vb[idx(1, 0, 1, 2, 2)] = -1.0;
  EXPECT_EQ(detect_step(ExtensionSpec(0, 2, 1, {}, {}, vb)), 0);
}

TEST(Equivalence, MapIsBracketHomomorphism) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto spec = random_valid_spec(seed + 100);
    PhiloxStream rng(seed, 7);
    const Eigen::MatrixXd b = nilflow::testing::random_matrix(spec.n(), spec.m(), rng);
    const auto other = apply_equivalence(spec, b);
    EXPECT_TRUE(validate_extension(other, 1e-9).passed());
    const Element x = random_element(spec, rng), y = random_element(spec, rng);
    const Element lhs = equivalence_map(b, bracket(spec, x, y));
    const Element rhs = bracket(other, equivalence_map(b, x), equivalence_map(b, y));
    EXPECT_LT((lhs - rhs).norm(), 1e-10);
    // The group laws correspond as well.
    const Element glhs = equivalence_map(b, bchd_multiply(spec, x, y));
    const Element grhs = bchd_multiply(other, equivalence_map(b, x), equivalence_map(b, y));
    EXPECT_LT((glhs - grhs).norm(), 1e-9);
  }
}

TEST(Truncation, KeepsLeadingDirections) {
  const auto spec = build_step3_R6(4, default_Omega(4), default_gamma(4)).spec;
  const auto t = truncate_w(spec, 2);
  EXPECT_EQ(t.m(), 2);
  EXPECT_EQ(t.n(), 6);
  EXPECT_DOUBLE_EQ(t.omega(0, 1, 0), spec.omega(0, 1, 0));
  EXPECT_DOUBLE_EQ(t.alpha(1, 3, 0), spec.alpha(1, 3, 0));
  EXPECT_TRUE(validate_extension(t).passed());
  EXPECT_THROW(truncate_w(spec, 5), DomainError);
}

TEST(BilinearNorm, ExactOnKnownMaps) {
  // The 2 x 2 determinant form has operator norm 1.
  std::vector<double> det{0, 1, -1, 0};
  EXPECT_NEAR(bilinear_norm_estimate(det, 2, 2, 1, 8), 1.0, 1e-10);
  // Monotone in restarts.
  const auto spec = random_valid_spec(5);
  double prev = 0.0;
  for (int r : {1, 2, 4, 8, 16}) {
    const double v = bilinear_norm_estimate(spec.structure_data(), spec.dim(), spec.dim(),
                                            spec.n(), r);
    EXPECT_GE(v, prev);
    prev = v;
  }
}
