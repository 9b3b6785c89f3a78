#pragma once

#include "nilflow/algebra.hpp"
#include "nilflow/zoo.hpp"

#include <string>
#include <vector>

namespace nilflow::testing {

inline std::size_t idx(int a, int b, int c, int nb, int nc) {
  return (static_cast<std::size_t>(a) * nb + b) * nc + c;
}

/// omega(k1, k2) = e0 but omega(k2, k1) = -e0 / 2.
inline ExtensionSpec mutant_non_skew_omega() {
  std::vector<double> omega(4, 0.0);
  omega[idx(0, 1, 0, 2, 1)] = 1.0;
  omega[idx(1, 0, 0, 2, 1)] = -0.5;
  return ExtensionSpec(2, 1, 2, omega, std::vector<double>(2, 0.0), {0.0});
}

/// v = heis(3) + R e3; alpha(k1) e3 = e2 sends [e0, e1] = e2 to e3, while
/// [alpha e0, e1] + [e0, alpha e1] = 0.
inline ExtensionSpec mutant_alpha_not_derivation() {
  const int n = 4;
  std::vector<double> vb(64, 0.0);
  vb[idx(0, 1, 2, n, n)] = 1.0;
  vb[idx(1, 0, 2, n, n)] = -1.0;
  std::vector<double> alpha(16, 0.0);
  alpha[idx(0, 3, 2, n, n)] = 1.0;
  return ExtensionSpec(1, n, 3, {0, 0, 0, 0}, alpha, vb);
}

/// Abelian R^3 with alpha_1 = E_{21}, alpha_2 = E_{10}; their commutator E_{20} is not ad of
/// anything.
inline ExtensionSpec mutant_non_commuting_alpha() {
  const int n = 3;
  std::vector<double> alpha(2 * 9, 0.0);
  alpha[idx(0, 2, 1, n, n)] = 1.0;
  alpha[idx(1, 1, 0, n, n)] = 1.0;
  return ExtensionSpec(2, n, 3, std::vector<double>(12, 0.0), alpha, std::vector<double>(27, 0.0));
}

/// m = 3 over abelian R^2 with alpha_1 e0 = e1 and omega(k2, k3) = e0.
inline ExtensionSpec mutant_cyclic_condition() {
  const int m = 3, n = 2;
  std::vector<double> omega(m * m * n, 0.0);
  omega[idx(1, 2, 0, m, n)] = 1.0;
  omega[idx(2, 1, 0, m, n)] = -1.0;
  std::vector<double> alpha(m * n * n, 0.0);
  alpha[idx(0, 1, 0, n, n)] = 1.0;
  return ExtensionSpec(m, n, 3, omega, alpha, std::vector<double>(8, 0.0));
}

/// [e0, e1] = e1, [e0, e2] = e0 is skew but not a Lie bracket.
inline ExtensionSpec mutant_v_jacobi() {
  const int n = 3;
  std::vector<double> vb(27, 0.0);
  vb[idx(0, 1, 1, n, n)] = 1.0;
  vb[idx(1, 0, 1, n, n)] = -1.0;
  vb[idx(0, 2, 0, n, n)] = 1.0;
  vb[idx(2, 0, 0, n, n)] = -1.0;
  return ExtensionSpec(1, n, 2, std::vector<double>(3, 0.0), std::vector<double>(9, 0.0), vb);
}

/// Heisenberg declared with step 3.
inline ExtensionSpec mutant_wrong_step() { return build_heisenberg().spec.with_step(3); }

struct Mutant {
  std::string label;
  std::string violated;
  ExtensionSpec spec;
};

inline std::vector<Mutant> constructed_mutants() {
  return {{"non-skew omega", "skewness", mutant_non_skew_omega()},
          {"alpha not a derivation", "leibniz", mutant_alpha_not_derivation()},
          {"non-commuting alpha", "c1", mutant_non_commuting_alpha()},
          {"cyclic condition", "c2", mutant_cyclic_condition()},
          {"v bracket Jacobi", "jacobi", mutant_v_jacobi()},
          {"wrong declared step", "step", mutant_wrong_step()}};
}

}  // namespace nilflow::testing
