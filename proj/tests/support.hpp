#pragma once

#include "nilflow/algebra.hpp"
#include "nilflow/rng.hpp"
#include "nilflow/zoo.hpp"

#include <Eigen/Dense>

#include <vector>

namespace nilflow::testing {

inline Element random_element(const ExtensionSpec& spec, PhiloxStream& rng, double scale = 1.0) {
  Element x(spec.m(), spec.n());
  for (int i = 0; i < spec.dim(); ++i) x[i] = scale * rng.normal();
  return x;
}

inline Eigen::MatrixXd random_matrix(int rows, int cols, PhiloxStream& rng, double scale = 1.0) {
  Eigen::MatrixXd a(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) a(i, j) = scale * rng.normal();
  return a;
}

/// Structure constants of v transported by an invertible change of basis p:
/// [x, y]' = p^{-1} [p x, p y].
inline std::vector<double> change_basis(const std::vector<double>& bracket, int n,
                                        const Eigen::MatrixXd& p) {
  const Eigen::MatrixXd pinv = p.inverse();
  std::vector<double> out(static_cast<std::size_t>(n) * n * n, 0.0);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double w = p(i, a) * p(j, b);
          if (w == 0.0) continue;
          for (int c = 0; c < n; ++c) acc[c] += w * bracket[(i * n + j) * n + c];
        }
      const Eigen::VectorXd r = pinv * acc;
      for (int c = 0; c < n; ++c) out[(a * n + b) * n + c] = r[c];
    }
  return out;
}

/// Random valid extension: a beta-extension over a randomly re-based nilpotent v,
/// transported by a random equivalence, or a random Heisenberg-like spec.
inline ExtensionSpec random_valid_spec(std::uint64_t seed) {
  PhiloxStream rng(seed, 0xabc);
  const int kind = static_cast<int>(rng.next_u32() % 4);
  const int m = 1 + static_cast<int>(rng.next_u32() % 4);
  if (kind == 0) {
    const int n = 1 + static_cast<int>(rng.next_u32() % 3);
    std::vector<double> omega(static_cast<std::size_t>(m) * m * n, 0.0);
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j)
        for (int c = 0; c < n; ++c) {
          const double w = rng.normal();
          omega[(i * m + j) * n + c] = w;
          omega[(j * m + i) * n + c] = -w;
        }
    return build_heisenberg_like(m, n, omega).spec;
  }
  std::vector<double> v_bracket;
  int n = 0;
  if (kind == 1) {
    n = 2;
    v_bracket.assign(8, 0.0);
  } else {
    const UpperTriangularAlgebra alg = strictly_upper_triangular_algebra(kind == 2 ? 3 : 4);
    n = alg.dim();
    Eigen::MatrixXd p = random_matrix(n, n, rng, 0.5);
    p += Eigen::MatrixXd::Identity(n, n);
    v_bracket = change_basis(alg.bracket, n, p);
  }
  const Eigen::MatrixXd beta = random_matrix(m, n, rng, 0.7);
  std::vector<double> bvec(static_cast<std::size_t>(m) * n);
  for (int i = 0; i < m; ++i)
    for (int c = 0; c < n; ++c) bvec[i * n + c] = beta(i, c);
  const ExtensionSpec base = build_beta_extension(m, n, bvec, v_bracket).spec;
  return apply_equivalence(base, random_matrix(n, m, rng, 0.5));
}

}  // namespace nilflow::testing
