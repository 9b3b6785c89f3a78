#pragma once

#include "nilflow/algebra.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <string>
#include <vector>

namespace nilflow {

/// Closed-form group law used to cross-check bchd_multiply.
using GroupOracle = std::function<Element(const Element&, const Element&)>;

struct ModelDescriptor {
  std::string name;
  nlohmann::json parameters;
  ExtensionSpec spec;
  GroupOracle oracle;  // empty when no closed form is known
};

/// Matrix algebra of strictly upper-triangular n x n matrices.
///
/// Basis E_{ij} (i < j) ordered by superdiagonal, then row:
/// E_{12}, E_{23}, ..., E_{13}, E_{24}, ..., E_{1n}.
struct UpperTriangularAlgebra {
  int n = 0;
  std::vector<std::pair<int, int>> basis;  // (row, col), 0-based
  std::vector<double> bracket;             // N x N x N, N = basis.size()

  int dim() const { return static_cast<int>(basis.size()); }
  Eigen::MatrixXd to_matrix(const Eigen::VectorXd& coords) const;
  Eigen::VectorXd from_matrix(const Eigen::MatrixXd& a) const;
};

UpperTriangularAlgebra strictly_upper_triangular_algebra(int n);

/// log(exp(a) exp(b)) for nilpotent matrices by the truncated series.
Eigen::MatrixXd nilpotent_log_of_product(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// alpha = 0, step 2 (step 1 when omega vanishes).
ModelDescriptor build_heisenberg_like(int m, int n, std::vector<double> omega);
/// m = 2, N = 1, omega(k_1, k_2) = e_1.
ModelDescriptor build_heisenberg();

/// alpha_X = ad_{beta(X)}, omega(X, Y) = [beta(X), beta(Y)]_v.
/// beta is m x N row-major: row i is beta(k_i).
ModelDescriptor build_beta_extension(int m, int n, std::vector<double> beta,
                                     std::vector<double> v_bracket);
/// beta into the strictly upper-triangular size x size algebra, m = 3, with a matrix
/// oracle. Step size - 1.
ModelDescriptor build_beta_upper_triangular(int size = 4);

/// Path space over R^3 on a K-point grid; m = 3K, N = 3.
ModelDescriptor build_path_space_example(int grid);
/// Time averages sigma-bar of the basis paths: row = basis index, 3 columns.
Eigen::MatrixXd path_space_averages(int grid);
/// v-part of log(exp A exp B) in the 4 x 4 representation.
Eigen::Vector3d path_space_matrix_oracle(int grid, const Element& g, const Element& h);

/// v = (v_1, v_2, x) with omega = (Omega, Omega, 0) and alpha_w = gamma(w)(v_1 - v_2) on x.
ModelDescriptor build_step2_R2R(int m, std::vector<double> Omega, std::vector<double> gamma);
/// v = (v_1, v_2, v_3, x_1, x_2, y), abelian, step 3.
ModelDescriptor build_step3_R6(int m, std::vector<double> Omega, std::vector<double> gamma);

/// Omega_ij = 1/((i+1)(j+1)) for i < j, skew.
std::vector<double> default_Omega(int m);
/// gamma_i = 1/(i+1).
std::vector<double> default_gamma(int m);

/// Abelian R^m (+) R^n, step 1.
ModelDescriptor build_abelian(int m, int n);

/// Every model with default parameters, small enough for exhaustive tests.
std::vector<ModelDescriptor> default_zoo();

/// Default model by CLI name: heisenberg, beta, beta5, pathspace, step2, step3,
/// abelian.
ModelDescriptor build_named_model(const std::string& name, int m, int grid);

}  // namespace nilflow
