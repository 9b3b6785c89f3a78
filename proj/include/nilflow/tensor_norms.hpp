#pragma once

#include "nilflow/algebra.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <string>
#include <vector>

namespace nilflow {

/// Multilinear map R^{d_1} x ... x R^{d_k} -> R^out, evaluated on vectors.
struct MultilinearMap {
  std::vector<int> input_dims;
  int output_dim = 0;
  std::function<Eigen::VectorXd(const std::vector<Eigen::VectorXd>&)> eval;
};

/// Hilbert-Schmidt norm: sqrt of the summed squared outputs over basis tuples.
double hs_norm(const MultilinearMap& map);
/// Same for a dense coefficient array (the flattened Frobenius norm).
double hs_norm(std::span<const double> tensor);

MultilinearMap bracket_map(const ExtensionSpec& spec);
MultilinearMap omega_map(const ExtensionSpec& spec);
MultilinearMap alpha_map(const ExtensionSpec& spec);
MultilinearMap v_bracket_map(const ExtensionSpec& spec);

/// E|Z|^p for Z standard normal in R^m.
double gaussian_moment(int m, double p);

enum class NormTarget { Omega, Alpha, Bracket, VBracket };

NormTarget parse_norm_target(const std::string& name);

/// Lower-bound estimate of the operator norm; nondecreasing in restarts.
double uniform_norm_estimate(const ExtensionSpec& spec, NormTarget which, int restarts);

/// S_ab = sum_i <[h_i, h_a], [h_i, h_b]> over the full basis.
Eigen::MatrixXd bracket_gram_matrix(const ExtensionSpec& spec);

/// Upper bound on the operator norm of the assembled bracket: sqrt of the
/// largest eigenvalue of X -> |[., X]|_2^2.
double bracket_norm_upper_bound(const ExtensionSpec& spec);

struct InequalityCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool passed = true;
};

struct NormReport {
  double hs_bracket = 0.0, hs_omega = 0.0, hs_alpha = 0.0, hs_v_bracket = 0.0;
  double unif_omega_est = 0.0, unif_alpha_est = 0.0, unif_bracket_est = 0.0, c0_est = 0.0;
  int restarts = 0;
  double slack = 1.05;
  double C2 = 0.0;
  /// |hs_bracket^2 - (hs_omega^2 + 2 hs_alpha^2 + hs_v_bracket^2)|
  double hs_identity_residual = 0.0;
  /// Hilbert-Schmidt norms of the left-nested bracket maps F_2, F_3, ..., F_{step+1}.
  std::vector<double> nested_hs;
  std::vector<InequalityCheck> inequalities;

  bool passed() const;
};

NormReport check_norm_inequalities(const ExtensionSpec& spec, int restarts = 32,
                                   double slack = 1.05);

nlohmann::json norm_report_to_json(const NormReport& rep);

}  // namespace nilflow
