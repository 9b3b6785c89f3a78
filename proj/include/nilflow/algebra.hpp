#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nilflow {

/// Thrown when tensor or vector dimensions do not conform.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when an argument lies outside an operation's domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Thrown for malformed spec documents.
class SpecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Point of g = R^m + v in exponential coordinates, W-part first.
///
/// The same type stands for Lie-algebra vectors and group elements.
class Element {
 public:
  Element() = default;
  Element(int m, int n);
  Element(int m, Eigen::VectorXd coords);
  static Element from_parts(const Eigen::VectorXd& w, const Eigen::VectorXd& v);

  int m() const { return m_; }
  int n() const { return static_cast<int>(coords_.size()) - m_; }
  int dim() const { return static_cast<int>(coords_.size()); }

  auto w_part() const { return coords_.head(m_); }
  auto v_part() const { return coords_.tail(coords_.size() - m_); }
  auto w_part() { return coords_.head(m_); }
  auto v_part() { return coords_.tail(coords_.size() - m_); }

  const Eigen::VectorXd& coords() const { return coords_; }
  Eigen::VectorXd& coords() { return coords_; }
  double operator[](int i) const { return coords_[i]; }
  double& operator[](int i) { return coords_[i]; }

  /// Cameron-Martin norm sqrt(|A|^2 + |a|^2).
  double norm() const { return coords_.norm(); }

  Element operator-() const { return Element(m_, -coords_); }
  Element& operator+=(const Element& o);
  Element& operator-=(const Element& o);
  Element& operator*=(double s);

 private:
  int m_ = 0;
  Eigen::VectorXd coords_;
};

Element operator+(Element a, const Element& b);
Element operator-(Element a, const Element& b);
Element operator*(double s, Element a);

/// Basis vector h_i of the full (m+N) basis.
Element basis_element(int m, int n, int i);

/// Extension data (omega, alpha, v_bracket) of a semi-infinite Lie algebra.
///
/// Tensors are dense row-major: omega[i][j][c], alpha[i][r][c] is entry (r, c)
/// of the derivation alpha_{k_i}, v_bracket[a][b][c] is the c-th coordinate of
/// [e_a, e_b]. Shapes are checked on construction; algebraic identities are
/// left to validate_extension. The object is immutable.
class ExtensionSpec {
 public:
  ExtensionSpec(int m, int n, int step, std::vector<double> omega, std::vector<double> alpha,
                std::vector<double> v_bracket);

  int m() const { return m_; }
  int n() const { return n_; }
  int dim() const { return m_ + n_; }
  int step() const { return step_; }

  double omega(int i, int j, int c) const { return omega_[(i * m_ + j) * n_ + c]; }
  double alpha(int i, int r, int c) const { return alpha_[(i * n_ + r) * n_ + c]; }
  double v_bracket(int a, int b, int c) const { return v_bracket_[(a * n_ + b) * n_ + c]; }

  const std::vector<double>& omega_data() const { return omega_; }
  const std::vector<double>& alpha_data() const { return alpha_; }
  const std::vector<double>& v_bracket_data() const { return v_bracket_; }

  /// Structure constant: c-th v-coordinate of [h_a, h_b] over the full basis.
  double structure(int a, int b, int c) const { return structure_[(a * dim() + b) * n_ + c]; }
  const std::vector<double>& structure_data() const { return structure_; }

  struct Entry {
    int a, b, c;
    double value;
  };
  /// Nonzero structure constants, used for sparse bracket evaluation.
  const std::vector<Entry>& structure_entries() const { return entries_; }

  /// Same tensors with a different declared step.
  ExtensionSpec with_step(int step) const;

  /// Matrix of v -> alpha_X v for X in R^m.
  Eigen::MatrixXd alpha_matrix(const Eigen::VectorXd& x) const;
  /// Matrix of v -> [u, v]_v for u in v.
  Eigen::MatrixXd ad_v_matrix(const Eigen::VectorXd& u) const;
  /// omega(X, Y) for X, Y in R^m.
  Eigen::VectorXd omega_of(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;
  /// [u, w]_v for u, w in v.
  Eigen::VectorXd v_bracket_of(const Eigen::VectorXd& u, const Eigen::VectorXd& w) const;

  void check_element(const Element& x) const;

 private:
  int m_, n_, step_;
  std::vector<double> omega_, alpha_, v_bracket_;
  std::vector<double> structure_;
  std::vector<Entry> entries_;
};

/// [x, y] in g. The W-part of the result is exactly zero.
Element bracket(const ExtensionSpec& spec, const Element& x, const Element& y);

/// v-part of [x, y] written into out (length N), no allocation.
void bracket_into(const ExtensionSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                  const Eigen::Ref<const Eigen::VectorXd>& y, Eigen::Ref<Eigen::VectorXd> out);

/// A permutation of {0..n-1}; sigma[j] is the slot read at position j.
using Permutation = std::vector<int>;

bool is_permutation(std::span<const int> sigma);

/// [[...[k_{sigma(0)}, k_{sigma(1)}], ...], k_{sigma(n-1)}]; n = 1 returns k_{sigma(0)}.
Element nested_bracket(const ExtensionSpec& spec, std::span<const int> sigma,
                       std::span<const Element> ks);

struct CheckResult {
  std::string name;
  double max_violation = 0.0;
  bool passed = true;
};

struct ValidationReport {
  std::vector<CheckResult> checks;
  double tolerance = 1e-9;
  int declared_step = 0;
  /// 0 when the lower central series does not terminate.
  int detected_step = 0;
  double c0 = 0.0;

  bool passed() const;
  const CheckResult& check(const std::string& name) const;
  std::vector<std::string> failed_checks() const;
};

/// Names of the checks, in report order.
const std::vector<std::string>& validation_check_names();

ValidationReport validate_extension(const ExtensionSpec& spec, double tolerance = 1e-9);

/// Nilpotency step from the lower central series, 0 if it does not terminate.
int detect_step(const ExtensionSpec& spec, double rank_threshold = 1e-10);

/// Extension data transformed by b: R^m -> v (an N x m matrix).
ExtensionSpec apply_equivalence(const ExtensionSpec& spec, const Eigen::MatrixXd& b);

/// The isomorphism X + V -> X - b(X) + V from spec to apply_equivalence(spec, b).
Element equivalence_map(const Eigen::MatrixXd& b, const Element& x);

/// Restriction to the first ell W-directions.
ExtensionSpec truncate_w(const ExtensionSpec& spec, int ell);

/// Best value of |T(x, y)| over unit x, y found by alternating power iteration.
///
/// T is given as a dense (p x q x r) array. Starts come from a counter-based
/// stream keyed by seed, so the value is nondecreasing in restarts.
double bilinear_norm_estimate(std::span<const double> tensor, int p, int q, int r, int restarts,
                              std::uint64_t seed = 0x5eed);

}  // namespace nilflow
