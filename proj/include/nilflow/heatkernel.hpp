#pragma once

#include "nilflow/algebra.hpp"
#include "nilflow/group.hpp"
#include "nilflow/stochastic.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace nilflow {

// ------------------------------------------------------ cylinder functions

struct Monomial {
  double coefficient = 0.0;
  std::vector<std::pair<int, int>> powers;  // (coordinate, exponent)
};

enum class Squash {
  None,
  Tanh,        // tanh(p)
  TanhSquared  // tanh(p)^2, bounded and nonnegative
};

/// Polynomial in the m+N coordinates, optionally post-composed with a squasher.
class CylinderPolynomial {
 public:
  CylinderPolynomial(int dim, std::vector<Monomial> monomials, Squash squash = Squash::None,
                     std::string name = {});

  static CylinderPolynomial constant(int dim, double c);
  static CylinderPolynomial linear(int dim, const Eigen::VectorXd& coefficients);

  int dim() const { return dim_; }
  Squash squash() const { return squash_; }
  const std::string& name() const { return name_; }
  const std::vector<Monomial>& monomials() const { return monomials_; }
  CylinderPolynomial with_squash(Squash s) const;

  double polynomial(const Eigen::VectorXd& x) const;
  Eigen::VectorXd polynomial_gradient(const Eigen::VectorXd& x) const;

  double operator()(const Eigen::VectorXd& x) const;
  /// Euclidean gradient in the coordinates, chain rule through the squasher.
  Eigen::VectorXd coordinate_gradient(const Eigen::VectorXd& x) const;

 private:
  int dim_;
  std::vector<Monomial> monomials_;
  Squash squash_;
  std::string name_;
};

/// Five low-degree polynomials in x_0, x_1 and the last v-coordinate.
std::vector<CylinderPolynomial> default_suite(int m, int n, Squash squash);

/// c(x) = x / (e^x - 1), c(0) = 1.
double c_function(double x);

/// 2 (1 - e^{-K t}) / K, equal to 2t at K = 0.
double log_sobolev_coefficient(double k, double t);

/// Left-invariant gradient: <grad f(g), h_i> = d/de f(g . e h_i) at e = 0.
Element gradient(const GroupLaw& law, const CylinderPolynomial& f, const Element& g);
Element gradient(const ExtensionSpec& spec, const CylinderPolynomial& f, const Element& g);

// ---------------------------------------------------------------- reports

enum class Verdict { Pass, Inconclusive, Fail };

std::string verdict_name(Verdict v);

/// One compared quantity: lhs should not exceed rhs (or equal it, for two-sided tests).
struct MCItem {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double sigma = 0.0;
  /// (rhs - lhs) / sigma for one-sided tests, |lhs - rhs| / sigma for two-sided ones.
  double margin_sigma = 0.0;
  Verdict verdict = Verdict::Pass;
};

struct MCReport {
  std::string test;
  std::vector<MCItem> items;
  long long trials = 0;
  std::uint64_t seed = 0;
  SimConfig config;
  Verdict verdict = Verdict::Pass;
  nlohmann::json details = nlohmann::json::object();

  bool passed() const { return verdict == Verdict::Pass; }
  bool failed() const { return verdict == Verdict::Fail; }
};

/// Worst verdict across items.
Verdict combine(const std::vector<MCItem>& items);

/// Omits thread count and timings so equal inputs give equal documents.
nlohmann::json report_to_json(const MCReport& rep);

/// Kahan-compensated mean and standard error of the mean.
struct MeanStderr {
  double mean = 0.0;
  double sem = 0.0;
};
MeanStderr mean_stderr(std::span<const double> xs);

// ------------------------------------------------------------------ tests

/// Plug-in mean and standard error of f over endpoint samples.
MCReport estimate_expectation(const ExtensionSpec& spec, const CylinderPolynomial& f,
                              const SimConfig& config);

/// E f(g_t) - E f(g_t^{-1}) on shared samples; pass iff |difference| <= 3 sigma.
/// With `shift`, the second law is (shift . g_t)^{-1}, which should fail.
MCReport inversion_invariance_test(const ExtensionSpec& spec,
                                   const std::vector<CylinderPolynomial>& suite,
                                   const SimConfig& config,
                                   const std::optional<Element>& shift = std::nullopt);

/// Ent(f^2) <= 2 (1 - e^{-Kt})/K E|grad f|^2 with K from ricci_form.
MCReport log_sobolev_test(const ExtensionSpec& spec, const std::vector<CylinderPolynomial>& suite,
                          const SimConfig& config);

/// E f(h . g_t) <= exp(c(Kt)(p-1) d^2 / (2t)) (E f^q)^{1/q}, and the same for g_t . h,
/// with d the distance upper bound. Suite members must be nonnegative.
MCReport quasi_invariance_test(const ExtensionSpec& spec, const Element& h, double p,
                               const std::vector<CylinderPolynomial>& suite,
                               const SimConfig& config);

/// E sup_k |g^l(t_k) - g(t_k)|^2 for each l, on shared drivers; must strictly decrease.
MCReport projection_convergence_study(const ExtensionSpec& spec, const std::vector<int>& ells,
                                      const SimConfig& config);

}  // namespace nilflow
