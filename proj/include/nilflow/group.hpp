#pragma once

#include "nilflow/algebra.hpp"

#include <boost/rational.hpp>

#include <functional>
#include <memory>
#include <utility>
#include <vector>

namespace nilflow {

using Rational = boost::rational<long long>;

/// One term a^k_{n,m} ad_g^{n_1} ad_h^{m_1} ... ad_g^{n_k} ad_h^{m_k} g.
struct BchdTerm {
  int k = 0;
  std::vector<int> n, m;
  Rational coefficient;
};

/// All terms with |n|+|m| < step, for k = 1..step-1.
struct BchdTermTable {
  int step = 0;
  std::vector<BchdTerm> terms;
};

/// (-1)^k / ((k+1) m! n! (|n|+1)) with k = n.size().
Rational bchd_coefficient(const std::vector<int>& n, const std::vector<int>& m);

/// Cached per step; safe to call concurrently.
const BchdTermTable& bchd_term_table(int step);

/// d_1..d_{step-1} of the left-invariant length integrand; entry 0 is d_1.
std::vector<Rational> d_coefficients(int step);

/// Group law compiled for one spec into shared-suffix bracket words.
///
/// Holds a copy of its ExtensionSpec; evaluation is const and reentrant.
class GroupLaw {
 public:
  explicit GroupLaw(const ExtensionSpec& spec);

  const ExtensionSpec& spec() const { return spec_; }

  Element multiply(const Element& g, const Element& h) const;
  /// out = g . h on raw coordinate vectors; out may alias g.
  void multiply_into(const Eigen::Ref<const Eigen::VectorXd>& g,
                     const Eigen::Ref<const Eigen::VectorXd>& h, Eigen::Ref<Eigen::VectorXd> out,
                     std::vector<Eigen::VectorXd>& scratch) const;

  /// Derivative of x -> g . x at x in direction v.
  Element left_pushforward(const Element& g, const Element& x, const Element& v) const;

  /// Columns L_{g*} h_i at x = e, as a (m+N) x (m+N) matrix.
  Eigen::MatrixXd pushforward_matrix_at_identity(const Element& g) const;

  struct Node {
    int parent;  // -1: the base element
    int letter;
  };
  struct Program {
    std::vector<Node> nodes;
    std::vector<std::pair<int, double>> outputs;
  };

 private:
  void run(const Program& prog, const double* const* letters, const double* base,
           Eigen::Ref<Eigen::VectorXd> acc, std::vector<Eigen::VectorXd>& scratch) const;

  ExtensionSpec spec_;
  Program mult_;  // letters: 0 = g, 1 = h
  Program push_;  // letters: 0 = g, 1 = x, 2 = v
};

Element bchd_multiply(const ExtensionSpec& spec, const Element& g, const Element& h);
Element inverse(const Element& g);
Element left_pushforward(const ExtensionSpec& spec, const Element& g, const Element& x,
                         const Element& v);

/// Gauss-Legendre nodes and weights on [0, 1].
std::pair<std::vector<double>, std::vector<double>> gauss_legendre_unit(int points);

/// Integrand |g' + sum_l d_l ad_g^l g'| of the left-invariant length.
double length_integrand(const ExtensionSpec& spec, const std::vector<double>& d,
                        const Eigen::VectorXd& g, const Eigen::VectorXd& dg);

/// Length of the piecewise-linear path through the knots.
double path_length(const ExtensionSpec& spec, std::span<const Element> knots,
                   int quadrature_points = 16);

/// Length of a C^1 curve s -> (value, derivative) on [a, b].
double path_length(const ExtensionSpec& spec,
                   const std::function<std::pair<Element, Element>(double)>& curve, double a,
                   double b, int segments, int quadrature_points = 16);

struct DistanceBounds {
  double lower = 0.0;
  double upper = 0.0;
  double straight_line = 0.0;
  double epsilon0 = 1.0;
  double kappa = 0.0;
  double bracket_bound = 0.0;
  int evaluations = 0;
};

/// Bounds on the Cameron-Martin distance from e to y.
DistanceBounds distance_bounds(const ExtensionSpec& spec, const Element& y,
                               int optimizer_budget = 2000, int interior_knots = 4);

/// Factor in front of |y - x| in the straight-line upper bound on d(x, y).
double straight_line_bound_factor(const ExtensionSpec& spec, double x_norm);

struct RicciResult {
  Eigen::MatrixXd form;
  Eigen::VectorXd eigenvalues;
  double k_p = 0.0;
  /// Best available lower constant at this dimension; equals k_p here.
  double k_estimate = 0.0;
};

RicciResult ricci_form(const ExtensionSpec& spec);

}  // namespace nilflow
