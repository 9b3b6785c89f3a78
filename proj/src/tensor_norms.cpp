#include "nilflow/tensor_norms.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace nilflow {

namespace {

/// Calls fn on every tuple of basis indices for the given dimensions.
template <class Fn>
void for_each_index_tuple(const std::vector<int>& dims, Fn&& fn) {
  std::vector<int> idx(dims.size(), 0);
  for (int d : dims)
    if (d == 0) return;
  while (true) {
    fn(idx);
    int k = static_cast<int>(dims.size()) - 1;
    while (k >= 0 && ++idx[k] == dims[k]) idx[k--] = 0;
    if (k < 0) return;
  }
}

MultilinearMap dense_map(std::vector<double> data, int p, int q, int r) {
  MultilinearMap map;
  map.input_dims = {p, q};
  map.output_dim = r;
  map.eval = [data = std::move(data), p, q, r](const std::vector<Eigen::VectorXd>& in) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(r);
    for (int a = 0; a < p; ++a)
      for (int b = 0; b < q; ++b)
        for (int c = 0; c < r; ++c) out[c] += data[(a * q + b) * r + c] * in[0][a] * in[1][b];
    return out;
  };
  return map;
}

/// alpha rearranged as (X, V) -> alpha_X V.
std::vector<double> alpha_as_bilinear(const ExtensionSpec& spec) {
  const int m = spec.m(), n = spec.n();
  std::vector<double> t(static_cast<std::size_t>(m) * n * n);
  for (int i = 0; i < m; ++i)
    for (int c = 0; c < n; ++c)
      for (int r = 0; r < n; ++r) t[(i * n + c) * n + r] = spec.alpha(i, r, c);
  return t;
}

}  // namespace

Eigen::MatrixXd bracket_gram_matrix(const ExtensionSpec& spec) {
  const int d = spec.dim(), n = spec.n();
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i)
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) {
        double acc = 0.0;
        for (int c = 0; c < n; ++c) acc += spec.structure(i, a, c) * spec.structure(i, b, c);
        s(a, b) += acc;
      }
  return s;
}

double hs_norm(const MultilinearMap& map) {
  double total = 0.0;
  std::vector<Eigen::VectorXd> in(map.input_dims.size());
  for_each_index_tuple(map.input_dims, [&](const std::vector<int>& idx) {
    for (std::size_t k = 0; k < idx.size(); ++k)
      in[k] = Eigen::VectorXd::Unit(map.input_dims[k], idx[k]);
    total += map.eval(in).squaredNorm();
  });
  return std::sqrt(total);
}

double hs_norm(std::span<const double> tensor) {
  double total = 0.0;
  for (double x : tensor) total += x * x;
  return std::sqrt(total);
}

MultilinearMap bracket_map(const ExtensionSpec& spec) {
  MultilinearMap map;
  map.input_dims = {spec.dim(), spec.dim()};
  map.output_dim = spec.n();
  map.eval = [&spec](const std::vector<Eigen::VectorXd>& in) {
    return Eigen::VectorXd(
        bracket(spec, Element(spec.m(), in[0]), Element(spec.m(), in[1])).v_part());
  };
  return map;
}

MultilinearMap omega_map(const ExtensionSpec& spec) {
  return dense_map(spec.omega_data(), spec.m(), spec.m(), spec.n());
}

MultilinearMap alpha_map(const ExtensionSpec& spec) {
  return dense_map(alpha_as_bilinear(spec), spec.m(), spec.n(), spec.n());
}

MultilinearMap v_bracket_map(const ExtensionSpec& spec) {
  return dense_map(spec.v_bracket_data(), spec.n(), spec.n(), spec.n());
}

double gaussian_moment(int m, double p) {
  if (m <= 0) throw DomainError("gaussian_moment: dimension must be positive");
  if (!(p >= 1.0)) throw DomainError("gaussian_moment: order must be >= 1");
  return std::exp(0.5 * p * std::log(2.0) + std::lgamma(0.5 * (m + p)) - std::lgamma(0.5 * m));
}

NormTarget parse_norm_target(const std::string& name) {
  if (name == "omega") return NormTarget::Omega;
  if (name == "alpha") return NormTarget::Alpha;
  if (name == "bracket") return NormTarget::Bracket;
  if (name == "v_bracket") return NormTarget::VBracket;
  throw DomainError("unknown norm target '" + name + "'");
}

double uniform_norm_estimate(const ExtensionSpec& spec, NormTarget which, int restarts) {
  const int m = spec.m(), n = spec.n(), d = spec.dim();
  switch (which) {
    case NormTarget::Omega:
      return bilinear_norm_estimate(spec.omega_data(), m, m, n, restarts);
    case NormTarget::Alpha: {
      const auto t = alpha_as_bilinear(spec);
      return bilinear_norm_estimate(t, m, n, n, restarts);
    }
    case NormTarget::Bracket:
      return bilinear_norm_estimate(spec.structure_data(), d, d, n, restarts);
    case NormTarget::VBracket:
      return bilinear_norm_estimate(spec.v_bracket_data(), n, n, n, restarts);
  }
  return 0.0;
}

double bracket_norm_upper_bound(const ExtensionSpec& spec) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(bracket_gram_matrix(spec), Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

bool NormReport::passed() const {
  return std::all_of(inequalities.begin(), inequalities.end(),
                     [](const InequalityCheck& c) { return c.passed; });
}

NormReport check_norm_inequalities(const ExtensionSpec& spec, int restarts, double slack) {
  const int m = spec.m(), n = spec.n(), d = spec.dim();
  NormReport rep;
  rep.restarts = restarts;
  rep.slack = slack;
  rep.hs_bracket = hs_norm(bracket_map(spec));
  rep.hs_omega = hs_norm(spec.omega_data());
  rep.hs_alpha = hs_norm(spec.alpha_data());
  rep.hs_v_bracket = hs_norm(spec.v_bracket_data());
  rep.unif_omega_est = uniform_norm_estimate(spec, NormTarget::Omega, restarts);
  rep.unif_alpha_est = uniform_norm_estimate(spec, NormTarget::Alpha, restarts);
  rep.unif_bracket_est = uniform_norm_estimate(spec, NormTarget::Bracket, restarts);
  rep.c0_est = uniform_norm_estimate(spec, NormTarget::VBracket, restarts);
  rep.C2 = gaussian_moment(m, 2.0);
  rep.hs_identity_residual =
      std::abs(rep.hs_bracket * rep.hs_bracket -
               (rep.hs_omega * rep.hs_omega + 2.0 * rep.hs_alpha * rep.hs_alpha +
                rep.hs_v_bracket * rep.hs_v_bracket));

  auto add = [&](std::string name, double lhs, double rhs) {
    rep.inequalities.push_back({std::move(name), lhs, rhs, lhs <= rhs * (1.0 + 1e-12) + 1e-14});
  };
  const double ua = slack * rep.unif_alpha_est;
  const double uo = slack * rep.unif_omega_est;
  add("alpha_hs", rep.hs_alpha * rep.hs_alpha, n * rep.C2 * ua * ua);
  add("omega_hs", rep.hs_omega * rep.hs_omega, rep.C2 * rep.C2 * uo * uo);
  add("bracket_uniform", rep.unif_bracket_est, uo + 2.0 * ua + slack * rep.c0_est);

  // Left-nested maps F_l, stored densely as (d^l) x n; F_2 is the bracket.
  const double hs2 = rep.hs_bracket * rep.hs_bracket;
  Eigen::MatrixXd mgram = Eigen::MatrixXd::Zero(n, n);
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      for (int a = 0; a < d; ++a)
        for (int c = 0; c < n; ++c)
          mgram(p, q) += spec.structure(m + p, a, c) * spec.structure(m + q, a, c);

  std::vector<double> f(spec.structure_data());
  std::size_t tuples = static_cast<std::size_t>(d) * d;
  rep.nested_hs.push_back(hs_norm(f));
  constexpr std::size_t kMaxEntries = 20'000'000;
  for (int ell = 2; ell <= spec.step(); ++ell) {
    // |F_{l+1}|^2 = sum_I F_l(I)^T M F_l(I)
    double next_sq = 0.0;
    for (std::size_t t = 0; t < tuples; ++t) {
      Eigen::Map<const Eigen::VectorXd> u(f.data() + t * n, n);
      next_sq += u.dot(mgram * u);
    }
    const double cur = rep.nested_hs.back();
    add("nested_hs_" + std::to_string(ell), next_sq, n * hs2 * cur * cur);
    rep.nested_hs.push_back(std::sqrt(std::max(0.0, next_sq)));
    if (ell == spec.step() || tuples * d * n > kMaxEntries) break;
    std::vector<double> g(tuples * d * n, 0.0);
    for (std::size_t t = 0; t < tuples; ++t)
      for (int a = 0; a < d; ++a)
        for (int c = 0; c < n; ++c) {
          double acc = 0.0;
          for (int p = 0; p < n; ++p) acc += f[t * n + p] * spec.structure(m + p, a, c);
          g[(t * d + a) * n + c] = acc;
        }
    f.swap(g);
    tuples *= d;
  }
  return rep;
}

nlohmann::json norm_report_to_json(const NormReport& rep) {
  nlohmann::json doc;
  doc["hs_bracket"] = rep.hs_bracket;
  doc["hs_omega"] = rep.hs_omega;
  doc["hs_alpha"] = rep.hs_alpha;
  doc["hs_v_bracket"] = rep.hs_v_bracket;
  doc["unif_omega_est"] = rep.unif_omega_est;
  doc["unif_alpha_est"] = rep.unif_alpha_est;
  doc["unif_bracket_est"] = rep.unif_bracket_est;
  doc["c0_est"] = rep.c0_est;
  doc["restarts"] = rep.restarts;
  doc["slack"] = rep.slack;
  doc["C2"] = rep.C2;
  doc["hs_identity_residual"] = rep.hs_identity_residual;
  doc["nested_hs_from_2"] = rep.nested_hs;
  nlohmann::json ineq = nlohmann::json::array();
  for (const auto& c : rep.inequalities)
    ineq.push_back({{"name", c.name}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"passed", c.passed}});
  doc["inequalities"] = std::move(ineq);
  doc["passed"] = rep.passed();
  return doc;
}

}  // namespace nilflow
