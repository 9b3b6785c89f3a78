#include "nilflow/zoo.hpp"

#include <algorithm>
#include <cmath>

namespace nilflow {

namespace {

std::size_t idx3(int a, int b, int c, int nb, int nc) {
  return (static_cast<std::size_t>(a) * nb + b) * nc + c;
}

void require_skew(const std::vector<double>& omega, int m, int n, const char* who) {
  if (omega.size() != static_cast<std::size_t>(m) * m * n)
    throw SpecError(std::string(who) + ": omega must have shape m x m x N");
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int c = 0; c < n; ++c)
        if (std::abs(omega[idx3(i, j, c, m, n)] + omega[idx3(j, i, c, m, n)]) > 1e-12)
          throw SpecError(std::string(who) + ": omega is not skew (skewness check)");
}

double skew_form(const std::vector<double>& Omega, int m, const Eigen::VectorXd& w,
                 const Eigen::VectorXd& u) {
  double s = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) s += Omega[i * m + j] * w[i] * u[j];
  return s;
}

double linear_form(const std::vector<double>& gamma, const Eigen::VectorXd& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < gamma.size(); ++i) s += gamma[i] * w[i];
  return s;
}

void check_Omega_gamma(int m, const std::vector<double>& Omega, const std::vector<double>& gamma,
                       const char* who) {
  if (m < 1) throw ShapeError(std::string(who) + ": m must be positive");
  if (Omega.size() != static_cast<std::size_t>(m) * m)
    throw SpecError(std::string(who) + ": Omega must be m x m");
  if (gamma.size() != static_cast<std::size_t>(m))
    throw SpecError(std::string(who) + ": gamma must have length m");
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      if (std::abs(Omega[i * m + j] + Omega[j * m + i]) > 1e-12)
        throw SpecError(std::string(who) + ": Omega is not skew (skewness check)");
}

}  // namespace

// ------------------------------------------------------ matrix algebra

Eigen::MatrixXd UpperTriangularAlgebra::to_matrix(const Eigen::VectorXd& coords) const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < dim(); ++k) a(basis[k].first, basis[k].second) = coords[k];
  return a;
}

Eigen::VectorXd UpperTriangularAlgebra::from_matrix(const Eigen::MatrixXd& a) const {
  Eigen::VectorXd v(dim());
  for (int k = 0; k < dim(); ++k) v[k] = a(basis[k].first, basis[k].second);
  return v;
}

UpperTriangularAlgebra strictly_upper_triangular_algebra(int n) {
  if (n < 2) throw ShapeError("strictly_upper_triangular_algebra: n must be >= 2");
  UpperTriangularAlgebra alg;
  alg.n = n;
  for (int diag = 1; diag < n; ++diag)
    for (int i = 0; i + diag < n; ++i) alg.basis.emplace_back(i, i + diag);
  const int d = alg.dim();
  alg.bracket.assign(static_cast<std::size_t>(d) * d * d, 0.0);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      const Eigen::MatrixXd ea = alg.to_matrix(Eigen::VectorXd::Unit(d, a));
      const Eigen::MatrixXd eb = alg.to_matrix(Eigen::VectorXd::Unit(d, b));
      const Eigen::VectorXd c = alg.from_matrix(ea * eb - eb * ea);
      for (int k = 0; k < d; ++k) alg.bracket[idx3(a, b, k, d, d)] = c[k];
    }
  return alg;
}

Eigen::MatrixXd nilpotent_log_of_product(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const int n = static_cast<int>(a.rows());
  auto exp_series = [n](const Eigen::MatrixXd& x) {
    Eigen::MatrixXd sum = Eigen::MatrixXd::Identity(n, n), term = sum;
    for (int k = 1; k < n; ++k) {
      term = term * x / k;
      sum += term;
    }
    return sum;
  };
  const Eigen::MatrixXd nil = exp_series(a) * exp_series(b) - Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n, n), power = nil;
  for (int k = 1; k < n; ++k) {
    sum += ((k % 2 == 1) ? 1.0 : -1.0) / k * power;
    power = power * nil;
  }
  return sum;
}

// ------------------------------------------------------------ models

ModelDescriptor build_heisenberg_like(int m, int n, std::vector<double> omega) {
  if (m < 0 || n < 1) throw ShapeError("build_heisenberg_like: need m >= 0 and N >= 1");
  require_skew(omega, m, n, "build_heisenberg_like");
  const bool nonzero =
      std::any_of(omega.begin(), omega.end(), [](double x) { return x != 0.0; });
  ExtensionSpec spec(m, n, nonzero ? 2 : 1, omega,
                     std::vector<double>(static_cast<std::size_t>(m) * n * n, 0.0),
                     std::vector<double>(static_cast<std::size_t>(n) * n * n, 0.0));
  GroupOracle oracle = [spec](const Element& g, const Element& h) {
    Element out = g + h;
    out.v_part() += 0.5 * spec.omega_of(g.w_part(), h.w_part());
    return out;
  };
  return {"heisenberg", {{"m", m}, {"N", n}, {"omega", omega}}, std::move(spec), oracle};
}

ModelDescriptor build_heisenberg() {
  std::vector<double> omega(4, 0.0);
  omega[idx3(0, 1, 0, 2, 1)] = 1.0;
  omega[idx3(1, 0, 0, 2, 1)] = -1.0;
  return build_heisenberg_like(2, 1, omega);
}

ModelDescriptor build_beta_extension(int m, int n, std::vector<double> beta,
                                     std::vector<double> v_bracket) {
  if (beta.size() != static_cast<std::size_t>(m) * n)
    throw SpecError("build_beta_extension: beta must be m x N");
  // Validate v on its own: a spec with m = 0 carries only the v bracket.
  ExtensionSpec v_only(0, n, 1, {}, {}, v_bracket);
  const int step = detect_step(v_only);
  if (step == 0) throw SpecError("build_beta_extension: v_bracket is not nilpotent");
  const ValidationReport vrep = validate_extension(v_only.with_step(step), 1e-10);
  if (!vrep.passed()) throw SpecError("build_beta_extension: v_bracket is not a Lie bracket");

  auto vb = [&](int a, int b, int c) { return v_bracket[idx3(a, b, c, n, n)]; };
  std::vector<double> omega(static_cast<std::size_t>(m) * m * n, 0.0);
  std::vector<double> alpha(static_cast<std::size_t>(m) * n * n, 0.0);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j)
      for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) {
          const double w = beta[i * n + p] * beta[j * n + q];
          if (w == 0.0) continue;
          for (int c = 0; c < n; ++c) omega[idx3(i, j, c, m, n)] += w * vb(p, q, c);
        }
    // alpha_i e_col = [beta_i, e_col]
    for (int p = 0; p < n; ++p)
      for (int col = 0; col < n; ++col)
        for (int r = 0; r < n; ++r) alpha[idx3(i, r, col, n, n)] += beta[i * n + p] * vb(p, col, r);
  }
  ExtensionSpec spec(m, n, step, omega, alpha, v_bracket);
  return {"beta", {{"m", m}, {"N", n}, {"beta", beta}}, std::move(spec), GroupOracle{}};
}

ModelDescriptor build_beta_upper_triangular(int size) {
  if (size < 3) throw ShapeError("build_beta_upper_triangular: size must be >= 3");
  const UpperTriangularAlgebra alg = strictly_upper_triangular_algebra(size);
  const int m = 3, n = alg.dim();
  auto at = [&](int r, int c) {
    for (int k = 0; k < n; ++k)
      if (alg.basis[k] == std::pair{r, c}) return k;
    throw ShapeError("build_beta_upper_triangular: no basis element");
  };
  std::vector<double> beta(static_cast<std::size_t>(m) * n, 0.0);
  beta[0 * n + at(0, 1)] = 1.0;  // k1 -> E12 + 0.5 E_{size-1,size}
  beta[0 * n + at(size - 2, size - 1)] += 0.5;
  beta[1 * n + at(1, 2)] = 1.0;  // k2 -> E23 - 0.25 E13
  beta[1 * n + at(0, 2)] = -0.25;
  for (int c = 0; c < n; ++c) beta[2 * n + c] = beta[0 * n + c] + beta[1 * n + c];
  ModelDescriptor md = build_beta_extension(m, n, beta, alg.bracket);
  md.name = size == 4 ? "beta" : "beta" + std::to_string(size);
  md.parameters["v"] = "strictly upper triangular " + std::to_string(size) + "x" + std::to_string(size);
  md.oracle = [alg, beta, m, n](const Element& g, const Element& h) {
    // (X, V) -> beta(X) + V is an isomorphism onto R^m (+) v with v as the only bracket.
    auto lift = [&](const Element& x) {
      Eigen::VectorXd v = x.v_part();
      for (int i = 0; i < m; ++i)
        for (int c = 0; c < n; ++c) v[c] += x.w_part()[i] * beta[i * n + c];
      return alg.to_matrix(v);
    };
    Element out(m, n);
    out.w_part() = g.w_part() + h.w_part();
    Eigen::VectorXd v = alg.from_matrix(nilpotent_log_of_product(lift(g), lift(h)));
    for (int i = 0; i < m; ++i)
      for (int c = 0; c < n; ++c) v[c] -= out.w_part()[i] * beta[i * n + c];
    out.v_part() = v;
    return out;
  };
  return md;
}

Eigen::MatrixXd path_space_averages(int grid) {
  if (grid < 2) throw ShapeError("path space: grid must be >= 2");
  const int m = 3 * grid;
  Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(m, 3);
  // Basis path j, c has derivative sqrt(K) e_c on [j/K, (j+1)/K]; its time
  // average is exact under the trapezoid rule on the grid.
  const double k = grid;
  for (int j = 0; j < grid; ++j) {
    const double b = (k - j - 0.5) / std::pow(k, 1.5);
    for (int c = 0; c < 3; ++c) avg(3 * j + c, c) = b;
  }
  return avg;
}

namespace {

Eigen::Vector3d omega_prime(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return {a[0] * b[1] - b[0] * a[1], a[1] * b[2] - b[1] * a[2], 0.0};
}

Eigen::Matrix4d upper4(const Eigen::Vector3d& a, const Eigen::Vector3d& v) {
  Eigen::Matrix4d x = Eigen::Matrix4d::Zero();
  x(0, 1) = a[0];
  x(1, 2) = a[1];
  x(2, 3) = a[2];
  x(0, 2) = v[0];
  x(1, 3) = v[1];
  x(0, 3) = v[2];
  return x;
}

}  // namespace

Eigen::Vector3d path_space_matrix_oracle(int grid, const Element& g, const Element& h) {
  const Eigen::MatrixXd avg = path_space_averages(grid);
  const Eigen::Vector3d ag = avg.transpose() * g.w_part();
  const Eigen::Vector3d ah = avg.transpose() * h.w_part();
  const Eigen::MatrixXd l =
      nilpotent_log_of_product(upper4(ag, g.v_part()), upper4(ah, h.v_part()));
  return {l(0, 2), l(1, 3), l(0, 3)};
}

ModelDescriptor build_path_space_example(int grid) {
  const Eigen::MatrixXd avg = path_space_averages(grid);
  const int m = 3 * grid, n = 3;
  std::vector<double> omega(static_cast<std::size_t>(m) * m * n, 0.0);
  std::vector<double> alpha(static_cast<std::size_t>(m) * n * n, 0.0);
  for (int i = 0; i < m; ++i) {
    const Eigen::Vector3d si = avg.row(i).transpose();
    for (int j = 0; j < m; ++j) {
      const Eigen::Vector3d w = omega_prime(si, avg.row(j).transpose());
      for (int c = 0; c < n; ++c) omega[idx3(i, j, c, m, n)] = w[c];
    }
    // alpha_sigma (x, y, z) = (0, 0, sbar_1 y - sbar_3 x)
    alpha[idx3(i, 2, 1, n, n)] = si[0];
    alpha[idx3(i, 2, 0, n, n)] = -si[2];
  }
  ExtensionSpec spec(m, n, 3, omega, alpha, std::vector<double>(27, 0.0));
  GroupOracle oracle = [grid, m, n](const Element& g, const Element& h) {
    Element out(m, n);
    out.w_part() = g.w_part() + h.w_part();
    out.v_part() = path_space_matrix_oracle(grid, g, h);
    return out;
  };
  return {"pathspace", {{"grid", grid}, {"m", m}, {"N", n}}, std::move(spec), oracle};
}

std::vector<double> default_Omega(int m) {
  std::vector<double> om(static_cast<std::size_t>(m) * m, 0.0);
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      om[i * m + j] = 1.0 / ((i + 1.0) * (j + 1.0));
      om[j * m + i] = -om[i * m + j];
    }
  return om;
}

std::vector<double> default_gamma(int m) {
  std::vector<double> g(m);
  for (int i = 0; i < m; ++i) g[i] = 1.0 / (i + 1.0);
  return g;
}

ModelDescriptor build_step2_R2R(int m, std::vector<double> Omega, std::vector<double> gamma) {
  check_Omega_gamma(m, Omega, gamma, "build_step2_R2R");
  const int n = 3;
  std::vector<double> omega(static_cast<std::size_t>(m) * m * n, 0.0);
  std::vector<double> alpha(static_cast<std::size_t>(m) * n * n, 0.0);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      omega[idx3(i, j, 0, m, n)] = Omega[i * m + j];
      omega[idx3(i, j, 1, m, n)] = Omega[i * m + j];
    }
    alpha[idx3(i, 2, 0, n, n)] = gamma[i];
    alpha[idx3(i, 2, 1, n, n)] = -gamma[i];
  }
  ExtensionSpec spec(m, n, 2, omega, alpha, std::vector<double>(27, 0.0));
  GroupOracle oracle = [m, Omega, gamma](const Element& g, const Element& h) {
    const Eigen::VectorXd w = g.w_part(), w2 = h.w_part();
    const Eigen::VectorXd v = g.v_part(), v2 = h.v_part();
    const double om = skew_form(Omega, m, w, w2);
    Element out = g + h;
    out.v_part()[0] += 0.5 * om;
    out.v_part()[1] += 0.5 * om;
    out.v_part()[2] +=
        0.5 * (linear_form(gamma, w) * (v2[0] - v2[1]) - linear_form(gamma, w2) * (v[0] - v[1]));
    return out;
  };
  return {"step2", {{"m", m}, {"Omega", Omega}, {"gamma", gamma}}, std::move(spec), oracle};
}

ModelDescriptor build_step3_R6(int m, std::vector<double> Omega, std::vector<double> gamma) {
  check_Omega_gamma(m, Omega, gamma, "build_step3_R6");
  const int n = 6;
  std::vector<double> omega(static_cast<std::size_t>(m) * m * n, 0.0);
  std::vector<double> alpha(static_cast<std::size_t>(m) * n * n, 0.0);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j)
      for (int c = 0; c < 3; ++c) omega[idx3(i, j, c, m, n)] = Omega[i * m + j];
    // (v, x, y) -> (0, gamma (v1 - v2, v2 - v3), gamma (x1 - x2))
    alpha[idx3(i, 3, 0, n, n)] = gamma[i];
    alpha[idx3(i, 3, 1, n, n)] = -gamma[i];
    alpha[idx3(i, 4, 1, n, n)] = gamma[i];
    alpha[idx3(i, 4, 2, n, n)] = -gamma[i];
    alpha[idx3(i, 5, 3, n, n)] = gamma[i];
    alpha[idx3(i, 5, 4, n, n)] = -gamma[i];
  }
  ExtensionSpec spec(m, n, 3, omega, alpha, std::vector<double>(216, 0.0));
  GroupOracle oracle = [m, Omega, gamma](const Element& g, const Element& h) {
    const Eigen::VectorXd w = g.w_part(), w2 = h.w_part();
    const Eigen::VectorXd a = g.v_part(), b = h.v_part();
    const double gw = linear_form(gamma, w), gw2 = linear_form(gamma, w2);
    const double om = skew_form(Omega, m, w, w2);
    // alpha_u on the v-block gives (v1 - v2, v2 - v3); alpha_u^2 v = v1 - 2 v2 + v3.
    auto d1 = [](const Eigen::VectorXd& x) { return x[0] - x[1]; };
    auto d2 = [](const Eigen::VectorXd& x) { return x[1] - x[2]; };
    auto dx = [](const Eigen::VectorXd& x) { return x[3] - x[4]; };
    auto dd = [](const Eigen::VectorXd& x) { return x[0] - 2.0 * x[1] + x[2]; };
    Element out = g + h;
    for (int c = 0; c < 3; ++c) out.v_part()[c] += 0.5 * om;
    out.v_part()[3] += 0.5 * (gw * d1(b) - gw2 * d1(a));
    out.v_part()[4] += 0.5 * (gw * d2(b) - gw2 * d2(a));
    out.v_part()[5] += 0.5 * (gw * dx(b) - gw2 * dx(a)) +
                       (gw * gw * dd(b) + gw2 * gw2 * dd(a) - gw * gw2 * (dd(a) + dd(b))) / 12.0;
    return out;
  };
  return {"step3", {{"m", m}, {"Omega", Omega}, {"gamma", gamma}}, std::move(spec), oracle};
}

ModelDescriptor build_abelian(int m, int n) {
  if (m < 0 || n < 1) throw ShapeError("build_abelian: need m >= 0 and N >= 1");
  ExtensionSpec spec(m, n, 1, std::vector<double>(static_cast<std::size_t>(m) * m * n, 0.0),
                     std::vector<double>(static_cast<std::size_t>(m) * n * n, 0.0),
                     std::vector<double>(static_cast<std::size_t>(n) * n * n, 0.0));
  GroupOracle oracle = [](const Element& g, const Element& h) { return g + h; };
  return {"abelian", {{"m", m}, {"N", n}}, std::move(spec), oracle};
}

std::vector<ModelDescriptor> default_zoo() {
  std::vector<ModelDescriptor> zoo;
  zoo.push_back(build_heisenberg());
  zoo.push_back(build_beta_upper_triangular(4));
  zoo.push_back(build_beta_upper_triangular(5));
  zoo.push_back(build_path_space_example(3));
  zoo.push_back(build_step2_R2R(2, default_Omega(2), default_gamma(2)));
  zoo.push_back(build_step3_R6(3, default_Omega(3), default_gamma(3)));
  zoo.push_back(build_abelian(2, 1));
  return zoo;
}

ModelDescriptor build_named_model(const std::string& name, int m, int grid) {
  if (name == "heisenberg") {
    if (m == 2) return build_heisenberg();
    std::vector<double> omega(static_cast<std::size_t>(m) * m, 0.0);
    const auto om = default_Omega(m);
    for (std::size_t i = 0; i < om.size(); ++i) omega[i] = 2.0 * om[i];
    return build_heisenberg_like(m, 1, omega);
  }
  if (name == "beta") return build_beta_upper_triangular(4);
  if (name == "beta5") return build_beta_upper_triangular(5);
  if (name == "pathspace") return build_path_space_example(grid);
  if (name == "step2") return build_step2_R2R(m, default_Omega(m), default_gamma(m));
  if (name == "step3") return build_step3_R6(m, default_Omega(m), default_gamma(m));
  if (name == "abelian") return build_abelian(m, 1);
  throw DomainError("unknown model '" + name + "'");
}

}  // namespace nilflow
