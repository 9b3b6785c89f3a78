#include "nilflow/algebra.hpp"

#include "nilflow/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace nilflow {

// ---------------------------------------------------------------- Element

Element::Element(int m, int n) : m_(m), coords_(Eigen::VectorXd::Zero(m + n)) {
  if (m < 0 || n < 0) throw ShapeError("Element: negative dimension");
}

Element::Element(int m, Eigen::VectorXd coords) : m_(m), coords_(std::move(coords)) {
  if (m < 0 || m > coords_.size()) throw ShapeError("Element: W-dimension exceeds length");
}

Element Element::from_parts(const Eigen::VectorXd& w, const Eigen::VectorXd& v) {
  Eigen::VectorXd c(w.size() + v.size());
  c << w, v;
  return Element(static_cast<int>(w.size()), std::move(c));
}

static void require_same_shape(const Element& a, const Element& b) {
  if (a.m() != b.m() || a.dim() != b.dim()) throw ShapeError("Element: shape mismatch");
}

Element& Element::operator+=(const Element& o) {
  require_same_shape(*this, o);
  coords_ += o.coords_;
  return *this;
}

Element& Element::operator-=(const Element& o) {
  require_same_shape(*this, o);
  coords_ -= o.coords_;
  return *this;
}

Element& Element::operator*=(double s) {
  coords_ *= s;
  return *this;
}

Element operator+(Element a, const Element& b) { return a += b; }
Element operator-(Element a, const Element& b) { return a -= b; }
Element operator*(double s, Element a) { return a *= s; }

Element basis_element(int m, int n, int i) {
  if (i < 0 || i >= m + n) throw ShapeError("basis_element: index out of range");
  Element e(m, n);
  e[i] = 1.0;
  return e;
}

// ---------------------------------------------------------- ExtensionSpec

ExtensionSpec::ExtensionSpec(int m, int n, int step, std::vector<double> omega,
                             std::vector<double> alpha, std::vector<double> v_bracket)
    : m_(m),
      n_(n),
      step_(step),
      omega_(std::move(omega)),
      alpha_(std::move(alpha)),
      v_bracket_(std::move(v_bracket)) {
  if (m < 0 || n < 1) throw ShapeError("ExtensionSpec: need m >= 0 and N >= 1");
  if (step < 1) throw ShapeError("ExtensionSpec: step must be positive");
  const auto sm = static_cast<std::size_t>(m), sn = static_cast<std::size_t>(n);
  if (omega_.size() != sm * sm * sn) throw ShapeError("ExtensionSpec: omega must be m x m x N");
  if (alpha_.size() != sm * sn * sn) throw ShapeError("ExtensionSpec: alpha must be m x N x N");
  if (v_bracket_.size() != sn * sn * sn)
    throw ShapeError("ExtensionSpec: v_bracket must be N x N x N");

  const int d = m + n;
  structure_.assign(static_cast<std::size_t>(d) * d * n, 0.0);
  auto s = [&](int a, int b, int c) -> double& { return structure_[(a * d + b) * n + c]; };
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) {
      for (int c = 0; c < n; ++c) {
        double val;
        if (a < m && b < m) {
          val = this->omega(a, b, c);
        } else if (a < m) {
          val = this->alpha(a, c, b - m);
        } else if (b < m) {
          val = -this->alpha(b, c, a - m);
        } else {
          val = this->v_bracket(a - m, b - m, c);
        }
        s(a, b, c) = val;
        if (val != 0.0) entries_.push_back({a, b, c, val});
      }
    }
  }
}

ExtensionSpec ExtensionSpec::with_step(int step) const {
  return ExtensionSpec(m_, n_, step, omega_, alpha_, v_bracket_);
}

Eigen::MatrixXd ExtensionSpec::alpha_matrix(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_, n_);
  for (int i = 0; i < m_; ++i)
    for (int r = 0; r < n_; ++r)
      for (int c = 0; c < n_; ++c) a(r, c) += x[i] * alpha(i, r, c);
  return a;
}

Eigen::MatrixXd ExtensionSpec::ad_v_matrix(const Eigen::VectorXd& u) const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_, n_);
  for (int p = 0; p < n_; ++p)
    for (int b = 0; b < n_; ++b)
      for (int c = 0; c < n_; ++c) a(c, b) += u[p] * v_bracket(p, b, c);
  return a;
}

Eigen::VectorXd ExtensionSpec::omega_of(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
  for (int i = 0; i < m_; ++i)
    for (int j = 0; j < m_; ++j)
      for (int c = 0; c < n_; ++c) out[c] += omega(i, j, c) * x[i] * y[j];
  return out;
}

Eigen::VectorXd ExtensionSpec::v_bracket_of(const Eigen::VectorXd& u,
                                            const Eigen::VectorXd& w) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
  for (int a = 0; a < n_; ++a)
    for (int b = 0; b < n_; ++b)
      for (int c = 0; c < n_; ++c) out[c] += v_bracket(a, b, c) * u[a] * w[b];
  return out;
}

void ExtensionSpec::check_element(const Element& x) const {
  if (x.m() != m_ || x.n() != n_)
    throw ShapeError("element of shape (" + std::to_string(x.m()) + "," + std::to_string(x.n()) +
                     ") does not conform to spec (" + std::to_string(m_) + "," +
                     std::to_string(n_) + ")");
}

// ---------------------------------------------------------------- bracket

void bracket_into(const ExtensionSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                  const Eigen::Ref<const Eigen::VectorXd>& y, Eigen::Ref<Eigen::VectorXd> out) {
  out.setZero();
  for (const auto& e : spec.structure_entries()) out[e.c] += e.value * x[e.a] * y[e.b];
}

Element bracket(const ExtensionSpec& spec, const Element& x, const Element& y) {
  spec.check_element(x);
  spec.check_element(y);
  Element out(spec.m(), spec.n());
  bracket_into(spec, x.coords(), y.coords(), out.v_part());
  return out;
}

bool is_permutation(std::span<const int> sigma) {
  std::vector<char> seen(sigma.size(), 0);
  for (int s : sigma) {
    if (s < 0 || s >= static_cast<int>(sigma.size()) || seen[s]) return false;
    seen[s] = 1;
  }
  return true;
}

Element nested_bracket(const ExtensionSpec& spec, std::span<const int> sigma,
                       std::span<const Element> ks) {
  if (sigma.empty() || sigma.size() != ks.size())
    throw ShapeError("nested_bracket: need one permutation entry per input");
  if (!is_permutation(sigma)) throw ShapeError("nested_bracket: not a permutation");
  for (const auto& k : ks) spec.check_element(k);
  Element acc = ks[sigma[0]];
  for (std::size_t j = 1; j < sigma.size(); ++j) acc = bracket(spec, acc, ks[sigma[j]]);
  return acc;
}

// ------------------------------------------------------------- validation

const std::vector<std::string>& validation_check_names() {
  static const std::vector<std::string> names = {
      "skewness", "leibniz", "c1", "c2", "jacobi", "step", "semi_infinite_range"};
  return names;
}

bool ValidationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

const CheckResult& ValidationReport::check(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return c;
  throw std::out_of_range("ValidationReport: no check named " + name);
}

std::vector<std::string> ValidationReport::failed_checks() const {
  std::vector<std::string> out;
  for (const auto& c : checks)
    if (!c.passed) out.push_back(c.name);
  return out;
}

int detect_step(const ExtensionSpec& spec, double rank_threshold) {
  const int d = spec.dim(), n = spec.n();
  Eigen::MatrixXd span = Eigen::MatrixXd::Identity(d, d);
  int prev_rank = d;
  Eigen::VectorXd tmp(n);
  for (int k = 1; k <= d + 1; ++k) {
    Eigen::MatrixXd gen = Eigen::MatrixXd::Zero(d, static_cast<Eigen::Index>(d) * span.cols());
    for (int a = 0; a < d; ++a) {
      Eigen::VectorXd h = Eigen::VectorXd::Unit(d, a);
      for (Eigen::Index q = 0; q < span.cols(); ++q) {
        bracket_into(spec, h, span.col(q), tmp);
        gen.col(a * span.cols() + q).tail(n) = tmp;
      }
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(gen, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv[i] > rank_threshold) ++rank;
    if (rank == 0) return k;
    if (rank >= prev_rank) return 0;
    span = svd.matrixU().leftCols(rank);
    prev_rank = rank;
  }
  return 0;
}

ValidationReport validate_extension(const ExtensionSpec& spec, double tolerance) {
  const int m = spec.m(), n = spec.n(), d = spec.dim();
  ValidationReport rep;
  rep.tolerance = tolerance;
  rep.declared_step = spec.step();

  auto add = [&](const std::string& name, double v) {
    rep.checks.push_back({name, v, v <= tolerance});
  };

  double skew = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int c = 0; c < n; ++c)
        skew = std::max(skew, std::abs(spec.omega(i, j, c) + spec.omega(j, i, c)));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        skew = std::max(skew, std::abs(spec.v_bracket(a, b, c) + spec.v_bracket(b, a, c)));
  add("skewness", skew);

  // alpha_i [e_a, e_b] = [alpha_i e_a, e_b] + [e_a, alpha_i e_b]
  double leib = 0.0;
  for (int i = 0; i < m; ++i)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int r = 0; r < n; ++r) {
          double lhs = 0.0, rhs = 0.0;
          for (int c = 0; c < n; ++c) {
            lhs += spec.alpha(i, r, c) * spec.v_bracket(a, b, c);
            rhs += spec.alpha(i, c, a) * spec.v_bracket(c, b, r);
            rhs += spec.alpha(i, c, b) * spec.v_bracket(a, c, r);
          }
          leib = std::max(leib, std::abs(lhs - rhs));
        }
  add("leibniz", leib);

  std::vector<Eigen::MatrixXd> amat(m);
  for (int i = 0; i < m; ++i) amat[i] = spec.alpha_matrix(Eigen::VectorXd::Unit(m, i));
  auto omega_ij = [&](int i, int j) {
    Eigen::VectorXd w(n);
    for (int c = 0; c < n; ++c) w[c] = spec.omega(i, j, c);
    return w;
  };

  double c1 = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      Eigen::MatrixXd diff =
          amat[i] * amat[j] - amat[j] * amat[i] - spec.ad_v_matrix(omega_ij(i, j));
      if (diff.size() > 0) c1 = std::max(c1, diff.cwiseAbs().maxCoeff());
    }
  add("c1", c1);

  double c2 = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int l = 0; l < m; ++l) {
        Eigen::VectorXd s =
            amat[i] * omega_ij(j, l) + amat[j] * omega_ij(l, i) + amat[l] * omega_ij(i, j);
        c2 = std::max(c2, s.cwiseAbs().maxCoeff());
      }
  add("c2", c2);

  // Jacobi on the assembled bracket over all basis triples.
  double jac = 0.0;
  {
    auto inner = [&](int a, int b, int c, int out) {
      // out-coordinate of [h_a, [h_b, h_c]]
      double s = 0.0;
      for (int p = 0; p < n; ++p) s += spec.structure(b, c, p) * spec.structure(a, m + p, out);
      return s;
    };
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b)
        for (int c = 0; c < d; ++c)
          for (int o = 0; o < n; ++o)
            jac = std::max(jac, std::abs(inner(a, b, c, o) + inner(b, c, a, o) + inner(c, a, b, o)));
  }
  add("jacobi", jac);

  rep.detected_step = detect_step(spec);
  const bool step_ok = rep.detected_step == spec.step();
  rep.checks.push_back(
      {"step", step_ok ? 0.0 : static_cast<double>(std::abs(spec.step() - rep.detected_step)),
       step_ok});

  // Brackets live in v by construction of the structure tensor.
  add("semi_infinite_range", 0.0);

  rep.c0 = bilinear_norm_estimate(spec.v_bracket_data(), n, n, n, 32);
  return rep;
}

// ------------------------------------------------------------ equivalence

ExtensionSpec apply_equivalence(const ExtensionSpec& spec, const Eigen::MatrixXd& b) {
  const int m = spec.m(), n = spec.n();
  if (b.rows() != n || b.cols() != m) throw ShapeError("apply_equivalence: b must be N x m");
  std::vector<double> alpha(spec.alpha_data()), omega(spec.omega_data());
  for (int i = 0; i < m; ++i) {
    const Eigen::MatrixXd ad = spec.ad_v_matrix(b.col(i));
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) alpha[(i * n + r) * n + c] += ad(r, c);
  }
  for (int i = 0; i < m; ++i) {
    const Eigen::MatrixXd ai = spec.alpha_matrix(Eigen::VectorXd::Unit(m, i));
    for (int j = 0; j < m; ++j) {
      const Eigen::MatrixXd aj = spec.alpha_matrix(Eigen::VectorXd::Unit(m, j));
      const Eigen::VectorXd delta =
          ai * b.col(j) - aj * b.col(i) + spec.v_bracket_of(b.col(i), b.col(j));
      for (int c = 0; c < n; ++c) omega[(i * m + j) * n + c] += delta[c];
    }
  }
  return ExtensionSpec(m, n, spec.step(), std::move(omega), std::move(alpha),
                       spec.v_bracket_data());
}

Element equivalence_map(const Eigen::MatrixXd& b, const Element& x) {
  if (b.rows() != x.n() || b.cols() != x.m())
    throw ShapeError("equivalence_map: b must be N x m");
  Element y = x;
  y.v_part() -= b * x.w_part();
  return y;
}

ExtensionSpec truncate_w(const ExtensionSpec& spec, int ell) {
  const int m = spec.m(), n = spec.n();
  if (ell < 0 || ell > m) throw DomainError("truncate_w: ell must lie in [0, m]");
  std::vector<double> omega(static_cast<std::size_t>(ell) * ell * n);
  std::vector<double> alpha(static_cast<std::size_t>(ell) * n * n);
  for (int i = 0; i < ell; ++i) {
    for (int j = 0; j < ell; ++j)
      for (int c = 0; c < n; ++c) omega[(i * ell + j) * n + c] = spec.omega(i, j, c);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) alpha[(i * n + r) * n + c] = spec.alpha(i, r, c);
  }
  ExtensionSpec cut(ell, n, spec.step(), std::move(omega), std::move(alpha),
                    spec.v_bracket_data());
  const int detected = detect_step(cut);
  return detected > 0 ? cut.with_step(detected) : cut;
}

// ---------------------------------------------------- bilinear operator norm

double bilinear_norm_estimate(std::span<const double> t, int p, int q, int r, int restarts,
                              std::uint64_t seed) {
  if (static_cast<std::size_t>(p) * q * r != t.size())
    throw ShapeError("bilinear_norm_estimate: tensor size mismatch");
  if (restarts < 1) throw DomainError("bilinear_norm_estimate: restarts must be >= 1");
  if (p == 0 || q == 0 || r == 0) return 0.0;
  auto at = [&](int a, int b, int c) { return t[(static_cast<std::size_t>(a) * q + b) * r + c]; };
  auto value = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(r);
    for (int a = 0; a < p; ++a)
      for (int b = 0; b < q; ++b)
        for (int c = 0; c < r; ++c) z[c] += at(a, b, c) * x[a] * y[b];
    return z;
  };
  auto normalize = [](Eigen::VectorXd& v, const Eigen::VectorXd& fallback) {
    const double nv = v.norm();
    if (nv > 0.0) {
      v /= nv;
    } else {
      v = fallback;
    }
  };

  double best = 0.0;
  for (int s = 0; s < restarts; ++s) {
    PhiloxStream rng(seed, static_cast<std::uint64_t>(s));
    Eigen::VectorXd x(p), y(q), z(r);
    for (auto* v : {&x, &y, &z})
      for (Eigen::Index i = 0; i < v->size(); ++i) (*v)[i] = rng.normal();
    x.normalize();
    y.normalize();
    z.normalize();
    double prev = -1.0;
    for (int it = 0; it < 500; ++it) {
      Eigen::VectorXd nx = Eigen::VectorXd::Zero(p);
      for (int a = 0; a < p; ++a)
        for (int b = 0; b < q; ++b)
          for (int c = 0; c < r; ++c) nx[a] += at(a, b, c) * y[b] * z[c];
      normalize(nx, x);
      x = nx;
      Eigen::VectorXd ny = Eigen::VectorXd::Zero(q);
      for (int a = 0; a < p; ++a)
        for (int b = 0; b < q; ++b)
          for (int c = 0; c < r; ++c) ny[b] += at(a, b, c) * x[a] * z[c];
      normalize(ny, y);
      y = ny;
      Eigen::VectorXd nz = value(x, y);
      const double cur = nz.norm();
      normalize(nz, z);
      z = nz;
      best = std::max(best, cur);
      if (std::abs(cur - prev) <= 1e-15 * std::max(1.0, cur)) break;
      prev = cur;
    }
  }
  return best;
}

}  // namespace nilflow
