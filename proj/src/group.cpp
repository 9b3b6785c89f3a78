#include "nilflow/group.hpp"

#include "nilflow/tensor_norms.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace nilflow {

namespace {

long long factorial(int k) {
  long long f = 1;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

void enumerate_pairs(int k, int budget, std::vector<int>& n, std::vector<int>& m,
                     std::vector<BchdTerm>& out) {
  if (static_cast<int>(n.size()) == k) {
    out.push_back({k, n, m, bchd_coefficient(n, m)});
    return;
  }
  const int slots_left = k - static_cast<int>(n.size()) - 1;
  for (int total = 1; total <= budget - slots_left; ++total) {
    for (int ni = 0; ni <= total; ++ni) {
      n.push_back(ni);
      m.push_back(total - ni);
      enumerate_pairs(k, budget - total, n, m, out);
      n.pop_back();
      m.pop_back();
    }
  }
}

using Word = std::vector<int>;

GroupLaw::Program compile(const std::map<Word, Rational>& words) {
  GroupLaw::Program prog;
  std::map<std::pair<int, int>, int> index;
  for (const auto& [word, coef] : words) {
    if (coef.numerator() == 0) continue;
    int parent = -1;
    for (int i = static_cast<int>(word.size()) - 1; i >= 0; --i) {
      const auto key = std::make_pair(parent, word[i]);
      auto it = index.find(key);
      if (it == index.end()) {
        it = index.emplace(key, static_cast<int>(prog.nodes.size())).first;
        prog.nodes.push_back({parent, word[i]});
      }
      parent = it->second;
    }
    prog.outputs.emplace_back(parent, boost::rational_cast<double>(coef));
  }
  return prog;
}

/// Letters of a term, read left to right: n_1 g's, m_1 h's, ...
Word term_word(const BchdTerm& t) {
  Word w;
  for (int i = 0; i < t.k; ++i) {
    w.insert(w.end(), t.n[i], 0);
    w.insert(w.end(), t.m[i], 1);
  }
  return w;
}

}  // namespace

Rational bchd_coefficient(const std::vector<int>& n, const std::vector<int>& m) {
  const int k = static_cast<int>(n.size());
  long long denom = k + 1;
  int nsum = 0;
  for (int i = 0; i < k; ++i) {
    denom *= factorial(m[i]) * factorial(n[i]);
    nsum += n[i];
  }
  denom *= nsum + 1;
  return Rational(k % 2 == 0 ? 1 : -1, denom);
}

const BchdTermTable& bchd_term_table(int step) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<BchdTermTable>> cache;
  if (step < 1) throw DomainError("bchd_term_table: step must be positive");
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[step];
  if (!slot) {
    slot = std::make_unique<BchdTermTable>();
    slot->step = step;
    for (int k = 1; k <= step - 1; ++k) {
      std::vector<int> n, m;
      enumerate_pairs(k, step - 1, n, m, slot->terms);
    }
  }
  return *slot;
}

std::vector<Rational> d_coefficients(int step) {
  std::vector<Rational> d(std::max(0, step - 1), Rational(0));
  for (const auto& t : bchd_term_table(step).terms) {
    if (t.m.back() == 0) continue;
    int nsum = 0, msum = 0;
    for (int i = 0; i < t.k; ++i) {
      nsum += t.n[i];
      msum += t.m[i];
    }
    const int ell = nsum + msum;
    d[ell - 1] += (nsum % 2 == 0 ? t.coefficient : -t.coefficient);
  }
  return d;
}

// --------------------------------------------------------------- GroupLaw

GroupLaw::GroupLaw(const ExtensionSpec& spec) : spec_(spec) {
  std::map<Word, Rational> mult, push;
  for (const auto& t : bchd_term_table(spec.step()).terms) {
    const Word w = term_word(t);
    if (w.back() == 0) continue;  // ad_g g = 0
    mult[w] += t.coefficient;
    for (std::size_t p = 0; p < w.size(); ++p) {
      if (w[p] != 1) continue;
      Word dw(w.size());
      for (std::size_t q = 0; q < w.size(); ++q) dw[q] = w[q] == 0 ? 0 : (q == p ? 2 : 1);
      push[dw] += t.coefficient;
    }
  }
  mult_ = compile(mult);
  push_ = compile(push);
}

void GroupLaw::run(const Program& prog, const double* const* letters, const double* base,
                   Eigen::Ref<Eigen::VectorXd> acc, std::vector<Eigen::VectorXd>& scratch) const {
  const int d = spec_.dim(), m = spec_.m();
  if (scratch.size() < prog.nodes.size()) scratch.resize(prog.nodes.size());
  const auto& entries = spec_.structure_entries();
  for (std::size_t i = 0; i < prog.nodes.size(); ++i) {
    auto& val = scratch[i];
    if (val.size() != d) val.resize(d);
    val.setZero();
    const double* x = letters[prog.nodes[i].letter];
    const double* y = prog.nodes[i].parent < 0 ? base : scratch[prog.nodes[i].parent].data();
    double* out = val.data() + m;
    for (const auto& e : entries) out[e.c] += e.value * x[e.a] * y[e.b];
  }
  acc.setZero();
  for (const auto& [node, coef] : prog.outputs) acc += coef * scratch[node].tail(spec_.n());
}

void GroupLaw::multiply_into(const Eigen::Ref<const Eigen::VectorXd>& g,
                             const Eigen::Ref<const Eigen::VectorXd>& h,
                             Eigen::Ref<Eigen::VectorXd> out,
                             std::vector<Eigen::VectorXd>& scratch) const {
  const int d = spec_.dim(), n = spec_.n();
  if (g.size() != d || h.size() != d || out.size() != d)
    throw ShapeError("GroupLaw: coordinate length mismatch");
  if (mult_.nodes.empty()) {
    out = g + h;
    return;
  }
  const std::size_t slot = mult_.nodes.size();
  if (scratch.size() < slot + 1) scratch.resize(slot + 1);
  if (scratch[slot].size() != n) scratch[slot].resize(n);
  const double* letters[2] = {g.data(), h.data()};
  run(mult_, letters, g.data(), scratch[slot], scratch);
  out = g + h;
  out.tail(n) += scratch[slot];
}

Element GroupLaw::multiply(const Element& g, const Element& h) const {
  spec_.check_element(g);
  spec_.check_element(h);
  std::vector<Eigen::VectorXd> scratch;
  Element out(spec_.m(), spec_.n());
  multiply_into(g.coords(), h.coords(), out.coords(), scratch);
  return out;
}

Element GroupLaw::left_pushforward(const Element& g, const Element& x, const Element& v) const {
  spec_.check_element(g);
  spec_.check_element(x);
  spec_.check_element(v);
  Element out = v;
  if (push_.nodes.empty()) return out;
  std::vector<Eigen::VectorXd> scratch;
  Eigen::VectorXd acc(spec_.n());
  const double* letters[3] = {g.coords().data(), x.coords().data(), v.coords().data()};
  run(push_, letters, g.coords().data(), acc, scratch);
  out.v_part() += acc;
  return out;
}

Eigen::MatrixXd GroupLaw::pushforward_matrix_at_identity(const Element& g) const {
  const int d = spec_.dim();
  Eigen::MatrixXd p(d, d);
  const Element e(spec_.m(), spec_.n());
  for (int i = 0; i < d; ++i)
    p.col(i) = left_pushforward(g, e, basis_element(spec_.m(), spec_.n(), i)).coords();
  return p;
}

Element bchd_multiply(const ExtensionSpec& spec, const Element& g, const Element& h) {
  return GroupLaw(spec).multiply(g, h);
}

Element inverse(const Element& g) { return -g; }

Element left_pushforward(const ExtensionSpec& spec, const Element& g, const Element& x,
                         const Element& v) {
  return GroupLaw(spec).left_pushforward(g, x, v);
}

// ------------------------------------------------------------ path length

std::pair<std::vector<double>, std::vector<double>> gauss_legendre_unit(int points) {
  if (points < 1) throw DomainError("gauss_legendre_unit: need at least one point");
  // Golub-Welsch on the Jacobi matrix of the Legendre recurrence.
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(points, points);
  for (int k = 1; k < points; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    j(k, k - 1) = b;
    j(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  std::vector<double> x(points), w(points);
  for (int k = 0; k < points; ++k) {
    x[k] = 0.5 * (es.eigenvalues()[k] + 1.0);
    const double v0 = es.eigenvectors()(0, k);
    w[k] = v0 * v0;  // weights on [-1,1] are 2 v0^2; halved for [0,1]
  }
  return {x, w};
}

double length_integrand(const ExtensionSpec& spec, const std::vector<double>& d,
                        const Eigen::VectorXd& g, const Eigen::VectorXd& dg) {
  Eigen::VectorXd acc = dg;
  Eigen::VectorXd term = dg;
  Eigen::VectorXd next = Eigen::VectorXd::Zero(spec.dim());
  for (double dl : d) {
    bracket_into(spec, g, term, next.tail(spec.n()));
    term = next;
    acc += dl * term;
  }
  return acc.norm();
}

namespace {

std::vector<double> d_as_double(int step) {
  std::vector<double> out;
  for (const auto& r : d_coefficients(step)) out.push_back(boost::rational_cast<double>(r));
  return out;
}

}  // namespace

double path_length(const ExtensionSpec& spec, std::span<const Element> knots,
                   int quadrature_points) {
  if (knots.size() < 2) return 0.0;
  for (const auto& k : knots) spec.check_element(k);
  const auto d = d_as_double(spec.step());
  const auto [xs, ws] = gauss_legendre_unit(quadrature_points);
  double total = 0.0;
  for (std::size_t s = 0; s + 1 < knots.size(); ++s) {
    const Eigen::VectorXd& a = knots[s].coords();
    const Eigen::VectorXd dg = knots[s + 1].coords() - a;
    if (dg.squaredNorm() == 0.0) continue;
    for (std::size_t q = 0; q < xs.size(); ++q)
      total += ws[q] * length_integrand(spec, d, a + xs[q] * dg, dg);
  }
  return total;
}

double path_length(const ExtensionSpec& spec,
                   const std::function<std::pair<Element, Element>(double)>& curve, double a,
                   double b, int segments, int quadrature_points) {
  if (segments < 1) throw DomainError("path_length: need at least one segment");
  const auto d = d_as_double(spec.step());
  const auto [xs, ws] = gauss_legendre_unit(quadrature_points);
  const double h = (b - a) / segments;
  double total = 0.0;
  for (int s = 0; s < segments; ++s)
    for (std::size_t q = 0; q < xs.size(); ++q) {
      const auto [g, dg] = curve(a + (s + xs[q]) * h);
      total += h * ws[q] * length_integrand(spec, d, g.coords(), dg.coords());
    }
  return std::abs(total);
}

// --------------------------------------------------------------- distance

DistanceBounds distance_bounds(const ExtensionSpec& spec, const Element& y, int optimizer_budget,
                               int interior_knots) {
  spec.check_element(y);
  DistanceBounds out;
  out.bracket_bound = bracket_norm_upper_bound(spec);
  const auto d = d_as_double(spec.step());
  double c_pow = 1.0;
  for (double dl : d) {
    c_pow *= out.bracket_bound;
    out.kappa += std::abs(dl) * c_pow;
  }
  out.epsilon0 = out.kappa > 0.0 ? std::min(1.0 / (2.0 * out.kappa), 1.0) : 1.0;
  const double ny = y.norm();
  out.lower = 0.5 * std::min(out.epsilon0, ny);
  if (ny == 0.0) return out;

  const Element e(spec.m(), spec.n());
  const std::vector<Element> line = {e, y};
  out.straight_line = path_length(spec, line);
  out.evaluations = 1;
  out.upper = out.straight_line;

  const int k = std::clamp(interior_knots, 0, 8);
  if (k == 0 || optimizer_budget <= 1) return out;
  std::vector<Element> knots(k + 2);
  for (int j = 0; j <= k + 1; ++j) knots[j] = (static_cast<double>(j) / (k + 1)) * y;
  double best = out.straight_line;
  double delta = 0.25 * ny / (k + 1);
  while (out.evaluations < optimizer_budget && delta > 1e-10 * ny) {
    bool improved = false;
    for (int j = 1; j <= k && out.evaluations < optimizer_budget; ++j)
      for (int c = 0; c < spec.dim() && out.evaluations < optimizer_budget; ++c)
        for (double sgn : {1.0, -1.0}) {
          knots[j][c] += sgn * delta;
          const double len = path_length(spec, knots);
          ++out.evaluations;
          if (len < best) {
            best = len;
            improved = true;
            break;
          }
          knots[j][c] -= sgn * delta;
        }
    if (!improved) delta *= 0.5;
  }
  out.upper = std::min(out.straight_line, best);
  return out;
}

double straight_line_bound_factor(const ExtensionSpec& spec, double x_norm) {
  const double c = bracket_norm_upper_bound(spec);
  const auto d = d_as_double(spec.step());
  double factor = 1.0;
  for (std::size_t l = 1; l <= d.size(); ++l)
    factor += std::ldexp(1.0, static_cast<int>(l)) * std::abs(d[l - 1]) *
              std::pow(c * x_norm, static_cast<double>(l));
  return factor;
}

// ------------------------------------------------------------------ Ricci

RicciResult ricci_form(const ExtensionSpec& spec) {
  const int d = spec.dim(), m = spec.m(), n = spec.n();
  const Eigen::MatrixXd s = bracket_gram_matrix(spec);
  Eigen::MatrixXd first = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          first(m + a, m + b) += spec.structure(i, j, a) * spec.structure(i, j, b);
  RicciResult res;
  res.form = 0.25 * first - 0.5 * s;
  res.form = 0.5 * (res.form + res.form.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(res.form, Eigen::EigenvaluesOnly);
  res.eigenvalues = es.eigenvalues();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ss(s, Eigen::EigenvaluesOnly);
  res.k_p = -0.5 * ss.eigenvalues().maxCoeff();
  res.k_estimate = res.k_p;
  return res;
}

}  // namespace nilflow
