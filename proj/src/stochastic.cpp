#include "nilflow/stochastic.hpp"

#include "nilflow/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace nilflow {

// ------------------------------------------------------------ permutations

int error_count(std::span<const int> sigma) {
  int e = 0;
  for (std::size_t j = 0; j + 1 < sigma.size(); ++j)
    if (sigma[j] > sigma[j + 1]) ++e;
  return e;
}

namespace {

long long binomial(int n, int k) {
  long long b = 1;
  for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
  return b;
}

}  // namespace

Rational c_coefficient(int n, std::span<const int> sigma) {
  if (static_cast<int>(sigma.size()) != n || !is_permutation(sigma))
    throw ShapeError("c_coefficient: sigma is not a permutation of n elements");
  const int e = error_count(sigma);
  return Rational(e % 2 == 0 ? 1 : -1, static_cast<long long>(n) * n * binomial(n - 1, e));
}

std::vector<Permutation> all_permutations(int n) {
  Permutation p(n);
  std::iota(p.begin(), p.end(), 0);
  std::vector<Permutation> out;
  do {
    out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

std::vector<PermTerm> perm_terms(int n) {
  std::vector<PermTerm> out;
  for (auto& s : all_permutations(n)) {
    const int e = error_count(s);
    const Rational c = c_coefficient(n, s);
    out.push_back({n, std::move(s), e, c});
  }
  return out;
}

// ------------------------------------------------------------- polynomials

Polynomial Polynomial::constant(int nvars, Rational c) {
  Polynomial p(nvars);
  p.add_term(Exponents(nvars, 0), c);
  return p;
}

Polynomial Polynomial::variable(int nvars, int i) {
  Polynomial p(nvars);
  Exponents e(nvars, 0);
  e.at(i) = 1;
  p.add_term(e, Rational(1));
  return p;
}

void Polynomial::add_term(const Exponents& e, Rational c) {
  if (c.numerator() == 0) return;
  auto [it, inserted] = terms_.emplace(e, c);
  if (!inserted) {
    it->second += c;
    if (it->second.numerator() == 0) terms_.erase(it);
  }
}

int Polynomial::degree() const {
  int d = 0;
  for (const auto& [e, c] : terms_) d = std::max(d, std::accumulate(e.begin(), e.end(), 0));
  return d;
}

Polynomial& Polynomial::operator+=(const Polynomial& o) {
  if (o.nvars_ != nvars_) throw ShapeError("Polynomial: variable count mismatch");
  for (const auto& [e, c] : o.terms_) add_term(e, c);
  return *this;
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
  Polynomial r = *this;
  r += o;
  return r;
}

Polynomial Polynomial::operator-(const Polynomial& o) const { return *this + o.scaled(Rational(-1)); }

Polynomial Polynomial::operator*(const Polynomial& o) const {
  if (o.nvars_ != nvars_) throw ShapeError("Polynomial: variable count mismatch");
  Polynomial r(nvars_);
  for (const auto& [e1, c1] : terms_)
    for (const auto& [e2, c2] : o.terms_) {
      Exponents e(nvars_);
      for (int i = 0; i < nvars_; ++i) e[i] = e1[i] + e2[i];
      r.add_term(e, c1 * c2);
    }
  return r;
}

Polynomial Polynomial::scaled(Rational c) const {
  Polynomial r(nvars_);
  for (const auto& [e, v] : terms_) r.add_term(e, v * c);
  return r;
}

bool Polynomial::operator==(const Polynomial& o) const {
  return nvars_ == o.nvars_ && terms_ == o.terms_;
}

Polynomial Polynomial::substitute(int i, int j) const {
  Polynomial r(nvars_);
  for (const auto& [e, c] : terms_) {
    Exponents f = e;
    if (j < 0) {
      if (f[i] > 0) continue;
    } else {
      f[j] += f[i];
      f[i] = 0;
    }
    r.add_term(f, c);
  }
  return r;
}

Polynomial Polynomial::integrate(int i, int lo, int hi) const {
  Polynomial anti(nvars_);
  for (const auto& [e, c] : terms_) {
    Exponents f = e;
    f[i] += 1;
    anti.add_term(f, c / Rational(f[i]));
  }
  return anti.substitute(i, hi) - anti.substitute(i, lo);
}

Polynomial Polynomial::select(const std::vector<int>& keep) const {
  Polynomial r(static_cast<int>(keep.size()));
  for (const auto& [e, c] : terms_) {
    Exponents f;
    int kept_total = 0;
    for (int k : keep) {
      f.push_back(e[k]);
      kept_total += e[k];
    }
    if (kept_total != std::accumulate(e.begin(), e.end(), 0))
      throw ShapeError("Polynomial::select: dropped variable still present");
    r.add_term(f, c);
  }
  return r;
}

double Polynomial::evaluate(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != nvars_) throw ShapeError("Polynomial: argument count");
  double total = 0.0;
  for (const auto& [e, c] : terms_) {
    double v = boost::rational_cast<double>(c);
    for (int i = 0; i < nvars_; ++i) v *= std::pow(x[i], e[i]);
    total += v;
  }
  return total;
}

std::string Polynomial::to_string(const std::vector<std::string>& names) const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  // Highest degree first reads naturally.
  std::vector<std::pair<Exponents, Rational>> ordered(terms_.rbegin(), terms_.rend());
  for (const auto& [e, c] : ordered) {
    Rational a = c;
    if (first) {
      if (a < Rational(0)) os << "-";
    } else {
      os << (a < Rational(0) ? " - " : " + ");
    }
    if (a < Rational(0)) a = -a;
    bool has_var = std::any_of(e.begin(), e.end(), [](int k) { return k > 0; });
    if (a != Rational(1) || !has_var) {
      os << a.numerator();
      if (a.denominator() != 1) os << "/" << a.denominator();
      if (has_var) os << "*";
    }
    bool first_var = true;
    for (int i = 0; i < nvars_; ++i) {
      if (e[i] == 0) continue;
      if (!first_var) os << "*";
      os << names.at(i);
      if (e[i] > 1) os << "^" << e[i];
      first_var = false;
    }
    first = false;
  }
  return os.str();
}

// --------------------------------------------------- Strat -> Ito conversion

namespace {

void words_of(int len, int remaining, ItoWord& cur, std::vector<ItoWord>& out) {
  if (static_cast<int>(cur.size()) == len) {
    if (remaining == 0) out.push_back(cur);
    return;
  }
  for (int letter : {1, 2}) {
    if (letter > remaining) continue;
    cur.push_back(letter);
    words_of(len, remaining - letter, cur, out);
    cur.pop_back();
  }
}

}  // namespace

std::vector<ItoWeight> strat_to_ito_terms(int n) {
  if (n < 1) throw DomainError("strat_to_ito_terms: n must be positive");
  std::vector<ItoWeight> out;
  for (int len = n; len >= (n + 1) / 2; --len) {
    std::vector<ItoWord> words;
    ItoWord cur;
    words_of(len, n, cur, words);
    for (auto& w : words) out.push_back({std::move(w), Rational(1, 1LL << (n - len))});
  }
  return out;
}

int retained_count(const ItoWord& alpha) {
  return static_cast<int>(std::count(alpha.begin(), alpha.end(), 1));
}

int paired_count(const ItoWord& alpha) {
  return static_cast<int>(std::count(alpha.begin(), alpha.end(), 2));
}

Polynomial f_alpha_polynomial(const ItoWord& alpha) {
  const int len = static_cast<int>(alpha.size());
  for (int a : alpha)
    if (a != 1 && a != 2) throw DomainError("f_alpha_polynomial: letters must be 1 or 2");
  // Variables u_0..u_{len-1} for the word's times, then t.
  Polynomial p = Polynomial::constant(len + 1, Rational(1));
  for (int i = 0; i < len; ++i) {
    if (alpha[i] != 2) continue;
    int lo = -1;
    for (int j = i - 1; j >= 0; --j)
      if (alpha[j] == 1) {
        lo = j;
        break;
      }
    p = p.integrate(i, lo, i + 1);
  }
  std::vector<int> keep;
  for (int i = 0; i < len; ++i)
    if (alpha[i] == 1) keep.push_back(i);
  keep.push_back(len);
  return p.select(keep);
}

// ------------------------------------------------------------ dense tensors

namespace {

std::size_t ipow(int base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= static_cast<std::size_t>(base);
  return r;
}

constexpr std::size_t kMaxTensorEntries = 60'000'000;

void check_size(int dim, int order, int out) {
  if (ipow(dim, order) * static_cast<std::size_t>(out) > kMaxTensorEntries)
    throw DomainError("dense tensor of order " + std::to_string(order) + " over dimension " +
                      std::to_string(dim) + " exceeds the memory budget");
}

}  // namespace

std::size_t DenseTensor::inputs() const { return ipow(dim, order); }

Eigen::VectorXd DenseTensor::apply(std::span<const Eigen::VectorXd> ks) const {
  if (static_cast<int>(ks.size()) != order) throw ShapeError("DenseTensor::apply: arity");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(out_dim);
  const std::size_t total = inputs();
  std::vector<int> idx(order, 0);
  for (std::size_t lin = 0; lin < total; ++lin) {
    std::size_t rem = lin;
    double w = 1.0;
    for (int j = order - 1; j >= 0; --j) {
      idx[j] = static_cast<int>(rem % dim);
      rem /= dim;
      w *= ks[j][idx[j]];
    }
    if (w == 0.0) continue;
    for (int c = 0; c < out_dim; ++c) out[c] += w * data[lin * out_dim + c];
  }
  return out;
}

DenseTensor nested_bracket_tensor(const ExtensionSpec& spec, int n) {
  const int d = spec.dim(), m = spec.m(), nv = spec.n();
  if (n < 1) throw DomainError("nested_bracket_tensor: n must be positive");
  if (n == 1) {
    DenseTensor id{1, d, d, std::vector<double>(static_cast<std::size_t>(d) * d, 0.0)};
    for (int i = 0; i < d; ++i) id.data[static_cast<std::size_t>(i) * d + i] = 1.0;
    return id;
  }
  check_size(d, n, nv);
  DenseTensor f{2, d, nv, spec.structure_data()};
  for (int k = 2; k < n; ++k) {
    DenseTensor g{k + 1, d, nv, std::vector<double>(f.inputs() * d * nv, 0.0)};
    const std::size_t tuples = f.inputs();
    for (std::size_t t = 0; t < tuples; ++t)
      for (int p = 0; p < nv; ++p) {
        const double fp = f.data[t * nv + p];
        if (fp == 0.0) continue;
        for (int a = 0; a < d; ++a)
          for (int c = 0; c < nv; ++c)
            g.data[(t * d + a) * nv + c] += fp * spec.structure(m + p, a, c);
      }
    f = std::move(g);
  }
  return f;
}

DenseTensor permute_slots(const DenseTensor& t, std::span<const int> sigma) {
  if (static_cast<int>(sigma.size()) != t.order || !is_permutation(sigma))
    throw ShapeError("permute_slots: sigma must permute the tensor's slots");
  DenseTensor out{t.order, t.dim, t.out_dim, std::vector<double>(t.data.size(), 0.0)};
  const std::size_t total = t.inputs();
  std::vector<std::size_t> stride(t.order);
  for (int j = 0; j < t.order; ++j) stride[j] = ipow(t.dim, t.order - 1 - j);
  std::vector<int> idx(t.order);
  for (std::size_t lin = 0; lin < total; ++lin) {
    std::size_t rem = lin;
    for (int j = t.order - 1; j >= 0; --j) {
      idx[j] = static_cast<int>(rem % t.dim);
      rem /= t.dim;
    }
    std::size_t src = 0;
    for (int j = 0; j < t.order; ++j) src += idx[sigma[j]] * stride[j];
    std::copy_n(t.data.begin() + src * t.out_dim, t.out_dim, out.data.begin() + lin * t.out_dim);
  }
  return out;
}

DenseTensor symmetrized_operator(const ExtensionSpec& spec, int n) {
  const DenseTensor f = nested_bracket_tensor(spec, n);
  if (n == 1) return f;
  DenseTensor out{n, f.dim, f.out_dim, std::vector<double>(f.data.size(), 0.0)};
  for (const auto& term : perm_terms(n)) {
    const DenseTensor p = permute_slots(f, term.sigma);
    const double c = boost::rational_cast<double>(term.c);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += c * p.data[i];
  }
  return out;
}

DenseTensor contract_pairs(const DenseTensor& t, const ItoWord& alpha) {
  int n = 0;
  std::vector<int> retained, pair_first;
  for (int a : alpha) {
    if (a == 1) {
      retained.push_back(n);
      n += 1;
    } else if (a == 2) {
      pair_first.push_back(n);
      n += 2;
    } else {
      throw DomainError("contract_pairs: letters must be 1 or 2");
    }
  }
  if (n != t.order) throw ShapeError("contract_pairs: word does not match tensor order");
  const int p = static_cast<int>(retained.size()), q = static_cast<int>(pair_first.size());
  DenseTensor out{p, t.dim, t.out_dim,
                  std::vector<double>(ipow(t.dim, p) * static_cast<std::size_t>(t.out_dim), 0.0)};
  std::vector<std::size_t> stride(n);
  for (int j = 0; j < n; ++j) stride[j] = ipow(t.dim, n - 1 - j);
  const std::size_t outer = ipow(t.dim, p), inner = ipow(t.dim, q);
  for (std::size_t r = 0; r < outer; ++r) {
    std::size_t base = 0, rem = r;
    for (int j = p - 1; j >= 0; --j) {
      base += (rem % t.dim) * stride[retained[j]];
      rem /= t.dim;
    }
    for (std::size_t s = 0; s < inner; ++s) {
      std::size_t src = base, rem2 = s;
      for (int j = q - 1; j >= 0; --j) {
        const std::size_t h = rem2 % t.dim;
        rem2 /= t.dim;
        src += h * (stride[pair_first[j]] + stride[pair_first[j] + 1]);
      }
      for (int c = 0; c < t.out_dim; ++c)
        out.data[r * t.out_dim + c] += t.data[src * t.out_dim + c];
    }
  }
  return out;
}

std::vector<int> tau_for(const ItoWord& alpha, TauChoice choice) {
  const int p = retained_count(alpha), q = paired_count(alpha);
  std::vector<int> tau;
  int next_retained = 0, pair_index = 0;
  for (int a : alpha) {
    if (a == 1) {
      tau.push_back(next_retained++);
    } else {
      const int j = choice == TauChoice::StablePairs ? pair_index : q - 1 - pair_index;
      tau.push_back(p + 2 * j);
      tau.push_back(p + 2 * j + 1);
      ++pair_index;
    }
  }
  return tau;
}

DenseTensor f_hat_tensor(const ExtensionSpec& spec, int n, std::span<const int> sigma,
                         const ItoWord& alpha, TauChoice choice) {
  if (std::accumulate(alpha.begin(), alpha.end(), 0) != n)
    throw DomainError("f_hat_tensor: word must sum to n");
  if (static_cast<int>(sigma.size()) != n || !is_permutation(sigma))
    throw ShapeError("f_hat_tensor: sigma must be a permutation of n elements");
  if (n == 1) return nested_bracket_tensor(spec, 1);
  const std::vector<int> tau = tau_for(alpha, choice);
  Permutation sigma_prime(n);
  for (int j = 0; j < n; ++j) sigma_prime[j] = tau[sigma[j]];
  const DenseTensor f = permute_slots(nested_bracket_tensor(spec, n), sigma_prime);
  ItoWord rear(retained_count(alpha), 1);
  rear.insert(rear.end(), paired_count(alpha), 2);
  return contract_pairs(f, rear);
}

// ------------------------------------------------------------------ drivers

Engine parse_engine(const std::string& name) {
  if (name == "rollout") return Engine::Rollout;
  if (name == "expansion") return Engine::Expansion;
  if (name == "signature") return Engine::Signature;
  throw DomainError("unknown engine '" + name + "'");
}

std::string engine_name(Engine e) {
  switch (e) {
    case Engine::Rollout:
      return "rollout";
    case Engine::Expansion:
      return "expansion";
    case Engine::Signature:
      return "signature";
  }
  return "rollout";
}

void validate_config(const SimConfig& config) {
  if (!(config.t > 0.0) || !std::isfinite(config.t))
    throw DomainError("config: t must be positive");
  if (config.steps < 1) throw DomainError("config: steps must be >= 1");
  if (config.trials < 1) throw DomainError("config: trials must be >= 1");
}

BrownianDriver sample_driver(const SimConfig& config, int m, int n, std::uint64_t stream) {
  validate_config(config);
  const int d = m + n, s = config.steps;
  BrownianDriver drv;
  drv.t = config.t;
  drv.seed = config.seed;
  drv.stream = stream;
  drv.m = m;
  drv.times.resize(s + 1);
  for (int k = 0; k <= s; ++k) drv.times[k] = config.t * k / s;
  drv.times[s] = config.t;
  drv.increments.resize(d, s);
  PhiloxStream rng(config.seed, stream);
  for (int k = 0; k < s; ++k) {
    const double sd = std::sqrt(drv.times[k + 1] - drv.times[k]);
    for (int i = 0; i < d; ++i) drv.increments(i, k) = sd * rng.normal();
  }
  return drv;
}

BrownianDriver project_driver(const BrownianDriver& driver, int ell) {
  if (ell < 0 || ell > driver.m) throw DomainError("project_driver: ell must lie in [0, m]");
  BrownianDriver out = driver;
  out.increments.middleRows(ell, driver.m - ell).setZero();
  return out;
}

RolloutResult rollout(const GroupLaw& law, const BrownianDriver& driver, bool record_path) {
  const auto& spec = law.spec();
  if (driver.increments.rows() != spec.dim() || driver.m != spec.m())
    throw ShapeError("rollout: driver does not conform to spec");
  RolloutResult res;
  res.endpoint = Element(spec.m(), spec.n());
  std::vector<Eigen::VectorXd> scratch;
  if (record_path) res.path.push_back(res.endpoint);
  for (int k = 0; k < driver.steps(); ++k) {
    law.multiply_into(res.endpoint.coords(), driver.increments.col(k), res.endpoint.coords(),
                      scratch);
    if (record_path) res.path.push_back(res.endpoint);
  }
  return res;
}

RolloutResult rollout(const ExtensionSpec& spec, const BrownianDriver& driver, bool record_path) {
  return rollout(GroupLaw(spec), driver, record_path);
}

// ---------------------------------------------------------------- signature

SignatureEvaluator::SignatureEvaluator(const ExtensionSpec& spec) : spec_(spec) {
  for (int n = 2; n <= spec.step(); ++n) ops_.push_back(symmetrized_operator(spec, n));
}

Element SignatureEvaluator::evaluate(const BrownianDriver& driver) const {
  const int d = spec_.dim(), r = spec_.step(), nv = spec_.n();
  if (driver.increments.rows() != d) throw ShapeError("signature_eval: driver dimension");
  // levels[n] holds the n-th signature level, levels[0] = {1}.
  std::vector<std::vector<double>> levels(r + 1);
  levels[0] = {1.0};
  for (int n = 1; n <= r; ++n) levels[n].assign(ipow(d, n), 0.0);
  std::vector<std::vector<double>> powers(r + 1);
  powers[0] = {1.0};
  for (int k = 0; k < driver.steps(); ++k) {
    const auto delta = driver.increments.col(k);
    for (int j = 1; j <= r; ++j) {
      const auto& prev = powers[j - 1];
      auto& cur = powers[j];
      cur.assign(prev.size() * d, 0.0);
      for (std::size_t a = 0; a < prev.size(); ++a)
        for (int b = 0; b < d; ++b) cur[a * d + b] = prev[a] * delta[b] / j;
    }
    for (int n = r; n >= 1; --n) {
      auto& target = levels[n];
      for (int j = 0; j < n; ++j) {
        const auto& left = levels[j];
        const auto& right = powers[n - j];
        const std::size_t rs = right.size();
        for (std::size_t a = 0; a < left.size(); ++a) {
          const double la = left[a];
          if (la == 0.0) continue;
          double* dst = target.data() + a * rs;
          for (std::size_t b = 0; b < rs; ++b) dst[b] += la * right[b];
        }
      }
    }
  }
  Element out(spec_.m(), spec_.n());
  out.coords() = Eigen::Map<const Eigen::VectorXd>(levels[1].data(), d);
  for (int n = 2; n <= r; ++n) {
    const auto& op = ops_[n - 2];
    const auto& lv = levels[n];
    for (std::size_t i = 0; i < lv.size(); ++i) {
      if (lv[i] == 0.0) continue;
      for (int c = 0; c < nv; ++c) out.v_part()[c] += lv[i] * op.data[i * nv + c];
    }
  }
  return out;
}

Element signature_eval(const ExtensionSpec& spec, const BrownianDriver& driver) {
  return SignatureEvaluator(spec).evaluate(driver);
}

// ---------------------------------------------------------------- expansion

ExpansionEngine::ExpansionEngine(const ExtensionSpec& spec) : spec_(spec) {
  for (int n = 2; n <= spec.step(); ++n) {
    const DenseTensor g = symmetrized_operator(spec, n);
    for (const auto& [alpha, weight] : strat_to_ito_terms(n)) {
      DenseTensor fh = contract_pairs(g, alpha);
      if (std::all_of(fh.data.begin(), fh.data.end(), [](double x) { return x == 0.0; }))
        continue;
      terms_.push_back({n, alpha, weight, f_alpha_polynomial(alpha), std::move(fh)});
    }
  }
}

Element ExpansionEngine::evaluate(const BrownianDriver& driver) const {
  const int d = spec_.dim(), nv = spec_.n();
  if (driver.increments.rows() != d) throw ShapeError("expansion_endpoint: driver dimension");
  Element out(spec_.m(), spec_.n());
  out.coords() = driver.increments.rowwise().sum();

  std::map<std::vector<int>, std::vector<double>> cache;
  auto iterated = [&](const std::vector<int>& e) -> const std::vector<double>& {
    auto it = cache.find(e);
    if (it != cache.end()) return it->second;
    const int p = static_cast<int>(e.size());
    std::vector<std::vector<double>> z(p + 1);
    z[0] = {1.0};
    for (int j = 1; j <= p; ++j) z[j].assign(ipow(d, j), 0.0);
    for (int k = 0; k < driver.steps(); ++k) {
      const double s = driver.times[k];
      const auto delta = driver.increments.col(k);
      for (int j = p; j >= 1; --j) {
        const double w = e[j - 1] == 0 ? 1.0 : std::pow(s, e[j - 1]);
        if (w == 0.0) continue;
        const auto& prev = z[j - 1];
        auto& cur = z[j];
        for (std::size_t a = 0; a < prev.size(); ++a) {
          const double pa = w * prev[a];
          if (pa == 0.0) continue;
          double* dst = cur.data() + a * d;
          for (int b = 0; b < d; ++b) dst[b] += pa * delta[b];
        }
      }
    }
    return cache.emplace(e, std::move(z[p])).first->second;
  };

  for (const auto& term : terms_) {
    const int p = term.f.nvars() - 1;
    for (const auto& [exps, coef] : term.f.terms()) {
      const double scale = boost::rational_cast<double>(term.weight * coef) *
                           std::pow(driver.t, exps[p]);
      const std::vector<int> e(exps.begin(), exps.begin() + p);
      const auto& z = iterated(e);
      for (std::size_t i = 0; i < z.size(); ++i) {
        if (z[i] == 0.0) continue;
        for (int c = 0; c < nv; ++c) out.v_part()[c] += scale * z[i] * term.f_hat.data[i * nv + c];
      }
    }
  }
  return out;
}

Element expansion_endpoint(const ExtensionSpec& spec, const BrownianDriver& driver) {
  return ExpansionEngine(spec).evaluate(driver);
}

// ------------------------------------------------------------------ sampler

EndpointSampler::EndpointSampler(const ExtensionSpec& spec, Engine engine)
    : engine_(engine), law_(spec) {
  if (engine == Engine::Signature) sig_.emplace(spec);
  if (engine == Engine::Expansion) exp_.emplace(spec);
}

Element EndpointSampler::endpoint(const BrownianDriver& driver) const {
  switch (engine_) {
    case Engine::Signature:
      return sig_->evaluate(driver);
    case Engine::Expansion:
      return exp_->evaluate(driver);
    case Engine::Rollout:
      break;
  }
  return rollout(law_, driver).endpoint;
}

void parallel_for(long long count, int threads, const std::function<void(long long)>& fn) {
  if (count <= 0) return;
  const int workers = static_cast<int>(std::clamp<long long>(threads, 1, count));
  if (workers == 1) {
    for (long long i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<long long> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  constexpr long long kChunk = 64;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      try {
        while (true) {
          const long long begin = next.fetch_add(kChunk);
          if (begin >= count) return;
          const long long end = std::min(count, begin + kChunk);
          for (long long i = begin; i < end; ++i) fn(i);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
        next.store(count);
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

Eigen::MatrixXd sample_endpoints(const ExtensionSpec& spec, const SimConfig& config) {
  validate_config(config);
  const EndpointSampler sampler(spec, config.engine);
  Eigen::MatrixXd out(spec.dim(), config.trials);
  parallel_for(config.trials, config.threads, [&](long long trial) {
    const BrownianDriver drv =
        sample_driver(config, spec.m(), spec.n(), static_cast<std::uint64_t>(trial));
    out.col(trial) = sampler.endpoint(drv).coords();
  });
  return out;
}

}  // namespace nilflow
