#include "nilflow/heatkernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nilflow {

// ------------------------------------------------------ cylinder functions

CylinderPolynomial::CylinderPolynomial(int dim, std::vector<Monomial> monomials, Squash squash,
                                       std::string name)
    : dim_(dim), monomials_(std::move(monomials)), squash_(squash), name_(std::move(name)) {
  if (dim < 0) throw ShapeError("CylinderPolynomial: negative dimension");
  for (const auto& mono : monomials_)
    for (const auto& [coord, exp] : mono.powers)
      if (coord < 0 || coord >= dim || exp < 0)
        throw ShapeError("CylinderPolynomial: monomial refers to coordinate " +
                         std::to_string(coord) + " outside dimension " + std::to_string(dim));
}

CylinderPolynomial CylinderPolynomial::constant(int dim, double c) {
  return CylinderPolynomial(dim, {{c, {}}}, Squash::None, "const");
}

CylinderPolynomial CylinderPolynomial::linear(int dim, const Eigen::VectorXd& coefficients) {
  if (coefficients.size() != dim) throw ShapeError("CylinderPolynomial::linear: length");
  std::vector<Monomial> monos;
  for (int i = 0; i < dim; ++i)
    if (coefficients[i] != 0.0) monos.push_back({coefficients[i], {{i, 1}}});
  return CylinderPolynomial(dim, std::move(monos), Squash::None, "linear");
}

CylinderPolynomial CylinderPolynomial::with_squash(Squash s) const {
  return CylinderPolynomial(dim_, monomials_, s, name_);
}

double CylinderPolynomial::polynomial(const Eigen::VectorXd& x) const {
  if (x.size() != dim_) throw ShapeError("CylinderPolynomial: argument dimension");
  double total = 0.0;
  for (const auto& mono : monomials_) {
    double v = mono.coefficient;
    for (const auto& [coord, exp] : mono.powers) v *= std::pow(x[coord], exp);
    total += v;
  }
  return total;
}

Eigen::VectorXd CylinderPolynomial::polynomial_gradient(const Eigen::VectorXd& x) const {
  if (x.size() != dim_) throw ShapeError("CylinderPolynomial: argument dimension");
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(dim_);
  for (const auto& mono : monomials_) {
    for (std::size_t k = 0; k < mono.powers.size(); ++k) {
      const auto [ck, ek] = mono.powers[k];
      if (ek == 0) continue;
      double v = mono.coefficient * ek * std::pow(x[ck], ek - 1);
      for (std::size_t j = 0; j < mono.powers.size(); ++j)
        if (j != k) v *= std::pow(x[mono.powers[j].first], mono.powers[j].second);
      grad[ck] += v;
    }
  }
  return grad;
}

double CylinderPolynomial::operator()(const Eigen::VectorXd& x) const {
  const double p = polynomial(x);
  switch (squash_) {
    case Squash::Tanh:
      return std::tanh(p);
    case Squash::TanhSquared: {
      const double th = std::tanh(p);
      return th * th;
    }
    case Squash::None:
      break;
  }
  return p;
}

Eigen::VectorXd CylinderPolynomial::coordinate_gradient(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd g = polynomial_gradient(x);
  if (squash_ == Squash::None) return g;
  const double th = std::tanh(polynomial(x));
  const double dth = 1.0 - th * th;
  return squash_ == Squash::Tanh ? Eigen::VectorXd(dth * g) : Eigen::VectorXd(2.0 * th * dth * g);
}

std::vector<CylinderPolynomial> default_suite(int m, int n, Squash squash) {
  if (m < 1 || n < 1) throw ShapeError("default_suite: need m >= 1 and N >= 1");
  const int d = m + n, x0 = 0, x1 = m > 1 ? 1 : 0, y = d - 1;
  std::vector<CylinderPolynomial> suite;
  suite.emplace_back(d, std::vector<Monomial>{{1.0, {{x0, 1}}}}, squash, "x0");
  suite.emplace_back(d, std::vector<Monomial>{{1.0, {{y, 1}}}}, squash, "y");
  suite.emplace_back(d, std::vector<Monomial>{{1.0, {{x0, 1}, {y, 1}}}}, squash, "x0*y");
  suite.emplace_back(d, std::vector<Monomial>{{1.0, {{x0, 1}}}, {1.0, {{x1, 1}, {y, 1}}}}, squash,
                     "x0+x1*y");
  suite.emplace_back(
      d, std::vector<Monomial>{{1.0, {{x0, 2}}}, {-1.0, {{y, 1}}}, {0.5, {{x1, 1}}}}, squash,
      "x0^2-y+0.5*x1");
  return suite;
}

double c_function(double x) {
  if (std::abs(x) < 1e-4) return 1.0 - x / 2.0 + x * x / 12.0;
  return x / std::expm1(x);
}

double log_sobolev_coefficient(double k, double t) {
  const double kt = k * t;
  if (std::abs(kt) < 1e-8) return 2.0 * t * (1.0 - kt / 2.0);
  return -2.0 * std::expm1(-kt) / k;
}

Element gradient(const GroupLaw& law, const CylinderPolynomial& f, const Element& g) {
  const auto& spec = law.spec();
  spec.check_element(g);
  const Eigen::MatrixXd push = law.pushforward_matrix_at_identity(g);
  return Element(spec.m(), Eigen::VectorXd(push.transpose() * f.coordinate_gradient(g.coords())));
}

Element gradient(const ExtensionSpec& spec, const CylinderPolynomial& f, const Element& g) {
  return gradient(GroupLaw(spec), f, g);
}

// ---------------------------------------------------------------- reports

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Pass:
      return "pass";
    case Verdict::Inconclusive:
      return "inconclusive";
    case Verdict::Fail:
      return "fail";
  }
  return "fail";
}

Verdict combine(const std::vector<MCItem>& items) {
  Verdict worst = Verdict::Pass;
  for (const auto& it : items) worst = std::max(worst, it.verdict);
  return worst;
}

namespace {

double finite_or_max(double x) {
  if (std::isnan(x)) return 0.0;
  if (std::isinf(x)) return x > 0 ? std::numeric_limits<double>::max()
                                   : std::numeric_limits<double>::lowest();
  return x;
}

}  // namespace

nlohmann::json report_to_json(const MCReport& rep) {
  nlohmann::json doc;
  doc["test"] = rep.test;
  doc["trials"] = rep.trials;
  doc["seed"] = rep.seed;
  doc["config"] = {{"t", rep.config.t},
                   {"steps", rep.config.steps},
                   {"trials", rep.config.trials},
                   {"seed", rep.config.seed},
                   {"engine", engine_name(rep.config.engine)}};
  doc["verdict"] = verdict_name(rep.verdict);
  nlohmann::json items = nlohmann::json::array();
  for (const auto& it : rep.items)
    items.push_back({{"name", it.name},
                     {"lhs", it.lhs},
                     {"rhs", it.rhs},
                     {"sigma", it.sigma},
                     {"margin_sigma", finite_or_max(it.margin_sigma)},
                     {"verdict", verdict_name(it.verdict)}});
  doc["items"] = std::move(items);
  doc["details"] = rep.details;
  return doc;
}

namespace {

/// Kahan-compensated sum in index order.
double kahan_sum(std::span<const double> xs) {
  double sum = 0.0, comp = 0.0;
  for (double x : xs) {
    const double y = x - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum;
}

}  // namespace

MeanStderr mean_stderr(std::span<const double> xs) {
  MeanStderr r;
  const std::size_t n = xs.size();
  if (n == 0) return r;
  r.mean = kahan_sum(xs) / static_cast<double>(n);
  if (n < 2) return r;
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) sq[i] = (xs[i] - r.mean) * (xs[i] - r.mean);
  const double var = kahan_sum(sq) / static_cast<double>(n - 1);
  r.sem = std::sqrt(var / static_cast<double>(n));
  return r;
}

namespace {

/// lhs <= rhs: pass when it holds, inconclusive within 3 sigma of it, fail beyond.
MCItem one_sided(std::string name, double lhs, double rhs, double sigma) {
  MCItem it{std::move(name), lhs, rhs, sigma, 0.0, Verdict::Pass};
  const double delta = rhs - lhs;
  it.margin_sigma = sigma > 0.0 ? delta / sigma
                                : (delta >= 0.0 ? std::numeric_limits<double>::infinity()
                                                : -std::numeric_limits<double>::infinity());
  if (delta >= 0.0)
    it.verdict = Verdict::Pass;
  else if (delta >= -3.0 * sigma)
    it.verdict = Verdict::Inconclusive;
  else
    it.verdict = Verdict::Fail;
  return it;
}

/// lhs == rhs within 3 sigma.
MCItem two_sided(std::string name, double lhs, double rhs, double sigma) {
  MCItem it{std::move(name), lhs, rhs, sigma, 0.0, Verdict::Pass};
  const double diff = std::abs(lhs - rhs);
  it.margin_sigma =
      sigma > 0.0 ? diff / sigma : (diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
  it.verdict = diff <= 3.0 * sigma ? Verdict::Pass : Verdict::Fail;
  return it;
}

MCReport start_report(std::string test, const SimConfig& config) {
  MCReport rep;
  rep.test = std::move(test);
  rep.trials = config.trials;
  rep.seed = config.seed;
  rep.config = config;
  return rep;
}

void require_trials(const SimConfig& config) {
  validate_config(config);
  if (config.trials < 2) throw DomainError("Monte Carlo tests need at least 2 trials");
}

void require_suite(const ExtensionSpec& spec, const std::vector<CylinderPolynomial>& suite) {
  for (const auto& f : suite)
    if (f.dim() != spec.dim()) throw ShapeError("test function dimension does not match spec");
}

}  // namespace

// ------------------------------------------------------------------ tests

MCReport estimate_expectation(const ExtensionSpec& spec, const CylinderPolynomial& f,
                              const SimConfig& config) {
  require_trials(config);
  require_suite(spec, {f});
  const Eigen::MatrixXd samples = sample_endpoints(spec, config);
  std::vector<double> vals(config.trials);
  for (long long i = 0; i < config.trials; ++i) vals[i] = f(samples.col(i));
  const MeanStderr ms = mean_stderr(vals);
  MCReport rep = start_report("expectation", config);
  rep.items.push_back({f.name(), ms.mean, ms.mean, ms.sem, 0.0, Verdict::Pass});
  rep.details["estimate"] = ms.mean;
  rep.details["stderr"] = ms.sem;
  rep.verdict = Verdict::Pass;
  return rep;
}

MCReport inversion_invariance_test(const ExtensionSpec& spec,
                                   const std::vector<CylinderPolynomial>& suite,
                                   const SimConfig& config, const std::optional<Element>& shift) {
  require_trials(config);
  require_suite(spec, suite);
  if (shift) spec.check_element(*shift);
  const Eigen::MatrixXd samples = sample_endpoints(spec, config);
  const GroupLaw law(spec);
  const long long n = config.trials;
  Eigen::MatrixXd second(spec.dim(), n);
  parallel_for(n, config.threads, [&](long long i) {
    Element g(spec.m(), Eigen::VectorXd(samples.col(i)));
    if (shift) g = law.multiply(*shift, g);
    second.col(i) = inverse(g).coords();
  });
  MCReport rep = start_report(shift ? "inversion_shifted" : "inversion", config);
  for (const auto& f : suite) {
    std::vector<double> diff(n);
    for (long long i = 0; i < n; ++i) diff[i] = f(samples.col(i)) - f(second.col(i));
    const MeanStderr ms = mean_stderr(diff);
    rep.items.push_back(two_sided(f.name(), ms.mean, 0.0, ms.sem));
  }
  if (shift) rep.details["shift"] = std::vector<double>(shift->coords().data(),
                                                        shift->coords().data() + spec.dim());
  rep.verdict = combine(rep.items);
  return rep;
}

MCReport log_sobolev_test(const ExtensionSpec& spec, const std::vector<CylinderPolynomial>& suite,
                          const SimConfig& config) {
  require_trials(config);
  require_suite(spec, suite);
  const double k = ricci_form(spec).k_estimate;
  const double coef = log_sobolev_coefficient(k, config.t);
  const Eigen::MatrixXd samples = sample_endpoints(spec, config);
  const GroupLaw law(spec);
  const long long n = config.trials;
  const std::size_t nf = suite.size();
  // Per trial and function: f^2 ln f^2, f^2 and |grad f|^2.
  std::vector<double> a(n * nf), b(n * nf), grad(n * nf);
  parallel_for(n, config.threads, [&](long long i) {
    const Eigen::VectorXd x = samples.col(i);
    const Eigen::MatrixXd push = law.pushforward_matrix_at_identity(Element(spec.m(), x));
    for (std::size_t j = 0; j < nf; ++j) {
      const double f = suite[j](x);
      const double f2 = f * f;
      a[i * nf + j] = f2 > 0.0 ? f2 * std::log(f2) : 0.0;
      b[i * nf + j] = f2;
      grad[i * nf + j] = (push.transpose() * suite[j].coordinate_gradient(x)).squaredNorm();
    }
  });
  MCReport rep = start_report("logsob", config);
  nlohmann::json entropies = nlohmann::json::array();
  for (std::size_t j = 0; j < nf; ++j) {
    std::vector<double> aj(n), bj(n), gj(n);
    for (long long i = 0; i < n; ++i) {
      aj[i] = a[i * nf + j];
      bj[i] = b[i * nf + j];
      gj[i] = grad[i * nf + j];
    }
    const double ma = mean_stderr(aj).mean, mb = mean_stderr(bj).mean;
    const double mg = mean_stderr(gj).mean;
    const double ent = mb > 0.0 ? ma - mb * std::log(mb) : 0.0;
    const double rhs = coef * mg;
    // Influence function of rhs - Ent for the combined standard error.
    std::vector<double> psi(n);
    const double lb = mb > 0.0 ? std::log(mb) + 1.0 : 0.0;
    for (long long i = 0; i < n; ++i) psi[i] = coef * gj[i] - aj[i] + lb * bj[i];
    const double sigma = mean_stderr(psi).sem;
    rep.items.push_back(one_sided(suite[j].name(), ent, rhs, sigma));
    entropies.push_back({{"name", suite[j].name()}, {"entropy", ent}, {"E_grad_sq", mg}});
  }
  rep.details["K"] = k;
  rep.details["coefficient"] = coef;
  rep.details["functions"] = std::move(entropies);
  rep.verdict = combine(rep.items);
  return rep;
}

MCReport quasi_invariance_test(const ExtensionSpec& spec, const Element& h, double p,
                               const std::vector<CylinderPolynomial>& suite,
                               const SimConfig& config) {
  require_trials(config);
  require_suite(spec, suite);
  spec.check_element(h);
  if (!(p > 1.0)) throw DomainError("quasi_invariance_test: exponent p must exceed 1");
  const double q = p / (p - 1.0);
  const double k = ricci_form(spec).k_estimate;
  const DistanceBounds dist = distance_bounds(spec, h);
  const double cfac = c_function(k * config.t);
  const double factor = std::exp(cfac * (p - 1.0) * dist.upper * dist.upper / (2.0 * config.t));

  const Eigen::MatrixXd samples = sample_endpoints(spec, config);
  const GroupLaw law(spec);
  const long long n = config.trials;
  Eigen::MatrixXd left(spec.dim(), n), right(spec.dim(), n);
  parallel_for(n, config.threads, [&](long long i) {
    const Element g(spec.m(), Eigen::VectorXd(samples.col(i)));
    left.col(i) = law.multiply(h, g).coords();
    right.col(i) = law.multiply(g, h).coords();
  });

  MCReport rep = start_report("quasi", config);
  for (const auto& f : suite) {
    std::vector<double> fq(n), fl(n), fr(n);
    for (long long i = 0; i < n; ++i) {
      const double base = f(samples.col(i));
      if (base < 0.0) throw DomainError("quasi_invariance_test: test function must be >= 0");
      fq[i] = std::pow(base, q);
      fl[i] = f(left.col(i));
      fr[i] = f(right.col(i));
    }
    const double mq = mean_stderr(fq).mean;
    const double norm_q = std::pow(mq, 1.0 / q);
    const double rhs = factor * norm_q;
    const double dnorm = mq > 0.0 ? factor * std::pow(mq, 1.0 / q - 1.0) / q : 0.0;
    for (const auto& [side, shifted] : {std::pair{"left", &fl}, std::pair{"right", &fr}}) {
      std::vector<double> psi(n);
      for (long long i = 0; i < n; ++i) psi[i] = dnorm * fq[i] - (*shifted)[i];
      const double lhs = mean_stderr(*shifted).mean;
      rep.items.push_back(one_sided(f.name() + ":" + side, lhs, rhs, mean_stderr(psi).sem));
    }
  }
  rep.details["K"] = k;
  rep.details["c_Kt"] = cfac;
  rep.details["p"] = p;
  rep.details["q"] = q;
  rep.details["distance_upper"] = dist.upper;
  rep.details["distance_lower"] = dist.lower;
  rep.details["factor"] = factor;
  rep.details["h"] = std::vector<double>(h.coords().data(), h.coords().data() + h.dim());
  rep.verdict = combine(rep.items);
  return rep;
}

MCReport projection_convergence_study(const ExtensionSpec& spec, const std::vector<int>& ells,
                                      const SimConfig& config) {
  require_trials(config);
  if (ells.empty()) throw DomainError("projection_convergence_study: empty level list");
  for (std::size_t j = 0; j < ells.size(); ++j) {
    if (ells[j] < 0 || ells[j] > spec.m())
      throw DomainError("projection_convergence_study: levels must lie in [0, m]");
    if (j > 0 && ells[j] <= ells[j - 1])
      throw DomainError("projection_convergence_study: levels must increase");
  }
  const GroupLaw law(spec);
  const long long n = config.trials;
  const std::size_t nl = ells.size();
  std::vector<double> err(n * nl);
  parallel_for(n, config.threads, [&](long long i) {
    const BrownianDriver drv =
        sample_driver(config, spec.m(), spec.n(), static_cast<std::uint64_t>(i));
    const RolloutResult full = rollout(law, drv, true);
    for (std::size_t j = 0; j < nl; ++j) {
      const RolloutResult proj = rollout(law, project_driver(drv, ells[j]), true);
      double sup = 0.0;
      for (std::size_t k = 0; k < full.path.size(); ++k)
        sup = std::max(sup, (proj.path[k].coords() - full.path[k].coords()).squaredNorm());
      err[i * nl + j] = sup;
    }
  });
  MCReport rep = start_report("convergence", config);
  std::vector<std::vector<double>> per(nl, std::vector<double>(n));
  for (long long i = 0; i < n; ++i)
    for (std::size_t j = 0; j < nl; ++j) per[j][i] = err[i * nl + j];
  nlohmann::json levels = nlohmann::json::array();
  for (std::size_t j = 0; j < nl; ++j) {
    const MeanStderr ms = mean_stderr(per[j]);
    levels.push_back({{"ell", ells[j]}, {"mean_sup_sq_error", ms.mean}, {"stderr", ms.sem}});
  }
  // Consecutive levels compared on shared drivers: strict decrease passes,
  // a non-decrease within 1 sigma is inconclusive.
  for (std::size_t j = 0; j + 1 < nl; ++j) {
    std::vector<double> delta(n);
    for (long long i = 0; i < n; ++i) delta[i] = per[j][i] - per[j + 1][i];
    const MeanStderr ms = mean_stderr(delta);
    MCItem it{"ell=" + std::to_string(ells[j + 1]) + "<ell=" + std::to_string(ells[j]),
              mean_stderr(per[j + 1]).mean,
              mean_stderr(per[j]).mean,
              ms.sem,
              ms.sem > 0.0 ? ms.mean / ms.sem : 0.0,
              Verdict::Pass};
    if (ms.mean > 0.0)
      it.verdict = Verdict::Pass;
    else if (ms.mean >= -ms.sem)
      it.verdict = Verdict::Inconclusive;
    else
      it.verdict = Verdict::Fail;
    rep.items.push_back(it);
  }
  rep.details["levels"] = std::move(levels);
  rep.details["m"] = spec.m();
  rep.verdict = combine(rep.items);
  return rep;
}

}  // namespace nilflow
