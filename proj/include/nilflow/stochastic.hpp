#pragma once

#include "nilflow/algebra.hpp"
#include "nilflow/group.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nilflow {

// ------------------------------------------------------------ permutations

/// Number of descents #{j : sigma(j) > sigma(j+1)}.
int error_count(std::span<const int> sigma);

/// (-1)^e / (n^2 binom(n-1, e)) with e = error_count(sigma).
Rational c_coefficient(int n, std::span<const int> sigma);

/// All permutations of {0..n-1} in lexicographic order.
std::vector<Permutation> all_permutations(int n);

struct PermTerm {
  int n = 0;
  Permutation sigma;
  int errors = 0;
  Rational c;
};

std::vector<PermTerm> perm_terms(int n);

// ------------------------------------------------------------- polynomials

/// Polynomial with exact rational coefficients in a fixed number of variables.
class Polynomial {
 public:
  using Exponents = std::vector<int>;

  explicit Polynomial(int nvars = 0) : nvars_(nvars) {}
  static Polynomial constant(int nvars, Rational c);
  static Polynomial variable(int nvars, int i);

  int nvars() const { return nvars_; }
  const std::map<Exponents, Rational>& terms() const { return terms_; }
  int degree() const;
  bool is_zero() const { return terms_.empty(); }

  Polynomial& operator+=(const Polynomial& o);
  Polynomial operator+(const Polynomial& o) const;
  Polynomial operator-(const Polynomial& o) const;
  Polynomial operator*(const Polynomial& o) const;
  Polynomial scaled(Rational c) const;
  bool operator==(const Polynomial& o) const;

  /// Replaces variable i by variable j, or by 0 when j < 0.
  Polynomial substitute(int i, int j) const;
  /// Integral over variable i from variable lo (0 when lo < 0) to variable hi.
  Polynomial integrate(int i, int lo, int hi) const;
  /// Keeps the listed variables, in order; the others must not appear.
  Polynomial select(const std::vector<int>& keep) const;

  double evaluate(std::span<const double> x) const;
  std::string to_string(const std::vector<std::string>& names) const;

 private:
  void add_term(const Exponents& e, Rational c);

  int nvars_;
  std::map<Exponents, Rational> terms_;
};

// --------------------------------------------------- Strat -> Ito conversion

/// A word over {1,2} summing to n.
using ItoWord = std::vector<int>;

struct ItoWeight {
  ItoWord alpha;
  Rational weight;  // 2^{-(n - len)}
};

/// Words in J_n with weights, longest words first, then lexicographic.
std::vector<ItoWeight> strat_to_ito_terms(int n);

/// Polynomial in (s_1..s_p, t) from integrating the 2-slot times over the simplex.
Polynomial f_alpha_polynomial(const ItoWord& alpha);

int retained_count(const ItoWord& alpha);  // p_alpha
int paired_count(const ItoWord& alpha);    // q_alpha

// ------------------------------------------------------------ dense tensors

/// Dense multilinear map (R^dim)^{order} -> R^out_dim, last index fastest.
struct DenseTensor {
  int order = 0;
  int dim = 0;
  int out_dim = 0;
  std::vector<double> data;

  std::size_t inputs() const;
  Eigen::VectorXd apply(std::span<const Eigen::VectorXd> ks) const;
};

/// F^id_n as a dense tensor; n = 1 is the identity on g.
DenseTensor nested_bracket_tensor(const ExtensionSpec& spec, int n);

/// F^sigma from F^id: out[i_1..i_n] = in[i_{sigma(1)}..i_{sigma(n)}].
DenseTensor permute_slots(const DenseTensor& t, std::span<const int> sigma);

/// sum_sigma c_n^sigma F_n^sigma.
DenseTensor symmetrized_operator(const ExtensionSpec& spec, int n);

/// Fills the 2-slot pairs of alpha with sum_j h_j (x) h_j, keeping 1-slots in order.
DenseTensor contract_pairs(const DenseTensor& t, const ItoWord& alpha);

enum class TauChoice { StablePairs, ReversedPairs };

/// Slot map tau (old slot -> new slot) moving the 2-slot pairs to the rear.
std::vector<int> tau_for(const ItoWord& alpha, TauChoice choice);

/// F-hat via sigma' = tau o sigma followed by contraction of the trailing pairs.
DenseTensor f_hat_tensor(const ExtensionSpec& spec, int n, std::span<const int> sigma,
                         const ItoWord& alpha, TauChoice choice = TauChoice::StablePairs);

// ------------------------------------------------------------------ drivers

enum class Engine { Rollout, Expansion, Signature };

Engine parse_engine(const std::string& name);
std::string engine_name(Engine e);

struct SimConfig {
  double t = 1.0;
  int steps = 4096;
  long long trials = 1;
  std::uint64_t seed = 0;
  Engine engine = Engine::Rollout;
  int threads = 1;
};

void validate_config(const SimConfig& config);

struct BrownianDriver {
  double t = 0.0;
  std::vector<double> times;
  /// Column k is the increment over [times[k], times[k+1]].
  Eigen::MatrixXd increments;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  int m = 0;

  int steps() const { return static_cast<int>(increments.cols()); }
};

/// Uniform partition of [0, t] with N(0, dt I) increments from stream (seed, stream).
BrownianDriver sample_driver(const SimConfig& config, int m, int n, std::uint64_t stream);

/// Zeroes W-coordinates with index >= ell.
BrownianDriver project_driver(const BrownianDriver& driver, int ell);

struct RolloutResult {
  Element endpoint;
  /// g at every partition time including 0, when requested.
  std::vector<Element> path;
};

RolloutResult rollout(const GroupLaw& law, const BrownianDriver& driver, bool record_path = false);
RolloutResult rollout(const ExtensionSpec& spec, const BrownianDriver& driver,
                      bool record_path = false);

/// Exact log-signature of the piecewise-linear driver through the expansion operators.
class SignatureEvaluator {
 public:
  explicit SignatureEvaluator(const ExtensionSpec& spec);
  Element evaluate(const BrownianDriver& driver) const;

 private:
  ExtensionSpec spec_;
  std::vector<DenseTensor> ops_;  // index n-2 holds the order-n operator
};

Element signature_eval(const ExtensionSpec& spec, const BrownianDriver& driver);

/// Iterated Ito integral expansion of group Brownian motion.
class ExpansionEngine {
 public:
  explicit ExpansionEngine(const ExtensionSpec& spec);

  Element evaluate(const BrownianDriver& driver) const;

  struct Term {
    int n = 0;
    ItoWord alpha;
    Rational weight;
    Polynomial f;       // in (s_1..s_p, t)
    DenseTensor f_hat;  // summed over sigma with c_n^sigma
  };
  const std::vector<Term>& terms() const { return terms_; }

 private:
  ExtensionSpec spec_;
  std::vector<Term> terms_;
};

Element expansion_endpoint(const ExtensionSpec& spec, const BrownianDriver& driver);

/// Endpoint by the engine in config.engine; each engine built once per call.
class EndpointSampler {
 public:
  EndpointSampler(const ExtensionSpec& spec, Engine engine);
  Element endpoint(const BrownianDriver& driver) const;

 private:
  Engine engine_;
  GroupLaw law_;
  std::optional<SignatureEvaluator> sig_;
  std::optional<ExpansionEngine> exp_;
};

/// Endpoints for trials 0..trials-1 (columns), driver stream = trial index.
/// Deterministic for every thread count.
Eigen::MatrixXd sample_endpoints(const ExtensionSpec& spec, const SimConfig& config);

/// Runs fn(i) for i in [0, count) on up to `threads` workers.
void parallel_for(long long count, int threads, const std::function<void(long long)>& fn);

}  // namespace nilflow
