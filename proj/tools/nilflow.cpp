// nilflow: command-line front end for specs, geometry, simulation and Monte Carlo checks.
//
// Exit codes: 0 success or pass, 1 test failure, 2 usage error, 3 invalid spec.

#include "nilflow/algebra.hpp"
#include "nilflow/group.hpp"
#include "nilflow/heatkernel.hpp"
#include "nilflow/io.hpp"
#include "nilflow/stochastic.hpp"
#include "nilflow/tensor_norms.hpp"
#include "nilflow/version.hpp"
#include "nilflow/zoo.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using nlohmann::json;
using namespace nilflow;

namespace {

enum ExitCode { kOk = 0, kTestFailure = 1, kUsage = 2, kInvalidSpec = 3 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string spec_path;
  std::string out;
  double t = 1.0;
  int steps = 256;
  long long trials = 10000;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string engine = "rollout";
  double tol = 1e-9;
  // zoo
  std::string model;
  int m = 2;
  int grid = 3;
  // multiply / distance / verify
  std::string g_csv, h_csv, y_csv;
  std::string test;
  double p = 2.0;
  std::string ells;
  int restarts = 32;
};

int default_threads() {
  if (const char* env = std::getenv("NILFLOW_THREADS")) {
    try {
      return std::max(1, std::stoi(env));
    } catch (const std::exception&) {
      throw UsageError("NILFLOW_THREADS must be a positive integer");
    }
  }
  return 1;
}

ExtensionSpec load_valid_spec(const std::string& path, double tol) {
  const ExtensionSpec spec = read_spec_file(path);
  const ValidationReport rep = validate_extension(spec, tol);
  if (!rep.passed()) {
    std::ostringstream msg;
    msg << "spec failed validation:";
    for (const auto& c : rep.checks)
      if (!c.passed) msg << "\n  " << c.name << ": max violation " << c.max_violation;
    throw SpecError(msg.str());
  }
  return spec;
}

std::vector<int> parse_int_csv(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw UsageError("expected a comma-separated integer list, got '" + text + "'");
    }
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  os << text;
}

/// Sends a document to --out (plus a manifest) or to stdout.
class Emitter {
 public:
  Emitter(std::string command, const Options& opt) : command_(std::move(command)), opt_(opt) {}

  void set_spec(const ExtensionSpec& spec) { spec_hash_ = spec_hash(spec); }
  void set_config(json config) { config_ = std::move(config); }

  std::string manifest_path() const { return opt_.out + ".manifest.json"; }
  const std::string& spec_hash_value() const { return spec_hash_; }

  void emit(const std::string& body) const {
    if (opt_.out.empty()) {
      std::cout << body;
      return;
    }
    write_text(opt_.out, body);
    json man{{"command", command_},
             {"spec_hash", spec_hash_},
             {"seed", opt_.seed},
             {"config", config_},
             {"tool_version", kVersion},
             {"wall_time_s", std::chrono::duration<double>(Clock::now() - start_).count()},
             {"outputs", json::array({opt_.out})}};
    write_text(manifest_path(), man.dump(2) + "\n");
  }

  void emit_json(json doc) const {
    if (!opt_.out.empty()) {
      doc["manifest"] = manifest_path();
      if (!spec_hash_.empty()) doc["spec_hash"] = spec_hash_;
    }
    emit(doc.dump(2) + "\n");
  }

 private:
  using Clock = std::chrono::steady_clock;
  std::string command_;
  const Options& opt_;
  std::string spec_hash_;
  json config_ = json::object();
  Clock::time_point start_ = Clock::now();
};

SimConfig sim_config(const Options& opt) {
  SimConfig cfg;
  cfg.t = opt.t;
  cfg.steps = opt.steps;
  cfg.trials = opt.trials;
  cfg.seed = opt.seed;
  cfg.threads = opt.threads;
  cfg.engine = parse_engine(opt.engine);
  return cfg;
}

json sim_config_json(const SimConfig& cfg) {
  return {{"t", cfg.t},
          {"steps", cfg.steps},
          {"trials", cfg.trials},
          {"seed", cfg.seed},
          {"engine", engine_name(cfg.engine)}};
}

// ---------------------------------------------------------------- commands

int cmd_zoo(const Options& opt) {
  const ModelDescriptor md = build_named_model(opt.model, opt.m, opt.grid);
  Emitter em("zoo", opt);
  em.set_spec(md.spec);
  em.set_config({{"model", opt.model}, {"m", opt.m}, {"grid", opt.grid}});
  em.emit(spec_to_json(md.spec).dump(2) + "\n");
  return kOk;
}

int cmd_validate(const Options& opt) {
  const ExtensionSpec spec = read_spec_file(opt.spec_path);
  const ValidationReport rep = validate_extension(spec, opt.tol);
  Emitter em("validate", opt);
  em.set_spec(spec);
  em.set_config({{"tol", opt.tol}});
  em.emit_json(validation_to_json(rep));
  if (!rep.passed()) {
    for (const auto& c : rep.checks)
      if (!c.passed) std::cerr << "check failed: " << c.name << " (max violation " << c.max_violation << ")\n";
    return kInvalidSpec;
  }
  return kOk;
}

int cmd_norms(const Options& opt) {
  const ExtensionSpec spec = load_valid_spec(opt.spec_path, opt.tol);
  const NormReport rep = check_norm_inequalities(spec, opt.restarts);
  Emitter em("norms", opt);
  em.set_spec(spec);
  em.set_config({{"restarts", opt.restarts}});
  em.emit_json(norm_report_to_json(rep));
  return rep.passed() ? kOk : kTestFailure;
}

int cmd_multiply(const Options& opt) {
  const ExtensionSpec spec = load_valid_spec(opt.spec_path, opt.tol);
  const Element g = parse_element_csv(opt.g_csv, spec.m(), spec.n());
  const Element h = parse_element_csv(opt.h_csv, spec.m(), spec.n());
  Emitter em("multiply", opt);
  em.set_spec(spec);
  em.set_config({{"g", opt.g_csv}, {"h", opt.h_csv}});
  em.emit(element_to_csv(bchd_multiply(spec, g, h)) + "\n");
  return kOk;
}

int cmd_ricci(const Options& opt) {
  const ExtensionSpec spec = load_valid_spec(opt.spec_path, opt.tol);
  const RicciResult r = ricci_form(spec);
  json form = json::array();
  for (int i = 0; i < r.form.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < r.form.cols(); ++j) row.push_back(r.form(i, j));
    form.push_back(std::move(row));
  }
  Emitter em("ricci", opt);
  em.set_spec(spec);
  em.emit_json({{"form", form},
                {"eigenvalues", std::vector<double>(r.eigenvalues.data(),
                                                    r.eigenvalues.data() + r.eigenvalues.size())},
                {"K_P", r.k_p},
                {"K_estimate", r.k_estimate}});
  return kOk;
}

int cmd_distance(const Options& opt) {
  const ExtensionSpec spec = load_valid_spec(opt.spec_path, opt.tol);
  const Element y = parse_element_csv(opt.y_csv, spec.m(), spec.n());
  const DistanceBounds d = distance_bounds(spec, y);
  Emitter em("distance", opt);
  em.set_spec(spec);
  em.set_config({{"y", opt.y_csv}});
  em.emit_json({{"lower", d.lower},
                {"upper", d.upper},
                {"straight_line", d.straight_line},
                {"epsilon0", d.epsilon0},
                {"kappa", d.kappa},
                {"bracket_bound", d.bracket_bound},
                {"evaluations", d.evaluations}});
  return kOk;
}

int cmd_simulate(const Options& opt) {
  const ExtensionSpec spec = load_valid_spec(opt.spec_path, opt.tol);
  const SimConfig cfg = sim_config(opt);
  validate_config(cfg);
  const Eigen::MatrixXd ends = sample_endpoints(spec, cfg);
  Emitter em("simulate", opt);
  em.set_spec(spec);
  em.set_config(sim_config_json(cfg));
  std::ostringstream os;
  os << "# nilflow " << kVersion << " spec_hash=" << em.spec_hash_value();
  if (!opt.out.empty()) os << " manifest=" << em.manifest_path();
  os << "\ntrial";
  for (int i = 0; i < spec.m(); ++i) os << ",w" << i;
  for (int c = 0; c < spec.n(); ++c) os << ",v" << c;
  os << "\n";
  for (long long k = 0; k < ends.cols(); ++k) {
    os << k;
    for (int i = 0; i < ends.rows(); ++i) os << "," << format_double(ends(i, k));
    os << "\n";
  }
  em.emit(os.str());
  return kOk;
}

int cmd_verify(const Options& opt) {
  const ExtensionSpec spec = load_valid_spec(opt.spec_path, opt.tol);
  const SimConfig cfg = sim_config(opt);
  MCReport rep;
  json extra = json::object();
  if (opt.test == "inversion") {
    rep = inversion_invariance_test(spec, default_suite(spec.m(), spec.n(), Squash::Tanh), cfg);
  } else if (opt.test == "logsob") {
    rep = log_sobolev_test(spec, default_suite(spec.m(), spec.n(), Squash::Tanh), cfg);
  } else if (opt.test == "quasi") {
    Element h = opt.h_csv.empty() ? basis_element(spec.m(), spec.n(), 0)
                                  : parse_element_csv(opt.h_csv, spec.m(), spec.n());
    rep = quasi_invariance_test(spec, h, opt.p,
                                default_suite(spec.m(), spec.n(), Squash::TanhSquared), cfg);
  } else if (opt.test == "convergence") {
    std::vector<int> ells;
    if (!opt.ells.empty()) {
      ells = parse_int_csv(opt.ells);
    } else {
      for (int l = 1; l < spec.m(); l *= 2) ells.push_back(l);
      if (ells.size() < 2) throw UsageError("convergence needs --ells for m < 3");
    }
    rep = projection_convergence_study(spec, ells, cfg);
  } else {
    throw UsageError("unknown test '" + opt.test + "'");
  }
  Emitter em("verify", opt);
  em.set_spec(spec);
  json config = sim_config_json(cfg);
  config["test"] = opt.test;
  if (opt.test == "quasi") config["p"] = opt.p;
  em.set_config(config);
  em.emit_json(report_to_json(rep));
  std::cerr << rep.test << ": " << verdict_name(rep.verdict) << "\n";
  return rep.failed() ? kTestFailure : kOk;
}

void add_sim_flags(CLI::App* sub, Options& opt) {
  sub->add_option("--t", opt.t, "time horizon")->capture_default_str();
  sub->add_option("--steps", opt.steps, "partition steps")->capture_default_str();
  sub->add_option("--trials", opt.trials, "number of sample paths")->capture_default_str();
  sub->add_option("--seed", opt.seed, "random seed")->capture_default_str();
  sub->add_option("--threads", opt.threads, "worker threads (default $NILFLOW_THREADS or 1)");
  sub->add_option("--engine", opt.engine, "rollout | expansion | signature")
      ->check(CLI::IsMember({"rollout", "expansion", "signature"}))
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  CLI::App app{"nilflow: nilpotent extension groups and their heat kernel measures"};
  app.set_help_flag("--help", "print this help and exit");
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  auto add_spec = [&](CLI::App* sub) {
    sub->add_option("spec", opt.spec_path, "spec JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "output path (stdout if omitted)");
    sub->add_option("--tol", opt.tol, "validation tolerance")->capture_default_str();
  };

  auto* zoo = app.add_subcommand("zoo", "emit a named example spec");
  zoo->add_option("--model", opt.model, "heisenberg | beta | beta5 | pathspace | step2 | step3 | abelian")
      ->required();
  zoo->add_option("--m", opt.m, "W dimension for heisenberg, step2, step3, abelian")
      ->capture_default_str();
  zoo->add_option("--grid", opt.grid, "grid size for pathspace")->capture_default_str();
  zoo->add_option("--out", opt.out, "output path (stdout if omitted)");

  auto* validate = app.add_subcommand("validate", "check the extension identities");
  add_spec(validate);

  auto* norms = app.add_subcommand("norms", "norm estimates and inequalities");
  add_spec(norms);
  norms->add_option("--restarts", opt.restarts, "power-iteration restarts")->capture_default_str();

  auto* multiply = app.add_subcommand("multiply", "group product g . h");
  add_spec(multiply);
  multiply->add_option("--g", opt.g_csv, "left factor, w-part then v-part")->required();
  multiply->add_option("--h", opt.h_csv, "right factor")->required();

  auto* ricci = app.add_subcommand("ricci", "Ricci form and its lower constant");
  add_spec(ricci);

  auto* distance = app.add_subcommand("distance", "bounds on the distance from e to y");
  add_spec(distance);
  distance->add_option("--y", opt.y_csv, "target element")->required();

  auto* simulate = app.add_subcommand("simulate", "sample heat kernel endpoints to CSV");
  add_spec(simulate);
  add_sim_flags(simulate, opt);

  auto* verify = app.add_subcommand("verify", "Monte Carlo functional inequality check");
  add_spec(verify);
  add_sim_flags(verify, opt);
  verify->add_option("--test", opt.test, "inversion | logsob | quasi | convergence")
      ->required()
      ->check(CLI::IsMember({"inversion", "logsob", "quasi", "convergence"}));
  verify->add_option("--h", opt.h_csv, "translation for quasi (default: first basis vector)");
  verify->add_option("--p", opt.p, "Holder exponent for quasi")->capture_default_str();
  verify->add_option("--ells", opt.ells, "projection levels for convergence, e.g. 2,4,8");

  try {
    opt.threads = default_threads();
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (*zoo) return cmd_zoo(opt);
    if (*validate) return cmd_validate(opt);
    if (*norms) return cmd_norms(opt);
    if (*multiply) return cmd_multiply(opt);
    if (*ricci) return cmd_ricci(opt);
    if (*distance) return cmd_distance(opt);
    if (*simulate) return cmd_simulate(opt);
    if (*verify) return cmd_verify(opt);
  } catch (const SpecError& e) {
    std::cerr << "invalid spec: " << e.what() << "\n";
    return kInvalidSpec;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ShapeError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const DomainError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
