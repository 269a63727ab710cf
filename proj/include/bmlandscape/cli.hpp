#ifndef BMLANDSCAPE_CLI_HPP
#define BMLANDSCAPE_CLI_HPP

// Batch front end. Exit codes: 0 ok, 1 a verification ran and failed,
// 2 usage or input error.

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "bmlandscape/bounds.hpp"
#include "bmlandscape/certificates.hpp"
#include "bmlandscape/counterexample.hpp"
#include "bmlandscape/dynamics.hpp"
#include "bmlandscape/eckart_young.hpp"
#include "bmlandscape/io.hpp"

#ifndef BML_VERSION
#define BML_VERSION "0.1.0"
#endif

namespace bml::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitVerificationFailed = 1;
inline constexpr int kExitUsage = 2;

inline constexpr const char* kThreadsEnv = "BML_THREADS";

inline std::optional<std::string> manifest_timestamp() {
  const char* s = std::getenv("SOURCE_DATE_EPOCH");
  if (s == nullptr || *s == '\0') return std::nullopt;
  return std::string(s);
}

struct RunManifest {
  std::string subcommand;
  io::Json parameters = io::Json::object();
  io::Json inputs = io::Json::object();
  io::Json outputs = io::Json::object();
  std::string version = BML_VERSION;
  /// SOURCE_DATE_EPOCH when set, otherwise null.
  std::optional<std::string> timestamp = manifest_timestamp();
};

inline io::Json to_json(const RunManifest& m) {
  io::Json j{{"tool", "bml"},
             {"version", m.version},
             {"subcommand", m.subcommand},
             {"parameters", m.parameters},
             {"inputs", m.inputs},
             {"outputs", m.outputs}};
  j["timestamp"] = m.timestamp ? io::Json(*m.timestamp) : io::Json(nullptr);
  return j;
}

inline int default_threads() {
  if (const char* s = std::getenv(kThreadsEnv)) {
    char* end = nullptr;
    const long v = std::strtol(s, &end, 10);
    if (end != s && *end == '\0' && v >= 1 && v <= 1024) return static_cast<int>(v);
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Parses "3,2,1" into a vector; rejects empty fields and trailing junk.
inline Vector parse_list(const std::string& text, const std::string& what) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument(what + ": cannot parse \"" + item + "\" as a number");
    }
    if (used != item.size()) throw std::invalid_argument(what + ": trailing characters in \"" + item + "\"");
    vals.push_back(v);
  }
  if (vals.empty() || (!text.empty() && text.back() == ',')) {
    throw std::invalid_argument(what + ": expected a comma-separated list of numbers");
  }
  return Eigen::Map<Vector>(vals.data(), static_cast<Index>(vals.size()));
}

namespace detail {

inline void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
  } else {
    io::write_file(path, content);
  }
}

inline std::string out_name(const std::string& path) { return path.empty() ? "-" : path; }

inline CounterexampleInstance load_instance(const std::string& path) {
  return instance_from_json(io::parse(io::read_file(path), path), path);
}

inline io::Json with_manifest(const RunManifest& m, const char* key, io::Json body) {
  return io::Json{{"manifest", to_json(m)}, {key, std::move(body)}};
}

}  // namespace detail

struct BuildArgs {
  int n = 0, r = 0, r_star = 0;
  std::string basis = "standard";
  std::uint64_t seed = 0;
  std::string out;
};

inline int cmd_build(const BuildArgs& a, std::ostream& out) {
  const BasisMode mode = a.basis == "random" ? BasisMode::Random : BasisMode::Standard;
  const auto inst = build_counterexample(a.n, a.r, a.r_star, mode, a.seed);
  RunManifest m{"build"};
  m.parameters = {{"n", a.n}, {"r", a.r}, {"r_star", a.r_star}, {"basis", a.basis}, {"seed", a.seed}};
  m.outputs = {{"instance", detail::out_name(a.out)}};
  io::Json j = to_json(inst);
  j["manifest"] = to_json(m);
  detail::emit(a.out, io::dump(j), out);
  return kExitOk;
}

struct VerifyArgs {
  std::string instance;
  double tol = 1e-9;
  std::string out;
};

inline int cmd_verify(const VerifyArgs& a, std::ostream& out) {
  const auto inst = detail::load_instance(a.instance);
  const auto v = verify_spurious(inst, a.tol);
  RunManifest m{"verify"};
  m.parameters = {{"tol", a.tol}};
  m.inputs = {{"instance", a.instance}};
  m.outputs = {{"report", detail::out_name(a.out)}};
  detail::emit(a.out, io::dump(detail::with_manifest(m, "verification", to_json(v))), out);
  return v.passed() ? kExitOk : kExitVerificationFailed;
}

struct BoundsArgs {
  std::string instance;
  std::optional<double> alpha, beta;
  std::string out;
};

inline int cmd_bounds(const BoundsArgs& a, std::ostream& out) {
  RunManifest m{"bounds"};
  m.outputs = {{"report", detail::out_name(a.out)}};
  io::Json body;
  if (!a.instance.empty()) {
    if (a.alpha || a.beta) throw std::invalid_argument("bounds: give either --instance or --alpha/--beta");
    const auto inst = detail::load_instance(a.instance);
    m.inputs = {{"instance", a.instance}};
    const AlphaBeta ab = alpha_beta(inst.x_spur, inst.z);
    const auto ineq = valid_inequality(ab, inst.r, inst.r_star);
    const auto th = thresholds(inst.r, inst.r_star);
    body = to_json(kappa_lb_closed_form(ab));
    body["valid_inequality"] = {{"holds", ineq.holds}, {"slack", ineq.slack}};
    body["thresholds"] = {{"kappa_star_lower", th.lower}, {"kappa_star_upper", th.upper}};
    body["r"] = inst.r;
    body["r_star"] = inst.r_star;
  } else {
    if (!a.alpha || !a.beta) throw std::invalid_argument("bounds: need --instance, or both --alpha and --beta");
    if (!(*a.alpha >= 0.0 && *a.alpha <= 1.0)) throw std::invalid_argument("bounds: alpha must lie in [0, 1]");
    if (!(*a.beta >= 0.0)) throw std::invalid_argument("bounds: beta must be >= 0");
    m.parameters = {{"alpha", *a.alpha}, {"beta", *a.beta}};
    AlphaBeta ab;
    ab.alpha = *a.alpha;
    ab.beta = *a.beta;
    ab.degenerate = ab.alpha == 0.0;
    body = to_json(kappa_lb_closed_form(ab));
  }
  detail::emit(a.out, io::dump(detail::with_manifest(m, "bounds", std::move(body))), out);
  return kExitOk;
}

struct TrialsArgs {
  std::string instance;
  TrialConfig cfg;
  std::string csv;
  std::string summary;
};

inline int cmd_trials(const TrialsArgs& a, std::ostream& out) {
  const auto inst = detail::load_instance(a.instance);
  const TrialReport rep = run_trials(inst, a.cfg);
  RunManifest m{"trials"};
  m.parameters = to_json(a.cfg);
  m.parameters["search_rank"] = rep.search_rank;
  m.parameters["rng"] = rep.rng;
  m.inputs = {{"instance", a.instance}};
  m.outputs = {{"csv", detail::out_name(a.csv)}};
  if (!a.summary.empty()) m.outputs["summary"] = a.summary;
  detail::emit(a.csv, "# " + io::dump(to_json(m), -1) + "\n" + to_csv(rep), out);
  if (!a.summary.empty()) {
    detail::emit(a.summary, io::dump(detail::with_manifest(m, "summary", summary_json(rep))), out);
  } else if (!a.csv.empty() && a.csv != "-") {
    out << io::dump(detail::with_manifest(m, "summary", summary_json(rep)));
  }
  return kExitOk;
}

struct EyArgs {
  std::string s, d;
  std::string out;
};

inline int cmd_ey(const EyArgs& a, std::ostream& out) {
  const EYProblem p(parse_list(a.s, "--s"), a.d.empty() ? Vector() : parse_list(a.d, "--d"));
  const EYSolution sol = solve(p);
  RunManifest m{"ey"};
  m.parameters = {{"s", io::vector_to_json(p.s())}, {"d", io::vector_to_json(p.d())}};
  m.outputs = {{"solution", detail::out_name(a.out)}};
  io::Json body = to_json(sol);
  body["first_order_residual"] = first_order_residual(p, sol.y_diag);
  detail::emit(a.out, io::dump(detail::with_manifest(m, "solution", std::move(body))), out);
  return kExitOk;
}

struct ExportArgs {
  std::string instance;
  std::string which = "ub";
  std::string out;
};

inline int cmd_export(const ExportArgs& a) {
  const auto inst = detail::load_instance(a.instance);
  const auto cert = assemble(inst.x_spur, inst.z, certificate_kind_from_string(a.which));
  RunManifest m{"export"};
  m.parameters = {{"which", a.which}};
  m.inputs = {{"instance", a.instance}};
  m.outputs = {{"sdpa", a.out}};
  SdpaProblem p = sdpa_program(cert);
  p.comments.push_back("* manifest " + io::dump(to_json(m), -1));
  io::write_file(a.out, to_sdpa_text(p));
  return kExitOk;
}

/// Full command line entry point; `out` receives results, `err` diagnostics.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Burer-Monteiro landscape toolkit: counterexamples, bounds, certificates, trials"};
  app.name("bml");
  app.set_version_flag("--version", BML_VERSION);
  app.require_subcommand(1);

  BuildArgs build;
  auto* sb = app.add_subcommand("build", "Construct the spurious-point counterexample instance");
  sb->add_option("--n", build.n, "Matrix order")->required();
  sb->add_option("--r", build.r, "Search rank")->required();
  sb->add_option("--rstar", build.r_star, "Rank of the ground truth")->required();
  sb->add_option("--basis", build.basis, "Orthonormal basis")->check(CLI::IsMember({"standard", "random"}));
  sb->add_option("--seed", build.seed, "Seed for --basis random");
  sb->add_option("--out", build.out, "Output file (default stdout)");

  VerifyArgs verify;
  auto* sv = app.add_subcommand("verify", "Check the spurious second-order point of an instance");
  sv->add_option("--instance", verify.instance, "Instance JSON")->required();
  sv->add_option("--tol", verify.tol, "Absolute tolerance")->check(CLI::PositiveNumber);
  sv->add_option("--out", verify.out, "Output file (default stdout)");

  BoundsArgs bounds;
  double alpha = 0.0, beta = 0.0;
  auto* sbo = app.add_subcommand("bounds", "Closed-form condition-number lower bound");
  sbo->add_option("--instance", bounds.instance, "Instance JSON");
  auto* oa = sbo->add_option("--alpha", alpha, "Invariant alpha");
  auto* ob = sbo->add_option("--beta", beta, "Invariant beta");
  sbo->add_option("--out", bounds.out, "Output file (default stdout)");

  TrialsArgs trials;
  trials.cfg.threads = default_threads();
  auto* st = app.add_subcommand("trials", "Nesterov descent from random starts near the spurious point");
  st->add_option("--instance", trials.instance, "Instance JSON")->required();
  st->add_option("--search-rank", trials.cfg.search_rank, "Search rank (default: instance r)");
  st->add_option("--seed", trials.cfg.master_seed, "Master seed");
  st->add_option("--trials", trials.cfg.trials, "Number of trials");
  st->add_option("--lr", trials.cfg.learning_rate, "Learning rate");
  st->add_option("--momentum", trials.cfg.momentum, "Momentum");
  st->add_option("--radius", trials.cfg.radius, "Sampling radius");
  st->add_option("--max-iters", trials.cfg.max_iters, "Iteration budget per trial");
  st->add_option("--success-tol", trials.cfg.success_tol, "f threshold for success");
  st->add_option("--stuck-tol", trials.cfg.stuck_tol, "f threshold for stuck");
  st->add_option("--threads", trials.cfg.threads, std::string("Worker threads (default $") + kThreadsEnv + " or all cores)");
  st->add_option("--csv", trials.csv, "Per-trial CSV (default stdout)");
  st->add_option("--summary", trials.summary, "Aggregate JSON");

  EyArgs ey;
  auto* se = app.add_subcommand("ey", "Regularized Eckart-Young solution for diagonal data");
  se->add_option("--s", ey.s, "Eigenvalues of A, descending, comma-separated")->required();
  se->add_option("--d", ey.d, "Eigenvalues of B, ascending, comma-separated")->required();
  se->add_option("--out", ey.out, "Output file (default stdout)");

  ExportArgs ex;
  auto* sx = app.add_subcommand("export", "Write the certificate program in SDPA sparse format");
  sx->add_option("--instance", ex.instance, "Instance JSON")->required();
  sx->add_option("--which", ex.which, "Program")->check(CLI::IsMember({"ub", "lb"}));
  sx->add_option("--out", ex.out, "Output .dat-s file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*sb) return cmd_build(build, out);
    if (*sv) return cmd_verify(verify, out);
    if (*sbo) {
      if (*oa) bounds.alpha = alpha;
      if (*ob) bounds.beta = beta;
      return cmd_bounds(bounds, out);
    }
    if (*st) return cmd_trials(trials, out);
    if (*se) return cmd_ey(ey, out);
    if (*sx) return cmd_export(ex);
  } catch (const io::FormatError& e) {
    err << "bml: input error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "bml: error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace bml::cli

#endif  // BMLANDSCAPE_CLI_HPP
