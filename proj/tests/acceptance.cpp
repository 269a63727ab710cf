// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cstdio>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "bmlandscape/bmlandscape.hpp"
#include "bmlandscape/cli.hpp"
#include "oracles.hpp"

using namespace bml;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

int failures = 0;

void report(int id, const std::string& title, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::printf("[%s] %2d %s: %s\n", pass ? "PASS" : "FAIL", id, title.c_str(), detail.c_str());
  std::fflush(stdout);
}

struct Triple {
  int n, r, r_star;
};

std::vector<Triple> sweep(int n_max) {
  std::vector<Triple> out;
  for (int n = 2; n <= n_max; ++n)
    for (int r = 1; r < n; ++r)
      for (int rs = 1; rs <= r; ++rs) out.push_back({n, r, rs});
  return out;
}

void criterion1() {
  const auto t0 = Clock::now();
  const auto inst = build_counterexample(5, 3, 2, BasisMode::Standard, 0);
  const auto v = verify_spurious(inst, 1e-9);
  const double secs = seconds_since(t0);
  std::string detail;
  bool pass = secs < 1.0;
  for (const auto& c : v.checks) {
    pass = pass && c.pass;
    detail += c.name + "=" + fmt(c.value) + (c.pass ? "" : " (expected " + fmt(c.expected) + ")") + "; ";
  }
  detail += "runtime " + fmt(secs) + " s";
  report(1, "counterexample validity", pass, detail);
}

void criterion2() {
  const auto t0 = Clock::now();
  const auto inst = build_counterexample(5, 3, 2, BasisMode::Standard, 0);
  TrialConfig cfg;
  cfg.threads = std::max(1u, std::thread::hardware_concurrency());
  cfg.search_rank = 3;
  const auto r3 = run_trials(inst, cfg);
  cfg.search_rank = 4;
  const auto r4 = run_trials(inst, cfg);
  const double secs = seconds_since(t0);
  const bool pass = r3.stuck >= 85 && r4.successes >= 98 && secs < 60.0;
  report(2, "escape experiment", pass,
         "rank 3: " + std::to_string(r3.stuck) + " stuck / " + std::to_string(r3.successes) +
             " success / " + std::to_string(r3.undetermined) + " undetermined (need >= 85 stuck); " +
             "rank 4: " + std::to_string(r4.successes) + " success (need >= 98); runtime " + fmt(secs) + " s");
}

void criterion3() {
  double worst_kappa = 0.0, worst_res = 0.0;
  bool all_feasible = true;
  const auto cases = sweep(8);
  for (const auto& t : cases) {
    const auto inst = build_counterexample(t.n, t.r, t.r_star, BasisMode::Standard, 0);
    const double kappa = counterexample_kappa(inst.q);
    const auto ev = kappa_lb_closed_form(alpha_beta(inst.x_spur, inst.z));
    worst_kappa = std::max(worst_kappa, std::abs(ev.kappa_lb - kappa));
    const auto cert = assemble(inst.x_spur, inst.z, CertificateKind::Upper);
    const auto rep = verify_ub(cert, kappa, certificate_hessian(inst), 1e-8);
    all_feasible = all_feasible && rep.feasible();
    for (const auto& r : rep.residuals) worst_res = std::max(worst_res, r.is_norm ? r.value : -r.value);
  }
  report(3, "sandwich tightness", worst_kappa <= 1e-9 && all_feasible,
         std::to_string(cases.size()) + " shapes; max |kappa_lb - (1+2 sqrt q)| = " + fmt(worst_kappa) +
             "; certificate residual worst " + fmt(worst_res) + (all_feasible ? "" : " (infeasible case found)"));
}

void criterion4() {
  double worst = 0.0;
  std::size_t count = 0;
  const auto cases = sweep(8);
  for (const auto& t : cases) {
    const auto inst = build_counterexample(t.n, t.r, t.r_star, BasisMode::Standard, 0);
    const auto eqs = eigen_equations(inst, certificate_hessian(inst));
    count += eqs.size();
    for (const auto& e : eqs) worst = std::max(worst, e.residual);
  }
  report(4, "eigenvalue equations", worst <= 1e-9,
         std::to_string(count) + " equations over " + std::to_string(cases.size()) +
             " shapes; max residual " + fmt(worst));
}

void criterion5() {
  Rng rng(5);
  double worst = 0.0;
  bool exact = true;
  for (int k = 0; k < 100; ++k) {
    const int n = oracle::uniform_int(rng, 1, 5);
    const int r = oracle::uniform_int(rng, 1, std::min(3, n));
    Vector s(n), d(r);
    for (int i = 0; i < n; ++i) s(i) = 3.0 * rng.uniform();
    for (int i = 0; i < r; ++i) d(i) = 2.0 * rng.uniform();
    std::sort(s.data(), s.data() + n, std::greater<>());
    std::sort(d.data(), d.data() + r);
    const EYProblem p(s, d);
    worst = std::max(worst, std::abs(solve(p).value - brute_force(p)));

    const EYProblem p0(s, Vector::Zero(r));
    double tail = 0.0;
    for (int i = r; i < n; ++i) tail += s(i) * s(i);
    exact = exact && solve(p0).value == tail;
    worst = std::max(worst, std::abs(brute_force(p0) - tail));
  }
  report(5, "regularized Eckart-Young", worst <= 1e-10 && exact,
         "100 instances; max |solve - brute_force| = " + fmt(worst) +
             (exact ? "; B = 0 values exact" : "; B = 0 value mismatch"));
}

void criterion6() {
  Rng rng(6);
  double worst = 1.0;
  int held = 0;
  for (int k = 0; k < 1000; ++k) {
    const int r = oracle::uniform_int(rng, 1, 4);
    const int n = oracle::uniform_int(rng, r + 1, 8);
    const int rs = oracle::uniform_int(rng, 1, r);
    const Matrix x = rng.normal_matrix(n, r);
    const Matrix z = rng.normal_matrix(n, rs);
    const auto chk = valid_inequality(alpha_beta(x, z), r, rs);
    worst = std::min(worst, chk.slack);
    held += chk.holds ? 1 : 0;
  }
  report(6, "valid inequality", held == 1000,
         std::to_string(held) + "/1000 hold; min slack " + fmt(worst));
}

void criterion7() {
  double worst_grid = 0.0;
  for (int i = 1; i <= 50; ++i) {
    for (int j = 1; j <= 50; ++j) {
      const double a = i / 51.0;
      const double b = 1.2 * j / 51.0;
      AlphaBeta ab;
      ab.alpha = a;
      ab.beta = b;
      const double cf = kappa_lb_closed_form(ab).kappa_lb;
      worst_grid = std::max(worst_grid, std::abs(cf - oracle::tradeoff_grid_max(a, b)));
    }
  }
  double worst_minab = 0.0;
  const std::vector<std::pair<int, int>> ranks{{1, 1}, {2, 1}, {3, 2}, {4, 1}, {5, 3}};
  for (const auto& [r, rs] : ranks) {
    worst_minab = std::max(worst_minab, std::abs(minab(r, rs) - oracle::minab_grid(r, rs)));
  }
  const double k1 = kappa_lb_closed_form(rank1_invariants(1.0 / std::sqrt(2.0), 1.0)).kappa_lb;
  const bool pass = worst_grid <= 1e-4 && worst_minab <= 1e-3 && std::abs(k1 - 3.0) <= 1e-9;
  report(7, "closed form vs grid", pass,
         "tradeoff 50x50 max diff " + fmt(worst_grid) + "; minab max diff " + fmt(worst_minab) +
             "; rank-1 worst case " + fmt(k1));
}

void criterion8() {
  Rng rng(8);
  double literal = 0.0, restricted = 0.0, corrected = 0.0;
  for (int k = 0; k < 100; ++k) {
    const int r = oracle::uniform_int(rng, 1, 4);
    const int n = oracle::uniform_int(rng, r, 8);
    const auto res = oracle::kron_residuals(rng.normal_matrix(n, r));
    literal = std::max(literal, res.literal);
    restricted = std::max(restricted, res.symmetric);
    corrected = std::max(corrected, res.corrected);
  }
  int numcard_ok = 0;
  for (int k = 0; k < 1000;) {
    const int n = oracle::uniform_int(rng, 1, 8);
    Vector x(n);
    for (int i = 0; i < n; ++i) x(i) = 2.0 * rng.uniform();
    if (x.squaredNorm() == 0.0 || x.sum() > x.squaredNorm()) continue;
    const auto v = numcard_check(x);
    numcard_ok += v.lhs >= v.rhs - 1e-12 ? 1 : 0;
    ++k;
  }
  int keyclaim_ok = 0;
  for (int k = 0; k < 1000; ++k) {
    const int n = oracle::uniform_int(rng, 1, 6);
    const double s_lb = 2.0 * rng.uniform();
    Vector s(n), d(n);
    for (int i = 0; i < n; ++i) {
      s(i) = s_lb + 2.0 * rng.uniform();
      d(i) = 3.0 * rng.uniform();
    }
    keyclaim_ok += keyclaim_lb(s, d, s_lb) <= keyclaim_value(s, d) + 1e-12 ? 1 : 0;
  }
  int coercive_ok = 0;
  for (int k = 0; k < 100; ++k) {
    const int n = oracle::uniform_int(rng, 2, 5);
    const int r = oracle::uniform_int(rng, 1, n);
    const int rs = oracle::uniform_int(rng, 1, n);
    const auto obj = oracle::random_objective(rng, n, rs);
    const Matrix x = (0.2 + 3.0 * rng.uniform()) * rng.normal_matrix(n, r);
    const auto b = smoothness_bounds(obj);
    const double lhs = (f_grad(obj, x).cwiseProduct(x)).sum();
    const double xx = x.squaredNorm();
    const double rhs = 2.0 * xx * (b.mu / r * xx - b.L * obj.minimizer().matrix().norm());
    coercive_ok += lhs >= rhs - 1e-9 * std::max(1.0, std::abs(rhs)) ? 1 : 0;
  }
  const bool pass = literal <= 1e-8 && numcard_ok == 1000 && keyclaim_ok == 1000 && coercive_ok == 100;
  report(8, "structural identities", pass,
         "Kronecker literal residual max " + fmt(literal) + " (on symmetric matrices " + fmt(restricted) +
             ", with antisymmetric part " + fmt(corrected) + "); numcard " + std::to_string(numcard_ok) +
             "/1000; keyclaim " + std::to_string(keyclaim_ok) + "/1000; coercivity " +
             std::to_string(coercive_ok) + "/100");
}

void criterion9() {
  Rng rng(9);
  double worst_grad = 0.0, worst_hess = 0.0;
  for (int k = 0; k < 100; ++k) {
    const int n = oracle::uniform_int(rng, 2, 5);
    const int r = oracle::uniform_int(rng, 1, 4);
    const int rs = oracle::uniform_int(rng, 1, n);
    const auto obj = oracle::random_objective(rng, n, rs);
    const Matrix x = rng.normal_matrix(n, r);
    const Matrix v = rng.normal_matrix(n, r);
    const Matrix g = f_grad(obj, x);
    worst_grad = std::max(worst_grad, (g - oracle::fd_grad(obj, x)).norm() / std::max(1.0, g.norm()));
    const double q = f_hess_quadform(obj, x, v);
    worst_hess = std::max(worst_hess, std::abs(q - oracle::fd_quadform(obj, x, v)) / std::max(1.0, std::abs(q)));
  }
  report(9, "finite-difference consistency", worst_grad <= 1e-5 && worst_hess <= 1e-4,
         "gradient rel err max " + fmt(worst_grad) + "; Hessian quadform rel err max " + fmt(worst_hess));
}

int cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"bml"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
}

void criterion10() {
  const std::string inst = oracle::temp_path("acc_instance.json");
  const std::string csv = oracle::temp_path("acc_trials.csv");
  const std::string sdpa = oracle::temp_path("acc_cert.dat-s");
  const int nthreads = static_cast<int>(std::max(2u, std::thread::hardware_concurrency()));
  int rc = cli({"build", "--n", "5", "--r", "3", "--rstar", "2", "--out", inst});
  const auto trials = [&](int threads) {
    rc |= cli({"trials", "--instance", inst, "--search-rank", "4", "--seed", "42", "--threads",
               std::to_string(threads), "--csv", csv, "--summary", oracle::temp_path("acc_summary.json")});
    return io::read_file(csv);
  };
  const auto export_lb = [&] {
    rc |= cli({"export", "--instance", inst, "--which", "lb", "--out", sdpa});
    return io::read_file(sdpa);
  };
  const std::string csv1 = trials(1);
  const std::string csvn = trials(nthreads);
  const std::string sdpa1 = export_lb();
  const std::string sdpa2 = export_lb();
  const bool csv_same = rc == 0 && csv1 == csvn;
  const bool sdpa_same = rc == 0 && sdpa1 == sdpa2;
  report(10, "determinism", csv_same && sdpa_same,
         std::string("trials CSV 1 vs ") + std::to_string(nthreads) + " threads " +
             (csv_same ? "identical" : "differ") + " (" + std::to_string(csv1.size()) + " bytes); SDPA re-export " +
             (sdpa_same ? "identical" : "differs") + " (" + std::to_string(sdpa1.size()) + " bytes)");
}

}  // namespace

int main() {
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  criterion10();
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
