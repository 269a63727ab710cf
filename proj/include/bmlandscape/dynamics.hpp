#ifndef BMLANDSCAPE_DYNAMICS_HPP
#define BMLANDSCAPE_DYNAMICS_HPP

// Escape experiment: Nesterov-accelerated gradient descent started uniformly
// at random in a small Frobenius ball around a spurious point.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "bmlandscape/counterexample.hpp"
#include "bmlandscape/io.hpp"
#include "bmlandscape/objective.hpp"
#include "bmlandscape/rng.hpp"

namespace bml {

struct TrialConfig {
  /// 0 means the factor's own rank.
  int search_rank = 0;
  double learning_rate = 5e-3;
  double momentum = 0.9;
  double radius = 0.05;
  int max_iters = 20000;
  int trials = 100;
  std::uint64_t master_seed = 42;
  double success_tol = 1e-6;
  double stuck_tol = 0.1;
  int threads = 1;

  void validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("TrialConfig: learning_rate must be > 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) {
      throw std::invalid_argument("TrialConfig: momentum must lie in [0, 1)");
    }
    if (!(radius > 0.0)) throw std::invalid_argument("TrialConfig: radius must be > 0");
    if (max_iters < 0) throw std::invalid_argument("TrialConfig: max_iters must be >= 0");
    if (trials < 1) throw std::invalid_argument("TrialConfig: trials must be >= 1");
    if (!(success_tol >= 0.0 && stuck_tol > success_tol)) {
      throw std::invalid_argument("TrialConfig: need 0 <= success_tol < stuck_tol");
    }
    if (search_rank < 0) throw std::invalid_argument("TrialConfig: search_rank must be >= 0");
    if (threads < 1) throw std::invalid_argument("TrialConfig: threads must be >= 1");
  }
};

enum class Outcome { Success, Stuck, Undetermined };

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::Success: return "success";
    case Outcome::Stuck: return "stuck";
    default: return "undetermined";
  }
}

struct TrialRecord {
  int trial = 0;
  std::uint64_t seed = 0;
  Outcome outcome = Outcome::Undetermined;
  double final_f = 0.0;
  double final_grad_norm = 0.0;
  double dist_to_spur = 0.0;
  int iters = 0;
};

struct TrialReport {
  TrialConfig config;
  int search_rank = 0;
  std::string rng = kRngName;
  std::vector<TrialRecord> records;
  int successes = 0;
  int stuck = 0;
  int undetermined = 0;
};

/// V' = mom V - lr grad f(X),  X' = X + mom V' - lr grad f(X).
inline std::pair<FactorMatrix, FactorMatrix> nesterov_step(const QuadraticObjective& obj,
                                                           const FactorMatrix& x,
                                                           const FactorMatrix& v, double lr,
                                                           double mom) {
  if (x.rows() != v.rows() || x.cols() != v.cols()) {
    throw std::invalid_argument("nesterov_step: X and V differ in shape");
  }
  const FactorMatrix g = f_grad(obj, x);
  FactorMatrix v_next = mom * v - lr * g;
  FactorMatrix x_next = x + mom * v_next - lr * g;
  return {std::move(x_next), std::move(v_next)};
}

/// Uniform draw from the Frobenius ball of the given radius around center.
inline FactorMatrix sample_near(const FactorMatrix& center, double radius, std::uint64_t seed) {
  if (!(radius > 0.0)) throw std::invalid_argument("sample_near: radius must be > 0");
  Rng rng(seed);
  const auto dim = static_cast<double>(center.size());
  Matrix g;
  double norm = 0.0;
  do {
    g = rng.normal_matrix(center.rows(), center.cols());
    norm = g.norm();
  } while (norm == 0.0);
  const double rho = radius * std::pow(rng.uniform(), 1.0 / dim);
  return center + (rho / norm) * g;
}

/// Appends zero columns up to rank r.
inline FactorMatrix pad_columns(const FactorMatrix& x, Index r) {
  if (r < x.cols()) throw std::invalid_argument("pad_columns: target rank below current rank");
  FactorMatrix out = FactorMatrix::Zero(x.rows(), r);
  out.leftCols(x.cols()) = x;
  return out;
}

inline Outcome classify(double f, const TrialConfig& cfg) {
  if (f <= cfg.success_tol) return Outcome::Success;
  if (f >= cfg.stuck_tol) return Outcome::Stuck;
  return Outcome::Undetermined;
}

/// Runs one trajectory from x0 until f <= success_tol or max_iters steps.
inline TrialRecord run_trajectory(const QuadraticObjective& obj, FactorMatrix x0,
                                  const FactorMatrix& reference, const TrialConfig& cfg) {
  TrialRecord rec;
  FactorMatrix x = std::move(x0);
  FactorMatrix v = FactorMatrix::Zero(x.rows(), x.cols());
  double f = f_eval(obj, x);
  int it = 0;
  while (f > cfg.success_tol && it < cfg.max_iters) {
    auto [xn, vn] = nesterov_step(obj, x, v, cfg.learning_rate, cfg.momentum);
    x = std::move(xn);
    v = std::move(vn);
    ++it;
    f = f_eval(obj, x);
    if (!std::isfinite(f)) break;
  }
  rec.final_f = f;
  rec.final_grad_norm = f_grad(obj, x).norm();
  rec.dist_to_spur = (x - reference).norm();
  rec.iters = it;
  rec.outcome = classify(f, cfg);
  return rec;
}

/// Trials around `center` (padded to the search rank). Each trial owns the RNG
/// stream derive_seed(master_seed, trial); results do not depend on threads.
inline TrialReport run_trials(const QuadraticObjective& obj, const FactorMatrix& center,
                              const TrialConfig& cfg) {
  cfg.validate();
  const int rank = cfg.search_rank == 0 ? static_cast<int>(center.cols()) : cfg.search_rank;
  if (rank < center.cols()) {
    throw std::invalid_argument("run_trials: search_rank " + std::to_string(rank) +
                                " is below the spurious point's rank " +
                                std::to_string(center.cols()));
  }
  const FactorMatrix padded = pad_columns(center, rank);

  TrialReport rep;
  rep.config = cfg;
  rep.search_rank = rank;
  rep.records.resize(static_cast<std::size_t>(cfg.trials));
  std::atomic<int> next{0};
  const auto worker = [&] {
    for (int t = next++; t < cfg.trials; t = next++) {
      const std::uint64_t seed = derive_seed(cfg.master_seed, static_cast<std::uint64_t>(t));
      TrialRecord rec = run_trajectory(obj, sample_near(padded, cfg.radius, seed), padded, cfg);
      rec.trial = t;
      rec.seed = seed;
      rep.records[static_cast<std::size_t>(t)] = rec;
    }
  };
  const int nthreads = std::min(cfg.threads, cfg.trials);
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nthreads));
    for (int k = 0; k < nthreads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& r : rep.records) {
    if (r.outcome == Outcome::Success) ++rep.successes;
    else if (r.outcome == Outcome::Stuck) ++rep.stuck;
    else ++rep.undetermined;
  }
  return rep;
}

inline TrialReport run_trials(const CounterexampleInstance& inst, const TrialConfig& cfg) {
  return run_trials(inst.objective, inst.x_spur, cfg);
}

inline constexpr const char* kTrialsCsvHeader =
    "trial,seed,outcome,final_f,final_grad_norm,dist_to_spur,iters";

inline std::string to_csv(const TrialReport& rep) {
  std::string out = std::string(kTrialsCsvHeader) + "\n";
  for (const auto& r : rep.records) {
    out += std::to_string(r.trial) + "," + std::to_string(r.seed) + "," + to_string(r.outcome) + "," +
           io::format_double(r.final_f) + "," + io::format_double(r.final_grad_norm) + "," +
           io::format_double(r.dist_to_spur) + "," + std::to_string(r.iters) + "\n";
  }
  return out;
}

inline io::Json to_json(const TrialConfig& c) {
  return io::Json{{"search_rank", c.search_rank},
                  {"learning_rate", c.learning_rate},
                  {"momentum", c.momentum},
                  {"radius", c.radius},
                  {"max_iters", c.max_iters},
                  {"trials", c.trials},
                  {"master_seed", c.master_seed},
                  {"success_tol", c.success_tol},
                  {"stuck_tol", c.stuck_tol}};
}

/// Aggregate summary. The thread count is not recorded.
inline io::Json summary_json(const TrialReport& rep) {
  io::Json cfg = to_json(rep.config);
  cfg["search_rank"] = rep.search_rank;
  return io::Json{{"config", std::move(cfg)},
                  {"rng", rep.rng},
                  {"trials", rep.records.size()},
                  {"successes", rep.successes},
                  {"stuck", rep.stuck},
                  {"undetermined", rep.undetermined}};
}

}  // namespace bml

#endif  // BMLANDSCAPE_DYNAMICS_HPP
