#ifndef BMLANDSCAPE_BOUNDS_HPP
#define BMLANDSCAPE_BOUNDS_HPP

// Closed-form landscape bounds in terms of the two invariants (alpha, beta) of a
// candidate pair (X, Z):
//
//   alpha = ||Zp Zp^T||_F / ||X X^T - Z Z^T||_F,          Zp = (I - X X^+) Z
//   beta  = lambda_min(X^T X) tr(Zp Zp^T) / (||X X^T - Z Z^T||_F ||Zp Zp^T||_F)
//
// and the condition-number lower bound they imply, the valid inequality
// alpha^2 + (r/r*) min(alpha^2, beta^2) <= 1 relating them, and the rank
// thresholds that follow.

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "bmlandscape/io.hpp"
#include "bmlandscape/matkernel.hpp"

namespace bml {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct AlphaBeta {
  double alpha = 0.0;
  double beta = 0.0;
  FactorMatrix z_perp;
  double err_norm = 0.0;
  /// Zp Zp^T vanishes; alpha is 0 and beta falls back to sigma_min(X)^2 / err_norm.
  bool degenerate = false;
};

enum class Branch { First, Second };

inline const char* to_string(Branch b) { return b == Branch::First ? "first" : "second"; }

struct BoundEvaluation {
  AlphaBeta ab;
  /// +infinity when no finite-conditioned counterexample is certified at (X, Z).
  double kappa_lb = kInfinity;
  Branch branch = Branch::First;
  double t_opt = 0.0;
  double gamma_value = 0.0;
  std::string diagnostic;
};

/// Eigenvalues of the Gram matrix below this are treated as zero.
inline constexpr double kGramZeroTol = 1e-12;

inline AlphaBeta alpha_beta(const FactorMatrix& x, const FactorMatrix& z) {
  if (x.rows() != z.rows()) {
    throw std::invalid_argument("alpha_beta: X has " + std::to_string(x.rows()) +
                                " rows but Z has " + std::to_string(z.rows()));
  }
  AlphaBeta ab;
  const Matrix e = x * x.transpose() - z * z.transpose();
  ab.err_norm = e.norm();
  if (!(ab.err_norm > 1e-12)) {
    throw std::invalid_argument("alpha_beta: X X^T == Z Z^T, the spurious point must differ from M*");
  }
  double gram_min = x.cols() == 0 ? 0.0 : lambda_min(SymMatrix(x.transpose() * x));
  if (gram_min < kGramZeroTol) gram_min = 0.0;

  ab.z_perp = residual_projector(x).matrix() * z;
  const Matrix g = ab.z_perp * ab.z_perp.transpose();
  const double g_norm = g.norm();
  if (g_norm <= 1e-12 * ab.err_norm) {
    ab.degenerate = true;
    ab.alpha = 0.0;
    ab.beta = gram_min / ab.err_norm;
    return ab;
  }
  ab.alpha = g_norm / ab.err_norm;
  ab.beta = gram_min * g.trace() / (ab.err_norm * g_norm);
  return ab;
}

/// Branch boundary alpha / (1 + sqrt(1 - alpha^2)).
inline double branch_threshold(double alpha) {
  return alpha / (1.0 + std::sqrt(std::max(0.0, 1.0 - alpha * alpha)));
}

inline Branch branch_of(double alpha, double beta) {
  return beta >= branch_threshold(alpha) ? Branch::First : Branch::Second;
}

inline double gamma(double alpha, double beta) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("gamma: alpha must lie in [0, 1]");
  }
  if (!(beta >= 0.0)) throw std::invalid_argument("gamma: beta must be nonnegative");
  if (branch_of(alpha, beta) == Branch::First) return std::sqrt(1.0 - alpha * alpha);
  if (beta >= 1.0) throw std::invalid_argument("gamma: second branch requires beta < 1");
  return (1.0 - 2.0 * alpha * beta + beta * beta) / (1.0 - beta * beta);
}

/// Lower bound on cos(theta(t)) from the explicit dual witness; requires t <= alpha beta.
inline double cos_theta_lb(double alpha, double beta, double t) {
  if (!(beta > 0.0)) throw std::invalid_argument("cos_theta_lb: beta must be positive");
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("cos_theta_lb: alpha must lie in [0, 1]");
  }
  if (!(t >= 0.0)) throw std::invalid_argument("cos_theta_lb: t must be nonnegative");
  if (t > alpha * beta * (1.0 + 1e-15)) {
    throw std::invalid_argument("cos_theta_lb: requires t <= alpha * beta");
  }
  const double tau = std::min(t / beta, alpha);
  return alpha * tau + std::sqrt(std::max(0.0, 1.0 - alpha * alpha)) *
                           std::sqrt(std::max(0.0, 1.0 - tau * tau));
}

/// (1 + g) / (2t + 1 - g) with g = cos_theta_lb(alpha, beta, t).
inline double tradeoff_objective(double alpha, double beta, double t) {
  const double g = cos_theta_lb(alpha, beta, t);
  return (1.0 + g) / (2.0 * t + 1.0 - g);
}

/// Maximizes tradeoff_objective over t in [0, alpha beta] by locating the
/// optimal t directly. Writing t = beta sin(psi), sin(psi0) = alpha and
/// u = tan((psi0 - psi)/2), the reciprocal objective is the quadratic
/// alpha beta - 2 beta sqrt(1-alpha^2) u + (1 - alpha beta) u^2 on
/// [0, tan(psi0/2)], minimized at u = beta sqrt(1-alpha^2) / (1 - alpha beta)
/// when alpha beta < 1 and at an endpoint otherwise.
inline BoundEvaluation tradeoff_max(double alpha, double beta) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("tradeoff_max: alpha must lie in (0, 1]");
  }
  if (!(beta >= 0.0)) throw std::invalid_argument("tradeoff_max: beta must be nonnegative");
  BoundEvaluation ev;
  ev.ab.alpha = alpha;
  ev.ab.beta = beta;
  const double c = std::sqrt(std::max(0.0, 1.0 - alpha * alpha));
  ev.branch = branch_of(alpha, beta);
  if (beta == 0.0) {
    ev.branch = Branch::Second;
    ev.kappa_lb = kInfinity;
    ev.t_opt = 0.0;
    ev.diagnostic = "beta == 0: objective unbounded as t -> 0";
    return ev;
  }
  const double psi0 = std::asin(alpha);
  const double u_max = alpha / (1.0 + c);
  const double curv = 1.0 - alpha * beta;
  const auto recip_at = [&](double u) { return alpha * beta - 2.0 * beta * c * u + curv * u * u; };
  double u = u_max;
  if (curv > 0.0) {
    u = std::min(beta * c / curv, u_max);
  } else if (recip_at(0.0) < recip_at(u_max)) {
    u = 0.0;
  }
  const double psi = psi0 - 2.0 * std::atan(u);
  ev.t_opt = u == u_max ? 0.0 : std::max(0.0, beta * std::sin(psi));
  const double recip = recip_at(u);
  ev.kappa_lb = recip > 0.0 ? 1.0 / recip : kInfinity;
  if (beta < 1.0 || ev.branch == Branch::First) ev.gamma_value = gamma(alpha, beta);
  return ev;
}

/// Two-case closed-form lower bound on the condition number of any
/// counterexample with the given invariants.
inline BoundEvaluation kappa_lb_closed_form(const AlphaBeta& ab) {
  BoundEvaluation ev;
  ev.ab = ab;
  if (ab.degenerate || !(ab.alpha > 0.0)) {
    ev.kappa_lb = kInfinity;
    ev.branch = Branch::First;
    ev.diagnostic =
        "degenerate invariants (Zp = 0, alpha = 0): the first-branch formula diverges; "
        "no finite-conditioned counterexample is certified at this (X, Z)";
    return ev;
  }
  const double a = ab.alpha;
  const double b = ab.beta;
  const double c = std::sqrt(std::max(0.0, 1.0 - a * a));
  ev.branch = branch_of(a, b);
  if (ev.branch == Branch::First) {
    ev.kappa_lb = c < 1.0 ? (1.0 + c) / (1.0 - c) : kInfinity;
    ev.t_opt = 0.0;
  } else if (b == 0.0) {
    ev.kappa_lb = kInfinity;
    ev.diagnostic = "beta == 0: second-branch formula diverges";
  } else {
    ev.kappa_lb = (1.0 - a * b) / ((a - b) * b);
    ev.t_opt = tradeoff_max(a, b).t_opt;
  }
  if (b < 1.0 || ev.branch == Branch::First) ev.gamma_value = gamma(a, b);
  return ev;
}

struct InequalityCheck {
  bool holds = false;
  double slack = 0.0;
};

inline InequalityCheck valid_inequality(const AlphaBeta& ab, int r, int r_star) {
  if (!(r >= r_star && r_star >= 1)) {
    throw std::invalid_argument("valid_inequality: requires r >= r* >= 1");
  }
  const double ratio = static_cast<double>(r) / static_cast<double>(r_star);
  const double a2 = ab.alpha * ab.alpha;
  const double b2 = ab.beta * ab.beta;
  InequalityCheck out;
  out.slack = 1.0 - a2 - ratio * std::min(a2, b2);
  out.holds = out.slack >= -1e-9;
  return out;
}

/// min gamma(alpha, beta) subject to the valid inequality: 1 / (1 + sqrt(r*/r)).
inline double minab(int r, int r_star) {
  if (!(r >= r_star && r_star >= 1)) throw std::invalid_argument("minab: requires r >= r* >= 1");
  return 1.0 / (1.0 + std::sqrt(static_cast<double>(r_star) / static_cast<double>(r)));
}

/// Condition-number bound implied by a value of gamma: (1 + g) / (1 - g).
inline double kappa_from_gamma(double g) { return (1.0 + g) / (1.0 - g); }

/// Invariants of the rank-1 pair x = rho e1, z = cos(phi) e1 + sin(phi) e2.
inline AlphaBeta rank1_invariants(double rho, double sin_phi) {
  if (!(rho > 0.0)) throw std::invalid_argument("rank1_invariants: rho must be positive");
  if (!(sin_phi >= 0.0 && sin_phi <= 1.0)) {
    throw std::invalid_argument("rank1_invariants: sin(phi) must lie in [0, 1]");
  }
  const double rho2 = rho * rho;
  const double s2 = sin_phi * sin_phi;
  const double d = std::sqrt((1.0 - rho2) * (1.0 - rho2) + 2.0 * rho2 * s2);
  if (!(d > 1e-12)) {
    throw std::invalid_argument("rank1_invariants: x x^T == z z^T (rho = 1, phi = 0)");
  }
  AlphaBeta ab;
  ab.alpha = s2 / d;
  ab.beta = rho2 / d;
  ab.err_norm = d;
  ab.z_perp = Matrix::Zero(2, 1);
  ab.z_perp(1, 0) = sin_phi;
  ab.degenerate = sin_phi == 0.0;
  return ab;
}

struct KappaThresholds {
  double lower = 0.0;  // 1 + 2 sqrt(r / r*)
  double upper = 0.0;  // 1 + 2 sqrt(r - r* + 1)
};

inline KappaThresholds thresholds(int r, int r_star) {
  if (!(r >= r_star && r_star >= 1)) throw std::invalid_argument("thresholds: requires r >= r* >= 1");
  return {1.0 + 2.0 * std::sqrt(static_cast<double>(r) / r_star),
          1.0 + 2.0 * std::sqrt(static_cast<double>(r - r_star + 1))};
}

/// Smallest r >= r* with r > (kappa - 1)^2 r* / 4. A threshold within 1e-12
/// (relative) of an integer is snapped to it before the strict comparison.
inline long long sufficient_rank(double kappa, int r_star) {
  if (!(kappa >= 1.0) || !std::isfinite(kappa)) {
    throw std::invalid_argument("sufficient_rank: kappa must be finite and >= 1");
  }
  if (r_star < 1) throw std::invalid_argument("sufficient_rank: r* must be >= 1");
  double bound = 0.25 * (kappa - 1.0) * (kappa - 1.0) * r_star;
  const double nearest = std::round(bound);
  if (std::abs(bound - nearest) <= 1e-12 * std::max(1.0, bound)) bound = nearest;
  const auto r = static_cast<long long>(std::floor(bound)) + 1;
  return std::max<long long>(r, r_star);
}

inline io::Json to_json(const AlphaBeta& ab) {
  return io::Json{{"alpha", ab.alpha},
                  {"beta", ab.beta},
                  {"err_norm", ab.err_norm},
                  {"degenerate", ab.degenerate},
                  {"z_perp", io::matrix_to_json(ab.z_perp)}};
}

inline io::Json to_json(const BoundEvaluation& ev) {
  io::Json j{{"alpha", ev.ab.alpha},
             {"beta", ev.ab.beta},
             {"err_norm", ev.ab.err_norm},
             {"degenerate", ev.ab.degenerate},
             {"branch", to_string(ev.branch)},
             {"t_opt", ev.t_opt},
             {"gamma", ev.gamma_value}};
  if (std::isfinite(ev.kappa_lb)) {
    j["kappa_lb"] = ev.kappa_lb;
    j["kappa_lb_infinite"] = false;
  } else {
    j["kappa_lb"] = nullptr;
    j["kappa_lb_infinite"] = true;
  }
  if (!ev.diagnostic.empty()) j["diagnostic"] = ev.diagnostic;
  return j;
}

}  // namespace bml

#endif  // BMLANDSCAPE_BOUNDS_HPP
