#ifndef BMLANDSCAPE_ECKART_YOUNG_HPP
#define BMLANDSCAPE_ECKART_YOUNG_HPP

// Regularized Eckart-Young: minimize psi(Y) = ||A - Y Y^T||_F^2 + 2 <B, Y^T Y>
// over Y in R^{n x r}, for PSD A (n x n) and B (r x r).

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bmlandscape/io.hpp"
#include "bmlandscape/matkernel.hpp"

namespace bml {

class EYProblem {
 public:
  /// s sorted descending, d sorted ascending, both nonnegative, d.size() <= s.size().
  EYProblem(Vector s, Vector d) : s_(std::move(s)), d_(std::move(d)) {
    validate();
    u_ = Matrix::Identity(s_.size(), s_.size());
    v_ = Matrix::Identity(d_.size(), d_.size());
  }

  /// Diagonalizes general PSD A and B; eigenvalues above -1e-10 max(1, ||.||_F) are clipped to 0.
  static EYProblem from_matrices(const Matrix& a, const Matrix& b) {
    if (a.rows() != a.cols() || b.rows() != b.cols()) {
      throw std::invalid_argument("EYProblem: A and B must be square");
    }
    if (b.rows() > a.rows()) throw std::invalid_argument("EYProblem: B larger than A");
    const auto ea = sym_eig(SymMatrix(a));
    const auto eb = sym_eig(SymMatrix(b));
    const auto clip = [](Vector v, double scale, const char* name) {
      for (Index i = 0; i < v.size(); ++i) {
        if (v(i) < -1e-10 * std::max(1.0, scale)) {
          throw std::invalid_argument(std::string("EYProblem: ") + name +
                                      " is not PSD (eigenvalue " + io::format_double(v(i)) + ")");
        }
        v(i) = std::max(0.0, v(i));
      }
      return v;
    };
    Vector s = clip(ea.values, a.norm(), "A");
    Vector d = clip(eb.values.reverse(), b.norm(), "B");
    EYProblem p(std::move(s), std::move(d));
    p.u_ = ea.vectors;
    p.v_ = eb.vectors.rowwise().reverse();
    return p;
  }

  Index n() const { return s_.size(); }
  Index r() const { return d_.size(); }
  const Vector& s() const { return s_; }
  const Vector& d() const { return d_; }
  const Matrix& u() const { return u_; }
  const Matrix& v() const { return v_; }

  Matrix a() const { return u_ * s_.asDiagonal() * u_.transpose(); }
  Matrix b() const { return v_ * d_.asDiagonal() * v_.transpose(); }

 private:
  void validate() const {
    if (s_.size() < 1) throw std::invalid_argument("EYProblem: s is empty");
    if (d_.size() > s_.size()) {
      throw std::invalid_argument("EYProblem: d has " + std::to_string(d_.size()) +
                                  " entries, more than s (" + std::to_string(s_.size()) + ")");
    }
    for (Index i = 0; i < s_.size(); ++i) {
      if (!std::isfinite(s_(i)) || s_(i) < 0.0) throw std::invalid_argument("EYProblem: s must be finite and >= 0");
      if (i > 0 && s_(i) > s_(i - 1)) throw std::invalid_argument("EYProblem: s must be sorted descending");
    }
    for (Index i = 0; i < d_.size(); ++i) {
      if (!std::isfinite(d_(i)) || d_(i) < 0.0) throw std::invalid_argument("EYProblem: d must be finite and >= 0");
      if (i > 0 && d_(i) < d_(i - 1)) throw std::invalid_argument("EYProblem: d must be sorted ascending");
    }
  }

  Vector s_;
  Vector d_;
  Matrix u_;
  Matrix v_;
};

/// psi(Y) = ||A - Y Y^T||_F^2 + 2 <B, Y^T Y> in the original frame.
inline double ey_objective(const Matrix& a, const Matrix& b, const Matrix& y) {
  return (a - y * y.transpose()).squaredNorm() + 2.0 * (b.cwiseProduct(y.transpose() * y)).sum();
}

inline double ey_objective(const EYProblem& p, const Matrix& y) {
  return ey_objective(p.a(), p.b(), y);
}

struct EYSolution {
  /// Minimizer in the original frame, U Y_diag V^T.
  FactorMatrix y;
  /// Minimizer in the diagonalizing bases: a generalized permutation.
  FactorMatrix y_diag;
  double value = 0.0;
  Vector weights;
};

inline EYSolution solve(const EYProblem& p) {
  const Index n = p.n();
  const Index r = p.r();
  EYSolution sol;
  sol.weights.resize(r);
  sol.y_diag = Matrix::Zero(n, r);
  double value = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double si = p.s()(i);
    if (i < r) {
      const double w = std::max(0.0, si - p.d()(i));
      sol.weights(i) = w;
      sol.y_diag(i, i) = std::sqrt(w);
      value += si * si - w * w;
    } else {
      value += si * si;
    }
  }
  sol.value = value;
  sol.y = p.u() * sol.y_diag * p.v().transpose();
  return sol;
}

/// ||(S - Y Y^T) Y - Y D||_F in the diagonal frame.
inline double first_order_residual(const EYProblem& p, const Matrix& y_diag) {
  const Matrix s = p.s().asDiagonal();
  const Matrix d = p.d().asDiagonal();
  return ((s - y_diag * y_diag.transpose()) * y_diag - y_diag * d).norm();
}

inline constexpr Index kBruteForceMaxN = 7;
inline constexpr Index kBruteForceMaxR = 4;

/// Minimum of psi over generalized permutations Y = sum_j sqrt(w_j) e_pi(j) e_j^T,
/// enumerating every injective pi with w_j = (s_pi(j) - d_j)_+.
inline double brute_force(const EYProblem& p) {
  const Index n = p.n();
  const Index r = p.r();
  if (n > kBruteForceMaxN || r > kBruteForceMaxR) {
    throw std::invalid_argument("brute_force: enumeration budget is n <= 7, r <= 4 (got n = " +
                                std::to_string(n) + ", r = " + std::to_string(r) + ")");
  }
  const Matrix a = p.s().asDiagonal();
  const Matrix b = p.d().asDiagonal();
  std::vector<Index> pi(static_cast<std::size_t>(r));
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  double best = std::numeric_limits<double>::infinity();
  std::function<void(Index)> rec = [&](Index j) {
    if (j == r) {
      Matrix y = Matrix::Zero(n, r);
      for (Index c = 0; c < r; ++c) {
        const Index row = pi[static_cast<std::size_t>(c)];
        y(row, c) = std::sqrt(std::max(0.0, p.s()(row) - p.d()(c)));
      }
      best = std::min(best, ey_objective(a, b, y));
      return;
    }
    for (Index i = 0; i < n; ++i) {
      if (used[static_cast<std::size_t>(i)]) continue;
      used[static_cast<std::size_t>(i)] = true;
      pi[static_cast<std::size_t>(j)] = i;
      rec(j + 1);
      used[static_cast<std::size_t>(i)] = false;
    }
  };
  rec(0);
  return best;
}

/// Case-wise lower bound on ||s||^2 - ||(s - d)_+||^2 given s >= s_lb elementwise.
/// d = 0 gives 0.
inline double keyclaim_lb(const Vector& s, const Vector& d, double s_lb) {
  if (s.size() != d.size()) throw std::invalid_argument("keyclaim_lb: s and d differ in length");
  if (!(s_lb >= 0.0)) throw std::invalid_argument("keyclaim_lb: s_lb must be >= 0");
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) < s_lb) {
      throw std::invalid_argument("keyclaim_lb: s[" + std::to_string(i) + "] = " +
                                  io::format_double(s(i)) + " is below s_lb");
    }
    if (!(d(i) >= 0.0)) throw std::invalid_argument("keyclaim_lb: d must be >= 0");
  }
  const double dd = d.squaredNorm();
  if (dd == 0.0) return 0.0;
  const double sum_d = d.sum();
  if (s_lb * sum_d <= dd) return s_lb * s_lb * sum_d * sum_d / dd;
  return dd;
}

/// ||s||^2 - ||(s - d)_+||^2.
inline double keyclaim_value(const Vector& s, const Vector& d) {
  return s.squaredNorm() - (s - d).cwiseMax(0.0).squaredNorm();
}

struct NumcardValues {
  double lhs = 0.0;  // 1^T (I - x x^T / ||x||^2) 1
  double rhs = 0.0;  // ||(1 - x)_+||^2
};

inline NumcardValues numcard_check(const Vector& x) {
  if ((x.array() < 0.0).any()) throw std::invalid_argument("numcard_check: x must be >= 0");
  const double xx = x.squaredNorm();
  if (xx == 0.0) throw std::invalid_argument("numcard_check: x must be nonzero");
  const double sum = x.sum();
  if (sum > xx * (1.0 + 1e-15)) {
    throw std::invalid_argument("numcard_check: requires 1^T x <= ||x||^2");
  }
  NumcardValues out;
  out.lhs = static_cast<double>(x.size()) - sum * sum / xx;
  out.rhs = (Vector::Ones(x.size()) - x).cwiseMax(0.0).squaredNorm();
  return out;
}

inline io::Json to_json(const EYSolution& sol) {
  return io::Json{{"value", sol.value},
                  {"weights", io::vector_to_json(sol.weights)},
                  {"Y", io::matrix_to_json(sol.y)}};
}

}  // namespace bml

#endif  // BMLANDSCAPE_ECKART_YOUNG_HPP
