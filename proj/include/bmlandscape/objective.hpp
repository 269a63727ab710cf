#ifndef BMLANDSCAPE_OBJECTIVE_HPP
#define BMLANDSCAPE_OBJECTIVE_HPP

// Quadratic measurement objectives phi(M) = 1/2 sum_k <A_k, M - M*>^2 and the
// Burer-Monteiro composite f(X) = phi(X X^T).

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bmlandscape/io.hpp"
#include "bmlandscape/matkernel.hpp"

namespace bml {

struct SmoothnessBounds {
  double mu = 0.0;
  double L = 0.0;
  double condition_number() const { return L / mu; }
};

/// Orthonormal basis of n x n symmetric matrices, as columns of an
/// n^2 x n(n+1)/2 matrix: e_i e_i^T first within each column j, then
/// (e_i e_j^T + e_j e_i^T)/sqrt(2) for i < j.
inline Matrix symmetric_basis(Index n) {
  Matrix b = Matrix::Zero(n * n, n * (n + 1) / 2);
  const double h = 1.0 / std::sqrt(2.0);
  Index col = 0;
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i <= j; ++i, ++col) {
      if (i == j) {
        b(j * n + i, col) = 1.0;
      } else {
        b(j * n + i, col) = h;
        b(i * n + j, col) = h;
      }
    }
  }
  return b;
}

class QuadraticObjective {
 public:
  /// Measurements need not be symmetric; they are stored verbatim.
  QuadraticObjective(std::vector<Matrix> measurements, FactorMatrix ground_truth)
      : measurements_(std::move(measurements)), z_(std::move(ground_truth)) {
    n_ = z_.rows();
    if (n_ < 1) throw std::invalid_argument("QuadraticObjective: ground truth has no rows");
    if (z_.cols() < 1) throw std::invalid_argument("QuadraticObjective: ground truth has no columns");
    if (!z_.allFinite()) throw std::invalid_argument("QuadraticObjective: non-finite ground truth");
    if (measurements_.empty()) throw std::invalid_argument("QuadraticObjective: no measurements");
    sym_rows_.resize(static_cast<Index>(measurements_.size()), n_ * n_);
    for (std::size_t k = 0; k < measurements_.size(); ++k) {
      const Matrix& a = measurements_[k];
      if (a.rows() != n_ || a.cols() != n_) {
        throw std::invalid_argument("QuadraticObjective: measurement " + std::to_string(k) +
                                    " is " + std::to_string(a.rows()) + "x" +
                                    std::to_string(a.cols()) + ", expected " +
                                    std::to_string(n_) + "x" + std::to_string(n_));
      }
      if (!a.allFinite()) {
        throw std::invalid_argument("QuadraticObjective: measurement " + std::to_string(k) +
                                    " has a non-finite entry");
      }
      sym_rows_.row(static_cast<Index>(k)) = vec(sym_part(a)).transpose();
    }
    m_star_ = SymMatrix(z_ * z_.transpose());
    hessian_ = sym_rows_.transpose() * sym_rows_;
    hessian_ = sym_part(hessian_);

    const Matrix basis = symmetric_basis(n_);
    const Matrix cb = sym_rows_ * basis;
    const auto ed = sym_eig(SymMatrix(cb.transpose() * cb));
    bounds_.L = ed.values(0);
    bounds_.mu = ed.values(ed.values.size() - 1);
    if (!(bounds_.mu > 1e-12 * std::max(1.0, bounds_.L))) {
      throw std::invalid_argument(
          "QuadraticObjective: Hessian is singular on symmetric matrices (mu = " +
          io::format_double(bounds_.mu) + "); phi must be strongly convex");
    }
  }

  Index order() const { return n_; }
  Index rank_star() const { return z_.cols(); }
  const std::vector<Matrix>& measurements() const { return measurements_; }
  const FactorMatrix& ground_truth() const { return z_; }
  const SymMatrix& minimizer() const { return m_star_; }

  /// Rows are vec(sym(A_k))^T.
  const Matrix& measurement_rows() const { return sym_rows_; }
  /// n^2 x n^2 representation of the Hessian operator, sum_k vec(sym A_k) vec(sym A_k)^T.
  const Matrix& hessian_matrix() const { return hessian_; }
  const SmoothnessBounds& cached_bounds() const { return bounds_; }

  void check_order(Index n, const char* what) const {
    if (n != n_) {
      throw std::invalid_argument(std::string(what) + ": order " + std::to_string(n) +
                                  " does not match objective order " + std::to_string(n_));
    }
  }

 private:
  std::vector<Matrix> measurements_;
  FactorMatrix z_;
  Index n_ = 0;
  SymMatrix m_star_;
  Matrix sym_rows_;
  Matrix hessian_;
  SmoothnessBounds bounds_;
};

inline double phi_eval(const QuadraticObjective& obj, const SymMatrix& m) {
  obj.check_order(m.order(), "phi_eval");
  const Vector r = obj.measurement_rows() * vec(m.matrix() - obj.minimizer().matrix());
  return 0.5 * r.squaredNorm();
}

inline SymMatrix phi_grad(const QuadraticObjective& obj, const SymMatrix& m) {
  obj.check_order(m.order(), "phi_grad");
  const Vector g = obj.hessian_matrix() * vec(m.matrix() - obj.minimizer().matrix());
  return SymMatrix(mat(g, obj.order(), obj.order()));
}

/// (mu, L): extreme eigenvalues of the Hessian operator restricted to symmetric matrices.
inline SmoothnessBounds smoothness_bounds(const QuadraticObjective& obj) {
  return obj.cached_bounds();
}

namespace detail {
inline void check_factor(const QuadraticObjective& obj, const FactorMatrix& x, const char* what) {
  if (x.rows() != obj.order()) {
    throw std::invalid_argument(std::string(what) + ": factor has " + std::to_string(x.rows()) +
                                " rows, objective order is " + std::to_string(obj.order()));
  }
  if (x.cols() < 1) throw std::invalid_argument(std::string(what) + ": factor has no columns");
}
}  // namespace detail

inline double f_eval(const QuadraticObjective& obj, const FactorMatrix& x) {
  detail::check_factor(obj, x, "f_eval");
  return phi_eval(obj, SymMatrix(x * x.transpose()));
}

/// grad f(X) = 2 grad phi(X X^T) X.
inline FactorMatrix f_grad(const QuadraticObjective& obj, const FactorMatrix& x) {
  detail::check_factor(obj, x, "f_grad");
  return 2.0 * phi_grad(obj, SymMatrix(x * x.transpose())).matrix() * x;
}

inline double f_hess_quadform(const QuadraticObjective& obj, const FactorMatrix& x,
                              const FactorMatrix& v) {
  detail::check_factor(obj, x, "f_hess_quadform");
  const SymMatrix s = phi_grad(obj, SymMatrix(x * x.transpose()));
  const SymMatrix jv = jacobian_apply(x, v);
  const Vector r = obj.measurement_rows() * vec(jv.matrix());
  return 2.0 * (s.matrix().cwiseProduct(v * v.transpose())).sum() + r.squaredNorm();
}

/// The nr x nr Hessian of f in vec(V) coordinates: 2 I_r kron S + J^T H J.
inline SymMatrix f_hess_matrix(const QuadraticObjective& obj, const FactorMatrix& x) {
  detail::check_factor(obj, x, "f_hess_matrix");
  const Index r = x.cols();
  const SymMatrix s = phi_grad(obj, SymMatrix(x * x.transpose()));
  const Matrix j = jacobian_matrix(x);
  const Matrix g = obj.measurement_rows() * j;
  return SymMatrix(2.0 * kron(Matrix::Identity(r, r), s.matrix()) + g.transpose() * g);
}

inline double f_hess_min_eig(const QuadraticObjective& obj, const FactorMatrix& x) {
  return lambda_min(f_hess_matrix(obj, x));
}

struct SecondOrderReport {
  double grad_norm = 0.0;
  double hess_min_eig = 0.0;
  double objective_value = 0.0;
  /// f(X) - min f. The quadratic family has min f = 0 whenever r >= r*.
  double gap = 0.0;
  double eps = 0.0;
  bool grad_ok = false;
  bool hess_ok = false;

  bool is_second_order_point() const { return grad_ok && hess_ok; }
};

/// Fixed-threshold approximate second-order check: ||grad f|| <= eps and
/// lambda_min(hess f) >= -eps.
inline SecondOrderReport check_second_order(const QuadraticObjective& obj, const FactorMatrix& x,
                                            double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("check_second_order: eps must be positive");
  SecondOrderReport rep;
  rep.eps = eps;
  rep.grad_norm = f_grad(obj, x).norm();
  rep.hess_min_eig = f_hess_min_eig(obj, x);
  rep.objective_value = f_eval(obj, x);
  rep.gap = rep.objective_value;
  rep.grad_ok = rep.grad_norm <= eps;
  rep.hess_ok = rep.hess_min_eig >= -eps;
  return rep;
}

inline io::Json to_json(const SecondOrderReport& r) {
  return io::Json{{"grad_norm", r.grad_norm},
                  {"hess_min_eig", r.hess_min_eig},
                  {"objective_value", r.objective_value},
                  {"gap", r.gap},
                  {"eps", r.eps},
                  {"grad_ok", r.grad_ok},
                  {"hess_ok", r.hess_ok}};
}

inline io::Json to_json(const QuadraticObjective& obj) {
  io::Json meas = io::Json::array();
  for (const auto& a : obj.measurements()) meas.push_back(io::matrix_to_json(a));
  return io::Json{{"n", obj.order()},
                  {"r_star", obj.rank_star()},
                  {"Z", io::matrix_to_json(obj.ground_truth())},
                  {"measurements", std::move(meas)}};
}

inline QuadraticObjective objective_from_json(const io::Json& j, const std::string& where) {
  const long long n = io::int_field(j, "n", where);
  const long long r_star = io::int_field(j, "r_star", where);
  Matrix z = io::matrix_from_json(io::field(j, "Z", where), where + ".Z");
  if (z.rows() != n || z.cols() != r_star) {
    throw io::FormatError(where + ".Z", "expected " + std::to_string(n) + "x" +
                                            std::to_string(r_star));
  }
  const auto& mj = io::field(j, "measurements", where);
  if (!mj.is_array()) throw io::FormatError(where + ".measurements", "expected an array");
  std::vector<Matrix> meas;
  for (std::size_t k = 0; k < mj.size(); ++k) {
    const std::string w = where + ".measurements[" + std::to_string(k) + "]";
    Matrix a = io::matrix_from_json(mj[k], w);
    if (a.rows() != n || a.cols() != n) {
      throw io::FormatError(w, "expected " + std::to_string(n) + "x" + std::to_string(n));
    }
    meas.push_back(std::move(a));
  }
  try {
    return QuadraticObjective(std::move(meas), std::move(z));
  } catch (const std::invalid_argument& e) {
    throw io::FormatError(where, e.what());
  }
}

}  // namespace bml

#endif  // BMLANDSCAPE_OBJECTIVE_HPP
