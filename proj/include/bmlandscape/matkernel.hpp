#ifndef BMLANDSCAPE_MATKERNEL_HPP
#define BMLANDSCAPE_MATKERNEL_HPP

// Dense small-scale linear algebra used throughout the library.
//
// Vectorization is column-stacking everywhere: vec(A X B^T) = (B kron A) vec(X).

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace bml {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// An n x r factor matrix. Any shape is legal.
using FactorMatrix = Matrix;

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

/// Real symmetric matrix, symmetrized as (S + S^T)/2 on construction.
class SymMatrix {
 public:
  SymMatrix() = default;

  explicit SymMatrix(const Matrix& m) {
    if (m.rows() != m.cols()) {
      throw std::invalid_argument("SymMatrix: matrix is " + std::to_string(m.rows()) + "x" +
                                  std::to_string(m.cols()) + ", expected square");
    }
    if (!m.allFinite()) {
      throw std::invalid_argument("SymMatrix: non-finite entry");
    }
    m_ = 0.5 * (m + m.transpose());
  }

  static SymMatrix zero(Index n) { return SymMatrix(Matrix::Zero(n, n)); }
  static SymMatrix identity(Index n) { return SymMatrix(Matrix::Identity(n, n)); }

  Index order() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  double operator()(Index i, Index j) const { return m_(i, j); }

 private:
  Matrix m_;
};

struct EigenDecomposition {
  Vector values;   // descending
  Matrix vectors;  // columns are orthonormal eigenvectors
};

struct KernelConfig {
  /// Jacobi stops once the off-diagonal Frobenius mass is <= jacobi_tol * ||S||_F.
  double jacobi_tol = 1e-14;
  int max_sweeps = 100;
  /// Singular values <= pinv_rel_tol * max(rows, cols) * sigma_max are treated as zero.
  double pinv_rel_tol = 1e-10;
};

namespace detail {

inline double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

}  // namespace detail

/// Cyclic Jacobi eigendecomposition. Values are returned in descending order.
inline EigenDecomposition sym_eig(const SymMatrix& s, const KernelConfig& cfg = {}) {
  const Index n = s.order();
  Matrix a = s.matrix();
  Matrix v = Matrix::Identity(n, n);
  const double scale = a.norm();

  if (scale > 0.0) {
    for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
      if (detail::off_diagonal_norm(a) <= cfg.jacobi_tol * scale) break;
      for (Index p = 0; p + 1 < n; ++p) {
        for (Index q = p + 1; q < n; ++q) {
          const double apq = a(p, q);
          if (apq == 0.0) continue;
          const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
          const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
          const double c = 1.0 / std::sqrt(t * t + 1.0);
          const double sn = t * c;
          // A <- R^T A R with R the (p,q) plane rotation.
          for (Index k = 0; k < n; ++k) {
            const double akp = a(k, p);
            const double akq = a(k, q);
            a(k, p) = c * akp - sn * akq;
            a(k, q) = sn * akp + c * akq;
          }
          for (Index k = 0; k < n; ++k) {
            const double apk = a(p, k);
            const double aqk = a(q, k);
            a(p, k) = c * apk - sn * aqk;
            a(q, k) = sn * apk + c * aqk;
          }
          a(p, q) = 0.0;
          a(q, p) = 0.0;
          for (Index k = 0; k < n; ++k) {
            const double vkp = v(k, p);
            const double vkq = v(k, q);
            v(k, p) = c * vkp - sn * vkq;
            v(k, q) = sn * vkp + c * vkq;
          }
        }
      }
    }
  }

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index i, Index j) { return a(i, i) > a(j, j); });

  EigenDecomposition out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Index k = 0; k < n; ++k) {
    out.values(k) = a(order[k], order[k]);
    out.vectors.col(k) = v.col(order[k]);
  }
  return out;
}

inline double lambda_min(const SymMatrix& s) {
  if (s.order() == 0) return 0.0;
  return sym_eig(s).values(s.order() - 1);
}

inline double lambda_max(const SymMatrix& s) {
  if (s.order() == 0) return 0.0;
  return sym_eig(s).values(0);
}

/// Nearest positive semidefinite matrix in Frobenius norm.
inline SymMatrix psd_project(const SymMatrix& s) {
  const auto ed = sym_eig(s);
  const Vector clipped = ed.values.cwiseMax(0.0);
  return SymMatrix(ed.vectors * clipped.asDiagonal() * ed.vectors.transpose());
}

/// Moore-Penrose pseudoinverse; pinv(0) == 0.
inline Matrix pinv(const Matrix& a, const KernelConfig& cfg = {}) {
  Matrix out = Matrix::Zero(a.cols(), a.rows());
  if (a.size() == 0) return out;
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return out;
  const double tol =
      cfg.pinv_rel_tol * static_cast<double>(std::max(a.rows(), a.cols())) * sv(0);
  for (Index k = 0; k < sv.size(); ++k) {
    if (sv(k) <= tol) break;
    out += svd.matrixV().col(k) * (1.0 / sv(k)) * svd.matrixU().col(k).transpose();
  }
  return out;
}

/// Numerical rank with the same cutoff as pinv.
inline Index numerical_rank(const Matrix& a, const KernelConfig& cfg = {}) {
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(a);
  const Vector& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double tol =
      cfg.pinv_rel_tol * static_cast<double>(std::max(a.rows(), a.cols())) * sv(0);
  Index r = 0;
  while (r < sv.size() && sv(r) > tol) ++r;
  return r;
}

inline Vector vec(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

inline Matrix mat(const Vector& v, Index rows, Index cols) {
  if (v.size() != rows * cols) {
    throw std::invalid_argument("mat: vector of length " + std::to_string(v.size()) +
                                " cannot be reshaped to " + std::to_string(rows) + "x" +
                                std::to_string(cols));
  }
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

/// Square reshape, order inferred from the length.
inline Matrix mat(const Vector& v) {
  const auto n = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
  return mat(v, n, n);
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline Matrix sym_part(const Matrix& m) { return 0.5 * (m + m.transpose()); }

/// X V^T + V X^T.
inline SymMatrix jacobian_apply(const FactorMatrix& x, const FactorMatrix& v) {
  if (x.rows() != v.rows() || x.cols() != v.cols()) {
    throw std::invalid_argument("jacobian_apply: V is " + std::to_string(v.rows()) + "x" +
                                std::to_string(v.cols()) + " but X is " +
                                std::to_string(x.rows()) + "x" + std::to_string(x.cols()));
  }
  const Matrix xv = x * v.transpose();
  return SymMatrix(xv + xv.transpose());
}

/// The realized n^2 x nr matrix J_X with J_X vec(V) = vec(X V^T + V X^T).
inline Matrix jacobian_matrix(const FactorMatrix& x) {
  const Index n = x.rows();
  const Index r = x.cols();
  Matrix j = Matrix::Zero(n * n, n * r);
  // Column (a, b) of V maps to x_b e_a^T + e_a x_b^T.
  for (Index b = 0; b < r; ++b) {
    for (Index a = 0; a < n; ++a) {
      const Index col = b * n + a;
      for (Index i = 0; i < n; ++i) {
        j(a * n + i, col) += x(i, b);  // entry (i, a)
        j(i * n + a, col) += x(i, b);  // entry (a, i)
      }
    }
  }
  return j;
}

/// P = I - X X^dagger, the projector onto range(X)^perp.
inline SymMatrix residual_projector(const FactorMatrix& x, const KernelConfig& cfg = {}) {
  const Index n = x.rows();
  return SymMatrix(Matrix::Identity(n, n) - x * pinv(x, cfg));
}

}  // namespace bml

#endif  // BMLANDSCAPE_MATKERNEL_HPP
