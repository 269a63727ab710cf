#ifndef BMLANDSCAPE_COUNTEREXAMPLE_HPP
#define BMLANDSCAPE_COUNTEREXAMPLE_HPP

// Worst-case instance with condition number 1 + 2 sqrt(q), q = r - r* + 1,
// whose Burer-Monteiro function has a spurious second-order point at rank r.
//
// With an orthonormal basis u_0..u_{n-1}:
//   Z      = [u_0, u_{q+1}, ..., u_r]                       (n x r*)
//   X_spur = [u_1, ..., u_q] / sqrt(1 + sqrt q)  ++  [u_{q+1}, ..., u_r]
// and n^2 measurements A(i,j) = sqrt(kappa) u_i u_j^T, except on the diagonal
// block spanned by u_0..u_q, where
//   A(0,0) = sqrt(kappa) V0/|V0|,  A(1,1) = V1/|V1|,
//   V0 = sqrt(q) u_0 u_0^T + sum_{i=1..q} u_i u_i^T,
//   V1 = sqrt(q) u_0 u_0^T - sum_{i=1..q} u_i u_i^T,
// and A(i,i), 2 <= i <= q, are unit-norm Helmert directions orthogonal to both.

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bmlandscape/io.hpp"
#include "bmlandscape/matkernel.hpp"
#include "bmlandscape/objective.hpp"
#include "bmlandscape/rng.hpp"

namespace bml {

enum class BasisMode { Standard, Random };

inline std::string to_string(BasisMode m) { return m == BasisMode::Standard ? "standard" : "random"; }

struct CounterexampleInstance {
  int n = 0;
  int r = 0;
  int r_star = 0;
  int q = 0;
  double kappa = 0.0;
  BasisMode basis_mode = BasisMode::Standard;
  std::uint64_t seed = 0;
  Matrix basis;  // columns u_0..u_{n-1}
  FactorMatrix x_spur;
  FactorMatrix z;
  QuadraticObjective objective;

  /// Measurement A(i, j) is stored at index i * n + j.
  const Matrix& measurement(int i, int j) const {
    return objective.measurements()[static_cast<std::size_t>(i * n + j)];
  }
  Vector u(int i) const { return basis.col(i); }
};

/// (1 + 2 sqrt q) / (1 + sqrt q).
inline double spurious_gap(int q) {
  if (q < 1) throw std::invalid_argument("spurious_gap: q must be >= 1, got " + std::to_string(q));
  const double sq = std::sqrt(static_cast<double>(q));
  return (1.0 + 2.0 * sq) / (1.0 + sq);
}

inline double counterexample_kappa(int q) { return 1.0 + 2.0 * std::sqrt(static_cast<double>(q)); }

/// Orthonormal basis from a seeded Gaussian matrix (Householder QR).
inline Matrix random_orthonormal_basis(int n, std::uint64_t seed) {
  Rng rng(seed);
  const Matrix g = rng.normal_matrix(n, n);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  // Fix column signs so the factorization is unique.
  const Matrix rr = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index k = 0; k < n; ++k)
    if (rr(k, k) < 0.0) q.col(k) = -q.col(k);
  return q;
}

namespace detail {

inline void check_ranks(int n, int r, int r_star) {
  if (!(1 <= r_star && r_star <= r && r < n)) {
    throw std::invalid_argument("counterexample requires 1 <= r* <= r < n (got n=" +
                                std::to_string(n) + ", r=" + std::to_string(r) +
                                ", r*=" + std::to_string(r_star) +
                                "); no spurious point exists outside r* <= r < n");
  }
}

inline Matrix outer(const Vector& a, const Vector& b) { return a * b.transpose(); }

}  // namespace detail

/// V0 = sqrt(q) u_0 u_0^T + sum_{i=1..q} u_i u_i^T.
inline Matrix kappa_direction(const Matrix& basis, int q) {
  Matrix v = std::sqrt(static_cast<double>(q)) * detail::outer(basis.col(0), basis.col(0));
  for (int i = 1; i <= q; ++i) v += detail::outer(basis.col(i), basis.col(i));
  return v;
}

/// V1 = sqrt(q) u_0 u_0^T - sum_{i=1..q} u_i u_i^T.
inline Matrix unit_direction(const Matrix& basis, int q) {
  Matrix v = std::sqrt(static_cast<double>(q)) * detail::outer(basis.col(0), basis.col(0));
  for (int i = 1; i <= q; ++i) v -= detail::outer(basis.col(i), basis.col(i));
  return v;
}

inline std::vector<Matrix> counterexample_measurements(const Matrix& basis, int q) {
  const auto n = static_cast<int>(basis.cols());
  const double kappa = counterexample_kappa(q);
  const double sk = std::sqrt(kappa);
  std::vector<Matrix> meas;
  meas.reserve(static_cast<std::size_t>(n * n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j || i > q) {
        meas.push_back(sk * detail::outer(basis.col(i), basis.col(j)));
      } else if (i == 0) {
        const Matrix v0 = kappa_direction(basis, q);
        meas.push_back(sk * v0 / v0.norm());
      } else if (i == 1) {
        const Matrix v1 = unit_direction(basis, q);
        meas.push_back(v1 / v1.norm());
      } else {
        const double p = q - i + 1;
        Matrix a = std::sqrt(p / (p + 1.0)) * detail::outer(basis.col(i - 1), basis.col(i - 1));
        const double w = 1.0 / std::sqrt(p * (p + 1.0));
        for (int k = 0; k < static_cast<int>(p); ++k) {
          a -= w * detail::outer(basis.col(i + k), basis.col(i + k));
        }
        meas.push_back(std::move(a));
      }
    }
  }
  return meas;
}

inline CounterexampleInstance build_from_basis(int n, int r, int r_star, Matrix basis,
                                               BasisMode mode, std::uint64_t seed) {
  detail::check_ranks(n, r, r_star);
  if (basis.rows() != n || basis.cols() != n) {
    throw std::invalid_argument("counterexample: basis must be " + std::to_string(n) + "x" +
                                std::to_string(n));
  }
  const int q = r - r_star + 1;
  const double scale = 1.0 / std::sqrt(1.0 + std::sqrt(static_cast<double>(q)));

  FactorMatrix x(n, r);
  for (int i = 1; i <= q; ++i) x.col(i - 1) = scale * basis.col(i);
  for (int i = q + 1; i <= r; ++i) x.col(i - 1) = basis.col(i);

  FactorMatrix z(n, r_star);
  z.col(0) = basis.col(0);
  for (int i = q + 1; i <= r; ++i) z.col(i - q) = basis.col(i);

  QuadraticObjective obj(counterexample_measurements(basis, q), z);
  return CounterexampleInstance{n,    r,    r_star,   q,       counterexample_kappa(q), mode, seed,
                                std::move(basis), std::move(x), std::move(z), std::move(obj)};
}

inline CounterexampleInstance build_counterexample(int n, int r, int r_star,
                                                   BasisMode mode = BasisMode::Standard,
                                                   std::uint64_t seed = 0) {
  detail::check_ranks(n, r, r_star);
  Matrix basis = mode == BasisMode::Standard ? Matrix(Matrix::Identity(n, n))
                                             : random_orthonormal_basis(n, seed);
  return build_from_basis(n, r, r_star, std::move(basis), mode, seed);
}

struct NamedCheck {
  std::string name;
  double value = 0.0;
  double expected = 0.0;
  double tol = 0.0;
  bool pass = false;
};

struct SpuriousVerification {
  SecondOrderReport report;
  SmoothnessBounds bounds;
  double expected_gap = 0.0;
  std::vector<NamedCheck> checks;

  bool passed() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

/// Checks that X_spur is a spurious second-order point with the closed-form gap.
inline SpuriousVerification verify_spurious(const CounterexampleInstance& inst, double tol = 1e-9) {
  SpuriousVerification v;
  v.report = check_second_order(inst.objective, inst.x_spur, tol);
  v.bounds = smoothness_bounds(inst.objective);
  v.expected_gap = spurious_gap(inst.q);
  const auto& rep = v.report;
  v.checks.push_back({"grad_norm", rep.grad_norm, 0.0, tol, rep.grad_norm <= tol});
  v.checks.push_back({"hess_min_eig", rep.hess_min_eig, 0.0, tol, rep.hess_min_eig >= -tol});
  v.checks.push_back({"gap", rep.gap, v.expected_gap, tol,
                      std::abs(rep.gap - v.expected_gap) <= tol});
  v.checks.push_back({"gap_exceeds_mu", rep.gap - v.bounds.mu, 0.0, 0.0,
                      rep.gap > v.bounds.mu});
  v.checks.push_back({"mu", v.bounds.mu, 1.0, tol, std::abs(v.bounds.mu - 1.0) <= tol});
  v.checks.push_back({"L", v.bounds.L, inst.kappa, tol, std::abs(v.bounds.L - inst.kappa) <= tol});
  return v;
}

inline io::Json to_json(const SpuriousVerification& v) {
  io::Json checks = io::Json::array();
  for (const auto& c : v.checks) {
    checks.push_back({{"name", c.name},
                      {"value", c.value},
                      {"expected", c.expected},
                      {"tol", c.tol},
                      {"pass", c.pass}});
  }
  return io::Json{{"report", to_json(v.report)},
                  {"mu", v.bounds.mu},
                  {"L", v.bounds.L},
                  {"expected_gap", v.expected_gap},
                  {"checks", std::move(checks)},
                  {"passed", v.passed()}};
}

inline io::Json to_json(const CounterexampleInstance& inst) {
  return io::Json{{"n", inst.n},
                  {"r", inst.r},
                  {"r_star", inst.r_star},
                  {"q", inst.q},
                  {"kappa", inst.kappa},
                  {"basis_mode", to_string(inst.basis_mode)},
                  {"seed", inst.seed},
                  {"basis", io::matrix_to_json(inst.basis)},
                  {"X_spur", io::matrix_to_json(inst.x_spur)},
                  {"Z", io::matrix_to_json(inst.z)},
                  {"objective", to_json(inst.objective)}};
}

/// Reads an instance file. Stored matrices are taken verbatim; metadata must be
/// consistent with them.
inline CounterexampleInstance instance_from_json(const io::Json& j, const std::string& where) {
  const auto n = static_cast<int>(io::int_field(j, "n", where));
  const auto r = static_cast<int>(io::int_field(j, "r", where));
  const auto r_star = static_cast<int>(io::int_field(j, "r_star", where));
  try {
    detail::check_ranks(n, r, r_star);
  } catch (const std::invalid_argument& e) {
    throw io::FormatError(where, e.what());
  }
  const auto q = static_cast<int>(io::int_field(j, "q", where));
  if (q != r - r_star + 1) throw io::FormatError(where + ".q", "inconsistent with r and r_star");
  const double kappa = io::number_at(io::field(j, "kappa", where), where + ".kappa");

  const auto& mode_j = io::field(j, "basis_mode", where);
  if (!mode_j.is_string()) throw io::FormatError(where + ".basis_mode", "expected a string");
  const std::string mode_s = mode_j.get<std::string>();
  BasisMode mode;
  if (mode_s == "standard") {
    mode = BasisMode::Standard;
  } else if (mode_s == "random") {
    mode = BasisMode::Random;
  } else {
    throw io::FormatError(where + ".basis_mode", "expected \"standard\" or \"random\"");
  }
  const auto& seed_j = io::field(j, "seed", where);
  if (!seed_j.is_number_unsigned() && !seed_j.is_number_integer()) {
    throw io::FormatError(where + ".seed", "expected an integer");
  }
  const auto seed = seed_j.get<std::uint64_t>();

  Matrix basis = io::matrix_from_json(io::field(j, "basis", where), where + ".basis");
  Matrix x = io::matrix_from_json(io::field(j, "X_spur", where), where + ".X_spur");
  Matrix z = io::matrix_from_json(io::field(j, "Z", where), where + ".Z");
  if (basis.rows() != n || basis.cols() != n) throw io::FormatError(where + ".basis", "wrong shape");
  if (x.rows() != n || x.cols() != r) throw io::FormatError(where + ".X_spur", "wrong shape");
  if (z.rows() != n || z.cols() != r_star) throw io::FormatError(where + ".Z", "wrong shape");
  QuadraticObjective obj = objective_from_json(io::field(j, "objective", where), where + ".objective");
  if (obj.order() != n || obj.rank_star() != r_star) {
    throw io::FormatError(where + ".objective", "order or rank inconsistent with instance");
  }
  return CounterexampleInstance{n,    r,    r_star,          q,           kappa,       mode,
                                seed, std::move(basis), std::move(x), std::move(z), std::move(obj)};
}

}  // namespace bml

#endif  // BMLANDSCAPE_COUNTEREXAMPLE_HPP
