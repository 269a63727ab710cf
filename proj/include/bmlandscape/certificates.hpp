#ifndef BMLANDSCAPE_CERTIFICATES_HPP
#define BMLANDSCAPE_CERTIFICATES_HPP

// Feasibility systems whose solutions certify a spurious second-order point at
// (X, Z), explicit certificate checks, and SDPA sparse export.
//
//   ub:  I <= H <= kappa I,  J_X^T H e = 0,  J_X^T H J_X + 2 I_r (x) mat(He) >= 0
//   lb:  I <= H <= kappa I,  mat(s) >= 0,  J_Z^T s = 0,  J_X^T (He + s) = 0,
//        kappa J_X^T J_X + 2 I_r (x) mat(He + s) >= 0
//
// with e = vec(X X^T - Z Z^T).

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "bmlandscape/bounds.hpp"
#include "bmlandscape/counterexample.hpp"
#include "bmlandscape/io.hpp"
#include "bmlandscape/matkernel.hpp"

namespace bml {

enum class CertificateKind { Upper, Lower };

inline const char* to_string(CertificateKind k) { return k == CertificateKind::Upper ? "ub" : "lb"; }

inline CertificateKind certificate_kind_from_string(const std::string& s) {
  if (s == "ub") return CertificateKind::Upper;
  if (s == "lb") return CertificateKind::Lower;
  throw std::invalid_argument("certificate kind must be \"ub\" or \"lb\", got \"" + s + "\"");
}

struct CertificateSDP {
  Index n = 0;
  Index r = 0;
  Index r_star = 0;
  CertificateKind which = CertificateKind::Upper;
  FactorMatrix x;
  FactorMatrix z;
  Vector e;
  Matrix jx;
  Matrix jz;
};

inline CertificateSDP assemble(const FactorMatrix& x, const FactorMatrix& z, CertificateKind which) {
  if (x.rows() != z.rows()) {
    throw std::invalid_argument("assemble: X and Z must have the same number of rows");
  }
  if (x.cols() < 1 || z.cols() < 1) throw std::invalid_argument("assemble: empty factor");
  CertificateSDP c;
  c.n = x.rows();
  c.r = x.cols();
  c.r_star = z.cols();
  c.which = which;
  c.x = x;
  c.z = z;
  c.e = vec(x * x.transpose() - z * z.transpose());
  if (!(c.e.norm() > 1e-12)) {
    throw std::invalid_argument("assemble: X X^T == Z Z^T, error vector e vanishes");
  }
  c.jx = jacobian_matrix(x);
  c.jz = jacobian_matrix(z);
  return c;
}

inline io::Json to_json(const CertificateSDP& c) {
  return io::Json{{"which", to_string(c.which)},
                  {"n", c.n},
                  {"r", c.r},
                  {"r_star", c.r_star},
                  {"X", io::matrix_to_json(c.x)},
                  {"Z", io::matrix_to_json(c.z)},
                  {"e", io::vector_to_json(c.e)},
                  {"J_X", io::matrix_to_json(c.jx)},
                  {"J_Z", io::matrix_to_json(c.jz)}};
}

inline CertificateSDP certificate_from_json(const io::Json& j, const std::string& where) {
  CertificateSDP c;
  const auto& w = io::field(j, "which", where);
  if (!w.is_string()) throw io::FormatError(where + ".which", "expected a string");
  try {
    c.which = certificate_kind_from_string(w.get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw io::FormatError(where + ".which", e.what());
  }
  c.n = io::int_field(j, "n", where);
  c.r = io::int_field(j, "r", where);
  c.r_star = io::int_field(j, "r_star", where);
  c.x = io::matrix_from_json(io::field(j, "X", where), where + ".X");
  c.z = io::matrix_from_json(io::field(j, "Z", where), where + ".Z");
  c.e = io::vector_from_json(io::field(j, "e", where), where + ".e");
  c.jx = io::matrix_from_json(io::field(j, "J_X", where), where + ".J_X");
  c.jz = io::matrix_from_json(io::field(j, "J_Z", where), where + ".J_Z");
  const Index nn = c.n * c.n;
  const auto expect = [&](const Matrix& m, Index rows, Index cols, const char* name) {
    if (m.rows() != rows || m.cols() != cols) {
      throw io::FormatError(where + "." + name, "expected " + std::to_string(rows) + "x" +
                                                    std::to_string(cols));
    }
  };
  expect(c.x, c.n, c.r, "X");
  expect(c.z, c.n, c.r_star, "Z");
  if (c.e.size() != nn) throw io::FormatError(where + ".e", "expected length " + std::to_string(nn));
  expect(c.jx, nn, c.n * c.r, "J_X");
  expect(c.jz, nn, c.n * c.r_star, "J_Z");
  return c;
}

struct Residual {
  std::string name;
  double value = 0.0;
  /// Norm residuals must be <= tol; eigenvalue residuals must be >= -tol.
  bool is_norm = false;
  bool pass = false;
};

struct FeasibilityReport {
  double kappa = 0.0;
  double tol = 1e-8;
  std::vector<Residual> residuals;

  void add(std::string name, double value, bool is_norm) {
    const bool ok = is_norm ? value <= tol : value >= -tol;
    residuals.push_back({std::move(name), value, is_norm, ok});
  }
  bool feasible() const {
    for (const auto& r : residuals)
      if (!r.pass) return false;
    return true;
  }
  const Residual& at(const std::string& name) const {
    for (const auto& r : residuals)
      if (r.name == name) return r;
    throw std::out_of_range("FeasibilityReport: no residual named " + name);
  }
};

inline io::Json to_json(const FeasibilityReport& rep) {
  io::Json res = io::Json::array();
  for (const auto& r : rep.residuals) {
    res.push_back({{"name", r.name},
                   {"value", r.value},
                   {"kind", r.is_norm ? "norm" : "min_eig"},
                   {"pass", r.pass}});
  }
  return io::Json{{"kappa", rep.kappa},
                  {"tol", rep.tol},
                  {"residuals", std::move(res)},
                  {"feasible", rep.feasible()}};
}

namespace detail {

inline void check_hessian_shape(const CertificateSDP& c, const Matrix& h, const char* what) {
  const Index nn = c.n * c.n;
  if (h.rows() != nn || h.cols() != nn) {
    throw std::invalid_argument(std::string(what) + ": H is " + std::to_string(h.rows()) + "x" +
                                std::to_string(h.cols()) + ", expected " + std::to_string(nn) +
                                "x" + std::to_string(nn));
  }
}

inline void check_kappa(double kappa, const char* what) {
  if (!(kappa >= 1.0)) throw std::invalid_argument(std::string(what) + ": kappa must be >= 1");
}

/// 2 I_r (x) sym(mat(g)) for an n^2-vector g.
inline Matrix kron_identity_mat(const Vector& g, Index n, Index r) {
  return 2.0 * kron(Matrix::Identity(r, r), sym_part(mat(g, n, n)));
}

inline double min_eig(const Matrix& m) { return lambda_min(SymMatrix(m)); }

}  // namespace detail

inline FeasibilityReport verify_ub(const CertificateSDP& c, double kappa, const Matrix& h,
                                   double tol = 1e-8) {
  detail::check_kappa(kappa, "verify_ub");
  detail::check_hessian_shape(c, h, "verify_ub");
  const Index nn = c.n * c.n;
  const Matrix id = Matrix::Identity(nn, nn);
  const Vector he = h * c.e;
  FeasibilityReport rep;
  rep.kappa = kappa;
  rep.tol = tol;
  rep.add("lambda_min(H - I)", detail::min_eig(h - id), false);
  rep.add("lambda_min(kappa I - H)", detail::min_eig(kappa * id - h), false);
  rep.add("||J_X^T H e||", (c.jx.transpose() * he).norm(), true);
  rep.add("lambda_min(J_X^T H J_X + 2 I_r (x) mat(He))",
          detail::min_eig(c.jx.transpose() * h * c.jx + detail::kron_identity_mat(he, c.n, c.r)),
          false);
  return rep;
}

inline FeasibilityReport verify_lb(const CertificateSDP& c, double kappa, const Matrix& h,
                                   const Vector& s, double tol = 1e-8) {
  detail::check_kappa(kappa, "verify_lb");
  detail::check_hessian_shape(c, h, "verify_lb");
  const Index nn = c.n * c.n;
  if (s.size() != nn) {
    throw std::invalid_argument("verify_lb: s has length " + std::to_string(s.size()) +
                                ", expected " + std::to_string(nn));
  }
  const Matrix id = Matrix::Identity(nn, nn);
  const Vector g = h * c.e + s;
  FeasibilityReport rep;
  rep.kappa = kappa;
  rep.tol = tol;
  rep.add("lambda_min(H - I)", detail::min_eig(h - id), false);
  rep.add("lambda_min(kappa I - H)", detail::min_eig(kappa * id - h), false);
  rep.add("lambda_min(mat(s))", detail::min_eig(mat(s, c.n, c.n)), false);
  rep.add("||J_Z^T s||", (c.jz.transpose() * s).norm(), true);
  rep.add("||J_X^T (He + s)||", (c.jx.transpose() * g).norm(), true);
  rep.add("lambda_min(kappa J_X^T J_X + 2 I_r (x) mat(He + s))",
          detail::min_eig(kappa * c.jx.transpose() * c.jx + detail::kron_identity_mat(g, c.n, c.r)),
          false);
  return rep;
}

/// sum_k vec(A_k) vec(A_k)^T over the raw measurements.
inline Matrix certificate_hessian(const CounterexampleInstance& inst) {
  const Index nn = static_cast<Index>(inst.n) * inst.n;
  Matrix h = Matrix::Zero(nn, nn);
  for (const auto& a : inst.objective.measurements()) {
    const Vector v = vec(a);
    h.noalias() += v * v.transpose();
  }
  return sym_part(h);
}

struct EigenEquation {
  std::string name;
  double eigenvalue = 0.0;
  double residual = 0.0;
};

/// Residual norms ||H vec(V) - lambda vec(V)|| for the r + 2 eigenpairs that
/// pin down the spectrum of H at the counterexample.
inline std::vector<EigenEquation> eigen_equations(const CounterexampleInstance& inst, const Matrix& h) {
  const Index nn = static_cast<Index>(inst.n) * inst.n;
  if (h.rows() != nn || h.cols() != nn) {
    throw std::invalid_argument("eigen_equations: H must be " + std::to_string(nn) + "x" +
                                std::to_string(nn));
  }
  std::vector<EigenEquation> out;
  const auto push = [&](std::string name, const Matrix& v, double lambda) {
    const Vector x = vec(v);
    out.push_back({std::move(name), lambda, (h * x - lambda * x).norm()});
  };
  push("V0", kappa_direction(inst.basis, inst.q), inst.kappa);
  push("V1", unit_direction(inst.basis, inst.q), 1.0);
  const Vector u0 = inst.u(0);
  for (int i = 1; i <= inst.r; ++i) {
    const Vector ui = inst.u(i);
    push("u0u" + std::to_string(i), u0 * ui.transpose() + ui * u0.transpose(), inst.kappa);
  }
  return out;
}

struct WitnessResult {
  double tau = 0.0;
  double objective_achieved = 0.0;
  double objective_expected = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  Vector y;
  Matrix w;
  Vector f;
  FeasibilityReport report;
};

/// Plugs the explicit dual witness
///   y = g1 J_X^+ e,   W = g2 (v_r v_r^T) (x) (Zp Zp^T),
///   g1 = sqrt(1 - tau^2) / (||e|| ||e1||),  g2 = tau / (||e|| ||e2||)
/// into the cos(theta) program and checks every constraint. v_r is the right
/// singular vector of the smallest singular value of X. The inner-product
/// constraint reads <J_X^T J_X, W> = 2 tau beta.
inline WitnessResult cos_theta_witness(const FactorMatrix& x, const FactorMatrix& z, double tau,
                                       double tol = 1e-8) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("cos_theta_witness: tau must lie in [0, 1]");
  const AlphaBeta ab = alpha_beta(x, z);
  if (tau > ab.alpha * (1.0 + 1e-12)) {
    throw std::invalid_argument("cos_theta_witness: tau = " + io::format_double(tau) +
                                " exceeds alpha = " + io::format_double(ab.alpha));
  }
  const Index n = x.rows();
  const Index r = x.cols();
  if (numerical_rank(x) < r) throw std::invalid_argument("cos_theta_witness: X must have full column rank");

  WitnessResult out;
  out.tau = tau;
  out.alpha = ab.alpha;
  out.beta = ab.beta;
  const Vector e = vec(x * x.transpose() - z * z.transpose());
  const Matrix jx = jacobian_matrix(x);
  const Matrix jx_pinv = pinv(jx);
  const Vector e1 = jx * (jx_pinv * e);
  const Vector e2 = e - e1;
  const double en = e.norm();
  const double e1n = e1.norm();
  const double e2n = e2.norm();
  const double g1 = e1n > 1e-14 * en ? std::sqrt(1.0 - tau * tau) / (en * e1n) : 0.0;
  const double g2 = e2n > 1e-14 * en ? tau / (en * e2n) : 0.0;

  Eigen::JacobiSVD<Matrix> svd(x, Eigen::ComputeFullV);
  const Vector vr = svd.matrixV().col(r - 1);
  const Matrix zp_outer = ab.z_perp * ab.z_perp.transpose();

  out.y = g1 * (jx_pinv * e);
  out.w = g2 * kron(vr * vr.transpose(), zp_outer);
  Vector diag_sum = Vector::Zero(n * n);
  for (Index i = 0; i < r; ++i) diag_sum += vec(out.w.block(i * n, i * n, n, n));
  out.f = jx * out.y - diag_sum;

  const Matrix pi = Matrix::Identity(n, n) - z * pinv(z);
  out.objective_achieved = e.dot(out.f);
  out.objective_expected =
      std::sqrt(1.0 - tau * tau) * std::sqrt(std::max(0.0, 1.0 - ab.alpha * ab.alpha)) +
      tau * ab.alpha;

  FeasibilityReport& rep = out.report;
  rep.tol = tol;
  rep.add("| ||e|| ||f|| - 1 |", std::abs(en * out.f.norm() - 1.0), true);
  rep.add("lambda_min(W)", detail::min_eig(out.w), false);
  rep.add("lambda_min((I - ZZ^+) mat(f) (I - ZZ^+))",
          detail::min_eig(pi * mat(out.f, n, n) * pi), false);
  rep.add("| <J_X^T J_X, W> - 2 tau beta |",
          std::abs((jx.transpose() * jx).cwiseProduct(out.w).sum() - 2.0 * tau * ab.beta), true);
  rep.add("| e^T f - objective |", std::abs(out.objective_achieved - out.objective_expected), true);
  return out;
}

inline io::Json to_json(const WitnessResult& w) {
  return io::Json{{"tau", w.tau},
                  {"alpha", w.alpha},
                  {"beta", w.beta},
                  {"objective_achieved", w.objective_achieved},
                  {"objective_expected", w.objective_expected},
                  {"report", to_json(w.report)}};
}

// ---------------------------------------------------------------------------
// SDPA sparse (.dat-s) export. Layout is documented in docs/sdpa_layout.md.

struct SdpaEntry {
  int matno = 0;
  int block = 0;
  int i = 0;
  int j = 0;
  double value = 0.0;

  bool operator==(const SdpaEntry&) const = default;
};

struct SdpaProblem {
  std::vector<std::string> comments;
  int num_vars = 0;
  std::vector<int> block_sizes;
  std::vector<double> c;
  std::vector<SdpaEntry> entries;

  bool operator==(const SdpaProblem& o) const {
    return num_vars == o.num_vars && block_sizes == o.block_sizes && c == o.c && entries == o.entries;
  }
};

struct SdpaLayout {
  int num_vars = 0;
  std::vector<int> block_sizes;
};

/// Variables: kappa+, kappa-, then h_ab (a <= b, column-major upper triangle of
/// the N x N matrix H, N = n^2), then for lb sigma_ij (i <= j) of mat(s).
inline SdpaLayout sdpa_layout(Index n, Index r, Index r_star, CertificateKind which) {
  const auto nn = static_cast<int>(n * n);
  const auto nr = static_cast<int>(n * r);
  SdpaLayout l;
  l.num_vars = 2 + nn * (nn + 1) / 2;
  if (which == CertificateKind::Upper) {
    l.block_sizes = {nn, nn, nr, -(2 * nr + 2)};
  } else {
    l.num_vars += static_cast<int>(n * (n + 1) / 2);
    l.block_sizes = {nn, nn, static_cast<int>(n), nr, -(2 * static_cast<int>(n * r_star) + 2 * nr + 2)};
  }
  return l;
}

namespace detail {

/// Collects entries of one variable; upper triangle, exact zeros dropped.
class SdpaBuilder {
 public:
  explicit SdpaBuilder(std::vector<SdpaEntry>& out) : out_(out) {}

  void dense(int matno, int block, const Matrix& m) {
    for (Index j = 0; j < m.cols(); ++j)
      for (Index i = 0; i <= j; ++i) put(matno, block, static_cast<int>(i), static_cast<int>(j), m(i, j));
  }
  void diagonal(int matno, int block, int offset, const Vector& v) {
    for (Index k = 0; k < v.size(); ++k) {
      const int d = offset + static_cast<int>(k);
      put(matno, block, d, d, v(k));
    }
  }

 private:
  void put(int matno, int block, int i, int j, double v) {
    if (v != 0.0) out_.push_back({matno, block, i + 1, j + 1, v});
  }
  std::vector<SdpaEntry>& out_;
};

/// e_a e_b^T + e_b e_a^T for a != b, e_a e_a^T on the diagonal.
inline Matrix unit_sym(Index dim, Index a, Index b) {
  Matrix e = Matrix::Zero(dim, dim);
  e(a, b) = 1.0;
  e(b, a) = 1.0;
  return e;
}

}  // namespace detail

inline SdpaProblem sdpa_program(const CertificateSDP& c) {
  const Index n = c.n;
  const Index nn = n * n;
  const Index nr = n * c.r;
  const Index nrs = n * c.r_star;
  const bool lower = c.which == CertificateKind::Lower;
  const SdpaLayout layout = sdpa_layout(n, c.r, c.r_star, c.which);

  SdpaProblem p;
  p.comments.push_back(std::string("\"bmlandscape ") + to_string(c.which) + " program n=" +
                       std::to_string(n) + " r=" + std::to_string(c.r) +
                       " r_star=" + std::to_string(c.r_star) + "\"");
  p.comments.push_back("\"variables: kappa+ kappa- h_ab(a<=b)" +
                       std::string(lower ? " sigma_ij(i<=j)" : "") + "\"");
  p.num_vars = layout.num_vars;
  p.block_sizes = layout.block_sizes;
  p.c.assign(static_cast<std::size_t>(p.num_vars), 0.0);
  p.c[0] = 1.0;
  p.c[1] = -1.0;

  detail::SdpaBuilder b(p.entries);
  const Matrix jtj = c.jx.transpose() * c.jx;
  const int lp = lower ? 5 : 4;
  const int lmi = lower ? 4 : 3;
  // Diagonal LP block: [J_Z^T s >= 0, -J_Z^T s >= 0,] [g >= 0, -g >= 0], kappa+ >= 0, kappa- >= 0.
  const int g_off = lower ? static_cast<int>(2 * nrs) : 0;
  const int k_off = g_off + static_cast<int>(2 * nr);

  // F0
  b.dense(0, 1, Matrix::Identity(nn, nn));

  // kappa+ and kappa-
  for (int sign = 0; sign < 2; ++sign) {
    const int matno = 1 + sign;
    const double sg = sign == 0 ? 1.0 : -1.0;
    b.dense(matno, 2, sg * Matrix::Identity(nn, nn));
    if (lower) b.dense(matno, lmi, sg * jtj);
    Vector unit = Vector::Zero(2);
    unit(sign) = 1.0;
    b.diagonal(matno, lp, k_off, unit);
  }

  // h_ab
  int matno = 3;
  for (Index bb = 0; bb < nn; ++bb) {
    for (Index a = 0; a <= bb; ++a, ++matno) {
      const Matrix eab = detail::unit_sym(nn, a, bb);
      b.dense(matno, 1, eab);
      b.dense(matno, 2, -eab);
      const Vector he = eab * c.e;
      const Matrix k = detail::kron_identity_mat(he, n, c.r);
      b.dense(matno, lmi, lower ? k : Matrix(c.jx.transpose() * eab * c.jx + k));
      const Vector g = c.jx.transpose() * he;
      Vector paired(2 * nr);
      paired << g, -g;
      b.diagonal(matno, lp, g_off, paired);
    }
  }

  // sigma_ij
  if (lower) {
    for (Index j = 0; j < n; ++j) {
      for (Index i = 0; i <= j; ++i, ++matno) {
        const Matrix sij = detail::unit_sym(n, i, j);
        const Vector s = vec(sij);
        b.dense(matno, 3, sij);
        b.dense(matno, lmi, detail::kron_identity_mat(s, n, c.r));
        const Vector gz = c.jz.transpose() * s;
        const Vector gx = c.jx.transpose() * s;
        Vector paired(2 * nrs + 2 * nr);
        paired << gz, -gz, gx, -gx;
        b.diagonal(matno, lp, 0, paired);
      }
    }
  }
  return p;
}

inline std::string to_sdpa_text(const SdpaProblem& p) {
  std::string out;
  for (const auto& c : p.comments) out += c + "\n";
  out += std::to_string(p.num_vars) + "\n";
  out += std::to_string(p.block_sizes.size()) + "\n";
  for (std::size_t k = 0; k < p.block_sizes.size(); ++k) {
    out += (k ? " " : "") + std::to_string(p.block_sizes[k]);
  }
  out += "\n";
  for (std::size_t k = 0; k < p.c.size(); ++k) out += (k ? " " : "") + io::format_double(p.c[k]);
  out += "\n";
  for (const auto& e : p.entries) {
    out += std::to_string(e.matno) + " " + std::to_string(e.block) + " " + std::to_string(e.i) +
           " " + std::to_string(e.j) + " " + io::format_double(e.value) + "\n";
  }
  return out;
}

/// Reads the subset of SDPA sparse format written by to_sdpa_text.
inline SdpaProblem parse_sdpa(const std::string& text, const std::string& where = "sdpa") {
  std::istringstream in(text);
  std::string line;
  SdpaProblem p;
  int lineno = 0;
  const auto next_data_line = [&]() -> std::string {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      if (line[0] == '"' || line[0] == '*') {
        p.comments.push_back(line);
        continue;
      }
      return line;
    }
    throw io::FormatError(where, "unexpected end of file");
  };
  const auto loc = [&] { return where + ":" + std::to_string(lineno); };
  {
    std::istringstream ls(next_data_line());
    if (!(ls >> p.num_vars) || p.num_vars < 1) throw io::FormatError(loc(), "bad variable count");
  }
  int nblocks = 0;
  {
    std::istringstream ls(next_data_line());
    if (!(ls >> nblocks) || nblocks < 1) throw io::FormatError(loc(), "bad block count");
  }
  {
    std::istringstream ls(next_data_line());
    for (int k = 0; k < nblocks; ++k) {
      int s = 0;
      if (!(ls >> s) || s == 0) throw io::FormatError(loc(), "bad block size");
      p.block_sizes.push_back(s);
    }
  }
  {
    std::istringstream ls(next_data_line());
    for (int k = 0; k < p.num_vars; ++k) {
      double v = 0.0;
      if (!(ls >> v)) throw io::FormatError(loc(), "bad objective vector");
      p.c.push_back(v);
    }
  }
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    SdpaEntry e;
    if (!(ls >> e.matno >> e.block >> e.i >> e.j >> e.value)) {
      throw io::FormatError(loc(), "expected 'matno block i j value'");
    }
    if (e.matno < 0 || e.matno > p.num_vars) throw io::FormatError(loc(), "matrix index out of range");
    if (e.block < 1 || e.block > nblocks) throw io::FormatError(loc(), "block index out of range");
    const int dim = std::abs(p.block_sizes[static_cast<std::size_t>(e.block - 1)]);
    if (e.i < 1 || e.j < e.i || e.j > dim) throw io::FormatError(loc(), "entry index out of range");
    p.entries.push_back(e);
  }
  return p;
}

inline void export_sdpa(const CertificateSDP& c, const std::string& path) {
  io::write_file(path, to_sdpa_text(sdpa_program(c)));
}

}  // namespace bml

#endif  // BMLANDSCAPE_CERTIFICATES_HPP
