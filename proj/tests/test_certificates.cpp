#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace bml;

namespace {

CounterexampleInstance default_instance() { return build_counterexample(5, 3, 2, BasisMode::Standard, 0); }

/// Variable vector of an SDPA program at (kappa, H[, s]).
std::vector<double> sdpa_point(const CertificateSDP& c, double kappa, const Matrix& h, const Vector& s) {
  std::vector<double> x{kappa, 0.0};
  const Index nn = c.n * c.n;
  for (Index b = 0; b < nn; ++b)
    for (Index a = 0; a <= b; ++a) x.push_back(h(a, b));
  if (c.which == CertificateKind::Lower) {
    const Matrix sm = mat(s, c.n, c.n);
    for (Index j = 0; j < c.n; ++j)
      for (Index i = 0; i <= j; ++i) x.push_back(sm(i, j));
  }
  return x;
}

/// Smallest eigenvalue over all blocks of sum_i F_i x_i - F_0.
double sdpa_min_eig(const SdpaProblem& p, const std::vector<double>& x) {
  std::vector<Matrix> blocks;
  for (int sz : p.block_sizes) blocks.push_back(Matrix::Zero(std::abs(sz), std::abs(sz)));
  for (const auto& e : p.entries) {
    const double w = e.matno == 0 ? -1.0 : x[static_cast<std::size_t>(e.matno - 1)];
    Matrix& m = blocks[static_cast<std::size_t>(e.block - 1)];
    m(e.i - 1, e.j - 1) += w * e.value;
    if (e.i != e.j) m(e.j - 1, e.i - 1) += w * e.value;
  }
  double lo = kInfinity;
  for (const auto& m : blocks) lo = std::min(lo, lambda_min(SymMatrix(m)));
  return lo;
}

}  // namespace

TEST(Assemble, Shapes) {
  const auto inst = default_instance();
  const auto c = assemble(inst.x_spur, inst.z, CertificateKind::Upper);
  EXPECT_EQ(c.e.size(), 25);
  EXPECT_EQ(c.jx.rows(), 25);
  EXPECT_EQ(c.jx.cols(), 15);
  EXPECT_EQ(c.jz.cols(), 10);
}

TEST(Assemble, RejectsCoincidentFactors) {
  Rng rng(1);
  const Matrix x = rng.normal_matrix(4, 2);
  EXPECT_THROW(assemble(x, x, CertificateKind::Upper), std::invalid_argument);
}

TEST(Assemble, JacobianSpotCheck) {
  Rng rng(2);
  const Matrix x = rng.normal_matrix(4, 2), z = rng.normal_matrix(4, 1);
  const auto c = assemble(x, z, CertificateKind::Lower);
  for (int k = 0; k < 10; ++k) {
    const Matrix v = rng.normal_matrix(4, 2);
    EXPECT_LE((c.jx * vec(v) - vec(jacobian_apply(x, v).matrix())).norm(), 1e-12 * std::max(1.0, v.norm()));
  }
}

TEST(VerifyUb, CounterexampleFeasibleAtKappa) {
  const auto inst = default_instance();
  const auto c = assemble(inst.x_spur, inst.z, CertificateKind::Upper);
  const Matrix h = certificate_hessian(inst);
  const auto rep = verify_ub(c, inst.kappa, h);
  EXPECT_TRUE(rep.feasible());
  ASSERT_EQ(rep.residuals.size(), 4u);
  for (const auto& r : rep.residuals) EXPECT_TRUE(r.pass) << r.name << " " << r.value;
}

TEST(VerifyUb, InfeasibleBelowKappa) {
  const auto inst = default_instance();
  const auto c = assemble(inst.x_spur, inst.z, CertificateKind::Upper);
  const auto rep = verify_ub(c, inst.kappa - 0.1, certificate_hessian(inst));
  EXPECT_FALSE(rep.feasible());
  EXPECT_FALSE(rep.at("lambda_min(kappa I - H)").pass);
  EXPECT_NEAR(rep.at("lambda_min(kappa I - H)").value, -0.1, 1e-12);
}

TEST(VerifyUb, IdentityFailsGradientAtGenericPoint) {
  Rng rng(3);
  const auto c = assemble(rng.normal_matrix(4, 2), rng.normal_matrix(4, 1), CertificateKind::Upper);
  const auto rep = verify_ub(c, 2.0, Matrix::Identity(16, 16));
  EXPECT_FALSE(rep.at("||J_X^T H e||").pass);
  EXPECT_GT(rep.at("||J_X^T H e||").value, 1e-3);
}

TEST(VerifyUb, ScaleInvariance) {
  const auto inst = default_instance();
  const Matrix h = certificate_hessian(inst);
  for (double s : {0.1, 0.5, 3.0}) {
    const auto c = assemble(s * inst.x_spur, s * inst.z, CertificateKind::Upper);
    EXPECT_TRUE(verify_ub(c, inst.kappa, h).feasible());
    EXPECT_FALSE(verify_ub(c, inst.kappa - 0.1, h).feasible());
  }
}

TEST(VerifyUb, SweepAcrossShapes) {
  for (int n = 2; n <= 6; ++n)
    for (int r = 1; r < n; ++r)
      for (int rs = 1; rs <= r; ++rs) {
        const auto inst = build_counterexample(n, r, rs, BasisMode::Standard, 0);
        const auto c = assemble(inst.x_spur, inst.z, CertificateKind::Upper);
        EXPECT_TRUE(verify_ub(c, inst.kappa, certificate_hessian(inst)).feasible()) << n << r << rs;
        const auto ev = kappa_lb_closed_form(alpha_beta(inst.x_spur, inst.z));
        EXPECT_NEAR(ev.kappa_lb, inst.kappa, 1e-9);
      }
}

TEST(VerifyLb, ZeroSlackInheritsFeasibility) {
  const auto inst = default_instance();
  const auto c = assemble(inst.x_spur, inst.z, CertificateKind::Lower);
  const auto rep = verify_lb(c, inst.kappa, certificate_hessian(inst), Vector::Zero(25));
  EXPECT_TRUE(rep.feasible());
  EXPECT_EQ(rep.residuals.size(), 6u);
}

TEST(VerifyLb, NegativeSlackIsInfeasible) {
  const auto inst = default_instance();
  const auto c = assemble(inst.x_spur, inst.z, CertificateKind::Lower);
  Matrix s = Matrix::Zero(5, 5);
  s(4, 4) = -1.0;
  const auto rep = verify_lb(c, inst.kappa, certificate_hessian(inst), vec(s));
  EXPECT_FALSE(rep.at("lambda_min(mat(s))").pass);
}

TEST(VerifyLb, AttributesHessianBoundViolation) {
  const auto inst = default_instance();
  const auto c = assemble(inst.x_spur, inst.z, CertificateKind::Lower);
  Matrix h = certificate_hessian(inst);
  h(0, 0) -= 0.5;
  const auto rep = verify_lb(c, inst.kappa, h, Vector::Zero(25));
  EXPECT_FALSE(rep.at("lambda_min(H - I)").pass);
  EXPECT_TRUE(rep.at("lambda_min(kappa I - H)").pass);
  EXPECT_TRUE(rep.at("lambda_min(mat(s))").pass);
}

TEST(EigenEquations, ConstructedHessian) {
  const auto inst = default_instance();
  const auto eqs = eigen_equations(inst, certificate_hessian(inst));
  ASSERT_EQ(eqs.size(), static_cast<std::size_t>(inst.r + 2));
  for (const auto& e : eqs) EXPECT_LE(e.residual, 1e-9) << e.name;
}

TEST(EigenEquations, IdentityHessian) {
  const auto inst = default_instance();
  const auto eqs = eigen_equations(inst, Matrix::Identity(25, 25));
  const Matrix v0 = kappa_direction(inst.basis, inst.q);
  EXPECT_NEAR(eqs[0].residual, (inst.kappa - 1.0) * v0.norm(), 1e-12);
  EXPECT_NEAR(eqs[1].residual, 0.0, 1e-15);
}

TEST(EigenEquations, PerturbationScale) {
  const auto inst = default_instance();
  Rng rng(4);
  Matrix p = oracle::random_sym(rng, 25).matrix();
  p *= 1e-3 / p.norm();
  const auto eqs = eigen_equations(inst, certificate_hessian(inst) + p);
  for (const auto& e : eqs) EXPECT_LE(e.residual, 1e-3 * 10.0);
  double worst = 0.0;
  for (const auto& e : eqs) worst = std::max(worst, e.residual);
  EXPECT_GT(worst, 1e-6);
}

TEST(Witness, EndpointsAndFeasibility) {
  const auto inst = default_instance();
  const auto ab = alpha_beta(inst.x_spur, inst.z);
  const auto w0 = cos_theta_witness(inst.x_spur, inst.z, 0.0);
  EXPECT_NEAR(w0.objective_achieved, std::sqrt(1.0 - ab.alpha * ab.alpha), 1e-12);
  EXPECT_EQ(w0.w.norm(), 0.0);
  EXPECT_TRUE(w0.report.feasible());

  const auto wa = cos_theta_witness(inst.x_spur, inst.z, ab.alpha);
  EXPECT_NEAR(wa.objective_achieved, cos_theta_lb(ab.alpha, ab.beta, ab.alpha * ab.beta), 1e-12);
  EXPECT_NEAR(wa.objective_achieved, 1.0, 1e-12);

  const auto half = cos_theta_witness(inst.x_spur, inst.z, ab.alpha / 2.0);
  for (const auto& r : half.report.residuals) EXPECT_TRUE(r.pass) << r.name << " " << r.value;
  EXPECT_THROW(cos_theta_witness(inst.x_spur, inst.z, ab.alpha * 1.01), std::invalid_argument);
}

TEST(Witness, MatchesLowerBoundFormula) {
  Rng rng(5);
  for (int k = 0; k < 20; ++k) {
    const Matrix x = rng.normal_matrix(5, 2), z = rng.normal_matrix(5, 2);
    const auto ab = alpha_beta(x, z);
    for (double frac : {0.0, 0.25, 0.5, 0.9, 1.0}) {
      const double tau = frac * ab.alpha;
      const auto w = cos_theta_witness(x, z, tau);
      EXPECT_NEAR(w.objective_achieved, cos_theta_lb(ab.alpha, ab.beta, tau * ab.beta), 1e-10);
      EXPECT_TRUE(w.report.feasible());
    }
  }
}

TEST(Sdpa, LayoutCounts) {
  const auto ub = sdpa_layout(2, 1, 1, CertificateKind::Upper);
  EXPECT_EQ(ub.num_vars, 2 + 4 * 5 / 2);
  EXPECT_EQ(ub.block_sizes, (std::vector<int>{4, 4, 2, -6}));
  const auto lb = sdpa_layout(2, 1, 1, CertificateKind::Lower);
  EXPECT_EQ(lb.num_vars, 2 + 10 + 3);
  EXPECT_EQ(lb.block_sizes, (std::vector<int>{4, 4, 2, 2, -10}));

  Matrix x(2, 1), z(2, 1);
  x << 1, 0;
  z << 0, 1;
  for (auto which : {CertificateKind::Upper, CertificateKind::Lower}) {
    const auto p = sdpa_program(assemble(x, z, which));
    const auto l = sdpa_layout(2, 1, 1, which);
    EXPECT_EQ(p.num_vars, l.num_vars);
    EXPECT_EQ(p.block_sizes, l.block_sizes);
    EXPECT_EQ(static_cast<int>(p.c.size()), l.num_vars);
  }
}

TEST(Sdpa, RoundTripAndDeterminism) {
  const auto inst = default_instance();
  for (auto which : {CertificateKind::Upper, CertificateKind::Lower}) {
    const auto c = assemble(inst.x_spur, inst.z, which);
    const auto p = sdpa_program(c);
    const std::string text = to_sdpa_text(p);
    EXPECT_TRUE(parse_sdpa(text) == p);
    const std::string path = oracle::temp_path(std::string("cert_") + to_string(which) + ".dat-s");
    export_sdpa(c, path);
    const std::string first = io::read_file(path);
    export_sdpa(c, path);
    EXPECT_EQ(io::read_file(path), first);
    EXPECT_EQ(first, text);
  }
}

TEST(Sdpa, ProgramEncodesFeasibilitySystem) {
  const auto inst = build_counterexample(3, 2, 1, BasisMode::Standard, 0);
  const Matrix h = certificate_hessian(inst);
  const Index nn = 9;
  for (auto which : {CertificateKind::Upper, CertificateKind::Lower}) {
    const auto c = assemble(inst.x_spur, inst.z, which);
    const auto p = sdpa_program(c);
    EXPECT_GE(sdpa_min_eig(p, sdpa_point(c, inst.kappa, h, Vector::Zero(nn))), -1e-9);
    EXPECT_LT(sdpa_min_eig(p, sdpa_point(c, inst.kappa - 0.1, h, Vector::Zero(nn))), -0.05);
  }
}

TEST(Sdpa, ParserRejectsMalformedText) {
  EXPECT_THROW(parse_sdpa("2\n1\n3\n1\n"), io::FormatError);
  EXPECT_NO_THROW(parse_sdpa("2\n1\n3\n1 1\n"));
  EXPECT_THROW(parse_sdpa("1\n1\n2\n1\n0 1 1 3 1.0\n"), io::FormatError);
  EXPECT_THROW(parse_sdpa(""), io::FormatError);
}

TEST(CertificateJson, RoundTrip) {
  const auto inst = default_instance();
  const auto c = assemble(inst.x_spur, inst.z, CertificateKind::Lower);
  const auto back = certificate_from_json(io::parse(io::dump(to_json(c)), "c"), "c");
  EXPECT_EQ(back.which, CertificateKind::Lower);
  EXPECT_EQ(back.e, c.e);
  EXPECT_EQ(back.jx, c.jx);
  EXPECT_EQ(back.jz, c.jz);
}
