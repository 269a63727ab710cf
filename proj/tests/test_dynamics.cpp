#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace bml;

namespace {

QuadraticObjective scalar_objective() {
  return QuadraticObjective({Matrix::Ones(1, 1)}, Matrix::Ones(1, 1));
}

}  // namespace

TEST(Nesterov, ScalarStep) {
  const auto obj = scalar_objective();
  const auto [x, v] = nesterov_step(obj, Matrix::Constant(1, 1, 2.0), Matrix::Zero(1, 1), 0.01, 0.9);
  EXPECT_NEAR(v(0, 0), -0.12, 1e-15);
  EXPECT_NEAR(x(0, 0), 1.772, 1e-15);
}

TEST(Nesterov, StationaryPointIsFixed) {
  const auto inst = build_counterexample(5, 3, 2, BasisMode::Standard, 0);
  const auto [x, v] = nesterov_step(inst.objective, inst.z, Matrix::Zero(5, 2), 0.005, 0.9);
  EXPECT_LE((x - inst.z).norm(), 1e-14);
  EXPECT_LE(v.norm(), 1e-14);
}

TEST(Nesterov, ZeroMomentumIsGradientDescent) {
  Rng rng(1);
  const auto obj = oracle::random_objective(rng, 4, 2);
  const Matrix x0 = rng.normal_matrix(4, 3);
  const auto [x, v] = nesterov_step(obj, x0, rng.normal_matrix(4, 3), 0.01, 0.0);
  EXPECT_LE((x - (x0 - 0.01 * f_grad(obj, x0))).norm(), 1e-14);
}

TEST(SampleNear, TinyRadiusStaysAtCenter) {
  Rng rng(2);
  const Matrix c = rng.normal_matrix(5, 3);
  EXPECT_LE((sample_near(c, 1e-300, 9) - c).norm(), 1e-290);
}

TEST(SampleNear, SeedDeterministic) {
  const Matrix c = Matrix::Zero(5, 4);
  EXPECT_EQ(sample_near(c, 0.05, 11), sample_near(c, 0.05, 11));
  EXPECT_NE(sample_near(c, 0.05, 11), sample_near(c, 0.05, 12));
  EXPECT_LE(sample_near(c, 0.05, 11).norm(), 0.05);
}

TEST(SampleNear, RadialMomentOfUniformBall) {
  const Matrix c = Matrix::Zero(5, 4);
  double sum = 0.0;
  const int count = 10000;
  for (int k = 0; k < count; ++k) sum += sample_near(c, 0.05, derive_seed(3, k)).norm() / 0.05;
  EXPECT_NEAR(sum / count, 20.0 / 21.0, 0.01 * 20.0 / 21.0);
}

TEST(SampleNear, RejectsNonPositiveRadius) {
  EXPECT_THROW(sample_near(Matrix::Zero(2, 2), 0.0, 1), std::invalid_argument);
}

TEST(TrialConfig, Validation) {
  TrialConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.momentum = 1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = TrialConfig{};
  cfg.learning_rate = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = TrialConfig{};
  cfg.radius = -1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Trials, GlobalFactorSucceedsImmediately) {
  const auto inst = build_counterexample(5, 3, 2, BasisMode::Standard, 0);
  TrialConfig cfg;
  cfg.trials = 1;
  const auto rec = run_trajectory(inst.objective, inst.z, inst.z, cfg);
  EXPECT_EQ(rec.outcome, Outcome::Success);
  EXPECT_EQ(rec.iters, 0);
}

TEST(Trials, RejectsRankBelowCenter) {
  const auto inst = build_counterexample(5, 3, 2, BasisMode::Standard, 0);
  TrialConfig cfg;
  cfg.search_rank = 2;
  EXPECT_THROW(run_trials(inst, cfg), std::invalid_argument);
}

TEST(Trials, ThreadCountDoesNotChangeResults) {
  const auto inst = build_counterexample(5, 3, 2, BasisMode::Standard, 0);
  TrialConfig cfg;
  cfg.trials = 12;
  cfg.max_iters = 500;
  cfg.search_rank = 4;
  cfg.threads = 1;
  const std::string one = to_csv(run_trials(inst, cfg));
  cfg.threads = 3;
  EXPECT_EQ(to_csv(run_trials(inst, cfg)), one);
}

TEST(Trials, OverparameterizedRankEscapes) {
  const auto inst = build_counterexample(5, 3, 2, BasisMode::Standard, 0);
  EXPECT_LT(f_hess_min_eig(inst.objective, pad_columns(inst.x_spur, 4)), 0.0);
  TrialConfig cfg;
  cfg.trials = 10;
  cfg.search_rank = 4;
  const auto rep = run_trials(inst, cfg);
  EXPECT_EQ(rep.successes, 10);
  for (const auto& r : rep.records) EXPECT_LE(r.final_f, cfg.success_tol);
}

TEST(Trials, OutcomesPartitionAndClassify) {
  const auto inst = build_counterexample(5, 3, 2, BasisMode::Standard, 0);
  TrialConfig cfg;
  cfg.trials = 8;
  cfg.max_iters = 300;
  const auto rep = run_trials(inst, cfg);
  EXPECT_EQ(rep.successes + rep.stuck + rep.undetermined, cfg.trials);
  for (const auto& r : rep.records) {
    if (r.outcome == Outcome::Success) EXPECT_LE(r.final_f, cfg.success_tol);
    if (r.outcome == Outcome::Stuck) EXPECT_GE(r.final_f, cfg.stuck_tol);
  }
}

TEST(Trials, StuckTrajectoriesStayNearSpuriousValue) {
  const auto inst = build_counterexample(5, 3, 2, BasisMode::Standard, 0);
  const double f_spur = f_eval(inst.objective, inst.x_spur);
  TrialConfig cfg;
  cfg.trials = 10;
  const auto rep = run_trials(inst, cfg);
  for (const auto& r : rep.records) {
    if (r.outcome != Outcome::Stuck) continue;
    EXPECT_NEAR(r.final_f, f_spur, 0.05);
  }
}

TEST(Trials, CsvShape) {
  const auto inst = build_counterexample(5, 3, 2, BasisMode::Standard, 0);
  TrialConfig cfg;
  cfg.trials = 5;
  cfg.max_iters = 10;
  const std::string csv = to_csv(run_trials(inst, cfg));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kTrialsCsvHeader);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
  const auto j = summary_json(run_trials(inst, cfg));
  EXPECT_EQ(j.at("rng").get<std::string>(), kRngName);
  EXPECT_FALSE(j.at("config").contains("threads"));
}
