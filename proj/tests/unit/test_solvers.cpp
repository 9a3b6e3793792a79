#include <cmath>
#include <memory>
#include <vector>

#include <gtest/gtest.h>

#include "ssnm/data.hpp"
#include "ssnm/errors.hpp"
#include "ssnm/reference.hpp"
#include "ssnm/sampler.hpp"
#include "ssnm/solvers.hpp"

using namespace ssnm;

namespace {

Problem synthetic(std::size_t n, std::size_t d, double kappa, LossKind loss,
                  std::uint64_t seed = 4, double l1 = 0.0) {
  SyntheticSpec spec;
  spec.n = n;
  spec.d = d;
  spec.target_kappa = kappa;
  spec.loss = loss;
  spec.seed = seed;
  spec.noise = 0.1;
  SyntheticProblem sp = generate_synthetic(spec);
  return Problem(std::make_shared<const Dataset>(std::move(sp.data)), loss,
                 Regularizer{l1, sp.lambda2});
}

Reference solve(const Problem& p) {
  const ReferenceSolution s = reference_solve(p, 1e-13);
  return Reference{s.x, s.value};
}

SolverConfig config(Algorithm algo, std::size_t epochs, std::uint64_t seed = 1) {
  SolverConfig c;
  c.algorithm = algo;
  c.epochs = epochs;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(Sampler, ChiSquareUniformity) {
  IndexSampler sampler(123);
  constexpr std::size_t n = 10;
  constexpr int draws = 1000000;
  std::vector<int> counts(n, 0);
  for (int k = 0; k < draws; ++k) ++counts[sampler(n)];
  double chi2 = 0.0;
  const double expected = static_cast<double>(draws) / n;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // 99.9% quantile of chi-square with 9 degrees of freedom.
  EXPECT_LT(chi2, 27.877);
}

TEST(Sampler, StreamIsFixedBySeed) {
  IndexSampler a(77), b(77);
  for (int k = 0; k < 1000; ++k) ASSERT_EQ(a(997), b(997));
  IndexSampler one(5);
  for (int k = 0; k < 100; ++k) ASSERT_EQ(one(1), 0u);
}

TEST(SsnmStep, FirstStepIsFullGradientProxStep) {
  const Problem p = synthetic(30, 6, 100.0, LossKind::logistic, 4, 1e-3);
  const Vector x1 = Vector::LinSpaced(6, -0.5, 0.5);
  const Schedule s = make_schedule(p.n(), p.L(), p.mu());
  SsnmState state = SsnmState::init(p, x1);
  ssnm_step(state, p, s, 17, 3);
  const Vector expected = prox(p.regularizer(), x1, smooth_gradient(p, x1), s.eta);
  EXPECT_LE((state.x - expected).norm(), 1e-14);
}

TEST(SsnmStep, SamplerDrawsSampleThenSlot) {
  const Problem p = synthetic(25, 5, 1e3, LossKind::logistic);
  const Schedule s = make_schedule(p.n(), p.L(), p.mu());
  SsnmState a = SsnmState::init(p, Vector::Zero(5));
  SsnmState b = a;
  IndexSampler sampler(9), draws(9);
  for (int k = 0; k < 200; ++k) {
    ssnm_step(a, p, s, sampler);
    const std::size_t i = draws(25);
    const std::size_t slot = draws(25);
    ssnm_step(b, p, s, i, slot);
  }
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.table.points(), b.table.points());
}

TEST(SsnmStep, ForcedEqualDrawsMatchVariant) {
  const Problem p = synthetic(25, 5, 1e3, LossKind::logistic);
  const Schedule s = make_schedule(p.n(), p.L(), p.mu());
  SsnmState a = SsnmState::init(p, Vector::Zero(5));
  SsnmState b = a;
  IndexSampler sampler(10), draws(10);
  for (int k = 0; k < 200; ++k) {
    ssnm_step(a, p, s, sampler, true);
    const std::size_t i = draws(25);
    ssnm_step(b, p, s, i, i);
  }
  EXPECT_EQ(a.x, b.x);
}

TEST(SsnmStep, TableEntryIsCoupledPoint) {
  const Problem p = synthetic(10, 4, 1e3, LossKind::squared);
  const Schedule s = make_schedule(p.n(), p.L(), p.mu());
  SsnmState state = SsnmState::init(p, Vector::Ones(4));
  const Vector phi_old = state.table.point(6);
  ssnm_step(state, p, s, 2, 6);
  const Vector expected = s.tau * state.x + (1.0 - s.tau) * phi_old;
  EXPECT_LE((Vector(state.table.point(6)) - expected).norm(), 1e-15);
  EXPECT_EQ(Vector(state.table.gradient(6)), component_gradient(p, 6, state.table.point(6)));
}

TEST(SsnmRun, DeterministicForSeed) {
  const Problem p = synthetic(50, 8, 1e3, LossKind::logistic);
  const RunTrace a = ssnm_run(p, config(Algorithm::ssnm, 5, 42));
  const RunTrace b = ssnm_run(p, config(Algorithm::ssnm, 5, 42));
  const RunTrace c = ssnm_run(p, config(Algorithm::ssnm, 5, 43));
  EXPECT_EQ(a.final_x, b.final_x);
  EXPECT_NE(a.final_x, c.final_x);
}

TEST(SsnmRun, OneDimensionalQuadratic) {
  // f(x) = (2x - 1)^2 / 2, h(x) = 2 x^2, so x* = 1/4.
  SparseRows a(1, 1);
  a.insert(0, 0) = 2.0;
  const Problem p(std::make_shared<const Dataset>(std::move(a), Vector::Ones(1)),
                  LossKind::squared, Regularizer{0.0, 4.0});
  const RunTrace t = ssnm_run(p, config(Algorithm::ssnm, 200));
  EXPECT_LT((t.final_x - Vector::Constant(1, 0.25)).squaredNorm(), 1e-20);
}

TEST(SsnmRun, ZeroEpochsGivesInitialRowOnly) {
  const Problem p = synthetic(20, 4, 100.0, LossKind::logistic);
  const RunTrace t = ssnm_run(p, config(Algorithm::ssnm, 0));
  ASSERT_EQ(t.points.size(), 1u);
  EXPECT_EQ(t.points[0].epoch, 0u);
  EXPECT_NEAR(t.points[0].objective, std::log(2.0), 1e-15);
  EXPECT_EQ(t.ifo, 20u);
}

TEST(OracleCounts, ExactPerAlgorithm) {
  const Problem p = synthetic(37, 5, 1e3, LossKind::logistic);
  const std::uint64_t n = 37;
  for (std::size_t epochs : {1u, 3u, 7u}) {
    const std::uint64_t K = n * epochs;
    for (Algorithm algo : {Algorithm::ssnm, Algorithm::ssnm_i}) {
      const RunTrace t = ssnm_run(p, config(algo, epochs));
      EXPECT_EQ(t.ifo, n + 2 * K);
      EXPECT_EQ(t.po, K);
      EXPECT_EQ(t.points.back().ifo, n + 2 * K);
    }
    const RunTrace saga = saga_run(p, config(Algorithm::saga, epochs));
    EXPECT_EQ(saga.ifo, n + K);
    EXPECT_EQ(saga.po, K);
    const RunTrace mig = mig_run(p, config(Algorithm::mig, epochs));
    EXPECT_EQ(mig.ifo, epochs * (n + 2 * 2 * n));
    EXPECT_EQ(mig.po, epochs * 2 * n);
  }
}

TEST(TraceCadence, EvalEvery) {
  const Problem p = synthetic(20, 4, 100.0, LossKind::logistic);
  SolverConfig c = config(Algorithm::saga, 7);
  c.eval_every = 3;
  const RunTrace t = run_solver(p, c);
  std::vector<std::size_t> epochs;
  for (const auto& pt : t.points) epochs.push_back(pt.epoch);
  EXPECT_EQ(epochs, (std::vector<std::size_t>{0, 3, 6, 7}));
}

TEST(Solvers, AllConvergeLinearly) {
  const Problem p = synthetic(100, 10, 300.0, LossKind::squared, 8);
  const Reference ref = solve(p);
  for (Algorithm algo : {Algorithm::ssnm, Algorithm::ssnm_i, Algorithm::saga, Algorithm::mig}) {
    const RunTrace t = run_solver(p, config(algo, 60), &ref);
    const double s10 = *t.points[10].subopt;
    const double s60 = *t.points.back().subopt;
    EXPECT_GE(*t.points.front().subopt, s10) << to_string(algo);
    EXPECT_LT(s60, 1e-10) << to_string(algo);
    EXPECT_LT(s60, 1e-4 * s10) << to_string(algo);
    EXPECT_GE(s60, -1e-12) << to_string(algo);
  }
}

TEST(Solvers, ElasticNetConverges) {
  const Problem p = synthetic(80, 12, 100.0, LossKind::logistic, 9, 0.01);
  const Reference ref = solve(p);
  const RunTrace t = ssnm_run(p, config(Algorithm::ssnm, 80), &ref);
  EXPECT_LT(*t.points.back().subopt, 1e-10);
  EXPECT_LT(*t.points.back().dist_sq, 1e-6);
}

TEST(Solvers, DivergenceGuardFires) {
  const Problem p = synthetic(50, 5, 100.0, LossKind::squared);
  SolverConfig c = config(Algorithm::ssnm, 20);
  c.eta = 200.0;
  c.tau = 0.4;
  c.x1 = Vector::Ones(5);
  EXPECT_THROW(ssnm_run(p, c), DivergenceError);
  SolverConfig half = config(Algorithm::ssnm, 1);
  half.eta = 1.0;
  EXPECT_THROW(ssnm_run(p, half), ConfigError);
}

TEST(Solvers, ManualOverrideLogsWarning) {
  const Problem p = synthetic(50, 5, 100.0, LossKind::squared);
  SolverConfig c = config(Algorithm::ssnm, 1);
  c.eta = 1.0;
  c.tau = 0.6;
  const RunTrace t = ssnm_run(p, c);
  EXPECT_FALSE(t.warnings.empty());
}

TEST(EpochsToTolerance, FirstCrossing) {
  RunTrace t;
  for (double s : {1.0, 1e-3, 1e-10, 1e-9, 1e-12}) {
    TracePoint pt;
    pt.epoch = t.points.size();
    pt.subopt = s;
    t.points.push_back(pt);
  }
  EXPECT_EQ(epochs_to_tolerance(t, 1e-9), 2u);
  EXPECT_EQ(epochs_to_tolerance(t, 1e-13), std::nullopt);
}

TEST(SmoothGradient, IsMeanOfComponents) {
  const Problem p = synthetic(60, 7, 100.0, LossKind::logistic);
  const Vector x = Vector::LinSpaced(7, -1.0, 1.0);
  Vector sum = Vector::Zero(7);
  for (std::size_t i = 0; i < p.n(); ++i) sum += component_gradient(p, i, x);
  EXPECT_LE((smooth_gradient(p, x) - sum / 60.0).norm(), 1e-15);
}
