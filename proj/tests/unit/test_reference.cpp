#include <cmath>
#include <memory>

#include <gtest/gtest.h>

#include "ssnm/data.hpp"
#include "ssnm/reference.hpp"

using namespace ssnm;

namespace {

Problem synthetic(std::size_t n, std::size_t d, double kappa, LossKind loss,
                  double l1 = 0.0, std::uint64_t seed = 2) {
  SyntheticSpec spec;
  spec.n = n;
  spec.d = d;
  spec.target_kappa = kappa;
  spec.loss = loss;
  spec.noise = 0.1;
  spec.seed = seed;
  SyntheticProblem sp = generate_synthetic(spec);
  return Problem(std::make_shared<const Dataset>(std::move(sp.data)), loss,
                 Regularizer{l1, sp.lambda2});
}

// Normal equations assembled densely, as an independent oracle.
Vector dense_ridge(const Problem& p) {
  const Eigen::MatrixXd a = Eigen::MatrixXd(p.data().rows());
  const double n = static_cast<double>(p.n());
  const Eigen::MatrixXd h =
      a.transpose() * a / n +
      p.mu() * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(p.d()),
                                         static_cast<Eigen::Index>(p.d()));
  return h.colPivHouseholderQr().solve(a.transpose() * p.data().labels() / n);
}

}  // namespace

TEST(Reference, ClosedFormMatchesLinearSolve) {
  const Problem p = synthetic(200, 20, 1e4, LossKind::squared);
  const Vector oracle = dense_ridge(p);
  EXPECT_LE((ridge_closed_form(p) - oracle).norm(), 1e-12 * (1.0 + oracle.norm()));
  const ReferenceSolution s = reference_solve(p, 1e-12);
  EXPECT_TRUE(s.closed_form);
  EXPECT_LE((s.x - oracle).norm(), 1e-12 * (1.0 + oracle.norm()));
}

TEST(Reference, IterativePathMatchesClosedForm) {
  const Problem p = synthetic(30, 6, 100.0, LossKind::squared);
  ReferenceOptions opts;
  opts.allow_closed_form = false;
  opts.allow_newton = false;
  const ReferenceSolution s = reference_solve(p, 1e-14, opts);
  EXPECT_FALSE(s.closed_form);
  EXPECT_FALSE(s.newton);
  EXPECT_LE(s.gradient_mapping_norm, 1e-14);
  EXPECT_LE((s.x - dense_ridge(p)).norm(), 1e-12);
}

TEST(Reference, StoppingRuleAndStartIndependence) {
  const Problem p = synthetic(300, 15, 1e5, LossKind::logistic, 1e-4);
  const ReferenceSolution a = reference_solve(p, 1e-13);
  ReferenceOptions opts;
  opts.x0 = Vector::Constant(15, 3.0);
  const ReferenceSolution b = reference_solve(p, 1e-13, opts);
  EXPECT_LE(a.gradient_mapping_norm, 1e-13);
  EXPECT_LE(gradient_mapping_norm(p, a.x), 1e-13);
  EXPECT_NEAR(a.value, b.value, 1e-12 * std::abs(a.value));
  EXPECT_NEAR(full_objective(p, a.x), a.value, 0.0);
}

TEST(Reference, NewtonAgreesWithFirstOrderPath) {
  const Problem p = synthetic(400, 12, 1e4, LossKind::logistic);
  const ReferenceSolution newton = reference_solve(p, 1e-13);
  ReferenceOptions opts;
  opts.allow_newton = false;
  const ReferenceSolution apg = reference_solve(p, 1e-13, opts);
  EXPECT_TRUE(newton.newton);
  EXPECT_FALSE(apg.newton);
  EXPECT_LE(newton.gradient_mapping_norm, 1e-13);
  EXPECT_NEAR(newton.value, apg.value, 1e-14);
  EXPECT_LE((newton.x - apg.x).norm(), 1e-8);
  ReferenceOptions squared_opts;
  squared_opts.allow_closed_form = false;
  const Problem q = synthetic(50, 6, 1e3, LossKind::squared);
  const ReferenceSolution s = reference_solve(q, 1e-14, squared_opts);
  EXPECT_TRUE(s.newton);
  EXPECT_LE((s.x - dense_ridge(q)).norm(), 1e-12);
}

TEST(Reference, IterationCapCarriesBestIterate) {
  const Problem p = synthetic(100, 10, 1e6, LossKind::logistic);
  ReferenceOptions opts;
  opts.max_iterations = 3;
  opts.allow_newton = false;
  try {
    reference_solve(p, 1e-15, opts);
    FAIL() << "expected ReferenceError";
  } catch (const ReferenceError& e) {
    EXPECT_EQ(e.best().x.size(), 10);
    EXPECT_LE(e.best().value, std::log(2.0) + 1e-15);
  }
}

TEST(GradientMapping, ZeroAtOptimumOnly) {
  const Problem p = synthetic(40, 5, 100.0, LossKind::squared);
  EXPECT_LE(gradient_mapping_norm(p, dense_ridge(p)), 1e-13);
  EXPECT_GT(gradient_mapping_norm(p, Vector::Ones(5)), 1e-3);
}
