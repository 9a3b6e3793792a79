#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include <boost/math/tools/minima.hpp>
#include <gtest/gtest.h>

#include "ssnm/data.hpp"
#include "ssnm/errors.hpp"
#include "ssnm/model.hpp"

using namespace ssnm;

namespace {

std::shared_ptr<const Dataset> dense_data(const std::vector<std::vector<double>>& rows,
                                          const std::vector<double>& labels) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(rows.front().size());
  SparseRows a(n, d);
  std::vector<Eigen::Triplet<double>> t;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      if (rows[i][j] != 0.0) t.emplace_back(i, j, rows[i][j]);
  a.setFromTriplets(t.begin(), t.end());
  return std::make_shared<const Dataset>(
      std::move(a), Eigen::Map<const Vector>(labels.data(), n));
}

Vector vec(std::initializer_list<double> v) {
  Vector x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (double e : v) x[k++] = e;
  return x;
}

Vector gaussian(std::mt19937_64& rng, std::size_t d, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Vector x(static_cast<Eigen::Index>(d));
  for (auto& v : x) v = g(rng);
  return x;
}

Problem synthetic(LossKind loss, double l1 = 0.0, std::uint64_t seed = 3) {
  SyntheticSpec spec;
  spec.n = 40;
  spec.d = 8;
  spec.target_kappa = 100.0;
  spec.loss = loss;
  spec.seed = seed;
  SyntheticProblem sp = generate_synthetic(spec);
  return Problem(std::make_shared<const Dataset>(std::move(sp.data)), loss,
                 Regularizer{l1, sp.lambda2});
}

}  // namespace

TEST(Dataset, RejectsBadLabels) {
  SparseRows a(1, 1);
  a.insert(0, 0) = 1.0;
  EXPECT_THROW(Dataset(a, vec({0.5})), DataError);
  EXPECT_THROW(Dataset(a, vec({1.0, -1.0})), DataError);
}

TEST(Dataset, RejectsExplicitZero) {
  SparseRows a(1, 2);
  a.insert(0, 1) = 0.0;
  EXPECT_THROW(Dataset(a, vec({1.0})), DataError);
}

TEST(Problem, RejectsZeroMu) {
  auto data = dense_data({{1.0}}, {1.0});
  EXPECT_THROW(Problem(data, LossKind::logistic, Regularizer{0.0, 0.0}), ConfigError);
  EXPECT_THROW(Problem(data, LossKind::logistic, Regularizer{-1.0, 1.0}), ConfigError);
}

TEST(ComponentGradient, LogisticAtOrigin) {
  Problem p(dense_data({{1.0, -2.0}}, {1.0}), LossKind::logistic, Regularizer{0.0, 1.0});
  const Vector g = component_gradient(p, 0, Vector::Zero(2));
  EXPECT_DOUBLE_EQ(g[0], -0.5);
  EXPECT_DOUBLE_EQ(g[1], 1.0);
}

TEST(ComponentGradient, LogisticSaturates) {
  Problem p(dense_data({{1.0, -2.0}}, {1.0}), LossKind::logistic, Regularizer{0.0, 1.0});
  for (double t : {800.0, 1e4, 1e300}) {
    const Vector x = vec({t, 0.0});
    const Vector g = component_gradient(p, 0, x);
    EXPECT_TRUE(g.allFinite());
    EXPECT_LE(g.norm(), 1e-300);
    EXPECT_EQ(component_value(p, 0, x), std::exp(-t) > 0 ? std::log1p(std::exp(-t)) : 0.0);
  }
  // z -> -infinity: loss is linear and the gradient saturates at -b a.
  const Vector x = vec({-800.0, 0.0});
  EXPECT_DOUBLE_EQ(component_value(p, 0, x), 800.0);
  const Vector g = component_gradient(p, 0, x);
  EXPECT_DOUBLE_EQ(g[0], -1.0);
  EXPECT_DOUBLE_EQ(g[1], 2.0);
}

TEST(ComponentGradient, Squared) {
  Problem p(dense_data({{1.0, 0.0}}, {1.0}), LossKind::squared, Regularizer{0.0, 1.0});
  const Vector g = component_gradient(p, 0, vec({3.0, 5.0}));
  EXPECT_DOUBLE_EQ(g[0], 2.0);
  EXPECT_DOUBLE_EQ(g[1], 0.0);
}

TEST(ComponentGradient, IndexOutOfRange) {
  Problem p(dense_data({{1.0}}, {1.0}), LossKind::squared, Regularizer{0.0, 1.0});
  EXPECT_THROW(component_gradient(p, 1, Vector::Zero(1)), ConfigError);
}

TEST(FullObjective, Examples) {
  Problem logistic(dense_data({{1.0}}, {1.0}), LossKind::logistic, Regularizer{0.0, 2.0});
  EXPECT_NEAR(full_objective(logistic, Vector::Zero(1)), std::log(2.0), 1e-15);
  Problem squared(dense_data({{1.0}}, {1.0}), LossKind::squared, Regularizer{0.0, 2.0});
  EXPECT_DOUBLE_EQ(full_objective(squared, vec({1.0})), 1.0);
}

TEST(SmoothnessConstant, Examples) {
  auto data = dense_data({{3.0, 4.0}, {0.0, 1.0}}, {1.0, -1.0});
  EXPECT_DOUBLE_EQ(smoothness_constant(*data, LossKind::squared), 25.0);
  EXPECT_DOUBLE_EQ(smoothness_constant(*data, LossKind::logistic), 6.25);
  Problem p = synthetic(LossKind::logistic);
  EXPECT_NEAR(p.L(), 0.25, 1e-15);
  const Dataset empty(SparseRows(0, 3), Vector(0));
  EXPECT_THROW(smoothness_constant(empty, LossKind::logistic), DataError);
}

TEST(ComponentGradient, MatchesCentralDifferences) {
  std::mt19937_64 rng(11);
  for (LossKind loss : {LossKind::logistic, LossKind::squared}) {
    Problem p = synthetic(loss);
    for (int trial = 0; trial < 20; ++trial) {
      const Vector x = gaussian(rng, p.d());
      const std::size_t i = static_cast<std::size_t>(trial) % p.n();
      const Vector g = component_gradient(p, i, x);
      Vector fd(x.size());
      for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double h = 1e-5 * std::max(1.0, std::abs(x[j]));
        Vector up = x, down = x;
        up[j] += h;
        down[j] -= h;
        fd[j] = (component_value(p, i, up) - component_value(p, i, down)) / (2 * h);
      }
      EXPECT_LE((g - fd).norm(), 1e-6 * std::max(1.0, g.norm()));
    }
  }
}

TEST(ComponentFunctions, SmoothAndConvexOnRandomPairs) {
  std::mt19937_64 rng(12);
  for (LossKind loss : {LossKind::logistic, LossKind::squared}) {
    Problem p = synthetic(loss);
    for (int trial = 0; trial < 1000; ++trial) {
      const std::size_t i = static_cast<std::size_t>(trial) % p.n();
      const Vector x = gaussian(rng, p.d(), 3.0);
      const Vector y = gaussian(rng, p.d(), 3.0);
      const double fx = component_value(p, i, x);
      const double lin = component_value(p, i, y) + component_gradient(p, i, y).dot(x - y);
      const double slack = 1e-12 * (1.0 + std::abs(fx));
      EXPECT_GE(lin + 0.5 * p.L() * (x - y).squaredNorm() - fx, -slack);
      EXPECT_GE(fx - lin, -slack);
    }
  }
}

TEST(Regularizer, StronglyConvex) {
  std::mt19937_64 rng(13);
  const Regularizer h{0.3, 0.7};
  for (int trial = 0; trial < 1000; ++trial) {
    const Vector x = gaussian(rng, 6);
    Vector y = gaussian(rng, 6);
    if (trial % 4 == 0) y[trial % 6] = 0.0;
    Vector sub = h.l2 * y;
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (Eigen::Index j = 0; j < y.size(); ++j)
      sub[j] += h.l1 * (y[j] > 0 ? 1.0 : y[j] < 0 ? -1.0 : unit(rng));
    const double rhs = h.value(y) + sub.dot(x - y) + 0.5 * h.mu() * (x - y).squaredNorm();
    EXPECT_GE(h.value(x) - rhs, -1e-12 * (1.0 + std::abs(rhs)));
  }
}

TEST(Prox, Examples) {
  const Vector p = prox(Regularizer{0.0, 0.1}, vec({1.0, 1.0}), vec({2.0, 0.0}), 0.5);
  EXPECT_NEAR(p[0], 0.0, 1e-15);
  EXPECT_NEAR(p[1], 1.0 / 1.05, 1e-15);
  const Vector zero = prox(Regularizer{10.0, 0.1}, vec({1.0, -2.0}), vec({0.5, 0.5}), 0.5);
  EXPECT_EQ(zero, Vector::Zero(2));
  const Vector shrink = prox(Regularizer{0.0, 0.4}, vec({2.0, -4.0}), Vector::Zero(2), 0.5);
  EXPECT_DOUBLE_EQ(shrink[0], 2.0 / 1.2);
  EXPECT_DOUBLE_EQ(shrink[1], -4.0 / 1.2);
  EXPECT_THROW(prox(Regularizer{0.0, 1.0}, Vector::Zero(1), Vector::Zero(1), 0.0), ConfigError);
}

TEST(Prox, IntoAliasedOutput) {
  const Regularizer h{0.2, 0.5};
  Vector x = vec({1.0, -0.1, 3.0});
  const Vector expected = prox(h, x, vec({0.1, 0.2, -0.3}), 0.7);
  prox_into(h, x, vec({0.1, 0.2, -0.3}), 0.7, x);
  EXPECT_EQ(x, expected);
}

TEST(Prox, OptimalityConditions) {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const Regularizer h{trial % 2 == 0 ? 0.0 : unit(rng), 0.01 + unit(rng)};
    const double eta = 0.05 + 2.0 * unit(rng);
    const Vector x_k = gaussian(rng, 5);
    const Vector g = gaussian(rng, 5);
    const Vector xp = prox(h, x_k, g, eta);
    for (Eigen::Index j = 0; j < xp.size(); ++j) {
      const double smooth = g[j] + (xp[j] - x_k[j]) / eta + h.l2 * xp[j];
      if (xp[j] != 0.0) {
        EXPECT_NEAR(smooth + h.l1 * (xp[j] > 0 ? 1.0 : -1.0), 0.0, 1e-10);
      } else {
        // Some s in [-1, 1] must cancel the smooth part.
        EXPECT_LE(std::abs(smooth), h.l1 + 1e-10);
      }
    }
  }
}

TEST(Prox, MatchesNumericalMinimizerOnSlices) {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Regularizer h{unit(rng), 0.05 + unit(rng)};
    const double eta = 0.1 + unit(rng);
    const Vector x_k = gaussian(rng, 4);
    const Vector g = gaussian(rng, 4);
    const Vector xp = prox(h, x_k, g, eta);
    const Vector dir = gaussian(rng, 4).normalized();
    auto objective = [&](double t) {
      const Vector x = xp + t * dir;
      return h.value(x) + g.dot(x) + (x_k - x).squaredNorm() / (2 * eta);
    };
    const auto [t_min, f_min] =
        boost::math::tools::brent_find_minima(objective, -5.0, 5.0, 40);
    EXPECT_NEAR(t_min, 0.0, 1e-6);
    EXPECT_GE(f_min - objective(0.0), -1e-12);
  }
}
