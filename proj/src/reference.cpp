#include "ssnm/reference.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

namespace ssnm {

namespace {

double value_and_gradient(const Problem& problem, const Vector& x, Vector& grad) {
  const Dataset& data = problem.data();
  grad.setZero(x.size());
  const double inv_n = 1.0 / static_cast<double>(data.n());
  double value = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    const double t = data.row_dot(i, x);
    value += margin_loss(problem.loss(), data.label(i), t);
    data.add_row(i, margin_loss_derivative(problem.loss(), data.label(i), t) * inv_n,
                 grad);
  }
  return value * inv_n;
}

// Largest eigenvalue of the curvature bound A^T A / n (times 1/4 for the
// logistic loss) by power iteration. Only a starting guess for the step.
double estimate_smoothness(const Problem& problem) {
  const SparseRows& a = problem.data().rows();
  Vector v = Vector::Ones(a.cols()).normalized();
  double lambda = 0.0;
  for (int it = 0; it < 30; ++it) {
    Vector w = a.transpose() * (a * v);
    const double norm = w.norm();
    if (norm == 0.0) break;
    lambda = norm;
    v = w / norm;
  }
  lambda /= static_cast<double>(problem.n());
  if (problem.loss() == LossKind::logistic) lambda *= 0.25;
  return std::clamp(1.1 * lambda, 1e-3 * problem.L(), problem.L());
}

// Second derivative of the margin loss in t.
double margin_loss_curvature(LossKind loss, double t, double label) {
  if (loss == LossKind::squared) return 1.0;
  const double e = std::exp(-std::abs(label * t));
  return e / ((1.0 + e) * (1.0 + e));
}

// Damped Newton for the smooth case (h = l2/2 ||x||^2): Hessian
// A^T W A / n + l2 I assembled densely, Armijo backtracking on F.
std::optional<ReferenceSolution> newton_solve(const Problem& problem, double tol,
                                              const ReferenceOptions& options) {
  const Dataset& data = problem.data();
  const auto d = static_cast<Eigen::Index>(problem.d());
  const double l2 = problem.regularizer().l2;
  const double inv_n = 1.0 / static_cast<double>(data.n());
  const SparseRows& rows = data.rows();

  Vector x = options.x0 ? *options.x0 : Vector::Zero(d);
  if (x.size() != d) throw ConfigError("reference start point has wrong dimension");
  Vector grad(d);
  Eigen::MatrixXd hessian(d, d);
  double value = value_and_gradient(problem, x, grad) + 0.5 * l2 * x.squaredNorm();
  grad += l2 * x;

  for (std::size_t it = 1; it <= std::min<std::size_t>(options.max_iterations, 200); ++it) {
    hessian.setZero();
    for (Eigen::Index i = 0; i < rows.outerSize(); ++i) {
      const auto row = static_cast<std::size_t>(i);
      const double w =
          margin_loss_curvature(problem.loss(), data.row_dot(row, x), data.label(row)) * inv_n;
      for (SparseRows::InnerIterator a(rows, i); a; ++a)
        for (SparseRows::InnerIterator b(rows, i); b && b.col() <= a.col(); ++b)
          hessian(a.col(), b.col()) += w * a.value() * b.value();
    }
    hessian.diagonal().array() += l2;
    const Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt(hessian);
    if (llt.info() != Eigen::Success) return std::nullopt;
    const Vector step = llt.solve(grad);
    const double slope = grad.dot(step);

    double t = 1.0;
    Vector trial(d), trial_grad(d);
    double trial_value = 0.0;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      trial = x - t * step;
      trial_value = value_and_gradient(problem, trial, trial_grad) +
                    0.5 * l2 * trial.squaredNorm();
      if (trial_value <= value - 1e-4 * t * slope) break;
    }
    // Past the last representable decrease the full step is still taken so
    // the gradient can shrink below the value's rounding noise.
    if (!(trial_value <= value)) {
      trial = x - step;
      trial_value = value_and_gradient(problem, trial, trial_grad) +
                    0.5 * l2 * trial.squaredNorm();
    }
    x = trial;
    value = trial_value;
    grad = trial_grad + l2 * x;

    const double gm = gradient_mapping_norm(problem, x);
    if (gm <= tol) {
      ReferenceSolution sol;
      sol.x = x;
      sol.value = full_objective(problem, x);
      sol.gradient_mapping_norm = gm;
      sol.iterations = it;
      sol.newton = true;
      return sol;
    }
  }
  return std::nullopt;
}

}  // namespace

double gradient_mapping_norm(const Problem& problem, const Vector& x) {
  const double L = problem.L();
  const Vector g = smooth_gradient(problem, x);
  const Vector p = prox(problem.regularizer(), x, g, 1.0 / L);
  return L * (x - p).norm();
}

Vector ridge_closed_form(const Problem& problem) {
  if (problem.loss() != LossKind::squared || problem.regularizer().l1 != 0.0)
    throw ConfigError("closed form only exists for squared loss without l1");
  const Dataset& data = problem.data();
  const double n = static_cast<double>(data.n());
  Eigen::MatrixXd gram = Eigen::MatrixXd(data.rows().transpose() * data.rows()) / n;
  gram.diagonal().array() += problem.regularizer().l2;
  const Vector rhs = data.rows().transpose() * data.labels() / n;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  Vector x = ldlt.solve(rhs);
  // One step of iterative refinement.
  x += ldlt.solve(rhs - gram * x);
  return x;
}

ReferenceSolution reference_solve(const Problem& problem, double tol,
                                  const ReferenceOptions& options) {
  if (!(tol > 0.0)) throw ConfigError("reference tolerance must be positive");
  const auto d = static_cast<Eigen::Index>(problem.d());

  if (options.allow_closed_form && problem.loss() == LossKind::squared &&
      problem.regularizer().l1 == 0.0) {
    ReferenceSolution sol;
    sol.x = ridge_closed_form(problem);
    sol.value = full_objective(problem, sol.x);
    sol.gradient_mapping_norm = gradient_mapping_norm(problem, sol.x);
    sol.closed_form = true;
    return sol;
  }

  if (options.allow_newton && problem.regularizer().l1 == 0.0 &&
      problem.d() <= kMaxNewtonDim) {
    if (auto sol = newton_solve(problem, tol, options)) return *sol;
  }

  const Regularizer& reg = problem.regularizer();
  const double mu = problem.mu();
  double lf = estimate_smoothness(problem);

  Vector x = options.x0 ? *options.x0 : Vector::Zero(d);
  if (x.size() != d) throw ConfigError("reference start point has wrong dimension");
  Vector y = x;
  Vector x_next(d);
  Vector grad(d);
  Vector scratch(d);
  ReferenceSolution best;
  best.x = x;
  best.gradient_mapping_norm = gradient_mapping_norm(problem, x);

  for (std::size_t it = 1; it <= options.max_iterations; ++it) {
    const double fy = value_and_gradient(problem, y, grad);
    Vector diff;
    for (;;) {
      prox_into(reg, y, grad, 1.0 / lf, x_next);
      diff = x_next - y;
      const double model = fy + grad.dot(diff) + 0.5 * lf * diff.squaredNorm();
      if (lf >= problem.L() ||
          smooth_objective(problem, x_next) <= model + 1e-13 * (1.0 + std::abs(fy)))
        break;
      lf = std::min(2.0 * lf, problem.L());
    }

    if (lf * diff.norm() <= tol) {
      const double gm = gradient_mapping_norm(problem, x_next);
      if (gm < best.gradient_mapping_norm) {
        best.x = x_next;
        best.gradient_mapping_norm = gm;
      }
      if (gm <= tol) {
        best.value = full_objective(problem, best.x);
        best.iterations = it;
        return best;
      }
    }

    scratch = x_next - x;
    if ((y - x_next).dot(scratch) > 0.0) {
      y = x_next;  // restart
    } else {
      const double q = std::sqrt(mu / (lf + mu));
      const double beta = (1.0 - q) / (1.0 + q);
      y = x_next + beta * scratch;
    }
    x.swap(x_next);
  }

  const double gm = gradient_mapping_norm(problem, x);
  if (gm < best.gradient_mapping_norm) {
    best.x = x;
    best.gradient_mapping_norm = gm;
  }
  best.value = full_objective(problem, best.x);
  best.iterations = options.max_iterations;
  std::ostringstream os;
  os << "reference solver hit the iteration cap (" << options.max_iterations
     << ") with gradient mapping norm " << best.gradient_mapping_norm
     << " > tol " << tol;
  throw ReferenceError(os.str(), best);
}

}  // namespace ssnm
