#include "ssnm/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "ssnm/errors.hpp"

namespace ssnm {

Dataset::Dataset(SparseRows rows, Vector labels)
    : rows_(std::move(rows)), labels_(std::move(labels)) {
  rows_.makeCompressed();
  if (labels_.size() != rows_.rows())
    throw DataError("label count " + std::to_string(labels_.size()) +
                    " does not match row count " +
                    std::to_string(rows_.rows()));
  for (Eigen::Index i = 0; i < rows_.rows(); ++i) {
    if (labels_[i] != 1.0 && labels_[i] != -1.0)
      throw DataError("label of row " + std::to_string(i) +
                      " is not +1 or -1");
    Eigen::Index prev = -1;
    for (SparseRows::InnerIterator it(rows_, i); it; ++it) {
      if (it.col() <= prev)
        throw DataError("feature indices of row " + std::to_string(i) +
                        " are not strictly increasing");
      if (it.value() == 0.0)
        throw DataError("row " + std::to_string(i) +
                        " stores an explicit zero");
      if (!std::isfinite(it.value()))
        throw DataError("row " + std::to_string(i) +
                        " stores a non-finite value");
      prev = it.col();
    }
  }
}

double Dataset::row_dot(std::size_t i, const Vector& x) const {
  double s = 0.0;
  for (SparseRows::InnerIterator it(rows_, static_cast<Eigen::Index>(i)); it;
       ++it)
    s += it.value() * x[it.col()];
  return s;
}

double Dataset::row_squared_norm(std::size_t i) const {
  double s = 0.0;
  for (SparseRows::InnerIterator it(rows_, static_cast<Eigen::Index>(i)); it;
       ++it)
    s += it.value() * it.value();
  return s;
}

void Dataset::add_row(std::size_t i, double scale, Vector& out) const {
  for (SparseRows::InnerIterator it(rows_, static_cast<Eigen::Index>(i)); it;
       ++it)
    out[it.col()] += scale * it.value();
}

bool Dataset::operator==(const Dataset& other) const {
  if (n() != other.n() || d() != other.d() || nnz() != other.nnz())
    return false;
  if (labels_ != other.labels_) return false;
  for (Eigen::Index i = 0; i < rows_.rows(); ++i) {
    SparseRows::InnerIterator a(rows_, i);
    SparseRows::InnerIterator b(other.rows_, i);
    for (; a && b; ++a, ++b)
      if (a.col() != b.col() || a.value() != b.value()) return false;
    if (a || b) return false;
  }
  return true;
}

std::string_view to_string(LossKind loss) {
  switch (loss) {
    case LossKind::logistic:
      return "logistic";
    case LossKind::squared:
      return "squared";
  }
  return "unknown";
}

LossKind parse_loss(std::string_view name) {
  if (name == "logistic") return LossKind::logistic;
  if (name == "squared" || name == "ridge") return LossKind::squared;
  throw ConfigError("unknown loss '" + std::string(name) + "'");
}

double Regularizer::value(const Vector& x) const {
  double v = 0.5 * l2 * x.squaredNorm();
  if (l1 > 0.0) v += l1 * x.lpNorm<1>();
  return v;
}

Problem::Problem(std::shared_ptr<const Dataset> data, LossKind loss,
                 Regularizer reg)
    : data_(std::move(data)), loss_(loss), reg_(reg) {
  if (!data_) throw ConfigError("problem needs a dataset");
  if (!(reg_.l2 > 0.0) || !std::isfinite(reg_.l2))
    throw ConfigError("lambda2 must be positive and finite (strong convexity)");
  if (!(reg_.l1 >= 0.0) || !std::isfinite(reg_.l1))
    throw ConfigError("lambda1 must be non-negative and finite");
  smoothness_ = smoothness_constant(*data_, loss_);
  if (!(smoothness_ > 0.0))
    throw ConfigError("smoothness constant is zero (all rows empty?)");
}

double margin_loss(LossKind loss, double label, double t) {
  if (loss == LossKind::squared) {
    const double r = t - label;
    return 0.5 * r * r;
  }
  const double z = label * t;
  return std::max(-z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

double margin_loss_derivative(LossKind loss, double label, double t) {
  if (loss == LossKind::squared) return t - label;
  // -b * sigma(-z), z = b t
  const double z = label * t;
  double s;
  if (z >= 0.0) {
    const double e = std::exp(-z);
    s = e / (1.0 + e);
  } else {
    s = 1.0 / (1.0 + std::exp(z));
  }
  return -label * s;
}

namespace {

void check_index(const Problem& problem, std::size_t i) {
  if (i >= problem.n())
    throw ConfigError("component index " + std::to_string(i) +
                      " out of range [0, " + std::to_string(problem.n()) + ")");
}

}  // namespace

double component_value(const Problem& problem, std::size_t i, const Vector& x) {
  check_index(problem, i);
  const Dataset& data = problem.data();
  return margin_loss(problem.loss(), data.label(i), data.row_dot(i, x));
}

double component_gradient_weight(const Problem& problem, std::size_t i,
                                 const Vector& x) {
  check_index(problem, i);
  const Dataset& data = problem.data();
  return margin_loss_derivative(problem.loss(), data.label(i),
                                data.row_dot(i, x));
}

Vector component_gradient(const Problem& problem, std::size_t i,
                          const Vector& x) {
  Vector g = Vector::Zero(static_cast<Eigen::Index>(problem.d()));
  problem.data().add_row(i, component_gradient_weight(problem, i, x), g);
  return g;
}

double smooth_objective(const Problem& problem, const Vector& x) {
  const Dataset& data = problem.data();
  double s = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i)
    s += margin_loss(problem.loss(), data.label(i), data.row_dot(i, x));
  return s / static_cast<double>(data.n());
}

Vector smooth_gradient(const Problem& problem, const Vector& x) {
  const Dataset& data = problem.data();
  Vector g = Vector::Zero(static_cast<Eigen::Index>(data.d()));
  const double inv_n = 1.0 / static_cast<double>(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) {
    const double w =
        margin_loss_derivative(problem.loss(), data.label(i), data.row_dot(i, x));
    data.add_row(i, w * inv_n, g);
  }
  return g;
}

double full_objective(const Problem& problem, const Vector& x) {
  return smooth_objective(problem, x) + problem.regularizer().value(x);
}

double component_full_value(const Problem& problem, std::size_t i,
                            const Vector& x) {
  return component_value(problem, i, x) + problem.regularizer().value(x);
}

double smoothness_constant(const Dataset& data, LossKind loss) {
  if (data.n() == 0) throw DataError("smoothness constant of an empty dataset");
  double max_sq = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i)
    max_sq = std::max(max_sq, data.row_squared_norm(i));
  return loss == LossKind::logistic ? 0.25 * max_sq : max_sq;
}

double soft_threshold(double v, double threshold) {
  if (v > threshold) return v - threshold;
  if (v < -threshold) return v + threshold;
  return 0.0;
}

void prox_into(const Regularizer& reg, const Vector& x_k, const Vector& g,
               double eta, Vector& out) {
  const double shrink = 1.0 / (1.0 + eta * reg.l2);
  out.resize(x_k.size());
  if (reg.l1 == 0.0) {
    out = (x_k - eta * g) * shrink;
    return;
  }
  const double thr = eta * reg.l1;
  for (Eigen::Index j = 0; j < x_k.size(); ++j)
    out[j] = soft_threshold(x_k[j] - eta * g[j], thr) * shrink;
}

Vector prox(const Regularizer& reg, const Vector& x_k, const Vector& g,
            double eta) {
  if (!(eta > 0.0)) throw ConfigError("prox step size must be positive");
  Vector out;
  prox_into(reg, x_k, g, eta, out);
  return out;
}

}  // namespace ssnm
