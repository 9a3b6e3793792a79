#ifndef SSNM_MODEL_HPP
#define SSNM_MODEL_HPP

#include <cstddef>
#include <memory>
#include <string_view>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace ssnm {

using Vector = Eigen::VectorXd;
using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// n labelled examples with sparse feature rows. Indices are 0-based and
// strictly increasing within a row, no explicit zeros are stored and every
// label is exactly +1 or -1. Construction validates all of this.
class Dataset {
 public:
  Dataset(SparseRows rows, Vector labels);

  std::size_t n() const { return static_cast<std::size_t>(rows_.rows()); }
  std::size_t d() const { return static_cast<std::size_t>(rows_.cols()); }
  std::size_t nnz() const { return static_cast<std::size_t>(rows_.nonZeros()); }

  const SparseRows& rows() const { return rows_; }
  const Vector& labels() const { return labels_; }
  double label(std::size_t i) const { return labels_[static_cast<Eigen::Index>(i)]; }

  // a_i^T x
  double row_dot(std::size_t i, const Vector& x) const;
  double row_squared_norm(std::size_t i) const;

  // out += scale * a_i
  void add_row(std::size_t i, double scale, Vector& out) const;

  bool operator==(const Dataset& other) const;

 private:
  SparseRows rows_;
  Vector labels_;
};

enum class LossKind { logistic, squared };

std::string_view to_string(LossKind loss);
LossKind parse_loss(std::string_view name);

// h(x) = l1 * ||x||_1 + (l2 / 2) * ||x||^2, strongly convex with mu = l2.
struct Regularizer {
  double l1 = 0.0;
  double l2 = 0.0;

  double mu() const { return l2; }
  double value(const Vector& x) const;
};

// Composite objective F(x) = (1/n) sum_i f_i(x) + h(x) where f_i is the data
// loss of example i and h carries all of the regularization. L is the
// per-component smoothness constant (max over i), mu the strong convexity of h.
class Problem {
 public:
  Problem(std::shared_ptr<const Dataset> data, LossKind loss, Regularizer reg);

  const Dataset& data() const { return *data_; }
  std::shared_ptr<const Dataset> shared_data() const { return data_; }
  LossKind loss() const { return loss_; }
  const Regularizer& regularizer() const { return reg_; }

  std::size_t n() const { return data_->n(); }
  std::size_t d() const { return data_->d(); }
  double L() const { return smoothness_; }
  double mu() const { return reg_.mu(); }
  double kappa() const { return smoothness_ / reg_.mu(); }

 private:
  std::shared_ptr<const Dataset> data_;
  LossKind loss_;
  Regularizer reg_;
  double smoothness_;
};

// Loss of example i as a function of the margin t = a_i^T x, and its
// derivative in t. Both are overflow safe for any finite t.
double margin_loss(LossKind loss, double label, double t);
double margin_loss_derivative(LossKind loss, double label, double t);

double component_value(const Problem& problem, std::size_t i, const Vector& x);
// grad f_i(x) = margin_loss_derivative(a_i^T x) * a_i, returned dense.
Vector component_gradient(const Problem& problem, std::size_t i, const Vector& x);
// Only the scalar factor of the gradient above.
double component_gradient_weight(const Problem& problem, std::size_t i,
                                 const Vector& x);

// f(x) = (1/n) sum_i f_i(x)
double smooth_objective(const Problem& problem, const Vector& x);
Vector smooth_gradient(const Problem& problem, const Vector& x);
// F(x) = f(x) + h(x)
double full_objective(const Problem& problem, const Vector& x);
// F_i(x) = f_i(x) + h(x)
double component_full_value(const Problem& problem, std::size_t i,
                            const Vector& x);

// logistic: max_i ||a_i||^2 / 4, squared: max_i ||a_i||^2
double smoothness_constant(const Dataset& data, LossKind loss);

double soft_threshold(double v, double threshold);

// argmin_x h(x) + <g, x> + 1/(2 eta) ||x_k - x||^2, in closed form.
Vector prox(const Regularizer& reg, const Vector& x_k, const Vector& g,
            double eta);
void prox_into(const Regularizer& reg, const Vector& x_k, const Vector& g,
               double eta, Vector& out);

}  // namespace ssnm

#endif
