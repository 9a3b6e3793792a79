#ifndef SSNM_TABLES_HPP
#define SSNM_TABLES_HPP

#include <cstddef>
#include <cstdint>

#include "ssnm/model.hpp"

namespace ssnm {

// SAGA-style memory: the points table phi_i, the gradient table
// g_i = grad f_i(phi_i) and the running average (1/n) sum_i g_i.
//
// Points and gradients are stored densely as d x n column-major matrices,
// so the table holds 2 n d doubles. The running average is updated
// incrementally and recomputed from scratch every refresh_period() updates
// to bound floating point drift.
class PointsTable {
 public:
  PointsTable() = default;

  // phi_i = x1 for every i. Costs n IFO calls.
  static PointsTable init(const Problem& problem, const Vector& x1);

  std::size_t n() const { return static_cast<std::size_t>(points_.cols()); }
  std::size_t d() const { return static_cast<std::size_t>(points_.rows()); }

  auto point(std::size_t i) const { return points_.col(static_cast<Eigen::Index>(i)); }
  auto gradient(std::size_t i) const { return grads_.col(static_cast<Eigen::Index>(i)); }
  const Vector& average() const { return average_; }
  const Eigen::MatrixXd& points() const { return points_; }
  const Eigen::MatrixXd& gradients() const { return grads_; }

  // Replaces phi_I by new_point, recomputes g_I with one IFO call and
  // patches the running average. Returns the previous phi_I.
  Vector update_entry(const Problem& problem, std::size_t index,
                      const Vector& new_point);

  // Same as update_entry, for callers that already evaluated
  // grad f_I(new_point) = gradient_weight * a_I. No IFO call is counted.
  void store_entry(const Problem& problem, std::size_t index,
                   const Vector& new_point, double gradient_weight);

  // Exact mean of the stored gradients by pairwise summation.
  void refresh_average();

  std::uint64_t ifo_calls() const { return ifo_calls_; }
  std::uint64_t updates_since_refresh() const { return updates_since_refresh_; }
  std::uint64_t refresh_period() const { return 10 * static_cast<std::uint64_t>(n()); }

 private:
  Eigen::MatrixXd points_;
  Eigen::MatrixXd grads_;
  Vector average_;
  std::uint64_t ifo_calls_ = 0;
  std::uint64_t updates_since_refresh_ = 0;
};

// Column mean of a d x n matrix using pairwise summation over columns.
Vector pairwise_column_mean(const Eigen::MatrixXd& columns);

}  // namespace ssnm

#endif
