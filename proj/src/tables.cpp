#include "ssnm/tables.hpp"

#include <string>

#include "ssnm/errors.hpp"

namespace ssnm {

namespace {

void pairwise_sum(const Eigen::MatrixXd& columns, Eigen::Index begin,
                  Eigen::Index end, Vector& out) {
  const Eigen::Index count = end - begin;
  if (count <= 8) {
    out = columns.col(begin);
    for (Eigen::Index j = begin + 1; j < end; ++j) out += columns.col(j);
    return;
  }
  const Eigen::Index mid = begin + count / 2;
  Vector right;
  pairwise_sum(columns, begin, mid, out);
  pairwise_sum(columns, mid, end, right);
  out += right;
}

}  // namespace

Vector pairwise_column_mean(const Eigen::MatrixXd& columns) {
  if (columns.cols() == 0) return Vector::Zero(columns.rows());
  Vector sum;
  pairwise_sum(columns, 0, columns.cols(), sum);
  return sum / static_cast<double>(columns.cols());
}

PointsTable PointsTable::init(const Problem& problem, const Vector& x1) {
  if (static_cast<std::size_t>(x1.size()) != problem.d())
    throw ConfigError("initial point has length " + std::to_string(x1.size()) +
                      ", expected " + std::to_string(problem.d()));
  const auto n = static_cast<Eigen::Index>(problem.n());
  const auto d = static_cast<Eigen::Index>(problem.d());
  PointsTable table;
  table.points_ = x1.replicate(1, n);
  table.grads_ = Eigen::MatrixXd::Zero(d, n);
  const Dataset& data = problem.data();
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    const double w = component_gradient_weight(problem, idx, x1);
    for (SparseRows::InnerIterator it(data.rows(), i); it; ++it)
      table.grads_(it.col(), i) = w * it.value();
  }
  table.ifo_calls_ = static_cast<std::uint64_t>(n);
  table.refresh_average();
  return table;
}

Vector PointsTable::update_entry(const Problem& problem, std::size_t index,
                                 const Vector& new_point) {
  if (index >= n())
    throw ConfigError("table index " + std::to_string(index) +
                      " out of range [0, " + std::to_string(n()) + ")");
  Vector old_point = points_.col(static_cast<Eigen::Index>(index));
  const double w = component_gradient_weight(problem, index, new_point);
  ++ifo_calls_;
  store_entry(problem, index, new_point, w);
  return old_point;
}

void PointsTable::store_entry(const Problem& problem, std::size_t index,
                              const Vector& new_point, double gradient_weight) {
  if (index >= n())
    throw ConfigError("table index " + std::to_string(index) +
                      " out of range [0, " + std::to_string(n()) + ")");
  const auto i = static_cast<Eigen::Index>(index);
  points_.col(i) = new_point;

  // g_new - g_old is supported on row I, so the average is patched sparsely.
  const double inv_n = 1.0 / static_cast<double>(n());
  auto g = grads_.col(i);
  for (SparseRows::InnerIterator it(problem.data().rows(), i); it; ++it) {
    const double g_new = gradient_weight * it.value();
    average_[it.col()] += (g_new - g[it.col()]) * inv_n;
    g[it.col()] = g_new;
  }

  if (++updates_since_refresh_ >= refresh_period()) refresh_average();
}

void PointsTable::refresh_average() {
  average_ = pairwise_column_mean(grads_);
  updates_since_refresh_ = 0;
}

}  // namespace ssnm
