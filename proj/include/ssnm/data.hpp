#ifndef SSNM_DATA_HPP
#define SSNM_DATA_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "ssnm/model.hpp"

namespace ssnm {

struct LoadOptions {
  // Raw label equal to this value maps to +1, anything else to -1. Without
  // it only {-1,+1} and {1,2} (1 -> +1, 2 -> -1) label sets are accepted.
  std::optional<double> positive_label;
  // Pad the feature dimension up to at least this value.
  std::size_t min_dim = 0;
};

// LIBSVM text format: "<label> <index>:<value> ..." with 1-based, strictly
// increasing indices. d is the largest index seen (or min_dim). Malformed
// lines raise DataError carrying the 1-based line number.
Dataset parse_libsvm(std::istream& in, const LoadOptions& options = {});
Dataset load_libsvm(const std::filesystem::path& path,
                    const LoadOptions& options = {});

// Values are written in shortest round-trip form, so loading the output
// reproduces the dataset exactly.
void write_libsvm(std::ostream& out, const Dataset& data);
void write_libsvm(const std::filesystem::path& path, const Dataset& data);

// Scales every row to unit Euclidean norm. All-zero rows are dropped and
// counted in `dropped`.
Dataset normalize_rows(const Dataset& data, std::size_t* dropped = nullptr);

// Scales every column to unit root-mean-square. Columns are not centred so
// sparsity is kept.
Dataset scale_columns(const Dataset& data);

struct SyntheticSpec {
  std::size_t n = 200;
  std::size_t d = 20;
  double target_kappa = 1e4;
  LossKind loss = LossKind::logistic;
  // Probability of flipping each planted label.
  double noise = 0.0;
  // Feature j is scaled by (j + 1)^-decay before row normalization, which
  // spreads the spectrum of A^T A.
  double decay = 0.0;
  std::uint64_t seed = 1;
};

struct SyntheticProblem {
  Dataset data;
  double lambda2 = 0.0;
  double achieved_kappa = 0.0;
};

// Gaussian rows normalized to unit norm, labels sign(a_i^T w) for a planted
// Gaussian w with flips, lambda2 = L / target_kappa.
SyntheticProblem generate_synthetic(const SyntheticSpec& spec);

// "n=200,d=20,kappa=1e4,loss=squared,noise=0.1,decay=1,seed=7"; omitted keys
// keep their defaults.
SyntheticSpec parse_synthetic_spec(std::string_view text);
std::string format_synthetic_spec(const SyntheticSpec& spec);

// kappa = L / lambda2 computed from the rows.
double condition_number(const Dataset& data, LossKind loss, double lambda2);

// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);

}  // namespace ssnm

#endif
