#include "ssnm/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <vector>

#include "ssnm/errors.hpp"

namespace ssnm {

namespace {

using Triplet = Eigen::Triplet<double>;

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

std::string_view next_token(std::string_view& rest) {
  std::size_t b = 0;
  while (b < rest.size() && is_space(rest[b])) ++b;
  std::size_t e = b;
  while (e < rest.size() && !is_space(rest[e])) ++e;
  std::string_view tok = rest.substr(b, e - b);
  rest.remove_prefix(e);
  return tok;
}

std::optional<double> parse_double(std::string_view tok) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  double v = 0.0;
  const char* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || ptr != end || tok.empty()) return std::nullopt;
  return v;
}

std::optional<std::size_t> parse_index(std::string_view tok) {
  std::size_t v = 0;
  const char* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || ptr != end || tok.empty()) return std::nullopt;
  return v;
}

Dataset rebuild(std::size_t n, std::size_t d, std::vector<Triplet>& triplets,
                Vector labels) {
  SparseRows rows(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  rows.setFromTriplets(triplets.begin(), triplets.end());
  return Dataset(std::move(rows), std::move(labels));
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

Dataset parse_libsvm(std::istream& in, const LoadOptions& options) {
  std::vector<Triplet> triplets;
  std::vector<double> raw_labels;
  std::vector<std::size_t> label_lines;
  std::size_t max_index = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view rest(line);
    const std::string_view label_tok = next_token(rest);
    if (label_tok.empty()) continue;  // blank line
    const auto label = parse_double(label_tok);
    if (!label || !std::isfinite(*label))
      throw DataError("label '" + std::string(label_tok) + "' is not a number",
                      line_no);
    const auto row = static_cast<int>(raw_labels.size());
    raw_labels.push_back(*label);
    label_lines.push_back(line_no);

    std::size_t prev = 0;
    for (std::string_view tok = next_token(rest); !tok.empty();
         tok = next_token(rest)) {
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos)
        throw DataError("token '" + std::string(tok) + "' is not index:value",
                        line_no);
      const auto index = parse_index(tok.substr(0, colon));
      if (!index || *index == 0)
        throw DataError("bad feature index in '" + std::string(tok) + "'",
                        line_no);
      if (*index <= prev)
        throw DataError("feature indices not strictly increasing at '" +
                            std::string(tok) + "'",
                        line_no);
      const auto value = parse_double(tok.substr(colon + 1));
      if (!value || !std::isfinite(*value))
        throw DataError("bad feature value in '" + std::string(tok) + "'",
                        line_no);
      prev = *index;
      max_index = std::max(max_index, *index);
      if (*value != 0.0)
        triplets.emplace_back(row, static_cast<int>(*index - 1), *value);
    }
  }
  if (raw_labels.empty()) throw DataError("no examples in input");

  Vector labels(static_cast<Eigen::Index>(raw_labels.size()));
  if (options.positive_label) {
    for (std::size_t i = 0; i < raw_labels.size(); ++i)
      labels[static_cast<Eigen::Index>(i)] =
          raw_labels[i] == *options.positive_label ? 1.0 : -1.0;
  } else {
    const bool signed_set = std::all_of(raw_labels.begin(), raw_labels.end(),
                                        [](double v) { return v == 1.0 || v == -1.0; });
    const bool pair_set = std::all_of(raw_labels.begin(), raw_labels.end(),
                                      [](double v) { return v == 1.0 || v == 2.0; });
    if (!signed_set && !pair_set) {
      for (std::size_t i = 0; i < raw_labels.size(); ++i) {
        const double v = raw_labels[i];
        if (v != 1.0 && v != -1.0 && v != 2.0)
          throw DataError("label " + format_double(v) +
                              " is not binary (+1/-1 or 1/2); pass a positive label",
                          label_lines[i]);
      }
      throw DataError("labels mix the {-1,+1} and {1,2} conventions");
    }
    for (std::size_t i = 0; i < raw_labels.size(); ++i)
      labels[static_cast<Eigen::Index>(i)] =
          signed_set ? raw_labels[i] : (raw_labels[i] == 1.0 ? 1.0 : -1.0);
  }
  const std::size_t d = std::max(max_index, options.min_dim);
  return rebuild(raw_labels.size(), d, triplets, std::move(labels));
}

Dataset load_libsvm(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return parse_libsvm(in, options);
}

void write_libsvm(std::ostream& out, const Dataset& data) {
  for (std::size_t i = 0; i < data.n(); ++i) {
    out << (data.label(i) > 0 ? "+1" : "-1");
    for (SparseRows::InnerIterator it(data.rows(), static_cast<Eigen::Index>(i));
         it; ++it)
      out << ' ' << (it.col() + 1) << ':' << format_double(it.value());
    out << '\n';
  }
}

void write_libsvm(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  write_libsvm(out, data);
  if (!out) throw DataError("write to '" + path.string() + "' failed");
}

Dataset normalize_rows(const Dataset& data, std::size_t* dropped) {
  std::vector<Triplet> triplets;
  triplets.reserve(data.nnz());
  std::vector<double> labels;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    const double norm = std::sqrt(data.row_squared_norm(i));
    if (norm == 0.0) {
      ++skipped;
      continue;
    }
    const auto row = static_cast<int>(labels.size());
    for (SparseRows::InnerIterator it(data.rows(), static_cast<Eigen::Index>(i));
         it; ++it) {
      const double v = it.value() / norm;
      if (v != 0.0) triplets.emplace_back(row, static_cast<int>(it.col()), v);
    }
    labels.push_back(data.label(i));
  }
  if (dropped) *dropped = skipped;
  if (labels.empty()) throw DataError("every row is all-zero");
  return rebuild(labels.size(), data.d(), triplets,
                 Eigen::Map<const Vector>(labels.data(),
                                          static_cast<Eigen::Index>(labels.size())));
}

Dataset scale_columns(const Dataset& data) {
  Vector sq = Vector::Zero(static_cast<Eigen::Index>(data.d()));
  for (std::size_t i = 0; i < data.n(); ++i)
    for (SparseRows::InnerIterator it(data.rows(), static_cast<Eigen::Index>(i));
         it; ++it)
      sq[it.col()] += it.value() * it.value();
  const double n = static_cast<double>(data.n());
  std::vector<Triplet> triplets;
  triplets.reserve(data.nnz());
  for (std::size_t i = 0; i < data.n(); ++i)
    for (SparseRows::InnerIterator it(data.rows(), static_cast<Eigen::Index>(i));
         it; ++it) {
      const double v = it.value() / std::sqrt(sq[it.col()] / n);
      if (v != 0.0)
        triplets.emplace_back(static_cast<int>(i), static_cast<int>(it.col()), v);
    }
  return rebuild(data.n(), data.d(), triplets, data.labels());
}

double condition_number(const Dataset& data, LossKind loss, double lambda2) {
  if (!(lambda2 > 0.0)) throw ConfigError("lambda2 must be positive");
  return smoothness_constant(data, loss) / lambda2;
}

SyntheticProblem generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n == 0 || spec.d == 0) throw ConfigError("synthetic spec needs n, d >= 1");
  if (!(spec.target_kappa >= 1.0) || !std::isfinite(spec.target_kappa))
    throw ConfigError("synthetic spec needs kappa >= 1");
  if (!(spec.noise >= 0.0 && spec.noise <= 0.5))
    throw ConfigError("synthetic label noise must lie in [0, 1/2]");
  if (!(spec.decay >= 0.0)) throw ConfigError("synthetic decay must be >= 0");

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform;

  Vector planted(static_cast<Eigen::Index>(spec.d));
  for (auto& w : planted) w = normal(rng);

  std::vector<double> scale(spec.d);
  for (std::size_t j = 0; j < spec.d; ++j)
    scale[j] = std::pow(static_cast<double>(j + 1), -spec.decay);

  std::vector<Triplet> triplets;
  triplets.reserve(spec.n * spec.d);
  Vector labels(static_cast<Eigen::Index>(spec.n));
  std::vector<double> row(spec.d);
  for (std::size_t i = 0; i < spec.n; ++i) {
    double sq = 0.0;
    double margin = 0.0;
    for (std::size_t j = 0; j < spec.d; ++j) {
      row[j] = normal(rng) * scale[j];
      sq += row[j] * row[j];
    }
    const double norm = std::sqrt(sq);
    for (std::size_t j = 0; j < spec.d; ++j) {
      row[j] /= norm;
      margin += row[j] * planted[static_cast<Eigen::Index>(j)];
      if (row[j] != 0.0)
        triplets.emplace_back(static_cast<int>(i), static_cast<int>(j), row[j]);
    }
    double label = margin >= 0.0 ? 1.0 : -1.0;
    if (uniform(rng) < spec.noise) label = -label;
    labels[static_cast<Eigen::Index>(i)] = label;
  }

  SyntheticProblem out{rebuild(spec.n, spec.d, triplets, std::move(labels)), 0.0, 0.0};
  out.lambda2 = smoothness_constant(out.data, spec.loss) / spec.target_kappa;
  out.achieved_kappa = condition_number(out.data, spec.loss, out.lambda2);
  return out;
}

SyntheticSpec parse_synthetic_spec(std::string_view text) {
  SyntheticSpec spec;
  while (!text.empty()) {
    const auto comma = text.find(',');
    std::string_view item = text.substr(0, comma);
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("synthetic spec item '" + std::string(item) + "' is not key=value");
    const std::string_view key = item.substr(0, eq);
    const std::string_view value = item.substr(eq + 1);
    auto number = [&]() {
      const auto v = parse_double(value);
      if (!v) throw ConfigError("synthetic spec: bad value for '" + std::string(key) + "'");
      return *v;
    };
    auto count = [&]() {
      const double v = number();
      if (v < 0 || v != std::floor(v))
        throw ConfigError("synthetic spec: '" + std::string(key) + "' must be a count");
      return static_cast<std::size_t>(v);
    };
    if (key == "n") spec.n = count();
    else if (key == "d") spec.d = count();
    else if (key == "kappa") spec.target_kappa = number();
    else if (key == "loss") spec.loss = parse_loss(value);
    else if (key == "noise") spec.noise = number();
    else if (key == "decay") spec.decay = number();
    else if (key == "seed") {
      const auto v = parse_index(value);
      if (!v) throw ConfigError("synthetic spec: bad seed");
      spec.seed = static_cast<std::uint64_t>(*v);
    }
    else throw ConfigError("synthetic spec: unknown key '" + std::string(key) + "'");
  }
  return spec;
}

std::string format_synthetic_spec(const SyntheticSpec& spec) {
  std::ostringstream os;
  os << "n=" << spec.n << ",d=" << spec.d
     << ",kappa=" << format_double(spec.target_kappa)
     << ",loss=" << to_string(spec.loss) << ",noise=" << format_double(spec.noise)
     << ",decay=" << format_double(spec.decay) << ",seed=" << spec.seed;
  return os.str();
}

}  // namespace ssnm
