#include "ssnm/trace_io.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "ssnm/data.hpp"
#include "ssnm/errors.hpp"

namespace ssnm {

void write_trace_csv(std::ostream& out, const RunTrace& trace, bool with_seconds) {
  out << kTraceCsvHeader << '\n';
  for (const auto& p : trace.points) {
    out << p.epoch << ',' << format_double(p.objective) << ',';
    if (p.subopt) out << format_double(*p.subopt);
    out << ',';
    if (p.dist_sq) out << format_double(*p.dist_sq);
    out << ',' << p.ifo << ',' << p.po << ',';
    if (with_seconds) out << format_double(p.seconds);
    out << '\n';
  }
}

void write_vector(std::ostream& out, const Vector& x) {
  for (const double v : x) out << format_double(v) << '\n';
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out) throw DataError("write to '" + tmp.string() + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

void write_reference(const std::filesystem::path& path, const Reference& ref) {
  nlohmann::ordered_json j;
  j["value"] = ref.value;
  j["x"] = std::vector<double>(ref.x.begin(), ref.x.end());
  write_file_atomic(path, j.dump(1) + "\n");
}

Reference read_reference(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open reference '" + path.string() + "'");
  try {
    const auto j = nlohmann::json::parse(in);
    const auto xs = j.at("x").get<std::vector<double>>();
    Reference ref;
    ref.value = j.at("value").get<double>();
    ref.x = Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
    return ref;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("reference '" + path.string() + "': " + e.what());
  }
}

}  // namespace ssnm
