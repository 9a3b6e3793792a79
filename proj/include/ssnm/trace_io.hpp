#ifndef SSNM_TRACE_IO_HPP
#define SSNM_TRACE_IO_HPP

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "ssnm/solvers.hpp"

namespace ssnm {

inline constexpr std::string_view kTraceCsvSchema = "trace.v1";
inline constexpr std::string_view kTraceCsvHeader =
    "epoch,objective,subopt,dist_sq,ifo,po,seconds";

// One row per trace point. Missing values (no reference, wall time not
// requested) are written as empty fields. Numbers use shortest round-trip
// formatting, so equal traces give equal bytes.
void write_trace_csv(std::ostream& out, const RunTrace& trace, bool with_seconds);

void write_vector(std::ostream& out, const Vector& x);

// {"value": F*, "x": [...]}
void write_reference(const std::filesystem::path& path, const Reference& ref);
Reference read_reference(const std::filesystem::path& path);

// Writes `content` to a sibling temp file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace ssnm

#endif
