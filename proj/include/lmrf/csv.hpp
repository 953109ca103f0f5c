#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lmrf::csv {

/// Shortest decimal text that parses back to the same double. NaN is "NA".
std::string format_double(double v);
std::string format_optional(const std::optional<double>& v);

/// Parses a decimal; empty or "NA" yields NaN. Throws DataError otherwise.
double parse_double(std::string_view text);
long long parse_int(std::string_view text);

std::vector<std::string_view> split_fields(std::string_view line);
std::string join(const std::vector<std::string>& fields);

/// Writes through `writer` into a sibling temp file, then renames it over
/// `path` so readers never observe a partial file.
void write_atomically(const std::filesystem::path& path,
                      const std::function<void(std::ostream&)>& writer);

}  // namespace lmrf::csv
