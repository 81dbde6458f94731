#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace segmap::textio {

/// Splits one delimited line; no quoting (fields never contain the separator).
std::vector<std::string> split(std::string_view line, char sep = ',');

/// 17 significant digits; parses back to the same double.
std::string exact(double v);
/// Shortest decimal rendering that parses back to the same double.
std::string shortest(double v);
/// Fixed-point rendering with `decimals` places, with -0 printed as 0.
std::string fixed(double v, int decimals);

double parse_double(std::string_view field, std::string_view what);
long long parse_int(std::string_view field, std::string_view what);
std::optional<double> parse_optional_double(std::string_view field, std::string_view what);

/// Reads a whole file, throwing DataError if it cannot be opened.
std::string read_file(const std::string& path);
/// Writes `content` to `path` (binary, truncating).
void write_file(const std::string& path, std::string_view content);

/// Iterates lines, stripping a trailing '\r'.
std::vector<std::string> lines(std::string_view text);

}  // namespace segmap::textio
