#pragma once

#include <string>
#include <string_view>

namespace orchard::detail {

/// Writes to a sibling temp file and renames it into place.
void write_file_atomic(const std::string& path, std::string_view contents);

std::string read_file(const std::string& path);

/// `%.17g`, enough digits to round-trip a double.
std::string format_double(double v);

/// Whole-string decimal parse; subnormals are accepted. Throws kFormat.
double parse_double(std::string_view s);

}  // namespace orchard::detail
