#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace rampcast {

/// Shortest round-trip decimal form; empty for NaN/inf (the CSV "missing" marker).
std::string format_number(double v);

/// Comma split without quoting rules (none of the CSV formats here quote fields).
std::vector<std::string_view> split_csv(std::string_view line);
std::string_view trim(std::string_view s);

/// getline that skips lines starting with '#' (metadata preambles).
bool next_data_line(std::istream& in, std::string& line);

/// Empty, "nan", "NaN" and "NA" parse to NaN; anything else must be a full number.
/// Throws ParseError naming `context`.
double parse_number(std::string_view s, const std::string& context);

}  // namespace rampcast
