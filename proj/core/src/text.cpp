#include "rampcast/text.hpp"

#include <charconv>
#include <cmath>
#include <limits>

#include "rampcast/error.hpp"

namespace rampcast {

std::string format_number(double v) {
  if (!std::isfinite(v)) return "";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_number(std::string_view s, const std::string& context) {
  s = trim(s);
  if (s.empty() || s == "nan" || s == "NaN" || s == "NA") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    fail(Errc::ParseError, context + ": not a number: " + std::string(s));
  return v;
}

bool next_data_line(std::istream& in, std::string& line) {
  while (std::getline(in, line))
    if (line.empty() || line[0] != '#') return true;
  return false;
}

}  // namespace rampcast
