#include "qbvar/date.hpp"

#include <charconv>
#include <cstdio>

#include "qbvar/error.hpp"

namespace qbvar {

namespace {

int parse_int(std::string_view s, std::string_view whole) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw InvalidArgument("malformed month '" + std::string(whole) + "'");
  }
  return value;
}

}  // namespace

YearMonth YearMonth::from_index(int index) {
  // floor division so that indices before year 0 still round-trip
  int year = index >= 0 ? index / 12 : -((-index + 11) / 12);
  return YearMonth{year, index - year * 12 + 1};
}

YearMonth YearMonth::parse(std::string_view text) {
  std::size_t sep = text.find_first_of("-M");
  if (sep == std::string_view::npos || sep == 0) {
    throw InvalidArgument("malformed month '" + std::string(text) + "', expected YYYY-MM");
  }
  std::string_view month_part = text.substr(sep + 1);
  // tolerate a trailing day component (YYYY-MM-DD)
  if (auto dash = month_part.find('-'); dash != std::string_view::npos) {
    month_part = month_part.substr(0, dash);
  }
  YearMonth ym{parse_int(text.substr(0, sep), text), parse_int(month_part, text)};
  if (ym.month < 1 || ym.month > 12) {
    throw InvalidArgument("month out of range in '" + std::string(text) + "'");
  }
  return ym;
}

std::string YearMonth::str() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d", year, month);
  return buf;
}

}  // namespace qbvar
