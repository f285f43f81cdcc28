#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace qbvar {

/// A calendar month. Ordered, and convertible to a dense month index so
/// that monthly arithmetic is plain integer arithmetic.
struct YearMonth {
  int year = 1970;
  int month = 1;  // 1..12

  static YearMonth from_index(int index);
  /// Parses "YYYY-MM" (also accepts "YYYYMmm", e.g. "2008M1").
  static YearMonth parse(std::string_view text);

  int index() const { return year * 12 + (month - 1); }
  YearMonth plus_months(int months) const { return from_index(index() + months); }
  std::string str() const;

  friend bool operator==(const YearMonth&, const YearMonth&) = default;
  friend auto operator<=>(const YearMonth& a, const YearMonth& b) { return a.index() <=> b.index(); }
};

/// Number of months from `a` to `b` (negative if b precedes a).
inline int months_between(const YearMonth& a, const YearMonth& b) { return b.index() - a.index(); }

}  // namespace qbvar
