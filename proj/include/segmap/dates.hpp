#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace segmap {

/// Calendar date stored as days since 1970-01-01 (proleptic Gregorian).
class Date {
 public:
  constexpr Date() = default;
  constexpr explicit Date(int days_since_epoch) : days_(days_since_epoch) {}

  static Date from_ymd(int year, unsigned month, unsigned day);
  /// Parses "YYYY-MM-DD"; throws DataError on malformed or impossible dates.
  static Date parse(std::string_view iso);

  std::string iso() const;
  constexpr int days() const { return days_; }
  /// Months since year 0 (year * 12 + month - 1); used for calendar-month spans.
  int month_ordinal() const;

  friend constexpr int operator-(Date a, Date b) { return a.days_ - b.days_; }
  friend constexpr Date operator+(Date a, int d) { return Date(a.days_ + d); }
  friend constexpr Date operator-(Date a, int d) { return Date(a.days_ - d); }
  friend constexpr auto operator<=>(Date, Date) = default;

 private:
  int days_ = 0;
};

/// Number of calendar months touched by the closed interval [first, last].
int calendar_months_spanned(Date first, Date last);

}  // namespace segmap
