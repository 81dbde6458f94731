#include "segmap/dates.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>

#include "segmap/error.hpp"

namespace segmap {

namespace chr = std::chrono;

Date Date::from_ymd(int year, unsigned month, unsigned day) {
  const chr::year_month_day ymd{chr::year{year}, chr::month{month}, chr::day{day}};
  if (!ymd.ok()) {
    throw DataError("invalid calendar date " + std::to_string(year) + "-" + std::to_string(month) +
                    "-" + std::to_string(day));
  }
  return Date(chr::sys_days{ymd}.time_since_epoch().count());
}

Date Date::parse(std::string_view iso) {
  auto bad = [&] { return DataError("malformed ISO-8601 date '" + std::string(iso) + "'"); };
  if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') throw bad();
  int y = 0;
  unsigned m = 0, d = 0;
  auto parse_part = [&](std::size_t pos, std::size_t len, auto& out) {
    auto [ptr, ec] = std::from_chars(iso.data() + pos, iso.data() + pos + len, out);
    if (ec != std::errc{} || ptr != iso.data() + pos + len) throw bad();
  };
  parse_part(0, 4, y);
  parse_part(5, 2, m);
  parse_part(8, 2, d);
  return from_ymd(y, m, d);
}

std::string Date::iso() const {
  const chr::year_month_day ymd{chr::sys_days{chr::days{days_}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

int Date::month_ordinal() const {
  const chr::year_month_day ymd{chr::sys_days{chr::days{days_}}};
  return static_cast<int>(ymd.year()) * 12 + static_cast<int>(static_cast<unsigned>(ymd.month())) - 1;
}

int calendar_months_spanned(Date first, Date last) {
  if (last < first) return 0;
  return last.month_ordinal() - first.month_ordinal() + 1;
}

}  // namespace segmap
