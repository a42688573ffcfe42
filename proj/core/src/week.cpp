#include "svarx/week.hpp"

#include <charconv>
#include <cstdio>

#include "svarx/errors.hpp"

namespace svarx {
namespace {

// Days since 1970-01-01 in the proleptic Gregorian calendar.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

// ISO weekday 1=Monday .. 7=Sunday; serial 0 (1970-01-01) was a Thursday.
int iso_weekday(std::int64_t serial) {
  return static_cast<int>(((serial % 7) + 10) % 7) + 1;
}

// Monday of ISO week 1: January 4 is in week 1 by definition.
std::int64_t monday_of_week1(int iso_year) {
  const std::int64_t jan4 = days_from_civil(iso_year, 1, 4);
  return jan4 - (iso_weekday(jan4) - 1);
}

int parse_int(std::string_view s) {
  int value = 0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw ParseError("invalid number in week literal: '" + std::string(s) + "'");
  }
  return value;
}

}  // namespace

IsoWeek IsoWeek::from_date(int year, unsigned month, unsigned day) {
  if (month < 1 || month > 12 || day < 1 || day > 31) {
    throw ParseError("invalid civil date");
  }
  const std::int64_t z = days_from_civil(year, month, day);
  int iso_year = year;
  std::int64_t m1 = monday_of_week1(iso_year);
  if (z < m1) {
    --iso_year;
    m1 = monday_of_week1(iso_year);
  } else {
    const int w = static_cast<int>((z - m1) / 7) + 1;
    if (w > weeks_in_year(iso_year)) {
      return IsoWeek{iso_year + 1, 1};
    }
    return IsoWeek{iso_year, w};
  }
  return IsoWeek{iso_year, static_cast<int>((z - m1) / 7) + 1};
}

IsoWeek IsoWeek::parse(std::string_view text) {
  const auto wpos = text.find('W');
  if (wpos != std::string_view::npos) {
    // "yyyy-Www"
    if (wpos < 1 || text[wpos - 1] != '-') {
      throw ParseError("malformed week literal: '" + std::string(text) + "'");
    }
    const int year = parse_int(text.substr(0, wpos - 1));
    const int week = parse_int(text.substr(wpos + 1));
    if (week < 1 || week > weeks_in_year(year)) {
      throw ParseError("week out of range: '" + std::string(text) + "'");
    }
    return IsoWeek{year, week};
  }
  // "yyyy-mm-dd"
  const auto d1 = text.find('-');
  const auto d2 = d1 == std::string_view::npos ? std::string_view::npos
                                               : text.find('-', d1 + 1);
  if (d1 == std::string_view::npos || d2 == std::string_view::npos) {
    throw ParseError("malformed week literal: '" + std::string(text) + "'");
  }
  const int year = parse_int(text.substr(0, d1));
  const int month = parse_int(text.substr(d1 + 1, d2 - d1 - 1));
  const int day = parse_int(text.substr(d2 + 1));
  return from_date(year, static_cast<unsigned>(month),
                   static_cast<unsigned>(day));
}

int IsoWeek::weeks_in_year(int iso_year) {
  return static_cast<int>((monday_of_week1(iso_year + 1) -
                           monday_of_week1(iso_year)) / 7);
}

std::int64_t IsoWeek::monday_serial() const {
  return monday_of_week1(year) + 7 * static_cast<std::int64_t>(week - 1);
}

IsoWeek IsoWeek::from_monday_serial(std::int64_t serial) {
  // The Thursday of the week decides the ISO year.
  const std::int64_t thursday = serial + 3;
  // Convert serial day back to civil year (approximate then correct).
  std::int64_t z = thursday + 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe =
      (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const int iso_year = static_cast<int>(y + (mp >= 10 ? 1 : 0));
  const int week =
      static_cast<int>((serial - monday_of_week1(iso_year)) / 7) + 1;
  return IsoWeek{iso_year, week};
}

IsoWeek IsoWeek::plus(std::int64_t n_weeks) const {
  return from_monday_serial(monday_serial() + 7 * n_weeks);
}

std::int64_t IsoWeek::minus(const IsoWeek& other) const {
  return (monday_serial() - other.monday_serial()) / 7;
}

std::string IsoWeek::str() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-W%02d", year, week);
  return buf;
}

IsoWeek TimeIndex::week_at(std::size_t t) const {
  return start.plus(static_cast<std::int64_t>(t));
}

IsoWeek TimeIndex::last() const {
  if (length == 0) throw SeriesTooShort("empty time index has no last week");
  return week_at(length - 1);
}

std::optional<std::size_t> TimeIndex::position(const IsoWeek& w) const {
  const std::int64_t off = w.minus(start);
  if (off < 0 || off >= static_cast<std::int64_t>(length)) return std::nullopt;
  return static_cast<std::size_t>(off);
}

TimeIndex TimeIndex::sub(std::size_t offset, std::size_t count) const {
  if (offset + count > length) {
    throw InvalidArgument("time index slice out of range");
  }
  return TimeIndex{start.plus(static_cast<std::int64_t>(offset)), count};
}

}  // namespace svarx
