#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace svarx {

/// An ISO 8601 week (week-based year + week number, 1..52/53).
///
/// Weekly series are indexed by these. Arithmetic goes through the serial
/// day number of the week's Monday, so stepping across 53-week years is
/// handled correctly.
struct IsoWeek {
  int year = 0;
  int week = 0;

  /// ISO week containing the given civil date.
  static IsoWeek from_date(int year, unsigned month, unsigned day);

  /// Accepts "2014-W05" or a civil date "2014-02-01" (any day of the week,
  /// e.g. the week-ending Saturday used by claims reports).
  static IsoWeek parse(std::string_view text);

  static int weeks_in_year(int iso_year);  // 52 or 53

  /// Days since 1970-01-01 of this week's Monday.
  std::int64_t monday_serial() const;
  static IsoWeek from_monday_serial(std::int64_t serial);

  IsoWeek plus(std::int64_t n_weeks) const;
  /// Signed number of weeks from `other` to `*this`.
  std::int64_t minus(const IsoWeek& other) const;

  std::string str() const;  // "2014-W05"

  friend bool operator==(const IsoWeek& a, const IsoWeek& b) = default;
  friend std::strong_ordering operator<=>(const IsoWeek& a, const IsoWeek& b) {
    return a.monday_serial() <=> b.monday_serial();
  }
};

/// A gapless range of consecutive weeks. Offset t maps to start.plus(t).
struct TimeIndex {
  IsoWeek start;
  std::size_t length = 0;

  IsoWeek week_at(std::size_t t) const;
  IsoWeek last() const;
  /// Offset of `w` within the range, or nullopt when outside.
  std::optional<std::size_t> position(const IsoWeek& w) const;
  TimeIndex sub(std::size_t offset, std::size_t count) const;

  friend bool operator==(const TimeIndex& a, const TimeIndex& b) = default;
};

}  // namespace svarx
