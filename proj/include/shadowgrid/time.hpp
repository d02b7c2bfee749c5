// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <compare>
#include <string>
#include <string_view>

namespace shadowgrid {

/// A UTC instant with one-second resolution.
class UtcInstant {
 public:
  using Clock = std::chrono::system_clock;
  using Seconds = std::chrono::sys_seconds;

  constexpr UtcInstant() = default;
  constexpr explicit UtcInstant(Seconds s) : seconds_(s) {}

  static UtcInstant from_civil(int year, unsigned month, unsigned day, int hour = 0, int minute = 0,
                               int second = 0);
  /// Accepts `YYYY-MM-DDTHH:MM:SSZ`, `YYYY-MM-DDTHH:MM:SS`, `YYYY-MM-DD HH:MM:SS` and
  /// `YYYY-MM-DDTHH:MMZ`.
  static UtcInstant parse(std::string_view text);

  Seconds seconds() const { return seconds_; }
  std::chrono::year_month_day date() const;
  /// Fractional hours since UTC midnight.
  double hour_of_day() const;
  /// 1-based ordinal day in the UTC year.
  int day_of_year() const;
  bool leap_year() const;
  double julian_day() const;

  UtcInstant plus_hours(long long hours) const {
    return UtcInstant(seconds_ + std::chrono::hours(hours));
  }
  /// Shift by a fixed offset, e.g. -5 for UTC-05:00 local standard time.
  UtcInstant to_local(double utc_offset_hours) const;

  std::string iso8601() const;

  friend constexpr auto operator<=>(const UtcInstant&, const UtcInstant&) = default;

 private:
  Seconds seconds_{};
};

/// Whole hours between two instants (b - a); fractional differences truncate.
long long hours_between(const UtcInstant& a, const UtcInstant& b);

std::string format_date(const std::chrono::year_month_day& d);
std::chrono::year_month_day parse_date(std::string_view text);

}  // namespace shadowgrid
