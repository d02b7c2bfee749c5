// SPDX-License-Identifier: Apache-2.0
#include "shadowgrid/time.hpp"

#include <fmt/format.h>

#include <charconv>

#include "shadowgrid/error.hpp"

namespace shadowgrid {
namespace {

using namespace std::chrono;

int parse_int(std::string_view text, std::size_t pos, std::size_t len) {
  if (pos + len > text.size()) throw Error(ErrorKind::ParseError, fmt::format("bad timestamp '{}'", text));
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, value);
  if (ec != std::errc{} || ptr != text.data() + pos + len) {
    throw Error(ErrorKind::ParseError, fmt::format("bad timestamp '{}'", text));
  }
  return value;
}

}  // namespace

UtcInstant UtcInstant::from_civil(int y, unsigned m, unsigned d, int hour, int minute, int second) {
  year_month_day ymd{year{y}, month{m}, day{d}};
  if (!ymd.ok() || hour < 0 || hour > 23 || minute < 0 || minute > 59 || second < 0 || second > 60) {
    throw Error(ErrorKind::InvalidInput,
                fmt::format("invalid civil time {}-{}-{} {}:{}:{}", y, m, d, hour, minute, second));
  }
  return UtcInstant(sys_days{ymd} + hours(hour) + minutes(minute) + std::chrono::seconds(second));
}

UtcInstant UtcInstant::parse(std::string_view text) {
  while (!text.empty() && (text.back() == 'Z' || text.back() == ' ' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  if (text.size() < 16 || text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ')) {
    throw Error(ErrorKind::ParseError, fmt::format("bad timestamp '{}'", text));
  }
  const int y = parse_int(text, 0, 4);
  const int mo = parse_int(text, 5, 2);
  const int d = parse_int(text, 8, 2);
  const int h = parse_int(text, 11, 2);
  const int mi = parse_int(text, 14, 2);
  const int s = text.size() >= 19 ? parse_int(text, 17, 2) : 0;
  try {
    return from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d), h, mi, s);
  } catch (const Error&) {
    throw Error(ErrorKind::ParseError, fmt::format("bad timestamp '{}'", text));
  }
}

year_month_day UtcInstant::date() const { return year_month_day{floor<days>(seconds_)}; }

double UtcInstant::hour_of_day() const {
  const auto since_midnight = seconds_ - floor<days>(seconds_);
  return static_cast<double>(since_midnight.count()) / 3600.0;
}

int UtcInstant::day_of_year() const {
  const auto ymd = date();
  const sys_days jan1{ymd.year() / January / 1};
  return static_cast<int>((floor<days>(seconds_) - jan1).count()) + 1;
}

bool UtcInstant::leap_year() const { return date().year().is_leap(); }

double UtcInstant::julian_day() const {
  return static_cast<double>(seconds_.time_since_epoch().count()) / 86400.0 + 2440587.5;
}

UtcInstant UtcInstant::to_local(double utc_offset_hours) const {
  return UtcInstant(seconds_ + std::chrono::seconds(static_cast<long long>(utc_offset_hours * 3600.0)));
}

std::string UtcInstant::iso8601() const {
  const auto ymd = date();
  const auto tod = hh_mm_ss{seconds_ - floor<days>(seconds_)};
  return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}Z", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                     tod.hours().count(), tod.minutes().count(), tod.seconds().count());
}

long long hours_between(const UtcInstant& a, const UtcInstant& b) {
  return duration_cast<hours>(b.seconds() - a.seconds()).count();
}

std::string format_date(const year_month_day& d) {
  return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                     static_cast<unsigned>(d.day()));
}

year_month_day parse_date(std::string_view text) {
  while (!text.empty() && (text.back() == '\r' || text.back() == ' ')) text.remove_suffix(1);
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    throw Error(ErrorKind::ParseError, fmt::format("bad date '{}'", text));
  }
  year_month_day d{year{parse_int(text, 0, 4)}, month{static_cast<unsigned>(parse_int(text, 5, 2))},
                   day{static_cast<unsigned>(parse_int(text, 8, 2))}};
  if (!d.ok()) throw Error(ErrorKind::ParseError, fmt::format("bad date '{}'", text));
  return d;
}

}  // namespace shadowgrid
