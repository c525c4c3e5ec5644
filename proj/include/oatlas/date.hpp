#pragma once

#include <charconv>
#include <chrono>
#include <compare>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace oatlas {

/// A UTC calendar day.
class Date {
public:
  Date() = default;
  explicit Date(std::chrono::sys_days days) : days_(days) {}
  Date(int y, unsigned m, unsigned d)
      : days_(std::chrono::year_month_day{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}}) {}

  static std::optional<Date> parse(std::string_view s);

  std::chrono::sys_days days() const { return days_; }
  long serial() const { return days_.time_since_epoch().count(); }

  Date next() const { return Date(days_ + std::chrono::days{1}); }
  Date prev() const { return Date(days_ - std::chrono::days{1}); }
  Date plus(long n) const { return Date(days_ + std::chrono::days{n}); }

  std::string str() const {
    const std::chrono::year_month_day ymd{days_};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
  }

  auto operator<=>(const Date&) const = default;

private:
  std::chrono::sys_days days_{};
};

namespace detail {

inline bool parse_fixed_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
  }
  const auto r = std::from_chars(s.data() + pos, s.data() + pos + len, out);
  return r.ec == std::errc{};
}

}  // namespace detail

inline std::optional<Date> Date::parse(std::string_view s) {
  int y = 0, m = 0, d = 0;
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  if (!detail::parse_fixed_int(s, 0, 4, y) || !detail::parse_fixed_int(s, 5, 2, m) ||
      !detail::parse_fixed_int(s, 8, 2, d)) {
    return std::nullopt;
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return Date(std::chrono::sys_days{ymd});
}

using Timestamp = std::chrono::sys_seconds;

/// Parses "YYYY-MM-DD", "YYYY-MM-DDTHH:MM[:SS[.fff]]" with optional "Z" or
/// "+HH:MM"/"-HH:MM" offset ("T" may be a space). Offsets are applied so the
/// result is UTC; a missing offset means UTC.
inline std::optional<Timestamp> parse_timestamp(std::string_view s) {
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() < 10) return std::nullopt;
  const auto date = Date::parse(s.substr(0, 10));
  if (!date) return std::nullopt;
  Timestamp ts{date->days()};
  if (s.size() == 10) return ts;
  if (s[10] != 'T' && s[10] != ' ') return std::nullopt;
  std::size_t pos = 11;
  int hh = 0, mm = 0, ss = 0;
  if (!detail::parse_fixed_int(s, pos, 2, hh) || pos + 2 >= s.size() || s[pos + 2] != ':' ||
      !detail::parse_fixed_int(s, pos + 3, 2, mm)) {
    return std::nullopt;
  }
  pos += 5;
  if (pos < s.size() && s[pos] == ':') {
    if (!detail::parse_fixed_int(s, pos + 1, 2, ss)) return std::nullopt;
    pos += 3;
    if (pos < s.size() && s[pos] == '.') {
      ++pos;
      const auto start = pos;
      while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
      if (pos == start) return std::nullopt;
    }
  }
  if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;
  ts += std::chrono::hours{hh} + std::chrono::minutes{mm} + std::chrono::seconds{ss};
  if (pos == s.size()) return ts;
  if (s[pos] == 'Z' && pos + 1 == s.size()) return ts;
  if (s[pos] == '+' || s[pos] == '-') {
    const int sign = s[pos] == '+' ? 1 : -1;
    int oh = 0, om = 0;
    if (!detail::parse_fixed_int(s, pos + 1, 2, oh)) return std::nullopt;
    std::size_t rest = pos + 3;
    if (rest < s.size() && s[rest] == ':') ++rest;
    if (rest < s.size()) {
      if (!detail::parse_fixed_int(s, rest, 2, om) || rest + 2 != s.size()) return std::nullopt;
    }
    if (oh > 23 || om > 59) return std::nullopt;
    return ts - sign * (std::chrono::hours{oh} + std::chrono::minutes{om});
  }
  return std::nullopt;
}

inline Date date_of(Timestamp ts) { return Date(std::chrono::floor<std::chrono::days>(ts)); }

/// Canonical "YYYY-MM-DDTHH:MM:SSZ".
inline std::string format_timestamp(Timestamp ts) {
  const auto day = std::chrono::floor<std::chrono::days>(ts);
  const std::chrono::hh_mm_ss hms{ts - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02dZ", Date(day).str().c_str(), static_cast<int>(hms.hours().count()),
                static_cast<int>(hms.minutes().count()), static_cast<int>(hms.seconds().count()));
  return buf;
}

}  // namespace oatlas
