#pragma once

#include <array>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "oatlas/date.hpp"
#include "oatlas/geo.hpp"
#include "oatlas/labeling.hpp"

namespace oatlas {

inline constexpr std::string_view kAllCountries = "ALL";

/// Country bucket of a record: its code, or UNRESOLVED.
inline std::string country_bucket(const LabeledRecord& r) { return r.country ? *r.country : std::string(kUnresolved); }

struct DailyAggregate {
  Date date;
  std::string country;  // alpha-2, ALL or UNRESOLVED
  std::array<std::size_t, 3> counts{};  // POS, NEU, NEG

  std::size_t total() const { return counts[0] + counts[1] + counts[2]; }
  std::size_t count(Sentiment s) const { return counts[static_cast<std::size_t>(s)]; }

  /// (n_pos - n_neg) / total, in [-1, 1].
  double score() const {
    const auto n = total();
    return n == 0 ? 0.0 : (static_cast<double>(counts[0]) - static_cast<double>(counts[2])) / static_cast<double>(n);
  }

  bool operator==(const DailyAggregate&) const = default;
};

/// One aggregate per (date, country) with records plus a per-date ALL rollup,
/// ordered by (date, country).
inline std::vector<DailyAggregate> aggregate_daily(const std::vector<LabeledRecord>& labeled) {
  std::map<std::pair<Date, std::string>, std::array<std::size_t, 3>> cells;
  for (const auto& r : labeled) {
    const auto s = static_cast<std::size_t>(r.sentiment);
    ++cells[{r.record.date(), country_bucket(r)}][s];
    ++cells[{r.record.date(), std::string(kAllCountries)}][s];
  }
  std::vector<DailyAggregate> out;
  out.reserve(cells.size());
  for (const auto& [key, counts] : cells) out.push_back({key.first, key.second, counts});
  return out;
}

struct VolumeSeries {
  std::vector<std::pair<Date, std::size_t>> points;  // contiguous days

  std::size_t size() const { return points.size(); }
  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& p : points) n += p.second;
    return n;
  }
  bool operator==(const VolumeSeries&) const = default;
};

namespace detail {

inline VolumeSeries zero_series(Date first, Date last) {
  VolumeSeries s;
  for (Date d = first; d <= last; d = d.next()) s.points.emplace_back(d, 0);
  return s;
}

}  // namespace detail

/// Daily counts after the optional filters, zero-filled over the full date
/// range of `labeled`. `country` may be a code or UNRESOLVED.
inline VolumeSeries volume_series(const std::vector<LabeledRecord>& labeled,
                                  const std::optional<std::string>& country = std::nullopt,
                                  const std::optional<Sentiment>& sentiment = std::nullopt) {
  if (labeled.empty()) return {};
  Date first = labeled.front().record.date(), last = first;
  for (const auto& r : labeled) {
    first = std::min(first, r.record.date());
    last = std::max(last, r.record.date());
  }
  auto series = detail::zero_series(first, last);
  for (const auto& r : labeled) {
    if (country && country_bucket(r) != *country) continue;
    if (sentiment && r.sentiment != *sentiment) continue;
    ++series.points[static_cast<std::size_t>(r.record.date().serial() - first.serial())].second;
  }
  return series;
}

/// Same series rebuilt from aggregates over [first, last]; no country filter
/// reads the ALL rows.
inline VolumeSeries volume_series(const std::vector<DailyAggregate>& aggregates, Date first, Date last,
                                  const std::optional<std::string>& country = std::nullopt,
                                  const std::optional<Sentiment>& sentiment = std::nullopt) {
  auto series = detail::zero_series(first, last);
  const std::string wanted = country ? *country : std::string(kAllCountries);
  for (const auto& a : aggregates) {
    if (a.country != wanted || a.date < first || a.date > last) continue;
    series.points[static_cast<std::size_t>(a.date.serial() - first.serial())].second +=
        sentiment ? a.count(*sentiment) : a.total();
  }
  return series;
}

struct Peak {
  Date date;
  std::size_t count = 0;
  double trailing_mean = 0.0;
  bool operator==(const Peak&) const = default;
};

/// Day i is a peak when count[i] > count[i-1], count[i] >= count[i+1] (0 past
/// the end) and count[i] > factor * mean of the up-to-`trailing_window` days
/// before it. Series shorter than 3 days have no peaks.
inline std::vector<Peak> detect_peaks_detailed(const VolumeSeries& series, std::size_t trailing_window = 7,
                                               double factor = 1.5) {
  if (trailing_window < 1) throw Error("detect_peaks: trailing_window must be >= 1");
  if (!(factor > 1.0)) throw Error("detect_peaks: factor must be > 1");
  std::vector<Peak> out;
  const auto& p = series.points;
  if (p.size() < 3) return out;
  for (std::size_t i = 1; i < p.size(); ++i) {
    const auto c = p[i].second;
    const std::size_t next = i + 1 < p.size() ? p[i + 1].second : 0;
    if (!(c > p[i - 1].second && c >= next)) continue;
    const std::size_t n = std::min(trailing_window, i);
    double sum = 0.0;
    for (std::size_t j = i - n; j < i; ++j) sum += static_cast<double>(p[j].second);
    const double mean = sum / static_cast<double>(n);
    if (static_cast<double>(c) > factor * mean) out.push_back({p[i].first, c, mean});
  }
  return out;
}

inline std::vector<Date> detect_peaks(const VolumeSeries& series, std::size_t trailing_window = 7, double factor = 1.5) {
  std::vector<Date> out;
  for (const auto& peak : detect_peaks_detailed(series, trailing_window, factor)) out.push_back(peak.date);
  return out;
}

// ---- exports -----------------------------------------------------------------

inline std::string daily_csv(const std::vector<DailyAggregate>& aggregates) {
  std::string out = "date,country,n_pos,n_neu,n_neg,score\n";
  char buf[160];
  for (const auto& a : aggregates) {
    std::snprintf(buf, sizeof buf, "%s,%s,%zu,%zu,%zu,%.6f\n", a.date.str().c_str(), a.country.c_str(), a.counts[0],
                  a.counts[1], a.counts[2], a.score());
    out += buf;
  }
  return out;
}

inline std::string volume_csv(const VolumeSeries& series) {
  std::string out = "date,count\n";
  for (const auto& [d, n] : series.points) out += d.str() + "," + std::to_string(n) + "\n";
  return out;
}

/// "date<TAB>count<TAB>trailing_mean" per peak.
inline std::string peak_report(const std::vector<Peak>& peaks) {
  std::string out;
  char buf[96];
  for (const auto& p : peaks) {
    std::snprintf(buf, sizeof buf, "%s\t%zu\t%.3f\n", p.date.str().c_str(), p.count, p.trailing_mean);
    out += buf;
  }
  return out;
}

}  // namespace oatlas
