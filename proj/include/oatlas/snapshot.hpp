#pragma once

// The immutable bundle of precomputed aggregates and topic summaries the API
// serves.

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "oatlas/labeling.hpp"
#include "oatlas/partition.hpp"
#include "oatlas/timeseries.hpp"

namespace oatlas {

inline constexpr int kSnapshotVersion = 1;

struct StoredTopics {
  std::size_t docs = 0;
  bool processed = false;
  std::string note;
  std::vector<TopicSummary> topics;
  bool operator==(const StoredTopics&) const = default;
};

struct Snapshot {
  std::size_t records = 0;
  Date date_min, date_max;
  std::size_t vocab_size = 0;
  Distribution distribution;
  std::vector<DailyAggregate> daily;
  std::vector<Peak> peaks;
  std::set<std::string> known_countries;
  std::map<PartitionKey, StoredTopics> topics;

  bool in_range(Date d) const { return d >= date_min && d <= date_max; }
};

// ---- JSON ------------------------------------------------------------------

inline nlohmann::ordered_json topics_to_json(const std::vector<TopicSummary>& topics) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& t : topics) {
    auto words = nlohmann::ordered_json::array();
    for (const auto& w : t.words) words.push_back({{"word", w.word}, {"weight", w.weight}});
    arr.push_back({{"topic", t.topic}, {"words", std::move(words)}});
  }
  return arr;
}

inline std::vector<TopicSummary> topics_from_json(const nlohmann::json& arr) {
  std::vector<TopicSummary> out;
  for (const auto& t : arr) {
    TopicSummary s;
    s.topic = t.at("topic").get<std::size_t>();
    for (const auto& w : t.at("words")) s.words.push_back({0, w.at("word").get<std::string>(), w.at("weight").get<double>()});
    out.push_back(std::move(s));
  }
  return out;
}

inline nlohmann::ordered_json partition_key_to_json(const PartitionKey& k) {
  nlohmann::ordered_json j;
  j["key"] = k.str();
  j["date"] = k.date ? nlohmann::ordered_json(k.date->str()) : nlohmann::ordered_json(nullptr);
  j["sentiment"] = k.sentiment ? nlohmann::ordered_json(to_string(*k.sentiment)) : nlohmann::ordered_json(nullptr);
  j["country"] = k.country ? nlohmann::ordered_json(*k.country) : nlohmann::ordered_json(nullptr);
  j["keyword"] = k.keyword ? nlohmann::ordered_json(*k.keyword) : nlohmann::ordered_json(nullptr);
  return j;
}

inline PartitionKey partition_key_from_json(const nlohmann::json& j) {
  PartitionKey k;
  if (j.contains("date") && j["date"].is_string()) k.date = Date::parse(j["date"].get<std::string>());
  if (j.contains("sentiment") && j["sentiment"].is_string()) k.sentiment = parse_sentiment(j["sentiment"].get<std::string>());
  if (j.contains("country") && j["country"].is_string()) k.country = j["country"].get<std::string>();
  if (j.contains("keyword") && j["keyword"].is_string()) k.keyword = j["keyword"].get<std::string>();
  return k;
}

inline nlohmann::ordered_json stored_topics_to_json(const PartitionKey& key, const StoredTopics& t) {
  auto j = partition_key_to_json(key);
  j["docs"] = t.docs;
  j["status"] = t.processed ? "processed" : "skipped";
  if (!t.note.empty()) j["note"] = t.note;
  j["topics"] = topics_to_json(t.topics);
  return j;
}

inline std::map<PartitionKey, StoredTopics> stored_topics_from_json(const nlohmann::json& arr) {
  std::map<PartitionKey, StoredTopics> out;
  for (const auto& e : arr) {
    StoredTopics t;
    t.docs = e.at("docs").get<std::size_t>();
    t.processed = e.at("status").get<std::string>() == "processed";
    t.note = e.value("note", std::string{});
    t.topics = topics_from_json(e.at("topics"));
    out[partition_key_from_json(e)] = std::move(t);
  }
  return out;
}

inline std::map<PartitionKey, StoredTopics> store_topics(const PartitionTopics& pt) {
  std::map<PartitionKey, StoredTopics> out;
  for (const auto& [k, r] : pt.results) out[k] = StoredTopics{r.docs, r.processed, r.note, r.topics};
  return out;
}

/// The topics stage output: one entry per partition, in key order.
inline std::string topics_file_json(const std::map<PartitionKey, StoredTopics>& topics) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& [k, t] : topics) arr.push_back(stored_topics_to_json(k, t));
  return arr.dump(1);
}

inline nlohmann::ordered_json snapshot_to_json(const Snapshot& s) {
  nlohmann::ordered_json j;
  j["version"] = kSnapshotVersion;
  j["records"] = s.records;
  j["date_min"] = s.date_min.str();
  j["date_max"] = s.date_max.str();
  j["vocab_size"] = s.vocab_size;
  j["distribution"] = {{"POS", s.distribution.count(Sentiment::pos)},
                       {"NEU", s.distribution.count(Sentiment::neu)},
                       {"NEG", s.distribution.count(Sentiment::neg)}};
  auto daily = nlohmann::ordered_json::array();
  for (const auto& a : s.daily) {
    daily.push_back({{"date", a.date.str()}, {"country", a.country}, {"n_pos", a.counts[0]}, {"n_neu", a.counts[1]},
                     {"n_neg", a.counts[2]}});
  }
  j["daily"] = std::move(daily);
  auto peaks = nlohmann::ordered_json::array();
  for (const auto& p : s.peaks) peaks.push_back({{"date", p.date.str()}, {"count", p.count}, {"trailing_mean", p.trailing_mean}});
  j["peaks"] = std::move(peaks);
  j["known_countries"] = s.known_countries;
  auto topics = nlohmann::ordered_json::array();
  for (const auto& [k, t] : s.topics) topics.push_back(stored_topics_to_json(k, t));
  j["topics"] = std::move(topics);
  return j;
}

inline Snapshot snapshot_from_json(const nlohmann::json& j) {
  if (j.value("version", 0) != kSnapshotVersion) throw Error("snapshot: unsupported version");
  Snapshot s;
  s.records = j.at("records").get<std::size_t>();
  const auto dmin = Date::parse(j.at("date_min").get<std::string>());
  const auto dmax = Date::parse(j.at("date_max").get<std::string>());
  if (!dmin || !dmax) throw Error("snapshot: bad date range");
  s.date_min = *dmin;
  s.date_max = *dmax;
  s.vocab_size = j.at("vocab_size").get<std::size_t>();
  const auto& dist = j.at("distribution");
  s.distribution = distribution_from_counts(
      {dist.at("POS").get<std::size_t>(), dist.at("NEU").get<std::size_t>(), dist.at("NEG").get<std::size_t>()});
  for (const auto& a : j.at("daily")) {
    const auto d = Date::parse(a.at("date").get<std::string>());
    if (!d) throw Error("snapshot: bad aggregate date");
    s.daily.push_back({*d, a.at("country").get<std::string>(),
                       {a.at("n_pos").get<std::size_t>(), a.at("n_neu").get<std::size_t>(), a.at("n_neg").get<std::size_t>()}});
  }
  for (const auto& p : j.at("peaks")) {
    const auto d = Date::parse(p.at("date").get<std::string>());
    if (!d) throw Error("snapshot: bad peak date");
    s.peaks.push_back({*d, p.at("count").get<std::size_t>(), p.at("trailing_mean").get<double>()});
  }
  s.known_countries = j.at("known_countries").get<std::set<std::string>>();
  s.topics = stored_topics_from_json(j.at("topics"));
  return s;
}

inline void save_snapshot(const std::filesystem::path& path, const Snapshot& s) {
  write_file_atomic(path, snapshot_to_json(s).dump(1));
}

inline Snapshot load_snapshot(const std::filesystem::path& path) {
  try {
    return snapshot_from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw Error("snapshot " + path.string() + ": " + e.what());
  }
}

/// Assembles a snapshot from labeled (geocoded) records and stored topics.
inline Snapshot build_snapshot(const std::vector<LabeledRecord>& labeled, std::size_t vocab_size,
                               std::map<PartitionKey, StoredTopics> topics, const std::set<std::string>& country_codes,
                               std::size_t peak_window = 7, double peak_factor = 1.5) {
  if (labeled.empty()) throw Error("snapshot: no records");
  Snapshot s;
  s.records = labeled.size();
  s.vocab_size = vocab_size;
  s.distribution = distribution(labeled);
  s.daily = aggregate_daily(labeled);
  s.date_min = s.daily.front().date;
  s.date_max = s.daily.back().date;
  s.peaks = detect_peaks_detailed(volume_series(labeled), peak_window, peak_factor);
  s.known_countries = country_codes;
  for (const auto& r : labeled) {
    if (r.country) s.known_countries.insert(*r.country);
  }
  s.topics = std::move(topics);
  return s;
}

}  // namespace oatlas
