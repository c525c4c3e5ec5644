#pragma once

// Free-text location -> ISO-3166 alpha-2 country code.
// Resolution order per string: cache, offline gazetteer, optional remote geocoder.

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "oatlas/date.hpp"
#include "oatlas/labeling.hpp"
#include "oatlas/util.hpp"

namespace oatlas {

inline constexpr std::string_view kUnresolved = "UNRESOLVED";

inline bool is_alpha2(std::string_view cc) {
  return cc.size() == 2 && cc[0] >= 'A' && cc[0] <= 'Z' && cc[1] >= 'A' && cc[1] <= 'Z';
}

/// Lowercase, punctuation (other than commas) to spaces, whitespace collapsed
/// around comma-separated segments.
inline std::string normalize_location(std::string_view raw) {
  std::string cleaned;
  cleaned.reserve(raw.size());
  for (const char ch : to_lower_ascii(raw)) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_ascii_alnum(c) || c >= 0x80 || c == ',') {
      cleaned += ch;
    } else {
      cleaned += ' ';
    }
  }
  std::string out;
  for (const auto& seg : split(cleaned, ',')) {
    std::string joined;
    for (const auto& w : split_whitespace(seg)) {
      if (!joined.empty()) joined += ' ';
      joined += w;
    }
    if (joined.empty()) continue;
    if (!out.empty()) out += ',';
    out += joined;
  }
  return out;
}

class Gazetteer {
public:
  Gazetteer() = default;

  /// "key<TAB>CC" lines; later duplicates override earlier ones.
  static Gazetteer load(const std::filesystem::path& path) {
    Gazetteer gz;
    std::size_t line_no = 0;
    for (const auto& line : split(read_file(path), '\n')) {
      ++line_no;
      if (trim(line).empty() || trim(line).front() == '#') continue;
      const auto cols = split(line, '\t');
      if (cols.size() != 2 || !is_alpha2(trim(cols[1]))) {
        throw Error(path.string() + ":" + std::to_string(line_no) + ": expected key<TAB>CC");
      }
      gz.add(cols[0], std::string(trim(cols[1])));
    }
    return gz;
  }

  void add(std::string_view key, std::string code) {
    if (!is_alpha2(code)) throw Error("gazetteer: invalid country code \"" + code + "\"");
    auto k = normalize_location(key);
    std::erase(k, ',');
    if (k.empty()) return;
    codes_.insert(code);
    exact_[std::move(k)] = std::move(code);
  }

  std::optional<std::string> find(std::string_view normalized_key) const {
    const auto it = exact_.find(std::string(normalized_key));
    if (it == exact_.end()) return std::nullopt;
    return it->second;
  }

  bool has_code(std::string_view cc) const { return codes_.contains(std::string(cc)); }
  const std::set<std::string>& codes() const { return codes_; }
  std::size_t size() const { return exact_.size(); }

private:
  std::unordered_map<std::string, std::string> exact_;
  std::set<std::string> codes_;
};

/// Full string, then comma segments right to left, then single tokens right
/// to left. Pure.
inline std::optional<std::string> resolve_local(std::string_view raw, const Gazetteer& gz) {
  const auto norm = normalize_location(raw);
  if (norm.empty()) return std::nullopt;
  const auto segments = split(norm, ',');
  std::string full;
  for (const auto& s : segments) {
    if (!full.empty()) full += ' ';
    full += s;
  }
  if (auto hit = gz.find(full)) return hit;
  for (auto it = segments.rbegin(); it != segments.rend(); ++it) {
    if (auto hit = gz.find(*it)) return hit;
  }
  const auto tokens = split_whitespace(full);
  for (auto it = tokens.rbegin(); it != tokens.rend(); ++it) {
    if (auto hit = gz.find(*it)) return hit;
  }
  return std::nullopt;
}

// ---- cache -------------------------------------------------------------------

struct CacheEntry {
  std::optional<std::string> code;  // nullopt = negative entry
  std::string ts;
  bool operator==(const CacheEntry&) const = default;
};

/// Raw location -> remote answer, misses included. Concurrent reads,
/// serialized writes.
class GeoCache {
public:
  GeoCache() = default;
  GeoCache(const GeoCache& o) : entries_(o.snapshot()) {}
  GeoCache& operator=(const GeoCache& o) {
    if (this != &o) {
      auto copy = o.snapshot();
      std::unique_lock lock(mu_);
      entries_ = std::move(copy);
    }
    return *this;
  }

  /// JSONL {"q","cc","ts"}. A missing file is an empty cache.
  static GeoCache load(const std::filesystem::path& path) {
    GeoCache cache;
    if (!std::filesystem::exists(path)) return cache;
    std::size_t line_no = 0;
    for (const auto& line : split(read_file(path), '\n')) {
      ++line_no;
      if (trim(line).empty()) continue;
      const auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object() || !j.contains("q") || !j["q"].is_string()) {
        throw Error(path.string() + ":" + std::to_string(line_no) + ": malformed cache entry");
      }
      CacheEntry e;
      if (j.contains("cc") && j["cc"].is_string()) e.code = j["cc"].get<std::string>();
      if (j.contains("ts") && j["ts"].is_string()) e.ts = j["ts"].get<std::string>();
      cache.entries_[j["q"].get<std::string>()] = std::move(e);
    }
    return cache;
  }

  /// Entries sorted by query; single atomic replace.
  void save(const std::filesystem::path& path) const {
    std::string out;
    for (const auto& [q, e] : snapshot()) {
      nlohmann::ordered_json j;
      j["q"] = q;
      j["cc"] = e.code ? nlohmann::ordered_json(*e.code) : nlohmann::ordered_json(nullptr);
      j["ts"] = e.ts;
      out += j.dump();
      out += '\n';
    }
    write_file_atomic(path, out);
  }

  std::optional<CacheEntry> get(const std::string& q) const {
    std::shared_lock lock(mu_);
    const auto it = entries_.find(q);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  void put(const std::string& q, std::optional<std::string> code) {
    CacheEntry e{std::move(code), format_timestamp(std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now()))};
    std::unique_lock lock(mu_);
    entries_[q] = std::move(e);
  }

  std::size_t size() const {
    std::shared_lock lock(mu_);
    return entries_.size();
  }

  std::map<std::string, CacheEntry> snapshot() const {
    std::shared_lock lock(mu_);
    return entries_;
  }

private:
  mutable std::shared_mutex mu_;
  std::map<std::string, CacheEntry> entries_;
};

// ---- remote geocoder -------------------------------------------------------

struct RemoteAnswer {
  enum class Status { found, not_found, error };
  Status status = Status::error;
  std::optional<std::string> code;
  std::string error;

  static RemoteAnswer found(std::string cc) { return {Status::found, std::move(cc), {}}; }
  static RemoteAnswer not_found() { return {Status::not_found, std::nullopt, {}}; }
  static RemoteAnswer failure(std::string why) { return {Status::error, std::nullopt, std::move(why)}; }
};

/// Contract: GET <endpoint>?q=<url-encoded> -> JSON with "country_code"
/// (string or null).
class GeocoderClient {
public:
  virtual ~GeocoderClient() = default;
  virtual RemoteAnswer lookup(const std::string& query) = 0;
};

/// Spaces successive calls at least 1/rate seconds apart.
class RateLimiter {
public:
  explicit RateLimiter(double per_second) {
    if (!(per_second > 0)) throw Error("rate limit must be > 0 requests/second");
    interval_ = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(1.0 / per_second));
  }

  void acquire() {
    std::unique_lock lock(mu_);
    const auto now = Clock::now();
    const auto slot = std::max(now, next_);
    next_ = slot + interval_;
    lock.unlock();
    std::this_thread::sleep_until(slot);
  }

private:
  using Clock = std::chrono::steady_clock;
  std::mutex mu_;
  Clock::duration interval_{};
  Clock::time_point next_{};
};

inline RemoteAnswer parse_geocoder_response(std::string_view body) {
  const auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("country_code")) {
    return RemoteAnswer::failure("malformed geocoder response");
  }
  const auto& cc = j["country_code"];
  if (cc.is_null()) return RemoteAnswer::not_found();
  if (!cc.is_string()) return RemoteAnswer::failure("country_code is not a string");
  auto code = cc.get<std::string>();
  for (auto& c : code) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (!is_alpha2(code)) return RemoteAnswer::failure("invalid country code \"" + code + "\"");
  return RemoteAnswer::found(std::move(code));
}

class HttpGeocoder : public GeocoderClient {
public:
  /// `endpoint` like "http://host:port/path".
  HttpGeocoder(const std::string& endpoint, double requests_per_second, std::chrono::seconds timeout = std::chrono::seconds{10})
      : limiter_(requests_per_second) {
    const auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos) throw Error("geocoder endpoint needs a scheme: " + endpoint);
    const auto path_start = endpoint.find('/', scheme_end + 3);
    base_ = endpoint.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : endpoint.substr(path_start);
    client_ = std::make_unique<httplib::Client>(base_);
    client_->set_connection_timeout(timeout);
    client_->set_read_timeout(timeout);
  }

  RemoteAnswer lookup(const std::string& query) override {
    limiter_.acquire();
    const auto target = path_ + (path_.find('?') == std::string::npos ? "?q=" : "&q=") + httplib::detail::encode_query_param(query);
    auto res = client_->Get(target);
    if (!res) return RemoteAnswer::failure("request failed: " + httplib::to_string(res.error()));
    if (res->status != 200) return RemoteAnswer::failure("HTTP " + std::to_string(res->status));
    return parse_geocoder_response(res->body);
  }

private:
  RateLimiter limiter_;
  std::string base_;
  std::string path_;
  std::unique_ptr<httplib::Client> client_;
};

struct GeoStats {
  std::size_t cache_hits = 0;
  std::size_t local_hits = 0;
  std::size_t remote_calls = 0;
  std::size_t remote_hits = 0;
  std::size_t remote_errors = 0;
  std::size_t unresolved = 0;
  std::size_t no_location = 0;
};

/// One remote lookup. Answers (misses included) are cached; failures are
/// tallied and leave the cache untouched. Codes outside the gazetteer's code
/// set count as malformed when `gz` is given.
inline std::optional<std::string> resolve_remote(const std::string& raw, GeocoderClient& client, GeoCache& cache,
                                                 GeoStats& stats, const Gazetteer* gz = nullptr) {
  ++stats.remote_calls;
  auto answer = client.lookup(raw);
  if (answer.status == RemoteAnswer::Status::found && gz && !gz->has_code(*answer.code)) {
    answer = RemoteAnswer::failure("country code " + *answer.code + " not in gazetteer code set");
  }
  if (answer.status == RemoteAnswer::Status::error) {
    ++stats.remote_errors;
    log_warn("geocoder: \"" + raw + "\": " + answer.error);
    return std::nullopt;
  }
  if (answer.code) ++stats.remote_hits;
  cache.put(raw, answer.code);
  return answer.code;
}

struct GeocodeRun {
  std::vector<LabeledRecord> labeled;
  GeoStats stats;
};

/// Fills `country` per record: cache hit, else gazetteer, else remote (each
/// distinct string queried once, in first-seen order), else none. The cache is
/// persisted to `cache_path` at the end when given; a write failure only warns.
inline GeocodeRun geocode_corpus(std::vector<LabeledRecord> labeled, const Gazetteer& gz, GeoCache& cache,
                                 GeocoderClient* client = nullptr,
                                 const std::optional<std::filesystem::path>& cache_path = std::nullopt,
                                 unsigned threads = default_threads()) {
  GeocodeRun run;
  enum class Source { none, cache, local, pending };
  std::vector<Source> source(labeled.size(), Source::none);

  parallel_for(
      labeled.size(),
      [&](std::size_t i) {
        auto& r = labeled[i];
        r.country.reset();
        if (!r.record.location || trim(*r.record.location).empty()) return;
        const std::string q(trim(*r.record.location));
        if (const auto hit = cache.get(q)) {
          r.country = hit->code;
          source[i] = Source::cache;
        } else if (auto local = resolve_local(q, gz)) {
          r.country = std::move(local);
          source[i] = Source::local;
        } else {
          source[i] = Source::pending;
        }
      },
      threads);

  for (std::size_t i = 0; i < labeled.size(); ++i) {
    auto& r = labeled[i];
    if (source[i] == Source::pending && client) {
      const std::string q(trim(*r.record.location));
      if (const auto hit = cache.get(q)) {
        r.country = hit->code;
        source[i] = Source::cache;
      } else {
        r.country = resolve_remote(q, *client, cache, run.stats, &gz);
      }
    }
    switch (source[i]) {
      case Source::none:
        ++run.stats.no_location;
        break;
      case Source::cache:
        ++run.stats.cache_hits;
        break;
      case Source::local:
        ++run.stats.local_hits;
        break;
      case Source::pending:
        break;
    }
    if (!r.country) ++run.stats.unresolved;
  }

  if (cache_path) {
    try {
      cache.save(*cache_path);
    } catch (const std::exception& e) {
      log_warn(std::string("geo cache not saved: ") + e.what());
    }
  }
  run.labeled = std::move(labeled);
  return run;
}

}  // namespace oatlas
