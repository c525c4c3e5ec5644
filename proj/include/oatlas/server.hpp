#pragma once

// Read-only JSON API over a Snapshot.
//
//   GET /api/summary
//   GET /api/map?date=YYYY-MM-DD
//   GET /api/topics?date=&sentiment=&country=&keyword=
//   GET /api/timeseries?country=&sentiment=
//   GET /api/peaks

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "httplib.h"
#include "json.hpp"
#include "oatlas/snapshot.hpp"

namespace oatlas {

/// Holds the published snapshot; swaps are atomic for readers.
class SnapshotStore {
public:
  std::shared_ptr<const Snapshot> get() const {
    std::lock_guard lock(mu_);
    return current_;
  }
  void publish(Snapshot s) {
    auto next = std::make_shared<const Snapshot>(std::move(s));
    std::lock_guard lock(mu_);
    current_ = std::move(next);
  }
  void reload(const std::filesystem::path& path) { publish(load_snapshot(path)); }

private:
  mutable std::mutex mu_;
  std::shared_ptr<const Snapshot> current_;
};

struct ApiResponse {
  int status = 200;
  std::string body;
};

using QueryParams = std::map<std::string, std::string>;

namespace detail {

inline ApiResponse api_error(int status, std::string message) {
  return {status, nlohmann::ordered_json{{"error", std::move(message)}}.dump()};
}

inline std::optional<std::string> param(const QueryParams& q, const char* name) {
  const auto it = q.find(name);
  if (it == q.end() || it->second.empty()) return std::nullopt;
  return it->second;
}

}  // namespace detail

/// Pure request handler: identical (snapshot, path, params) give identical bodies.
inline ApiResponse handle_api(const Snapshot* snap, std::string_view path, const QueryParams& q) {
  using detail::api_error;
  using detail::param;
  using json = nlohmann::ordered_json;

  if (path != "/api/summary" && path != "/api/map" && path != "/api/topics" && path != "/api/timeseries" &&
      path != "/api/peaks") {
    return api_error(404, "no such endpoint");
  }
  if (!snap) return api_error(503, "no snapshot loaded");

  std::optional<Date> date;
  if (const auto raw = param(q, "date")) {
    date = Date::parse(*raw);
    if (!date) return api_error(400, "malformed date \"" + *raw + "\" (expected YYYY-MM-DD)");
    if (!snap->in_range(*date)) {
      return api_error(400, "date " + *raw + " outside " + snap->date_min.str() + ".." + snap->date_max.str());
    }
  }
  std::optional<Sentiment> sentiment;
  if (const auto raw = param(q, "sentiment")) {
    sentiment = parse_sentiment(*raw);
    if (!sentiment) return api_error(400, "unknown sentiment \"" + *raw + "\" (expected POS|NEU|NEG)");
  }
  const auto country = param(q, "country");

  if (path == "/api/summary") {
    json j;
    j["records"] = snap->records;
    j["date_min"] = snap->date_min.str();
    j["date_max"] = snap->date_max.str();
    j["vocab_size"] = snap->vocab_size;
    j["distribution"] = {{"POS", snap->distribution.fraction(Sentiment::pos)},
                         {"NEU", snap->distribution.fraction(Sentiment::neu)},
                         {"NEG", snap->distribution.fraction(Sentiment::neg)}};
    return {200, j.dump()};
  }

  if (path == "/api/map") {
    if (!date) return api_error(400, "missing date parameter");
    json j = json::object();
    for (const auto& a : snap->daily) {
      if (a.date != *date || a.country == kAllCountries || a.country == kUnresolved || a.total() == 0) continue;
      j[a.country] = {{"score", a.score()}, {"count", a.total()}};
    }
    return {200, j.dump()};
  }

  if (path == "/api/topics") {
    const auto keyword = param(q, "keyword");
    if (country && keyword) return api_error(400, "country and keyword filters are mutually exclusive");
    PartitionKey key;
    key.date = date;
    key.sentiment = sentiment;
    key.country = country;
    if (keyword) key.keyword = to_lower_ascii(*keyword);
    const auto it = snap->topics.find(key);
    if (it == snap->topics.end() || !it->second.processed) return {200, "[]"};
    return {200, topics_to_json(it->second.topics).dump()};
  }

  if (path == "/api/timeseries") {
    if (country && *country != kUnresolved && !snap->known_countries.contains(*country)) {
      return api_error(400, "unknown country code \"" + *country + "\"");
    }
    const auto series = volume_series(snap->daily, snap->date_min, snap->date_max, country, sentiment);
    json arr = json::array();
    for (const auto& [d, n] : series.points) arr.push_back({{"date", d.str()}, {"count", n}});
    return {200, arr.dump()};
  }

  json arr = json::array();
  for (const auto& p : snap->peaks) arr.push_back({{"date", p.date.str()}, {"count", p.count}, {"trailing_mean", p.trailing_mean}});
  return {200, arr.dump()};
}

/// httplib front end for handle_api.
class ApiServer {
public:
  ApiServer(const SnapshotStore& store, std::string cors_origin = "*") : store_(store), cors_(std::move(cors_origin)) {
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
      QueryParams q;
      for (const auto& [k, v] : req.params) q.emplace(k, v);
      const auto snap = store_.get();
      auto out = handle_api(snap.get(), req.path, q);
      res.status = out.status;
      res.set_content(std::move(out.body), "application/json; charset=utf-8");
    };
    server_.Get(R"(/api/[a-z]+)", handler);
    server_.Options(R"(/api/[a-z]+)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server_.set_post_routing_handler([this](const httplib::Request&, httplib::Response& res) {
      if (!cors_.empty()) {
        res.set_header("Access-Control-Allow-Origin", cors_);
        res.set_header("Access-Control-Allow-Methods", "GET, OPTIONS");
      }
    });
    server_.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty()) {
        res.set_content(nlohmann::ordered_json{{"error", httplib::status_message(res.status)}}.dump(),
                        "application/json; charset=utf-8");
      }
    });
  }

  /// Blocks until stop().
  bool listen(const std::string& host, int port) { return server_.listen(host, port); }

  /// Binds to an ephemeral port and returns it; call listen_after_bind() next.
  int bind_any(const std::string& host = "127.0.0.1") { return server_.bind_to_any_port(host); }
  bool listen_after_bind() { return server_.listen_after_bind(); }
  void wait_until_ready() const { server_.wait_until_ready(); }
  void stop() { server_.stop(); }

private:
  const SnapshotStore& store_;
  std::string cors_;
  httplib::Server server_;
};

}  // namespace oatlas
