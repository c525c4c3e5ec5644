#include <gtest/gtest.h>

#include <thread>

#include "oatlas/server.hpp"

using namespace oatlas;
using nlohmann::json;

namespace {

LabeledRecord lr(const std::string& id, const std::string& date, Sentiment s, std::optional<std::string> country) {
  LabeledRecord r;
  r.record.id = id;
  r.record.timestamp = *parse_timestamp(date + "T12:00:00Z");
  r.record.content = "x";
  r.sentiment = s;
  r.country = std::move(country);
  return r;
}

Snapshot make_snapshot() {
  // 2022-02-23: UA POS, UA NEG, UA NEG, US NEU; 2022-02-24: UA POS, unresolved NEG; 2022-02-26: US POS.
  const std::vector<LabeledRecord> labeled = {
      lr("1", "2022-02-23", Sentiment::pos, "UA"), lr("2", "2022-02-23", Sentiment::neg, "UA"),
      lr("3", "2022-02-23", Sentiment::neg, "UA"), lr("4", "2022-02-23", Sentiment::neu, "US"),
      lr("5", "2022-02-24", Sentiment::pos, "UA"), lr("6", "2022-02-24", Sentiment::neg, std::nullopt),
      lr("7", "2022-02-26", Sentiment::pos, "US")};
  std::map<PartitionKey, StoredTopics> topics;
  topics[PartitionKey{.date = Date::parse("2022-02-24"), .sentiment = Sentiment::neg}] =
      StoredTopics{40, true, "", {TopicSummary{0, {{0, "war", 0.25}, {0, "kyiv", 0.125}}}}};
  topics[PartitionKey{.keyword = "nato"}] = StoredTopics{3, false, "below minimum of 20 docs", {}};
  return build_snapshot(labeled, 123, topics, {"UA", "US", "PL"});
}

json get_ok(const Snapshot& s, std::string_view path, const QueryParams& q = {}) {
  const auto r = handle_api(&s, path, q);
  EXPECT_EQ(r.status, 200) << path << " " << r.body;
  return json::parse(r.body);
}

int status(const Snapshot* s, std::string_view path, const QueryParams& q = {}) { return handle_api(s, path, q).status; }

}  // namespace

TEST(HandleApi, RoutingAndMissingSnapshot) {
  const auto s = make_snapshot();
  EXPECT_EQ(status(&s, "/api/nothing"), 404);
  EXPECT_EQ(status(&s, "/"), 404);
  EXPECT_EQ(status(nullptr, "/api/summary"), 503);
  EXPECT_EQ(status(nullptr, "/api/nothing"), 404);
}

TEST(HandleApi, Summary) {
  const auto s = make_snapshot();
  const auto j = get_ok(s, "/api/summary");
  EXPECT_EQ(j["records"], 7);
  EXPECT_EQ(j["date_min"], "2022-02-23");
  EXPECT_EQ(j["date_max"], "2022-02-26");
  EXPECT_EQ(j["vocab_size"], 123);
  EXPECT_DOUBLE_EQ(j["distribution"]["POS"].get<double>(), 3.0 / 7);
  EXPECT_DOUBLE_EQ(j["distribution"]["NEU"].get<double>(), 1.0 / 7);
  EXPECT_DOUBLE_EQ(j["distribution"]["NEG"].get<double>(), 3.0 / 7);
}

TEST(HandleApi, MapScoresPerCountry) {
  const auto s = make_snapshot();
  const auto j = get_ok(s, "/api/map", {{"date", "2022-02-23"}});
  ASSERT_EQ(j.size(), 2u);
  EXPECT_DOUBLE_EQ(j["UA"]["score"].get<double>(), (1.0 - 2.0) / 3.0);
  EXPECT_EQ(j["UA"]["count"], 3);
  EXPECT_DOUBLE_EQ(j["US"]["score"].get<double>(), 0.0);
  const auto j24 = get_ok(s, "/api/map", {{"date", "2022-02-24"}});
  EXPECT_EQ(j24.size(), 1u);
  EXPECT_FALSE(j24.contains("UNRESOLVED"));
  EXPECT_TRUE(get_ok(s, "/api/map", {{"date", "2022-02-25"}}).empty());

  EXPECT_EQ(status(&s, "/api/map"), 400);
  EXPECT_EQ(status(&s, "/api/map", {{"date", "24-02-2022"}}), 400);
  EXPECT_EQ(status(&s, "/api/map", {{"date", "2022-02-30"}}), 400);
  EXPECT_EQ(status(&s, "/api/map", {{"date", "2022-03-01"}}), 400);
  EXPECT_EQ(status(&s, "/api/map", {{"date", "2022-02-22"}}), 400);
  const auto err = json::parse(handle_api(&s, "/api/map", {{"date", "2022-03-01"}}).body);
  EXPECT_NE(err["error"].get<std::string>().find("2022-02-23..2022-02-26"), std::string::npos);
}

TEST(HandleApi, Topics) {
  const auto s = make_snapshot();
  const auto j = get_ok(s, "/api/topics", {{"date", "2022-02-24"}, {"sentiment", "NEG"}});
  ASSERT_EQ(j.size(), 1u);
  EXPECT_EQ(j[0]["topic"], 0);
  EXPECT_EQ(j[0]["words"][0]["word"], "war");
  EXPECT_DOUBLE_EQ(j[0]["words"][1]["weight"].get<double>(), 0.125);

  EXPECT_EQ(get_ok(s, "/api/topics", {{"keyword", "NATO"}}), json::array());
  EXPECT_EQ(get_ok(s, "/api/topics", {{"country", "PL"}}), json::array());
  EXPECT_EQ(get_ok(s, "/api/topics"), json::array());
  EXPECT_EQ(status(&s, "/api/topics", {{"sentiment", "happy"}}), 400);
  EXPECT_EQ(status(&s, "/api/topics", {{"country", "UA"}, {"keyword", "putin"}}), 400);
}

TEST(HandleApi, TimeseriesAndPeaks) {
  const auto s = make_snapshot();
  const auto all = get_ok(s, "/api/timeseries");
  ASSERT_EQ(all.size(), 4u);
  EXPECT_EQ(all[0], (json{{"date", "2022-02-23"}, {"count", 4}}));
  EXPECT_EQ(all[2], (json{{"date", "2022-02-25"}, {"count", 0}}));
  const auto ua_neg = get_ok(s, "/api/timeseries", {{"country", "UA"}, {"sentiment", "NEG"}});
  EXPECT_EQ(ua_neg[0]["count"], 2);
  EXPECT_EQ(ua_neg[1]["count"], 0);
  EXPECT_EQ(get_ok(s, "/api/timeseries", {{"country", "PL"}})[0]["count"], 0);
  EXPECT_EQ(get_ok(s, "/api/timeseries", {{"country", "UNRESOLVED"}})[1]["count"], 1);
  EXPECT_EQ(status(&s, "/api/timeseries", {{"country", "ZZ"}}), 400);
  EXPECT_EQ(status(&s, "/api/timeseries", {{"sentiment", "pos"}}), 400);

  // Trailing windows of four days never clear 1.5x here.
  EXPECT_EQ(get_ok(s, "/api/peaks"), json::array());
  auto spiky = s;
  spiky.peaks = {Peak{*Date::parse("2022-02-24"), 110, 12.5}};
  EXPECT_EQ(get_ok(spiky, "/api/peaks"), (json::parse(R"([{"date":"2022-02-24","count":110,"trailing_mean":12.5}])")));
}

TEST(HandleApi, PureFunctionOfInputs) {
  const auto a = make_snapshot();
  const auto b = make_snapshot();
  for (const auto* path : {"/api/summary", "/api/timeseries", "/api/peaks"}) {
    EXPECT_EQ(handle_api(&a, path, {}).body, handle_api(&b, path, {}).body);
  }
  EXPECT_EQ(handle_api(&a, "/api/map", {{"date", "2022-02-23"}}).body, handle_api(&a, "/api/map", {{"date", "2022-02-23"}}).body);
}

TEST(SnapshotStore, PublishAndReload) {
  SnapshotStore store;
  EXPECT_EQ(store.get(), nullptr);
  const auto snap = make_snapshot();
  const auto path = std::filesystem::temp_directory_path() / "oatlas_snapshot_test.json";
  save_snapshot(path, snap);
  store.reload(path);
  const auto held = store.get();
  ASSERT_NE(held, nullptr);
  EXPECT_EQ(snapshot_to_json(*held).dump(), snapshot_to_json(snap).dump());

  auto next = snap;
  next.records = 8;
  store.publish(next);
  EXPECT_EQ(held->records, 7u);  // readers keep their copy
  EXPECT_EQ(store.get()->records, 8u);

  write_file_atomic(path, "{\"version\": 99}");
  EXPECT_THROW(store.reload(path), Error);
  EXPECT_EQ(store.get()->records, 8u);
  std::filesystem::remove(path);
}

TEST(ApiServer, ServesJsonWithCors) {
  SnapshotStore store;
  ApiServer server(store, "*");
  const int port = server.bind_any();
  ASSERT_GT(port, 0);
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto r = client.Get("/api/summary");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 503);

  store.publish(make_snapshot());
  r = client.Get("/api/map?date=2022-02-23");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(r->get_header_value("Access-Control-Allow-Origin"), "*");
  EXPECT_NE(r->get_header_value("Content-Type").find("application/json"), std::string::npos);
  const auto snap = store.get();
  EXPECT_EQ(r->body, handle_api(snap.get(), "/api/map", {{"date", "2022-02-23"}}).body);

  r = client.Get("/api/map?date=nope");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 400);
  EXPECT_TRUE(json::parse(r->body).contains("error"));

  r = client.Get("/elsewhere");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 404);
  EXPECT_TRUE(json::parse(r->body).contains("error"));

  server.stop();
  t.join();
}
