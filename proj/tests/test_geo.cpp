#include <gtest/gtest.h>

#include <thread>

#include "oatlas/geo.hpp"
#include "support.hpp"

using namespace oatlas;
using namespace oatlas::testing;

namespace {

const std::filesystem::path kDataDir = OATLAS_DATA_DIR;
const std::filesystem::path kTestData = OATLAS_TEST_DATA;

Gazetteer tiny_gazetteer() {
  Gazetteer gz;
  gz.add("ukraine", "UA");
  gz.add("kyiv", "UA");
  gz.add("usa", "US");
  gz.add("tx", "US");
  gz.add("new york", "US");
  gz.add("georgia", "GE");
  return gz;
}

LabeledRecord located(std::string id, std::optional<std::string> location) {
  LabeledRecord r;
  r.record.id = std::move(id);
  r.record.content = "x";
  r.record.location = std::move(location);
  return r;
}

class CountingClient : public GeocoderClient {
public:
  RemoteAnswer lookup(const std::string&) override {
    ++calls;
    return next;
  }
  int calls = 0;
  RemoteAnswer next = RemoteAnswer::not_found();
};

// Stub geocoder over HTTP on an ephemeral port.
class StubServer {
public:
  StubServer() {
    server_.Get("/geocode", [this](const httplib::Request& req, httplib::Response& res) {
      ++hits;
      const auto q = req.get_param_value("q");
      if (q == "boom") {
        res.status = 500;
        res.set_content("oops", "text/plain");
      } else if (q == "junk") {
        res.set_content("<html>", "text/html");
      } else if (q == "nowhere") {
        res.set_content(R"({"country_code":null})", "application/json");
      } else {
        res.set_content(R"({"country_code":"US","echo":")" + q + "\"}", "application/json");
      }
    });
    port = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port) + "/geocode"; }

  int port = 0;
  std::atomic<int> hits{0};

private:
  httplib::Server server_;
  std::thread thread_;
};

}  // namespace

TEST(NormalizeLocation, StripsPunctuationKeepsCommas) {
  EXPECT_EQ(normalize_location("  Austin,  TX , USA!! "), "austin,tx,usa");
  EXPECT_EQ(normalize_location("St. Petersburg"), "st petersburg");
  EXPECT_EQ(normalize_location(",,"), "");
}

TEST(ResolveLocal, Examples) {
  const auto gz = tiny_gazetteer();
  EXPECT_EQ(resolve_local("Kyiv, Ukraine", gz), "UA");
  EXPECT_EQ(resolve_local("", gz), std::nullopt);
  EXPECT_EQ(resolve_local("somewhere over the rainbow", gz), std::nullopt);
  EXPECT_EQ(resolve_local("Austin, TX, USA", gz), "US");
  EXPECT_EQ(resolve_local("New York", gz), "US");
  EXPECT_EQ(resolve_local("I live in New York", gz), std::nullopt);  // multi-word keys only match whole segments
  EXPECT_EQ(resolve_local("Atlanta, Georgia, USA", gz), "US");       // rightmost segment wins
  EXPECT_EQ(resolve_local("kyiv ukraine", gz), "UA");
}

TEST(Gazetteer, ShippedFileIsValid) {
  const auto gz = Gazetteer::load(kDataDir / "gazetteer.tsv");
  EXPECT_GT(gz.size(), 300u);
  EXPECT_TRUE(gz.has_code("UA"));
  EXPECT_GE(gz.codes().size(), 240u);
  for (const auto& c : gz.codes()) EXPECT_TRUE(is_alpha2(c)) << c;
  EXPECT_EQ(resolve_local("Kyiv, Ukraine", gz), "UA");
  EXPECT_EQ(resolve_local("Austin, TX, USA", gz), "US");
  EXPECT_THROW(Gazetteer().add("x", "usa"), Error);
}

TEST(ResolveRemote, StubServerAnswers) {
  StubServer stub;
  HttpGeocoder client(stub.endpoint(), 100.0);
  GeoCache cache;
  GeoStats stats;
  EXPECT_EQ(resolve_remote("Gotham & Co", client, cache, stats), "US");
  EXPECT_EQ(cache.get("Gotham & Co")->code, "US");

  EXPECT_EQ(resolve_remote("boom", client, cache, stats), std::nullopt);
  EXPECT_EQ(stats.remote_errors, 1u);
  EXPECT_FALSE(cache.get("boom"));

  EXPECT_EQ(resolve_remote("junk", client, cache, stats), std::nullopt);
  EXPECT_EQ(stats.remote_errors, 2u);
  EXPECT_FALSE(cache.get("junk"));

  EXPECT_EQ(resolve_remote("nowhere", client, cache, stats), std::nullopt);
  EXPECT_EQ(stats.remote_errors, 2u);
  ASSERT_TRUE(cache.get("nowhere"));
  EXPECT_EQ(cache.get("nowhere")->code, std::nullopt);
  EXPECT_EQ(stats.remote_calls, 4u);
  EXPECT_EQ(stub.hits, 4);
}

TEST(ResolveRemote, UnreachableServerIsAnError) {
  int port = 0;
  {
    httplib::Server s;
    port = s.bind_to_any_port("127.0.0.1");
  }
  HttpGeocoder client("http://127.0.0.1:" + std::to_string(port) + "/geocode", 100.0, std::chrono::seconds{1});
  GeoCache cache;
  GeoStats stats;
  EXPECT_EQ(resolve_remote("x", client, cache, stats), std::nullopt);
  EXPECT_EQ(stats.remote_errors, 1u);
  EXPECT_EQ(cache.size(), 0u);
}

TEST(ResolveRemote, CodeOutsideGazetteerIsRejected) {
  CountingClient client;
  client.next = RemoteAnswer::found("ZZ");
  GeoCache cache;
  GeoStats stats;
  const auto gz = tiny_gazetteer();
  EXPECT_EQ(resolve_remote("q", client, cache, stats, &gz), std::nullopt);
  EXPECT_EQ(stats.remote_errors, 1u);
  EXPECT_EQ(cache.size(), 0u);
}

TEST(ResolveRemote, ParseResponse) {
  EXPECT_EQ(parse_geocoder_response(R"({"country_code":"de"})").code, "DE");
  EXPECT_EQ(parse_geocoder_response(R"({"country_code":null})").status, RemoteAnswer::Status::not_found);
  EXPECT_EQ(parse_geocoder_response(R"({"country_code":"USA"})").status, RemoteAnswer::Status::error);
  EXPECT_EQ(parse_geocoder_response(R"({"country_code":7})").status, RemoteAnswer::Status::error);
  EXPECT_EQ(parse_geocoder_response(R"([])").status, RemoteAnswer::Status::error);
  EXPECT_EQ(parse_geocoder_response(R"({})").status, RemoteAnswer::Status::error);
}

TEST(ResolveRemote, RateLimitSpacesCalls) {
  StubServer stub;
  HttpGeocoder client(stub.endpoint(), 5.0);
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 10; ++i) EXPECT_EQ(client.lookup("q" + std::to_string(i)).code, "US");
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  EXPECT_GE(elapsed.count(), 1.8);
  EXPECT_THROW(RateLimiter(0.0), Error);
}

TEST(GeocodeCorpus, NullLocationAndNegativeCache) {
  const auto gz = tiny_gazetteer();
  GeoCache cache;
  CountingClient client;
  const std::vector<LabeledRecord> in = {located("a", std::nullopt), located("b", "Mordor"), located("c", "Mordor"),
                                         located("d", "Kyiv"), located("e", "  ")};
  const auto run = geocode_corpus(in, gz, cache, &client, std::nullopt, 2);
  EXPECT_EQ(client.calls, 1);
  EXPECT_EQ(run.stats.remote_calls, 1u);
  EXPECT_EQ(run.stats.cache_hits, 1u);
  EXPECT_EQ(run.stats.local_hits, 1u);
  EXPECT_EQ(run.stats.no_location, 2u);
  EXPECT_EQ(run.stats.unresolved, 4u);
  EXPECT_EQ(run.labeled[3].country, "UA");
  EXPECT_FALSE(run.labeled[0].country);

  const auto again = geocode_corpus(in, gz, cache, &client);
  EXPECT_EQ(client.calls, 1);
  EXPECT_EQ(again.labeled, run.labeled);
}

TEST(GeocodeCorpus, WithoutClientLeavesUnknownUnresolved) {
  GeoCache cache;
  const auto run = geocode_corpus({located("a", "Mordor")}, tiny_gazetteer(), cache);
  EXPECT_FALSE(run.labeled[0].country);
  EXPECT_EQ(cache.size(), 0u);
}

TEST(GeoCacheFile, RoundTripAndWriteFailure) {
  GeoCache cache;
  cache.put("b place", "US");
  cache.put("a place", std::nullopt);
  const auto path = std::filesystem::temp_directory_path() / "oatlas_geocache_test.jsonl";
  cache.save(path);
  const auto text = read_file(path);
  EXPECT_EQ(text.substr(0, 26), R"({"q":"a place","cc":null,")");
  EXPECT_EQ(GeoCache::load(path).snapshot(), cache.snapshot());
  std::filesystem::remove(path);
  EXPECT_EQ(GeoCache::load(path).size(), 0u);

  // An unwritable cache path only warns.
  GeoCache c2;
  CountingClient client;
  const auto run = geocode_corpus({located("a", "Mordor")}, tiny_gazetteer(), c2, &client,
                                  std::filesystem::path("/nonexistent-dir/cache.jsonl"));
  EXPECT_EQ(run.labeled.size(), 1u);
}

TEST(GeocodeCorpus, FixtureMatchesAnswerKeyWarmAndCold) {
  const auto cases = load_geo_fixture(kTestData / "geo_fixture.tsv");
  ASSERT_EQ(cases.size(), 50u);
  const auto gz = Gazetteer::load(kDataDir / "gazetteer.tsv");
  const auto records = geo_fixture_records(cases);
  const auto cache_path = std::filesystem::temp_directory_path() / "oatlas_geo_fixture_cache.jsonl";
  std::filesystem::remove(cache_path);

  auto check = [&](const GeocodeRun& run) {
    for (std::size_t i = 0; i < cases.size(); ++i) {
      EXPECT_EQ(run.labeled[i].country.value_or(std::string(kUnresolved)), cases[i].expected)
          << "location: " << cases[i].location.value_or("<null>");
      if (run.labeled[i].country) {
        EXPECT_TRUE(gz.has_code(*run.labeled[i].country));
      }
    }
  };

  std::size_t expected_remote = 0;
  for (const auto& c : cases) expected_remote += c.stub != "-";

  GeoCache cold;
  FixtureGeocoder client(cases);
  const auto first = geocode_corpus(records, gz, cold, &client, cache_path);
  check(first);
  EXPECT_EQ(client.unexpected, 0);
  EXPECT_EQ(static_cast<std::size_t>(client.calls), expected_remote);

  GeoCache warm = GeoCache::load(cache_path);
  FixtureGeocoder client2(cases);
  const auto second = geocode_corpus(records, gz, warm, &client2, cache_path);
  check(second);
  EXPECT_EQ(client2.calls, 0);
  EXPECT_EQ(second.labeled, first.labeled);
  std::filesystem::remove(cache_path);
}
