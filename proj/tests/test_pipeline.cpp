#include <gtest/gtest.h>

#include "oatlas/pipeline.hpp"
#include "oatlas/server.hpp"

using namespace oatlas;
using nlohmann::json;

namespace {

const std::filesystem::path kDataDir = OATLAS_DATA_DIR;

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) : path(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove_all(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

PipelineConfig config_for(const std::filesystem::path& workdir) {
  PipelineConfig cfg;
  cfg.workdir = workdir;
  cfg.data_dir = kDataDir;
  cfg.input = kDataDir / "sample.jsonl";
  cfg.lda.seed = 42;
  cfg.lda.burn_in = 50;
  cfg.lda.iterations = 50;
  return cfg;
}

std::string expect_stage_error(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  ADD_FAILURE() << "expected an error";
  return {};
}

}  // namespace

TEST(Pipeline, StagesDemandTheirPredecessors) {
  TempDir dir("oatlas_pipeline_order");
  std::filesystem::create_directories(dir.path);
  auto cfg = config_for(dir.path);
  EXPECT_NE(expect_stage_error([&] { run_label(cfg); }).find("run the `ingest` stage first"), std::string::npos);
  EXPECT_NE(expect_stage_error([&] { run_geocode(cfg); }).find("run the `label` stage first"), std::string::npos);
  EXPECT_NE(expect_stage_error([&] { run_topics(cfg); }).find("run the `geocode` stage first"), std::string::npos);
  EXPECT_NE(expect_stage_error([&] { run_timeseries(cfg); }).find("run the `geocode` stage first"), std::string::npos);
  EXPECT_NE(expect_stage_error([&] { run_snapshot(cfg); }).find("run the `geocode` stage first"), std::string::npos);

  cfg.input = dir.path / "absent.jsonl";
  EXPECT_NE(expect_stage_error([&] { run_ingest(cfg); }).find("input file not found"), std::string::npos);
}

TEST(Pipeline, SampleEndToEnd) {
  TempDir dir("oatlas_pipeline_sample");
  const auto cfg = config_for(dir.path);
  const auto manifest = json::parse(read_file(kDataDir / "sample_manifest.json"));

  const auto ingest_report = run_ingest(cfg);
  EXPECT_NE(ingest_report.find("duplicates removed: " + std::to_string(manifest["duplicates"].get<int>())),
            std::string::npos)
      << ingest_report;

  const auto dist = run_label(cfg);
  for (const auto s : {"POS", "NEU", "NEG"}) {
    const auto line = std::string(s) + "\t" + std::to_string(manifest["sentiment_counts"][s].get<int>()) + "\t" +
                      manifest["sentiment_percent"][s].get<std::string>() + "%";
    EXPECT_NE(dist.find(line), std::string::npos) << dist;
  }

  run_geocode(cfg);
  std::map<std::string, int> countries;
  for (const auto& r : read_labeled_jsonl(cfg.work(files::geocoded))) ++countries[country_bucket(r)];
  EXPECT_EQ(json(countries), manifest["country_counts"]);

  const auto topics_summary = run_topics(cfg);
  EXPECT_NE(topics_summary.find("processed: "), std::string::npos);
  const auto topics = stored_topics_from_json(json::parse(read_file(cfg.work(files::topics))));
  for (const auto& [kw, n] : manifest["keyword_counts"].items()) {
    const auto it = topics.find(PartitionKey{.keyword = kw});
    ASSERT_NE(it, topics.end()) << kw;
    EXPECT_EQ(it->second.docs, n.get<std::size_t>()) << kw;
  }
  EXPECT_TRUE(topics.at(PartitionKey{}).processed);
  EXPECT_TRUE(std::filesystem::exists(dir.path / "topics/wordclouds/all.json"));
  EXPECT_TRUE(std::filesystem::exists(dir.path / "topics/models/all.oalda"));

  run_timeseries(cfg);
  const auto volume = read_file(cfg.work(files::volume));
  for (const auto& [d, n] : manifest["daily_volume"].items()) {
    EXPECT_NE(volume.find(d + "," + std::to_string(n.get<int>()) + "\n"), std::string::npos) << d;
  }

  run_snapshot(cfg);
  SnapshotStore store;
  store.reload(cfg.work(files::snapshot));
  const auto snap = store.get();
  EXPECT_EQ(snap->records, manifest["records"].get<std::size_t>());
  EXPECT_EQ(snap->date_min.str(), manifest["date_min"]);
  EXPECT_EQ(snap->date_max.str(), manifest["date_max"]);
  std::vector<std::string> peaks;
  for (const auto& p : snap->peaks) peaks.push_back(p.date.str());
  EXPECT_EQ(json(peaks), manifest["peaks"]);

  const auto map = json::parse(handle_api(snap.get(), "/api/map", {{"date", "2022-02-24"}}).body);
  EXPECT_TRUE(map.contains("UA"));
  const auto t = json::parse(handle_api(snap.get(), "/api/topics", {{"keyword", "putin"}}).body);
  EXPECT_EQ(t.size(), cfg.partition_topics);
}
