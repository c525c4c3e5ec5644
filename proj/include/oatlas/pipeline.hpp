#pragma once

// End-to-end stages. Each stage reads its predecessor's files from the
// working directory and writes its own under fixed names.

#include <chrono>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "oatlas/corpus.hpp"
#include "oatlas/geo.hpp"
#include "oatlas/labeling.hpp"
#include "oatlas/lda.hpp"
#include "oatlas/partition.hpp"
#include "oatlas/snapshot.hpp"
#include "oatlas/timeseries.hpp"

#ifndef OATLAS_DATA_DIR
#define OATLAS_DATA_DIR "data"
#endif

namespace oatlas {

namespace files {
inline constexpr const char* records = "records.jsonl";
inline constexpr const char* tokens = "tokens.jsonl";
inline constexpr const char* corpus = "corpus.oatl";
inline constexpr const char* ingest_report = "ingest_report.txt";
inline constexpr const char* labeled = "labeled.jsonl";
inline constexpr const char* distribution = "distribution.txt";
inline constexpr const char* geocoded = "geocoded.jsonl";
inline constexpr const char* geocode_report = "geocode_report.txt";
inline constexpr const char* geocache = "geocache.jsonl";
inline constexpr const char* topics_dir = "topics";
inline constexpr const char* topics = "topics/topics.json";
inline constexpr const char* partitions = "topics/partitions.txt";
inline constexpr const char* timeseries_dir = "timeseries";
inline constexpr const char* daily = "timeseries/daily.csv";
inline constexpr const char* volume = "timeseries/volume.csv";
inline constexpr const char* peaks = "timeseries/peaks.txt";
inline constexpr const char* snapshot = "snapshot.json";
}  // namespace files

struct PipelineConfig {
  std::filesystem::path workdir = "work";
  std::filesystem::path data_dir = OATLAS_DATA_DIR;

  // ingest
  std::filesystem::path input;
  std::optional<InputFormat> format;
  std::filesystem::path stopwords;  // empty: <data_dir>/stopwords.txt
  std::size_t min_len = 2;
  std::uint64_t min_df = 5;
  double max_df_ratio = 0.5;

  // label
  std::filesystem::path lexicon, hashtags, emoticons;
  TieRule tie_rule = TieRule::neutral;
  std::size_t neg_window = 3;
  double tau = 0.0;

  // geocode
  std::filesystem::path gazetteer;
  std::filesystem::path cache;  // empty: <workdir>/geocache.jsonl
  std::optional<std::string> geocoder_url;
  double rate_limit = 1.0;

  // topics
  LdaConfig lda{};
  std::size_t partition_topics = 5;
  std::size_t top_n = 10;
  PartitionOptions partition{};
  std::vector<std::string> keywords{"putin", "biden", "nato", "zelensky", "poland"};

  // timeseries
  std::size_t peak_window = 7;
  double peak_factor = 1.5;

  unsigned threads = default_threads();

  std::filesystem::path data_file(const std::filesystem::path& given, const char* fallback) const {
    return given.empty() ? data_dir / fallback : given;
  }
  std::filesystem::path work(const char* name) const { return workdir / name; }
};

namespace detail {

inline void require(const PipelineConfig& cfg, const char* name, const char* stage) {
  if (!std::filesystem::exists(cfg.work(name))) {
    throw Error(std::string("missing ") + cfg.work(name).string() + ": run the `" + stage + "` stage first");
  }
}

inline void require_input(const std::filesystem::path& p, const char* what) {
  if (!std::filesystem::exists(p)) throw Error(std::string(what) + " not found: " + p.string());
}

inline void ensure_workdir(const PipelineConfig& cfg) {
  std::error_code ec;
  std::filesystem::create_directories(cfg.workdir, ec);
  if (ec || !std::filesystem::is_directory(cfg.workdir)) throw Error("cannot create workdir " + cfg.workdir.string());
}

inline TokenIndex read_tokens(const std::filesystem::path& path) {
  TokenIndex out;
  for (const auto& line : split(read_file(path), '\n')) {
    if (trim(line).empty()) continue;
    const auto j = nlohmann::json::parse(line);
    out[j.at("id").get<std::string>()] = j.at("tokens").get<std::vector<std::string>>();
  }
  return out;
}

}  // namespace detail

inline TextPipeline make_text_pipeline(const PipelineConfig& cfg) {
  const auto path = cfg.data_file(cfg.stopwords, "stopwords.txt");
  detail::require_input(path, "stopword list");
  return TextPipeline{load_stopwords(path), cfg.min_len};
}

/// The shipped ensemble: polarity lexicon, hashtag map, emoticon map.
inline std::vector<Labeler> make_default_labelers(const PipelineConfig& cfg) {
  const auto lex = cfg.data_file(cfg.lexicon, "lexicon.tsv");
  const auto tags = cfg.data_file(cfg.hashtags, "hashtags.tsv");
  const auto emo = cfg.data_file(cfg.emoticons, "emoticons.tsv");
  detail::require_input(lex, "lexicon");
  detail::require_input(tags, "hashtag map");
  detail::require_input(emo, "emoticon map");
  return {make_lexicon_labeler(load_lexicon(lex), cfg.neg_window, cfg.tau), make_hashtag_labeler(load_tag_map(tags)),
          make_emoticon_labeler(load_tag_map(emo, false))};
}

/// ingest: records.jsonl (valid, deduplicated), tokens.jsonl, corpus.oatl.
inline std::string run_ingest(const PipelineConfig& cfg) {
  detail::require_input(cfg.input, "input file");
  detail::ensure_workdir(cfg);
  const auto text = make_text_pipeline(cfg);
  const auto result = ingest(cfg.input, cfg.format.value_or(format_from_path(cfg.input)));
  for (const auto& s : result.skipped) log_warn("ingest: row " + std::to_string(s.row) + " skipped: " + s.reason);
  const auto records = dedup(result.records);

  std::vector<TokenizedDocs::value_type> docs(records.size());
  parallel_for(records.size(), [&](std::size_t i) { docs[i] = text(records[i].content); }, cfg.threads);

  std::string rec_out, tok_out;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < records.size(); ++i) {
    rec_out += record_to_json(records[i]).dump() + "\n";
    tok_out += nlohmann::ordered_json{{"id", records[i].id}, {"tokens", docs[i]}}.dump() + "\n";
    ids.push_back(records[i].id);
  }
  const auto vocab = build_vocabulary(docs, cfg.min_df, cfg.max_df_ratio);
  const auto corpus = encode(docs, vocab, ids);

  write_file_atomic(cfg.work(files::records), rec_out);
  write_file_atomic(cfg.work(files::tokens), tok_out);
  save_corpus(cfg.work(files::corpus), vocab, corpus);
  std::string report = result.report();
  report += "duplicates removed: " + std::to_string(result.records.size() - records.size()) + "\n";
  report += "vocabulary: " + std::to_string(vocab.size()) + "\ndocuments: " + std::to_string(corpus.num_docs()) +
            "\nempty after encoding: " + std::to_string(corpus.dropped_ids.size()) + "\n";
  write_file_atomic(cfg.work(files::ingest_report), report);
  return report;
}

inline std::vector<Record> read_records(const PipelineConfig& cfg) {
  detail::require(cfg, files::records, "ingest");
  auto result = ingest(cfg.work(files::records), InputFormat::jsonl);
  if (!result.skipped.empty()) throw Error(cfg.work(files::records).string() + " is corrupt");
  return std::move(result.records);
}

/// label: labeled.jsonl and distribution.txt.
inline std::string run_label(const PipelineConfig& cfg) {
  const auto records = read_records(cfg);
  const auto labelers = make_default_labelers(cfg);
  const auto run = label_corpus(records, labelers, cfg.tie_rule, cfg.threads);
  write_labeled_jsonl(cfg.work(files::labeled), run.labeled);
  const auto report = distribution(run.labeled).report();
  write_file_atomic(cfg.work(files::distribution), report);
  return report;
}

inline Gazetteer load_gazetteer(const PipelineConfig& cfg) {
  const auto path = cfg.data_file(cfg.gazetteer, "gazetteer.tsv");
  detail::require_input(path, "gazetteer");
  return Gazetteer::load(path);
}

/// geocode: geocoded.jsonl, report, cache.
inline std::string run_geocode(const PipelineConfig& cfg, GeocoderClient* client_override = nullptr) {
  detail::require(cfg, files::labeled, "label");
  auto labeled = read_labeled_jsonl(cfg.work(files::labeled));
  const auto gz = load_gazetteer(cfg);
  const auto cache_path = cfg.cache.empty() ? cfg.work(files::geocache) : cfg.cache;
  auto cache = GeoCache::load(cache_path);
  std::unique_ptr<GeocoderClient> http;
  GeocoderClient* client = client_override;
  if (!client && cfg.geocoder_url) {
    http = std::make_unique<HttpGeocoder>(*cfg.geocoder_url, cfg.rate_limit);
    client = http.get();
  }
  auto run = geocode_corpus(std::move(labeled), gz, cache, client, cache_path, cfg.threads);
  write_labeled_jsonl(cfg.work(files::geocoded), run.labeled);
  const auto& st = run.stats;
  std::string report = "records: " + std::to_string(run.labeled.size()) + "\nno location: " +
                       std::to_string(st.no_location) + "\ncache hits: " + std::to_string(st.cache_hits) +
                       "\ngazetteer hits: " + std::to_string(st.local_hits) + "\nremote calls: " +
                       std::to_string(st.remote_calls) + "\nremote errors: " + std::to_string(st.remote_errors) +
                       "\nunresolved: " + std::to_string(st.unresolved) + "\n";
  write_file_atomic(cfg.work(files::geocode_report), report);
  return report;
}

/// All partitions the topics stage computes: sentiment, keyword, country,
/// date, date x sentiment, date x country.
inline PartitionSet topic_partitions(const std::vector<LabeledRecord>& labeled, const PipelineConfig& cfg,
                                     const TextPipeline& text) {
  PartitionSet all;
  auto merge = [&](PartitionSet p) {
    for (auto& [k, ids] : p.buckets) all.buckets[k] = std::move(ids);
  };
  const auto by_sentiment = partition_by(labeled, Aspect::sentiment);
  const auto by_date = partition_by(labeled, Aspect::date);
  const auto by_country = partition_by(labeled, Aspect::country);
  merge(by_sentiment);
  merge(partition_by(labeled, Aspect::keyword, cfg.keywords, &text));
  merge(by_country);
  merge(by_date);
  merge(refine(by_date, by_sentiment));
  merge(refine(by_date, by_country));
  return all;
}

/// topics: whole-corpus model plus one model per partition; topics.json,
/// partitions.txt, word clouds and model files.
inline std::string run_topics(const PipelineConfig& cfg) {
  detail::require(cfg, files::geocoded, "geocode");
  detail::require(cfg, files::tokens, "ingest");
  detail::require(cfg, files::corpus, "ingest");
  const auto labeled = read_labeled_jsonl(cfg.work(files::geocoded));
  const auto tokens = detail::read_tokens(cfg.work(files::tokens));
  const auto text = make_text_pipeline(cfg);
  auto [vocab, corpus] = load_corpus(cfg.work(files::corpus));

  const auto topics_dir = cfg.workdir / files::topics_dir;
  std::filesystem::create_directories(topics_dir / "wordclouds");
  std::filesystem::create_directories(topics_dir / "models");

  std::map<PartitionKey, StoredTopics> stored;
  std::string report;

  {
    const PartitionKey all;
    LdaConfig c = cfg.lda;
    c.seed = partition_seed(cfg.lda.seed, all);
    auto vptr = std::make_shared<const Vocabulary>(vocab);
    const auto model = train(corpus, vptr->size(), c, vptr);
    const auto summary = top_words(model, std::min(cfg.top_n, vptr->size()));
    save_model(topics_dir / "models" / (all.file_stem() + ".oalda"), model);
    export_wordcloud(summary, topics_dir / "wordclouds" / (all.file_stem() + ".json"));
    stored[all] = StoredTopics{corpus.num_docs(), true, {}, summary};
    report += all.str() + "\t" + std::to_string(corpus.num_docs()) + "\tprocessed\n";
  }

  LdaConfig pc = cfg.lda;
  pc.topics = cfg.partition_topics;
  PartitionOptions opts = cfg.partition;
  opts.threads = cfg.threads;
  const auto results = topics_for_partitions(topic_partitions(labeled, cfg, text), tokens, pc, cfg.top_n, opts);
  for (const auto& [k, r] : results.results) {
    if (r.processed) {
      save_model(topics_dir / "models" / (k.file_stem() + ".oalda"), *r.model);
      export_wordcloud(r.topics, topics_dir / "wordclouds" / (k.file_stem() + ".json"));
    }
  }
  for (auto& [k, t] : store_topics(results)) stored[k] = std::move(t);
  report += results.report();

  write_file_atomic(cfg.work(files::topics), topics_file_json(stored));
  write_file_atomic(cfg.work(files::partitions), report);

  std::string summary;
  std::size_t skipped = 0;
  for (const auto& [k, t] : stored) {
    if (t.processed) summary += k.str() + "\t" + std::to_string(t.docs) + "\n";
    else ++skipped;
  }
  summary += "processed: " + std::to_string(stored.size() - skipped) + "\nskipped: " + std::to_string(skipped) +
             " (see " + cfg.work(files::partitions).string() + ")\n";
  return summary;
}

/// timeseries: daily.csv, volume.csv, peaks.txt.
inline std::string run_timeseries(const PipelineConfig& cfg) {
  detail::require(cfg, files::geocoded, "geocode");
  const auto labeled = read_labeled_jsonl(cfg.work(files::geocoded));
  if (labeled.empty()) throw Error("timeseries: no records");
  std::filesystem::create_directories(cfg.workdir / files::timeseries_dir);
  const auto series = volume_series(labeled);
  const auto peaks = detect_peaks_detailed(series, cfg.peak_window, cfg.peak_factor);
  write_file_atomic(cfg.work(files::daily), daily_csv(aggregate_daily(labeled)));
  write_file_atomic(cfg.work(files::volume), volume_csv(series));
  const auto report = peak_report(peaks);
  write_file_atomic(cfg.work(files::peaks), report);
  return report;
}

/// snapshot: snapshot.json for the server.
inline std::string run_snapshot(const PipelineConfig& cfg) {
  detail::require(cfg, files::geocoded, "geocode");
  detail::require(cfg, files::topics, "topics");
  detail::require(cfg, files::corpus, "ingest");
  const auto labeled = read_labeled_jsonl(cfg.work(files::geocoded));
  const auto topics = stored_topics_from_json(nlohmann::json::parse(read_file(cfg.work(files::topics))));
  const auto [vocab, corpus] = load_corpus(cfg.work(files::corpus));
  const auto gz = load_gazetteer(cfg);
  const auto snap = build_snapshot(labeled, vocab.size(), topics, gz.codes(), cfg.peak_window, cfg.peak_factor);
  save_snapshot(cfg.work(files::snapshot), snap);
  return "records: " + std::to_string(snap.records) + "\nrange: " + snap.date_min.str() + ".." + snap.date_max.str() +
         "\npartitions: " + std::to_string(snap.topics.size()) + "\n";
}

/// ingest through snapshot in order.
inline void run_all(const PipelineConfig& cfg) {
  run_ingest(cfg);
  run_label(cfg);
  run_geocode(cfg);
  run_topics(cfg);
  run_timeseries(cfg);
  run_snapshot(cfg);
}

}  // namespace oatlas
