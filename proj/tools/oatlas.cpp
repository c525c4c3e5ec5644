// oatlas: command-line driver for the corpus -> labels -> geo -> topics ->
// timeseries -> snapshot -> serve pipeline.

#include <atomic>
#include <csignal>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "oatlas/pipeline.hpp"
#include "oatlas/server.hpp"

namespace {

std::atomic<int> g_signal{0};

void on_signal(int sig) { g_signal = sig; }

std::string env_name(const std::string& flag) {
  std::string out = "OATLAS_";
  for (const char c : flag) out += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

int serve(const std::filesystem::path& snapshot_path, const std::string& host, int port, const std::string& cors) {
  oatlas::SnapshotStore store;
  store.reload(snapshot_path);
  oatlas::ApiServer server(store, cors);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::signal(SIGHUP, on_signal);
  std::jthread watcher([&](std::stop_token stop) {
    while (!stop.stop_requested()) {
      const int sig = g_signal.exchange(0);
      if (sig == SIGHUP) {
        try {
          store.reload(snapshot_path);
          oatlas::log_at(oatlas::LogLevel::warn, "snapshot reloaded");
        } catch (const std::exception& e) {
          oatlas::log_warn(std::string("reload failed, keeping previous snapshot: ") + e.what());
        }
      } else if (sig != 0) {
        server.stop();
        return;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
  });
  std::cout << "serving " << snapshot_path.string() << " on http://" << host << ":" << port << std::endl;
  if (!server.listen(host, port)) {
    std::cerr << "error: cannot listen on " << host << ":" << port << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  oatlas::PipelineConfig cfg;
  CLI::App app{"oatlas: weak-supervision sentiment labeling, LDA topic partitions and a read-only exploration API"};
  app.set_config("--config", "", "key=value configuration file (flags override it)");
  app.require_subcommand(1);
  app.fallthrough();

  auto flag = [&](const std::string& name, auto& target, const std::string& help) {
    return app.add_option("--" + name, target, help)->envname(env_name(name));
  };

  std::string workdir = cfg.workdir.string(), data_dir = cfg.data_dir.string();
  std::string input, format, stopwords, lexicon, hashtags, emoticons, gazetteer, cache, geocoder_url;
  std::string tie_rule = "neutral";
  std::optional<double> alpha;
  std::string snapshot_path, host = "0.0.0.0", cors = "*";
  int port = 8080;
  bool verbose = false;

  flag("workdir", workdir, "stage output directory")->capture_default_str();
  flag("data-dir", data_dir, "directory holding the shipped data files")->capture_default_str();
  flag("threads", cfg.threads, "worker threads")->capture_default_str();
  app.add_flag("-v,--verbose", verbose, "progress logging")->envname("OATLAS_VERBOSE");

  flag("input", input, "input records (.jsonl or .csv)");
  flag("format", format, "input format override")->check(CLI::IsMember({"jsonl", "csv"}));
  flag("stopwords", stopwords, "stopword list (default <data-dir>/stopwords.txt)");
  flag("min-len", cfg.min_len, "minimum token length")->capture_default_str();
  flag("min-df", cfg.min_df, "minimum document frequency")->capture_default_str()->check(CLI::PositiveNumber);
  flag("max-df-ratio", cfg.max_df_ratio, "maximum document frequency ratio")->capture_default_str()->check(CLI::Range(0.0, 1.0));

  flag("lexicon", lexicon, "polarity lexicon word<TAB>score");
  flag("hashtags", hashtags, "hashtag map tag<TAB>POS|NEU|NEG");
  flag("emoticons", emoticons, "emoticon map emoticon<TAB>POS|NEU|NEG");
  flag("tie-rule", tie_rule, "vote tie rule")->check(CLI::IsMember({"neutral", "priority-order"}))->capture_default_str();
  flag("neg-window", cfg.neg_window, "tokens flipped after a negator")->capture_default_str();
  flag("tau", cfg.tau, "lexicon polarity threshold")->capture_default_str();

  flag("gazetteer", gazetteer, "gazetteer key<TAB>CC (default <data-dir>/gazetteer.tsv)");
  flag("cache", cache, "geocode cache JSONL (default <workdir>/geocache.jsonl)");
  flag("geocoder-url", geocoder_url, "remote geocoder endpoint, e.g. http://host:port/geocode");
  flag("rate-limit", cfg.rate_limit, "remote geocoder requests per second")->capture_default_str()->check(CLI::PositiveNumber);

  flag("topics", cfg.lda.topics, "K for the whole-corpus model")->capture_default_str()->check(CLI::PositiveNumber);
  flag("partition-topics", cfg.partition_topics, "K for partition models")->capture_default_str()->check(CLI::PositiveNumber);
  flag("alpha", alpha, "document-topic prior (default 50/K)");
  flag("beta", cfg.lda.beta, "topic-word prior")->capture_default_str();
  flag("burn-in", cfg.lda.burn_in, "burn-in sweeps")->capture_default_str();
  flag("iterations", cfg.lda.iterations, "sweeps after burn-in")->capture_default_str()->check(CLI::PositiveNumber);
  flag("seed", cfg.lda.seed, "RNG seed")->capture_default_str();
  flag("top-n", cfg.top_n, "words per topic summary")->capture_default_str()->check(CLI::PositiveNumber);
  flag("min-docs", cfg.partition.min_docs, "minimum documents per partition")->capture_default_str();
  flag("partition-min-df", cfg.partition.min_df, "minimum document frequency inside a partition")->capture_default_str();
  flag("partition-max-df-ratio", cfg.partition.max_df_ratio, "maximum document frequency ratio inside a partition")
      ->capture_default_str();
  flag("keywords", cfg.keywords, "keyword partitions")->delimiter(',')->capture_default_str();

  flag("peak-window", cfg.peak_window, "trailing days for peak detection")->capture_default_str()->check(CLI::PositiveNumber);
  flag("peak-factor", cfg.peak_factor, "peak threshold over the trailing mean")->capture_default_str();

  flag("snapshot", snapshot_path, "snapshot file to serve (default <workdir>/snapshot.json)");
  flag("host", host, "listen address")->capture_default_str();
  flag("port", port, "listen port")->capture_default_str();
  flag("cors-origin", cors, "Access-Control-Allow-Origin value (empty disables)")->capture_default_str();

  auto* ingest_cmd = app.add_subcommand("ingest", "read, deduplicate, tokenize and encode the input corpus");
  auto* label_cmd = app.add_subcommand("label", "majority-vote sentiment labels");
  auto* geocode_cmd = app.add_subcommand("geocode", "resolve user locations to country codes");
  auto* topics_cmd = app.add_subcommand("topics", "train per-partition topic models");
  auto* timeseries_cmd = app.add_subcommand("timeseries", "daily aggregates and volume peaks");
  auto* snapshot_cmd = app.add_subcommand("snapshot", "assemble the server snapshot");
  auto* serve_cmd = app.add_subcommand("serve", "run the read-only HTTP API");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    oatlas::set_log_level(verbose ? oatlas::LogLevel::info : oatlas::LogLevel::warn);
    cfg.workdir = workdir;
    cfg.data_dir = data_dir;
    cfg.input = input;
    if (!format.empty()) cfg.format = format == "csv" ? oatlas::InputFormat::csv : oatlas::InputFormat::jsonl;
    cfg.stopwords = stopwords;
    cfg.lexicon = lexicon;
    cfg.hashtags = hashtags;
    cfg.emoticons = emoticons;
    cfg.tie_rule = *oatlas::parse_tie_rule(tie_rule);
    cfg.gazetteer = gazetteer;
    cfg.cache = cache;
    if (!geocoder_url.empty()) cfg.geocoder_url = geocoder_url;
    cfg.lda.alpha = alpha;
    if (cfg.threads == 0) cfg.threads = 1;

    std::string out;
    if (*ingest_cmd) {
      if (input.empty()) {
        std::cerr << "ingest requires --input\n" << app.help();
        return 2;
      }
      out = oatlas::run_ingest(cfg);
    } else if (*label_cmd) {
      out = oatlas::run_label(cfg);
    } else if (*geocode_cmd) {
      out = oatlas::run_geocode(cfg);
    } else if (*topics_cmd) {
      out = oatlas::run_topics(cfg);
    } else if (*timeseries_cmd) {
      out = oatlas::run_timeseries(cfg);
    } else if (*snapshot_cmd) {
      out = oatlas::run_snapshot(cfg);
    } else if (*serve_cmd) {
      const std::filesystem::path path = snapshot_path.empty() ? cfg.work(oatlas::files::snapshot) : std::filesystem::path(snapshot_path);
      if (!std::filesystem::exists(path)) throw oatlas::Error("missing " + path.string() + ": run the `snapshot` stage first");
      return serve(path, host, port, cors);
    }
    std::cout << out;
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
