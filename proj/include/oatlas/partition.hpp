#pragma once

// Corpus slicing by sentiment, date, country and keyword, with one topic
// model per slice.

#include <algorithm>
#include <compare>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "oatlas/corpus.hpp"
#include "oatlas/lda.hpp"
#include "oatlas/timeseries.hpp"

namespace oatlas {

enum class Aspect { sentiment, date, country, keyword };

inline Aspect parse_aspect(std::string_view s) {
  if (s == "sentiment") return Aspect::sentiment;
  if (s == "date") return Aspect::date;
  if (s == "country" || s == "location") return Aspect::country;
  if (s == "keyword") return Aspect::keyword;
  throw Error("unknown aspect \"" + std::string(s) + "\" (expected sentiment|date|country|keyword)");
}

/// A slice of the corpus. Single-aspect keys set one field; refined keys
/// (e.g. date x sentiment) set several. No field set means the whole corpus.
struct PartitionKey {
  std::optional<Date> date{};
  std::optional<Sentiment> sentiment{};
  std::optional<std::string> country{};
  std::optional<std::string> keyword{};

  /// "date=2022-02-24;sentiment=NEG", or "all".
  std::string str() const {
    std::string out;
    auto add = [&](std::string_view name, const std::string& value) {
      if (!out.empty()) out += ';';
      out += name;
      out += '=';
      out += value;
    };
    if (date) add("date", date->str());
    if (sentiment) add("sentiment", std::string(to_string(*sentiment)));
    if (country) add("country", *country);
    if (keyword) add("keyword", *keyword);
    return out.empty() ? "all" : out;
  }

  /// Filesystem-safe variant of str().
  std::string file_stem() const {
    std::string s = str();
    for (auto& c : s) {
      if (c == '=') c = '-';
      else if (c == ';') c = '_';
      else if (!is_ascii_alnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = 'x';
    }
    return s;
  }

  auto operator<=>(const PartitionKey&) const = default;
  bool operator==(const PartitionKey&) const = default;
};

/// Seed for a partition's chain, stable no matter which partitions run.
inline std::uint64_t partition_seed(std::uint64_t seed, const PartitionKey& key) {
  return derive_seed(seed, fnv1a(key.str()));
}

struct PartitionSet {
  std::map<PartitionKey, std::vector<std::string>> buckets;  // key -> record ids, input order

  std::size_t count(const PartitionKey& key) const {
    const auto it = buckets.find(key);
    return it == buckets.end() ? 0 : it->second.size();
  }
  std::map<PartitionKey, std::size_t> counts() const {
    std::map<PartitionKey, std::size_t> out;
    for (const auto& [k, ids] : buckets) out[k] = ids.size();
    return out;
  }
};

/// Sentiment, date and country give disjoint buckets covering every record
/// (no country -> UNRESOLVED); `values` restricts which buckets are kept.
/// Keyword buckets may overlap: a record joins bucket t iff t is among its
/// tokens; `values` lists the keywords and is required.
inline PartitionSet partition_by(const std::vector<LabeledRecord>& labeled, Aspect aspect,
                                 const std::optional<std::vector<std::string>>& values = std::nullopt,
                                 const TextPipeline* text = nullptr) {
  PartitionSet out;
  if (aspect == Aspect::keyword) {
    if (!values || values->empty()) throw Error("keyword partition needs a keyword list");
    if (!text) throw Error("keyword partition needs a text pipeline");
    std::vector<std::string> keywords;
    for (const auto& v : *values) keywords.push_back(to_lower_ascii(trim(v)));
    for (const auto& kw : keywords) out.buckets[PartitionKey{.keyword = kw}];
    for (const auto& r : labeled) {
      const auto tokens = (*text)(r.record.content);
      const std::unordered_set<std::string> present(tokens.begin(), tokens.end());
      for (const auto& kw : keywords) {
        if (present.contains(kw)) out.buckets[PartitionKey{.keyword = kw}].push_back(r.record.id);
      }
    }
    return out;
  }

  auto key_of = [&](const LabeledRecord& r) {
    PartitionKey k;
    switch (aspect) {
      case Aspect::sentiment:
        k.sentiment = r.sentiment;
        break;
      case Aspect::date:
        k.date = r.record.date();
        break;
      case Aspect::country:
        k.country = country_bucket(r);
        break;
      case Aspect::keyword:
        break;
    }
    return k;
  };

  std::optional<std::set<PartitionKey>> allowed;
  if (values) {
    allowed.emplace();
    for (const auto& v : *values) {
      PartitionKey k;
      switch (aspect) {
        case Aspect::sentiment:
          k.sentiment = parse_sentiment(v);
          if (!k.sentiment) throw Error("bad sentiment value \"" + v + "\"");
          break;
        case Aspect::date:
          k.date = Date::parse(v);
          if (!k.date) throw Error("bad date value \"" + v + "\"");
          break;
        case Aspect::country:
          k.country = v;
          break;
        case Aspect::keyword:
          break;
      }
      allowed->insert(k);
      out.buckets[k];
    }
  }
  for (const auto& r : labeled) {
    auto k = key_of(r);
    if (allowed && !allowed->contains(k)) continue;
    out.buckets[std::move(k)].push_back(r.record.id);
  }
  return out;
}

/// Every record in one bucket keyed "all".
inline PartitionSet whole_corpus(const std::vector<LabeledRecord>& labeled) {
  PartitionSet out;
  auto& ids = out.buckets[PartitionKey{}];
  for (const auto& r : labeled) ids.push_back(r.record.id);
  return out;
}

/// Pairwise intersections of two partition sets, keyed by merged keys; empty
/// intersections are dropped. Member order follows `outer`.
inline PartitionSet refine(const PartitionSet& outer, const PartitionSet& inner) {
  PartitionSet out;
  for (const auto& [ik, iids] : inner.buckets) {
    const std::unordered_set<std::string> members(iids.begin(), iids.end());
    for (const auto& [ok, oids] : outer.buckets) {
      PartitionKey merged = ok;
      if (ik.date) merged.date = ik.date;
      if (ik.sentiment) merged.sentiment = ik.sentiment;
      if (ik.country) merged.country = ik.country;
      if (ik.keyword) merged.keyword = ik.keyword;
      std::vector<std::string> both;
      for (const auto& id : oids) {
        if (members.contains(id)) both.push_back(id);
      }
      if (!both.empty()) out.buckets[merged] = std::move(both);
    }
  }
  return out;
}

// ---- per-partition topics ------------------------------------------------------

struct PartitionOptions {
  std::size_t min_docs = 20;
  std::uint64_t min_df = 2;
  double max_df_ratio = 0.5;
  unsigned threads = default_threads();
};

struct PartitionResult {
  std::size_t docs = 0;
  bool processed = false;
  std::string note;  // skip reason
  std::vector<TopicSummary> topics;
  std::shared_ptr<const Vocabulary> vocab;
  std::optional<LdaModel> model;
};

struct PartitionTopics {
  std::map<PartitionKey, PartitionResult> results;

  /// "key<TAB>docs<TAB>processed|skipped[<TAB>reason]" per partition.
  std::string report() const {
    std::string out;
    for (const auto& [k, r] : results) {
      out += k.str() + "\t" + std::to_string(r.docs) + "\t" + (r.processed ? "processed" : "skipped");
      if (!r.note.empty()) out += "\t" + r.note;
      out += "\n";
    }
    return out;
  }
};

using TokenIndex = std::unordered_map<std::string, std::vector<std::string>>;

/// One LDA chain per partition, each on a vocabulary rebuilt from that
/// partition's documents and seeded by partition_seed(config.seed, key).
/// Partitions under `min_docs` (or whose vocabulary comes out empty) are
/// skipped and reported. Throws when nothing could be processed.
inline PartitionTopics topics_for_partitions(const PartitionSet& pset, const TokenIndex& tokens, const LdaConfig& config,
                                             std::size_t top_n, const PartitionOptions& opts = {}) {
  config.validate();
  std::vector<const std::pair<const PartitionKey, std::vector<std::string>>*> work;
  for (const auto& entry : pset.buckets) work.push_back(&entry);

  std::vector<PartitionResult> results(work.size());
  parallel_for(
      work.size(),
      [&](std::size_t i) {
        const auto& [key, ids] = *work[i];
        auto& res = results[i];
        res.docs = ids.size();
        if (ids.size() < opts.min_docs) {
          res.note = ids.empty() ? "empty partition" : "below minimum of " + std::to_string(opts.min_docs) + " docs";
          return;
        }
        TokenizedDocs docs;
        docs.reserve(ids.size());
        for (const auto& id : ids) {
          const auto it = tokens.find(id);
          if (it == tokens.end()) throw Error("partition " + key.str() + ": no tokens for record " + id);
          docs.push_back(it->second);
        }
        std::shared_ptr<const Vocabulary> vocab;
        DocTermCorpus corpus;
        try {
          vocab = std::make_shared<const Vocabulary>(build_vocabulary(docs, opts.min_df, opts.max_df_ratio));
          corpus = encode(docs, *vocab, ids);
        } catch (const Error& e) {
          res.note = e.what();
          return;
        }
        LdaConfig local = config;
        local.seed = partition_seed(config.seed, key);
        auto model = train(corpus, vocab->size(), local, vocab);
        res.topics = top_words(model, std::min(top_n, vocab->size()));
        res.vocab = std::move(vocab);
        res.model = std::move(model);
        res.processed = true;
      },
      opts.threads);

  PartitionTopics out;
  bool any = false;
  for (std::size_t i = 0; i < work.size(); ++i) {
    any = any || results[i].processed;
    out.results.emplace(work[i]->first, std::move(results[i]));
  }
  if (!any) {
    throw Error("no partition could be processed (minimum " + std::to_string(opts.min_docs) +
                " docs per partition)");
  }
  return out;
}

// ---- word clouds -------------------------------------------------------------

/// JSON array of {"word","weight","topic"} with weight = φ, sorted by weight
/// descending (ties: topic, then input order).
inline std::string wordcloud_json(const std::vector<TopicSummary>& summaries) {
  struct Entry {
    const WordWeight* w;
    std::size_t topic;
    std::size_t order;
  };
  std::vector<Entry> entries;
  for (const auto& t : summaries) {
    for (const auto& w : t.words) entries.push_back({&w, t.topic, entries.size()});
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.w->weight != b.w->weight) return a.w->weight > b.w->weight;
    return a.topic < b.topic;
  });
  auto arr = nlohmann::ordered_json::array();
  for (const auto& e : entries) {
    nlohmann::ordered_json j;
    j["word"] = e.w->word;
    j["weight"] = e.w->weight;
    j["topic"] = e.topic;
    arr.push_back(std::move(j));
  }
  return arr.dump();
}

inline void export_wordcloud(const std::vector<TopicSummary>& summaries, const std::filesystem::path& path) {
  if (summaries.empty()) throw Error("export_wordcloud: no summaries");
  write_file_atomic(path, wordcloud_json(summaries));
}

/// Inverse of export_wordcloud: topics ascending, words by weight descending.
/// Word ids are not stored in the file and come back as 0.
inline std::vector<TopicSummary> read_wordcloud(const std::filesystem::path& path) {
  const auto j = nlohmann::json::parse(read_file(path));
  std::map<std::size_t, TopicSummary> by_topic;
  for (const auto& e : j) {
    const auto topic = e.value("topic", std::size_t{0});
    auto& t = by_topic[topic];
    t.topic = topic;
    t.words.push_back({0, e.at("word").get<std::string>(), e.at("weight").get<double>()});
  }
  std::vector<TopicSummary> out;
  for (auto& [k, t] : by_topic) out.push_back(std::move(t));
  return out;
}

}  // namespace oatlas
