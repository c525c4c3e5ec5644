#pragma once

// Weak-supervision sentiment labeling: independent labeling functions vote,
// a plurality rule aggregates.

#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"
#include "oatlas/corpus.hpp"
#include "oatlas/util.hpp"

namespace oatlas {

enum class Sentiment : std::uint8_t { pos = 0, neu = 1, neg = 2 };

inline constexpr std::array<Sentiment, 3> kSentiments{Sentiment::pos, Sentiment::neu, Sentiment::neg};

inline std::string_view to_string(Sentiment s) {
  switch (s) {
    case Sentiment::pos:
      return "POS";
    case Sentiment::neu:
      return "NEU";
    case Sentiment::neg:
      return "NEG";
  }
  return "NEU";
}

inline std::optional<Sentiment> parse_sentiment(std::string_view s) {
  const auto t = trim(s);
  if (t == "POS") return Sentiment::pos;
  if (t == "NEU") return Sentiment::neu;
  if (t == "NEG") return Sentiment::neg;
  return std::nullopt;
}

/// A labeler's output: a sentiment, or nullopt for ABSTAIN.
using Label = std::optional<Sentiment>;

inline std::string_view label_string(const Label& l) { return l ? to_string(*l) : "ABSTAIN"; }

struct Vote {
  std::string labeler;
  Label label;
  bool operator==(const Vote&) const = default;
};

// ---- labeling functions ----------------------------------------------------

using Lexicon = std::unordered_map<std::string, double>;
using TagMap = std::unordered_map<std::string, Sentiment>;

inline bool is_negator(std::string_view tok) {
  return tok == "not" || tok == "no" || tok == "never" || tok == "n't" || tok.ends_with("n't");
}

/// Sums lexicon polarity over tokens; a negator flips the sign of matches
/// among the next `neg_window` tokens. |total| <= tau with at least one match
/// is NEU; no matches abstains.
inline Label lexicon_label(const std::vector<std::string>& tokens, const Lexicon& lexicon, std::size_t neg_window,
                           double tau = 0.0) {
  double total = 0.0;
  std::size_t matches = 0;
  std::size_t flip_left = 0;
  for (const auto& tok : tokens) {
    if (is_negator(tok)) {
      flip_left = neg_window;
      continue;
    }
    const bool flipped = flip_left > 0;
    if (flip_left > 0) --flip_left;
    const auto it = lexicon.find(tok);
    if (it == lexicon.end()) continue;
    ++matches;
    total += flipped ? -it->second : it->second;
  }
  if (matches == 0) return std::nullopt;
  if (total > tau) return Sentiment::pos;
  if (total < -tau) return Sentiment::neg;
  return Sentiment::neu;
}

/// Sentiment of the first mapped tag in token order.
inline Label hashtag_label(const std::vector<std::string>& tokens, const TagMap& tags) {
  for (const auto& tok : tokens) {
    if (const auto it = tags.find(tok); it != tags.end()) return it->second;
  }
  return std::nullopt;
}

/// Emoticons are matched on raw text (normalization strips punctuation).
/// The earliest occurrence wins; on equal position the longer emoticon wins.
inline Label emoticon_label(std::string_view raw, const TagMap& emoticons) {
  std::size_t best_pos = std::string_view::npos;
  std::size_t best_len = 0;
  Label best;
  for (const auto& [emo, sentiment] : emoticons) {
    const auto pos = raw.find(emo);
    if (pos == std::string_view::npos) continue;
    if (pos < best_pos || (pos == best_pos && emo.size() > best_len) ||
        (pos == best_pos && emo.size() == best_len && sentiment < *best)) {
      best_pos = pos;
      best_len = emo.size();
      best = sentiment;
    }
  }
  return best;
}

// ---- aggregation -----------------------------------------------------------

enum class TieRule { neutral, priority_order };

inline std::optional<TieRule> parse_tie_rule(std::string_view s) {
  if (s == "neutral") return TieRule::neutral;
  if (s == "priority-order") return TieRule::priority_order;
  return std::nullopt;
}

/// Plurality over non-abstaining votes. All-abstain gives NEU. Ties give NEU
/// under TieRule::neutral, else the tied label ranked first in NEG > NEU > POS.
inline Sentiment majority_vote(const std::vector<Label>& votes, TieRule rule = TieRule::neutral) {
  std::array<std::size_t, 3> count{};
  for (const auto& v : votes) {
    if (v) ++count[static_cast<std::size_t>(*v)];
  }
  const auto best = *std::max_element(count.begin(), count.end());
  if (best == 0) return Sentiment::neu;
  std::size_t tied = 0;
  for (const auto c : count) tied += c == best ? 1 : 0;
  if (tied == 1) {
    for (const auto s : kSentiments) {
      if (count[static_cast<std::size_t>(s)] == best) return s;
    }
  }
  if (rule == TieRule::neutral) return Sentiment::neu;
  for (const auto s : {Sentiment::neg, Sentiment::neu, Sentiment::pos}) {
    if (count[static_cast<std::size_t>(s)] == best) return s;
  }
  return Sentiment::neu;
}

inline Sentiment majority_vote(const std::vector<Vote>& votes, TieRule rule = TieRule::neutral) {
  std::vector<Label> labels;
  labels.reserve(votes.size());
  for (const auto& v : votes) labels.push_back(v.label);
  return majority_vote(labels, rule);
}

// ---- labelers over records -------------------------------------------------

/// What a labeling function sees: the raw record plus its normalized tokens
/// (no stopword removal, so negators survive).
struct LabelInput {
  const Record& record;
  std::vector<std::string> tokens;
};

struct Labeler {
  std::string name;
  std::function<Label(const LabelInput&)> fn;
};

inline Labeler make_lexicon_labeler(Lexicon lexicon, std::size_t neg_window = 3, double tau = 0.0) {
  if (lexicon.empty()) throw Error("lexicon labeler: empty lexicon");
  return {"lexicon", [lex = std::move(lexicon), neg_window, tau](const LabelInput& in) {
            return lexicon_label(in.tokens, lex, neg_window, tau);
          }};
}

inline Labeler make_hashtag_labeler(TagMap tags) {
  return {"hashtag", [tags = std::move(tags)](const LabelInput& in) { return hashtag_label(in.tokens, tags); }};
}

inline Labeler make_emoticon_labeler(TagMap emoticons) {
  return {"emoticon",
          [emo = std::move(emoticons)](const LabelInput& in) { return emoticon_label(in.record.content, emo); }};
}

struct LabeledRecord {
  Record record;
  std::vector<Vote> votes;
  Sentiment sentiment = Sentiment::neu;
  std::optional<std::string> country;
  bool operator==(const LabeledRecord&) const = default;
};

struct LabelRun {
  std::vector<LabeledRecord> labeled;
  std::size_t labeler_failures = 0;
};

/// Every record receives one vote per labeler (in labeler order) and the
/// aggregated sentiment. A throwing labeler abstains and is tallied.
inline LabelRun label_corpus(const std::vector<Record>& records, const std::vector<Labeler>& labelers,
                             TieRule rule = TieRule::neutral, unsigned threads = default_threads()) {
  if (labelers.empty()) throw Error("label_corpus: no labelers registered");
  LabelRun run;
  run.labeled.resize(records.size());
  std::atomic<std::size_t> failures{0};
  parallel_for(
      records.size(),
      [&](std::size_t i) {
        const LabelInput input{records[i], split_whitespace(normalize(records[i].content))};
        auto& out = run.labeled[i];
        out.record = records[i];
        out.votes.reserve(labelers.size());
        for (const auto& l : labelers) {
          Label label;
          try {
            label = l.fn(input);
          } catch (const std::exception&) {
            ++failures;
          }
          out.votes.push_back({l.name, label});
        }
        out.sentiment = majority_vote(out.votes, rule);
      },
      threads);
  run.labeler_failures = failures.load();
  if (run.labeler_failures > 0) {
    log_warn("labeling: " + std::to_string(run.labeler_failures) + " labeler failures recorded as ABSTAIN");
  }
  return run;
}

// ---- class distribution ----------------------------------------------------

struct Distribution {
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> fractions{};
  std::size_t total = 0;

  double fraction(Sentiment s) const { return fractions[static_cast<std::size_t>(s)]; }
  std::size_t count(Sentiment s) const { return counts[static_cast<std::size_t>(s)]; }

  /// "POS\t16\t1.60%" lines, percentages to 2 decimals.
  std::string report() const {
    std::string out;
    char buf[96];
    for (const auto s : kSentiments) {
      std::snprintf(buf, sizeof buf, "%s\t%zu\t%.2f%%\n", std::string(to_string(s)).c_str(), count(s),
                    100.0 * fraction(s));
      out += buf;
    }
    std::snprintf(buf, sizeof buf, "TOTAL\t%zu\n", total);
    out += buf;
    return out;
  }
};

inline Distribution distribution_from_counts(std::array<std::size_t, 3> counts) {
  Distribution d;
  d.counts = counts;
  d.total = counts[0] + counts[1] + counts[2];
  if (d.total == 0) throw Error("distribution: no labeled records");
  for (std::size_t i = 0; i < 3; ++i) d.fractions[i] = static_cast<double>(counts[i]) / static_cast<double>(d.total);
  return d;
}

inline Distribution distribution(const std::vector<LabeledRecord>& labeled) {
  std::array<std::size_t, 3> counts{};
  for (const auto& r : labeled) ++counts[static_cast<std::size_t>(r.sentiment)];
  return distribution_from_counts(counts);
}

// ---- files -----------------------------------------------------------------

/// "word<TAB>score" lines.
inline Lexicon load_lexicon(const std::filesystem::path& path) {
  Lexicon out;
  std::size_t line_no = 0;
  for (const auto& line : split(read_file(path), '\n')) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto cols = split(t, '\t');
    if (cols.size() != 2) throw Error(path.string() + ":" + std::to_string(line_no) + ": expected word<TAB>score");
    try {
      out[to_lower_ascii(trim(cols[0]))] = std::stod(cols[1]);
    } catch (const std::exception&) {
      throw Error(path.string() + ":" + std::to_string(line_no) + ": bad score \"" + cols[1] + "\"");
    }
  }
  return out;
}

/// "tag<TAB>POS|NEU|NEG" lines. Keys are kept verbatim when `lowercase` is
/// false (emoticons such as ":D" are case sensitive).
inline TagMap load_tag_map(const std::filesystem::path& path, bool lowercase = true) {
  TagMap out;
  std::size_t line_no = 0;
  for (const auto& line : split(read_file(path), '\n')) {
    ++line_no;
    std::string_view t = line;
    if (!t.empty() && t.back() == '\r') t.remove_suffix(1);
    if (trim(t).empty() || trim(t).front() == '#') continue;
    const auto cols = split(t, '\t');
    const auto s = cols.size() == 2 ? parse_sentiment(cols[1]) : std::nullopt;
    if (!s) throw Error(path.string() + ":" + std::to_string(line_no) + ": expected tag<TAB>POS|NEU|NEG");
    std::string key(trim(cols[0]));
    if (!key.empty() && key.front() == '#') key.erase(0, 1);
    out[lowercase ? to_lower_ascii(key) : key] = *s;
  }
  return out;
}

inline nlohmann::ordered_json labeled_to_json(const LabeledRecord& r) {
  auto j = record_to_json(r.record);
  j["sentiment"] = to_string(r.sentiment);
  auto votes = nlohmann::ordered_json::array();
  for (const auto& v : r.votes) votes.push_back({{"labeler", v.labeler}, {"label", label_string(v.label)}});
  j["votes"] = std::move(votes);
  j["country"] = r.country ? nlohmann::ordered_json(*r.country) : nlohmann::ordered_json(nullptr);
  return j;
}

inline LabeledRecord labeled_from_json(const nlohmann::json& j) {
  auto opt = [&](const char* key) -> std::optional<std::string> {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<std::string>();
  };
  LabeledRecord r;
  r.record.id = j.at("id").get<std::string>();
  const auto ts = parse_timestamp(j.at("date").get<std::string>());
  if (!ts) throw Error("labeled record " + r.record.id + ": bad date");
  r.record.timestamp = *ts;
  r.record.location = opt("location");
  r.record.content = j.at("content").get<std::string>();
  r.record.user_id = opt("user_id");
  const auto s = parse_sentiment(j.at("sentiment").get<std::string>());
  if (!s) throw Error("labeled record " + r.record.id + ": bad sentiment");
  r.sentiment = *s;
  for (const auto& v : j.at("votes")) {
    const auto label = v.at("label").get<std::string>();
    r.votes.push_back({v.at("labeler").get<std::string>(), label == "ABSTAIN" ? Label{} : parse_sentiment(label)});
  }
  r.country = opt("country");
  return r;
}

inline void write_labeled_jsonl(const std::filesystem::path& path, const std::vector<LabeledRecord>& labeled) {
  std::string out;
  for (const auto& r : labeled) {
    out += labeled_to_json(r).dump();
    out += '\n';
  }
  write_file_atomic(path, out);
}

inline std::vector<LabeledRecord> read_labeled_jsonl(const std::filesystem::path& path) {
  std::vector<LabeledRecord> out;
  std::size_t line_no = 0;
  for (const auto& line : split(read_file(path), '\n')) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      out.push_back(labeled_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace oatlas
