#pragma once

// Record ingestion, text cleanup and the indexed document-term corpus.

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "json.hpp"
#include "oatlas/date.hpp"
#include "oatlas/util.hpp"

namespace oatlas {

struct Record {
  std::string id;
  Timestamp timestamp{};
  std::optional<std::string> location;
  std::string content;
  std::optional<std::string> user_id;

  Date date() const { return date_of(timestamp); }
  bool operator==(const Record&) const = default;
};

inline nlohmann::ordered_json record_to_json(const Record& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["date"] = format_timestamp(r.timestamp);
  j["location"] = r.location ? nlohmann::ordered_json(*r.location) : nlohmann::ordered_json(nullptr);
  j["content"] = r.content;
  j["user_id"] = r.user_id ? nlohmann::ordered_json(*r.user_id) : nlohmann::ordered_json(nullptr);
  return j;
}

enum class InputFormat { jsonl, csv };

inline InputFormat format_from_path(const std::filesystem::path& path) {
  return to_lower_ascii(path.extension().string()) == ".csv" ? InputFormat::csv : InputFormat::jsonl;
}

struct SkippedRow {
  std::size_t row = 0;  // 1-based line (JSONL) or data row (CSV)
  std::string reason;
};

struct IngestResult {
  std::vector<Record> records;
  std::vector<SkippedRow> skipped;
  std::size_t rows = 0;

  std::string report() const {
    std::string out = "rows: " + std::to_string(rows) + "\nrecords: " + std::to_string(records.size()) +
                      "\nskipped: " + std::to_string(skipped.size()) + "\n";
    for (const auto& s : skipped) out += "  row " + std::to_string(s.row) + ": " + s.reason + "\n";
    return out;
  }
};

namespace detail {

/// RFC 4180 reader: quoted fields may hold commas, doubled quotes and newlines.
inline std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        quoted = true;
        field_started = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        break;
      case '\n':
        if (field_started || !field.empty() || !row.empty()) {
          row.push_back(std::move(field));
          rows.push_back(std::move(row));
        }
        field.clear();
        row.clear();
        field_started = false;
        break;
      default:
        field += c;
        field_started = true;
    }
  }
  if (field_started || !field.empty() || !row.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

struct RawRow {
  std::optional<std::string> id, date, location, content, user_id;
};

inline std::optional<Record> validate_row(const RawRow& raw, std::string& reason) {
  if (!raw.id || trim(*raw.id).empty()) {
    reason = "missing id";
    return std::nullopt;
  }
  if (!raw.date) {
    reason = "missing date";
    return std::nullopt;
  }
  const auto ts = parse_timestamp(trim(*raw.date));
  if (!ts) {
    reason = "unparsable date \"" + *raw.date + "\"";
    return std::nullopt;
  }
  if (!raw.content || trim(*raw.content).empty()) {
    reason = "empty content";
    return std::nullopt;
  }
  Record r;
  r.id = std::string(trim(*raw.id));
  r.timestamp = *ts;
  r.content = *raw.content;
  if (raw.location && !trim(*raw.location).empty()) r.location = std::string(trim(*raw.location));
  if (raw.user_id && !trim(*raw.user_id).empty()) r.user_id = std::string(trim(*raw.user_id));
  return r;
}

inline std::optional<std::string> json_string_field(const nlohmann::json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  return std::nullopt;
}

}  // namespace detail

/// Reads JSONL or CSV records. Invalid rows (unparsable date, empty content,
/// missing or duplicate id, malformed line) are skipped and reported.
inline IngestResult ingest(const std::filesystem::path& path, InputFormat format) {
  const std::string text = read_file(path);
  IngestResult result;
  std::unordered_set<std::string> seen_ids;

  auto accept = [&](std::size_t row, const detail::RawRow& raw) {
    ++result.rows;
    std::string reason;
    auto rec = detail::validate_row(raw, reason);
    if (rec && !seen_ids.insert(rec->id).second) {
      reason = "duplicate id " + rec->id;
      rec.reset();
    }
    if (rec) {
      result.records.push_back(std::move(*rec));
    } else {
      result.skipped.push_back({row, std::move(reason)});
    }
  };

  if (format == InputFormat::jsonl) {
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
      auto end = text.find('\n', start);
      if (end == std::string::npos) end = text.size();
      const std::string_view line = trim(std::string_view(text).substr(start, end - start));
      ++line_no;
      start = end + 1;
      if (line.empty()) continue;
      auto parsed = nlohmann::json::parse(line, nullptr, false);
      if (parsed.is_discarded() || !parsed.is_object()) {
        ++result.rows;
        result.skipped.push_back({line_no, "malformed JSON"});
        continue;
      }
      detail::RawRow raw;
      raw.id = detail::json_string_field(parsed, "id");
      raw.date = detail::json_string_field(parsed, "date");
      raw.location = detail::json_string_field(parsed, "location");
      raw.content = detail::json_string_field(parsed, "content");
      raw.user_id = detail::json_string_field(parsed, "user_id");
      accept(line_no, raw);
    }
    return result;
  }

  const auto rows = detail::parse_csv(text);
  if (rows.empty()) return result;
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < rows[0].size(); ++i) col[to_lower_ascii(trim(rows[0][i]))] = i;
  for (const char* required : {"id", "date", "content"}) {
    if (!col.contains(required)) throw Error(std::string("CSV header lacks column \"") + required + "\"");
  }
  auto cell = [&](const std::vector<std::string>& row, const char* name) -> std::optional<std::string> {
    const auto it = col.find(name);
    if (it == col.end() || it->second >= row.size()) return std::nullopt;
    return row[it->second];
  };
  for (std::size_t r = 1; r < rows.size(); ++r) {
    detail::RawRow raw{cell(rows[r], "id"), cell(rows[r], "date"), cell(rows[r], "location"),
                       cell(rows[r], "content"), cell(rows[r], "user_id")};
    accept(r, raw);
  }
  return result;
}

// ---- normalization and tokenization ---------------------------------------

inline constexpr std::string_view kUserSentinel = "<user>";

/// Lowercases, drops URLs, maps @mentions to "<user>", keeps hashtag text,
/// turns other punctuation into spaces (intra-word apostrophes survive) and
/// collapses whitespace. Bytes >= 0x80 pass through untouched.
inline std::string normalize(std::string_view content) {
  const std::string lower = to_lower_ascii(content);
  const std::string_view s = lower;
  auto word_char = [](unsigned char c) { return is_ascii_alnum(c) || c >= 0x80; };

  // Pass 1: URLs and mentions.
  std::string staged;
  staged.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const bool at_word_start = i == 0 || !word_char(static_cast<unsigned char>(s[i - 1]));
    if (at_word_start && (s.substr(i).starts_with("http://") || s.substr(i).starts_with("https://") ||
                          s.substr(i).starts_with("www."))) {
      while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
      staged += ' ';
      continue;
    }
    if (s[i] == '@' && i + 1 < s.size() && (is_ascii_alnum(static_cast<unsigned char>(s[i + 1])) || s[i + 1] == '_')) {
      ++i;
      while (i < s.size() && (is_ascii_alnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
      staged += ' ';
      staged += kUserSentinel;
      staged += ' ';
      continue;
    }
    staged += s[i++];
  }

  // Pass 2: punctuation, judged on the pass-1 text so a replaced span never
  // counts as a word neighbour.
  std::string spaced;
  spaced.reserve(staged.size());
  const std::string_view t = staged;
  for (std::size_t j = 0; j < t.size();) {
    if (t.substr(j).starts_with(kUserSentinel)) {
      spaced += ' ';
      spaced += kUserSentinel;
      spaced += ' ';
      j += kUserSentinel.size();
      continue;
    }
    const auto c = static_cast<unsigned char>(t[j]);
    if (word_char(c)) {
      spaced += t[j];
    } else if (c == '\'' && j > 0 && j + 1 < t.size() && word_char(static_cast<unsigned char>(t[j - 1])) &&
               word_char(static_cast<unsigned char>(t[j + 1]))) {
      spaced += '\'';
    } else {
      spaced += ' ';
    }
    ++j;
  }

  std::string out;
  out.reserve(spaced.size());
  for (const auto& tok : split_whitespace(spaced)) {
    if (!out.empty()) out += ' ';
    out += tok;
  }
  return out;
}

using StopwordSet = std::unordered_set<std::string>;

inline std::vector<std::string> tokenize(std::string_view normalized, const StopwordSet& stopwords,
                                         std::size_t min_len) {
  std::vector<std::string> out;
  for (auto& tok : split_whitespace(normalized)) {
    if (utf8_length(tok) < min_len || stopwords.contains(tok)) continue;
    out.push_back(std::move(tok));
  }
  return out;
}

/// One word per line; blank lines and "#" comments ignored.
inline StopwordSet load_stopwords(const std::filesystem::path& path) {
  StopwordSet out;
  const auto text = read_file(path);
  for (const auto& line : split(text, '\n')) {
    const auto w = trim(line);
    if (w.empty() || w.front() == '#') continue;
    out.insert(to_lower_ascii(w));
  }
  return out;
}

/// normalize + tokenize with fixed settings.
struct TextPipeline {
  StopwordSet stopwords;
  std::size_t min_len = 2;

  std::vector<std::string> operator()(std::string_view content) const {
    return tokenize(normalize(content), stopwords, min_len);
  }
};

// ---- dedup ------------------------------------------------------------------

/// Keeps the earliest record (timestamp, then input order) of each
/// (user_id, normalized content) pair. Records without user_id always stay.
/// Survivors keep their input order.
inline std::vector<Record> dedup(const std::vector<Record>& records) {
  std::map<std::pair<std::string, std::string>, std::size_t> winner;
  std::vector<bool> keep(records.size(), true);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (!r.user_id) continue;
    auto key = std::make_pair(*r.user_id, normalize(r.content));
    const auto [it, inserted] = winner.emplace(std::move(key), i);
    if (inserted) continue;
    if (r.timestamp < records[it->second].timestamp) {
      keep[it->second] = false;
      it->second = i;
    } else {
      keep[i] = false;
    }
  }
  std::vector<Record> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (keep[i]) out.push_back(records[i]);
  }
  return out;
}

// ---- vocabulary and encoded corpus -----------------------------------------

using WordId = std::uint32_t;
using TokenizedDocs = std::vector<std::vector<std::string>>;

class Vocabulary {
public:
  Vocabulary() = default;

  /// Words must already be in id order; doc_freq is parallel to words.
  Vocabulary(std::vector<std::string> words, std::vector<std::uint64_t> doc_freq)
      : words_(std::move(words)), doc_freq_(std::move(doc_freq)) {
    if (words_.size() != doc_freq_.size()) throw Error("vocabulary: words/doc_freq size mismatch");
    index_.reserve(words_.size());
    for (WordId i = 0; i < words_.size(); ++i) {
      if (!index_.emplace(words_[i], i).second) throw Error("vocabulary: duplicate word \"" + words_[i] + "\"");
    }
  }

  std::size_t size() const { return words_.size(); }
  bool empty() const { return words_.empty(); }

  std::optional<WordId> id(std::string_view word) const {
    const auto it = index_.find(std::string(word));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  const std::string& word(WordId id) const { return words_.at(id); }
  std::uint64_t doc_freq(WordId id) const { return doc_freq_.at(id); }
  const std::vector<std::string>& words() const { return words_; }
  const std::vector<std::uint64_t>& doc_freqs() const { return doc_freq_; }

  bool operator==(const Vocabulary& o) const { return words_ == o.words_ && doc_freq_ == o.doc_freq_; }

private:
  std::vector<std::string> words_;
  std::vector<std::uint64_t> doc_freq_;
  std::unordered_map<std::string, WordId> index_;
};

/// Keeps words with min_df <= df <= max_df_ratio * D. Ids follow descending
/// df, ties lexicographic, so identical input always yields identical ids.
inline Vocabulary build_vocabulary(const TokenizedDocs& docs, std::uint64_t min_df, double max_df_ratio) {
  if (min_df < 1) throw Error("build_vocabulary: min_df must be >= 1");
  if (!(max_df_ratio > 0.0 && max_df_ratio <= 1.0)) throw Error("build_vocabulary: max_df_ratio must be in (0, 1]");
  std::unordered_map<std::string, std::uint64_t> df;
  std::unordered_set<std::string_view> seen;
  for (const auto& doc : docs) {
    seen.clear();
    for (const auto& tok : doc) {
      if (seen.insert(tok).second) ++df[tok];
    }
  }
  const double max_df = max_df_ratio * static_cast<double>(docs.size());
  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (auto& [w, n] : df) {
    if (n >= min_df && static_cast<double>(n) <= max_df + 1e-9) kept.emplace_back(w, n);
  }
  if (kept.empty()) {
    throw Error("empty vocabulary: no word has min_df=" + std::to_string(min_df) +
                " <= doc_freq <= max_df_ratio*D=" + std::to_string(max_df_ratio) + "*" +
                std::to_string(docs.size()));
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> words;
  std::vector<std::uint64_t> freq;
  words.reserve(kept.size());
  freq.reserve(kept.size());
  for (auto& [w, n] : kept) {
    words.push_back(std::move(w));
    freq.push_back(n);
  }
  return Vocabulary(std::move(words), std::move(freq));
}

struct DocTermCorpus {
  std::vector<std::vector<WordId>> docs;
  std::vector<std::string> doc_ids;
  std::vector<std::string> dropped_ids;  // docs left empty after OOV removal

  std::size_t num_docs() const { return docs.size(); }
  std::size_t num_tokens() const {
    std::size_t n = 0;
    for (const auto& d : docs) n += d.size();
    return n;
  }
  bool operator==(const DocTermCorpus&) const = default;
};

/// Drops out-of-vocabulary tokens, then drops (and reports) empty docs.
/// `ids` may be empty, in which case docs are named by index.
inline DocTermCorpus encode(const TokenizedDocs& docs, const Vocabulary& vocab,
                            const std::vector<std::string>& ids = {}) {
  if (!ids.empty() && ids.size() != docs.size()) throw Error("encode: ids/docs size mismatch");
  DocTermCorpus out;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    std::string name = ids.empty() ? std::to_string(d) : ids[d];
    std::vector<WordId> enc;
    enc.reserve(docs[d].size());
    for (const auto& tok : docs[d]) {
      if (const auto id = vocab.id(tok)) enc.push_back(*id);
    }
    if (enc.empty()) {
      out.dropped_ids.push_back(std::move(name));
      continue;
    }
    out.docs.push_back(std::move(enc));
    out.doc_ids.push_back(std::move(name));
  }
  if (out.docs.empty()) throw Error("encode: every document is empty after vocabulary filtering");
  return out;
}

inline TokenizedDocs decode(const DocTermCorpus& corpus, const Vocabulary& vocab) {
  TokenizedDocs out;
  out.reserve(corpus.docs.size());
  for (const auto& doc : corpus.docs) {
    auto& words = out.emplace_back();
    words.reserve(doc.size());
    for (const auto id : doc) words.push_back(vocab.word(id));
  }
  return out;
}

// ---- binary corpus file ("OATL1") ------------------------------------------
//
// magic "OATL1" | u32 flags | u64 V | u64 D
// V x (u32 len, bytes, u64 doc_freq)
// D x (u32 id len, id bytes, u32 N_d, N_d x u32 word id)
// All integers little-endian.

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xFF);
}
inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out += static_cast<char>((v >> (8 * i)) & 0xFF);
}
inline void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  put_u64(out, bits);
}
inline void put_str(std::string& out, std::string_view s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

class ByteReader {
public:
  ByteReader(std::string_view data, std::string what) : data_(data), what_(std::move(what)) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(uint_n(4)); }
  std::uint64_t u64() { return uint_n(8); }
  double f64() {
    const auto bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  std::string str() {
    const auto n = u32();
    need(n);
    std::string s(data_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::string_view bytes(std::size_t n) {
    need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool at_end() const { return pos_ == data_.size(); }

private:
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) throw Error(what_ + ": truncated file");
  }
  std::uint64_t uint_n(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::string_view data_;
  std::string what_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline constexpr std::string_view kCorpusMagic = "OATL1";
inline constexpr std::uint32_t kCorpusFlagDocIds = 1;

inline std::string serialize_corpus(const Vocabulary& vocab, const DocTermCorpus& corpus) {
  std::string out(kCorpusMagic);
  detail::put_u32(out, kCorpusFlagDocIds);
  detail::put_u64(out, vocab.size());
  detail::put_u64(out, corpus.docs.size());
  for (WordId i = 0; i < vocab.size(); ++i) {
    detail::put_str(out, vocab.word(i));
    detail::put_u64(out, vocab.doc_freq(i));
  }
  for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
    detail::put_str(out, corpus.doc_ids[d]);
    detail::put_u32(out, static_cast<std::uint32_t>(corpus.docs[d].size()));
    for (const auto w : corpus.docs[d]) detail::put_u32(out, w);
  }
  return out;
}

inline std::pair<Vocabulary, DocTermCorpus> deserialize_corpus(std::string_view data) {
  detail::ByteReader in(data, "corpus");
  if (in.bytes(kCorpusMagic.size()) != kCorpusMagic) throw Error("corpus: bad magic (expected OATL1)");
  const auto flags = in.u32();
  const auto V = in.u64();
  const auto D = in.u64();
  std::vector<std::string> words;
  std::vector<std::uint64_t> df;
  for (std::uint64_t i = 0; i < V; ++i) {
    words.push_back(in.str());
    df.push_back(in.u64());
  }
  DocTermCorpus corpus;
  for (std::uint64_t d = 0; d < D; ++d) {
    corpus.doc_ids.push_back((flags & kCorpusFlagDocIds) ? in.str() : std::to_string(d));
    const auto n = in.u32();
    auto& doc = corpus.docs.emplace_back();
    doc.reserve(std::min<std::size_t>(n, data.size() / 4));
    for (std::uint32_t i = 0; i < n; ++i) {
      const auto w = in.u32();
      if (w >= V) throw Error("corpus: word id out of range");
      doc.push_back(w);
    }
  }
  if (!in.at_end()) throw Error("corpus: trailing bytes");
  return {Vocabulary(std::move(words), std::move(df)), std::move(corpus)};
}

inline void save_corpus(const std::filesystem::path& path, const Vocabulary& vocab, const DocTermCorpus& corpus) {
  write_file_atomic(path, serialize_corpus(vocab, corpus));
}

inline std::pair<Vocabulary, DocTermCorpus> load_corpus(const std::filesystem::path& path) {
  return deserialize_corpus(read_file(path));
}

}  // namespace oatlas
