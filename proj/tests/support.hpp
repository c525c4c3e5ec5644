#pragma once

// Shared fixtures for the unit tests and the acceptance binary.

#include <atomic>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "oatlas/geo.hpp"

namespace oatlas::testing {

struct GeoCase {
  std::optional<std::string> location;
  std::string expected;  // country code or UNRESOLVED
  std::string stub;      // "-", "NONE" or a code
};

inline std::vector<GeoCase> load_geo_fixture(const std::filesystem::path& path) {
  std::vector<GeoCase> out;
  for (const auto& line : split(read_file(path), '\n')) {
    if (line.empty() || line.front() == '#') continue;
    const auto cols = split(line, '\t');
    if (cols.size() != 3) throw Error("geo fixture: bad line \"" + line + "\"");
    GeoCase c;
    if (cols[0] != "<null>") c.location = cols[0];
    c.expected = cols[1];
    c.stub = cols[2];
    out.push_back(std::move(c));
  }
  return out;
}

/// Answers from the fixture's stub column; queries marked "-" are recorded
/// as unexpected.
class FixtureGeocoder : public GeocoderClient {
public:
  explicit FixtureGeocoder(const std::vector<GeoCase>& cases) {
    for (const auto& c : cases) {
      if (c.location) answers_[std::string(trim(*c.location))] = c.stub;
    }
  }

  RemoteAnswer lookup(const std::string& query) override {
    ++calls;
    const auto it = answers_.find(query);
    if (it == answers_.end() || it->second == "-") {
      ++unexpected;
      return RemoteAnswer::failure("unexpected query");
    }
    if (it->second == "NONE") return RemoteAnswer::not_found();
    return parse_geocoder_response(R"({"country_code":")" + it->second + "\"}");
  }

  std::atomic<int> calls{0};
  std::atomic<int> unexpected{0};

private:
  std::map<std::string, std::string> answers_;
};

inline std::vector<LabeledRecord> geo_fixture_records(const std::vector<GeoCase>& cases) {
  std::vector<LabeledRecord> out;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    LabeledRecord r;
    r.record.id = "g" + std::to_string(i);
    r.record.timestamp = *parse_timestamp("2022-02-24");
    r.record.content = "x";
    r.record.location = cases[i].location;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace oatlas::testing

#include <numeric>
#include <random>
#include <set>

#include "oatlas/lda.hpp"

namespace oatlas::testing {

/// Empty string when all count identities hold, else a description.
inline std::string check_counts(const LdaState& s) {
  const std::size_t D = s.num_docs();
  std::vector<std::uint32_t> n_dk(D * s.K, 0), n_kw(s.K * s.V, 0), n_k(s.K, 0);
  for (std::size_t d = 0; d < D; ++d) {
    for (std::size_t i = s.doc_offsets[d]; i < s.doc_offsets[d + 1]; ++i) {
      if (s.z[i] >= s.K) return "z out of range";
      ++n_dk[d * s.K + s.z[i]];
      ++n_kw[s.z[i] * s.V + s.words[i]];
      ++n_k[s.z[i]];
    }
  }
  if (n_dk != s.n_dk) return "n_dk differs from recount";
  if (n_kw != s.n_kw) return "n_kw differs from recount";
  if (n_k != s.n_k) return "n_k differs from recount";
  std::size_t total = 0;
  for (std::size_t d = 0; d < D; ++d) {
    std::size_t row = 0;
    for (std::size_t k = 0; k < s.K; ++k) row += s.n_dk[d * s.K + k];
    if (row != s.n_d[d] || s.n_d[d] != s.doc_offsets[d + 1] - s.doc_offsets[d]) return "sum_k n_dk != N_d";
  }
  for (std::size_t k = 0; k < s.K; ++k) {
    std::size_t row = 0;
    for (std::size_t w = 0; w < s.V; ++w) row += s.n_kw[k * s.V + w];
    if (row != s.n_k[k]) return "sum_w n_kw != n_k";
    total += s.n_k[k];
  }
  if (total != s.num_tokens()) return "sum_k n_k != token count";
  return {};
}

inline DocTermCorpus random_corpus(Rng& rng, std::size_t D, std::size_t V, std::size_t max_len) {
  DocTermCorpus c;
  for (std::size_t d = 0; d < D; ++d) {
    auto& doc = c.docs.emplace_back();
    const auto len = 1 + rng.below(static_cast<std::uint32_t>(max_len));
    for (std::uint32_t i = 0; i < len; ++i) doc.push_back(rng.below(static_cast<std::uint32_t>(V)));
    c.doc_ids.push_back(std::to_string(d));
  }
  return c;
}

/// Three near-disjoint topics over V = 60: topic t puts 95% of its mass on
/// words [20t, 20t+20) with linearly decreasing weights, 5% spread evenly.
struct SyntheticCorpus {
  DocTermCorpus corpus;
  std::size_t V = 60;
  std::vector<std::vector<double>> phi;  // true topics
};

inline SyntheticCorpus synthetic_corpus(std::size_t docs = 500, std::size_t len = 50, double alpha = 0.1,
                                        std::uint64_t seed = 7) {
  SyntheticCorpus out;
  const std::size_t K = 3, V = out.V, block = V / K;
  double block_norm = 0;
  for (std::size_t j = 0; j < block; ++j) block_norm += static_cast<double>(block - j);
  out.phi.assign(K, std::vector<double>(V, 0.05 / static_cast<double>(V - block)));
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t j = 0; j < block; ++j) out.phi[k][k * block + j] = 0.95 * static_cast<double>(block - j) / block_norm;
  }
  std::mt19937_64 gen(seed);
  std::gamma_distribution<double> gamma(alpha, 1.0);
  Rng rng(seed);
  for (std::size_t d = 0; d < docs; ++d) {
    std::vector<double> theta(K);
    double sum = 0;
    while (sum <= 0) {
      sum = 0;
      for (auto& t : theta) sum += (t = gamma(gen));
    }
    for (auto& t : theta) t /= sum;
    auto& doc = out.corpus.docs.emplace_back();
    for (std::size_t i = 0; i < len; ++i) {
      auto pick = [&](const std::vector<double>& p) {
        const double u = rng.uniform();
        double acc = 0;
        for (std::size_t j = 0; j < p.size(); ++j) {
          acc += p[j];
          if (u < acc) return j;
        }
        return p.size() - 1;
      };
      const auto k = pick(theta);
      doc.push_back(static_cast<WordId>(pick(out.phi[k])));
    }
    out.corpus.doc_ids.push_back(std::to_string(d));
  }
  return out;
}

inline std::set<std::size_t> top_set(const std::vector<double>& row, std::size_t n) {
  std::vector<std::size_t> idx(row.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return row[a] > row[b]; });
  return {idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n)};
}

/// Greedy maximum-overlap matching of learned to true topics on top-n sets;
/// returns the overlap for each true topic.
inline std::vector<std::size_t> greedy_topic_overlap(const Matrix& learned, const std::vector<std::vector<double>>& truth,
                                                     std::size_t n = 10) {
  std::vector<std::set<std::size_t>> L, T;
  for (std::size_t k = 0; k < learned.rows; ++k) {
    const auto r = learned.row(k);
    L.push_back(top_set(std::vector<double>(r.begin(), r.end()), n));
  }
  for (const auto& t : truth) T.push_back(top_set(t, n));
  std::vector<std::size_t> result(T.size(), 0);
  std::vector<bool> used_l(L.size()), used_t(T.size());
  for (std::size_t round = 0; round < std::min(L.size(), T.size()); ++round) {
    std::size_t best = 0, bl = 0, bt = 0;
    bool found = false;
    for (std::size_t t = 0; t < T.size(); ++t) {
      for (std::size_t l = 0; l < L.size(); ++l) {
        if (used_t[t] || used_l[l]) continue;
        std::size_t ov = 0;
        for (const auto w : T[t]) ov += L[l].count(w);
        if (!found || ov > best) {
          best = ov;
          bl = l;
          bt = t;
          found = true;
        }
      }
    }
    used_l[bl] = used_t[bt] = true;
    result[bt] = best;
  }
  return result;
}

/// Perplexity re-evaluated in long double straight from the matrices.
inline double perplexity_oracle(const Matrix& phi, const Matrix& theta, const std::vector<std::vector<WordId>>& docs) {
  long double log_prod = 0;
  std::size_t n = 0;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    for (const auto w : docs[d]) {
      long double p = 0;
      for (std::size_t k = 0; k < phi.rows; ++k) p += static_cast<long double>(theta.data[d * theta.cols + k]) * phi.data[k * phi.cols + w];
      log_prod += std::log(p);
      ++n;
    }
  }
  return static_cast<double>(std::exp(-log_prod / static_cast<long double>(n)));
}

}  // namespace oatlas::testing
