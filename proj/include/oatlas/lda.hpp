#pragma once

// Latent Dirichlet allocation trained by collapsed Gibbs sampling.
//
// Each token's topic is resampled from its full conditional with φ and θ
// integrated out:
//
//   P(z_i = k | z_-i, w) ∝ (n_dk + α) · (n_kw + β) / (n_k + Vβ)
//
// where every count excludes token i. Point estimates are read off the final
// counts:  φ_kw = (n_kw + β) / (n_k + Vβ),  θ_dk = (n_dk + α) / (N_d + Kα).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "oatlas/corpus.hpp"
#include "oatlas/util.hpp"

namespace oatlas {

struct LdaConfig {
  std::size_t topics = 10;
  std::optional<double> alpha;  // unset: 50 / K
  double beta = 0.01;
  std::size_t burn_in = 200;
  std::size_t iterations = 300;
  std::uint64_t seed = 42;
  std::size_t log_every = 10;

  double effective_alpha() const { return alpha ? *alpha : 50.0 / static_cast<double>(topics); }

  void validate() const {
    if (topics < 1) throw Error("LDA: K must be >= 1");
    if (!(effective_alpha() > 0)) throw Error("LDA: alpha must be > 0");
    if (!(beta > 0)) throw Error("LDA: beta must be > 0");
    if (iterations < 1) throw Error("LDA: iterations must be >= 1");
  }
};

/// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  bool operator==(const Matrix&) const = default;
};

/// Sampler state. Tokens are stored flat; doc d spans
/// [doc_offsets[d], doc_offsets[d+1]).
struct LdaState {
  std::size_t K = 0, V = 0;
  std::vector<std::size_t> doc_offsets;
  std::vector<WordId> words;
  std::vector<std::uint32_t> z;
  std::vector<std::uint32_t> n_dk;  // D x K
  std::vector<std::uint32_t> n_kw;  // K x V
  std::vector<std::uint32_t> n_k;
  std::vector<std::uint32_t> n_d;
  std::size_t sweeps = 0;
  Rng rng;

  std::size_t num_docs() const { return n_d.size(); }
  std::size_t num_tokens() const { return words.size(); }
  std::uint32_t doc_topic(std::size_t d, std::size_t k) const { return n_dk[d * K + k]; }
  std::uint32_t topic_word(std::size_t k, std::size_t w) const { return n_kw[k * V + w]; }

  bool operator==(const LdaState&) const = default;
};

/// Uniform random topic per token from the seeded RNG, counts built to match.
inline LdaState init_state(const DocTermCorpus& corpus, std::size_t V, const LdaConfig& config) {
  config.validate();
  if (corpus.docs.empty()) throw Error("LDA: empty corpus");
  if (V == 0) throw Error("LDA: empty vocabulary");
  LdaState s;
  s.K = config.topics;
  s.V = V;
  s.rng = Rng(config.seed);
  const std::size_t D = corpus.docs.size();
  s.doc_offsets.reserve(D + 1);
  s.doc_offsets.push_back(0);
  for (const auto& doc : corpus.docs) {
    if (doc.empty()) throw Error("LDA: corpus contains an empty document");
    for (const auto w : doc) {
      if (w >= V) throw Error("LDA: word id " + std::to_string(w) + " >= V=" + std::to_string(V));
      s.words.push_back(w);
    }
    s.doc_offsets.push_back(s.words.size());
  }
  s.z.resize(s.words.size());
  s.n_dk.assign(D * s.K, 0);
  s.n_kw.assign(s.K * V, 0);
  s.n_k.assign(s.K, 0);
  s.n_d.assign(D, 0);
  for (std::size_t d = 0; d < D; ++d) {
    for (std::size_t i = s.doc_offsets[d]; i < s.doc_offsets[d + 1]; ++i) {
      const auto k = s.rng.below(static_cast<std::uint32_t>(s.K));
      s.z[i] = k;
      ++s.n_dk[d * s.K + k];
      ++s.n_kw[k * V + s.words[i]];
      ++s.n_k[k];
      ++s.n_d[d];
    }
  }
  return s;
}

/// Resamples every token once in (doc, position) order.
inline void gibbs_sweep(LdaState& s, const LdaConfig& config) {
  const std::size_t K = s.K;
  const double alpha = config.effective_alpha();
  const double beta = config.beta;
  const double vbeta = static_cast<double>(s.V) * beta;
  std::vector<double> cumulative(K);
  const std::size_t D = s.num_docs();

  for (std::size_t d = 0; d < D; ++d) {
    std::uint32_t* doc_counts = s.n_dk.data() + d * K;
    for (std::size_t i = s.doc_offsets[d]; i < s.doc_offsets[d + 1]; ++i) {
      const WordId w = s.words[i];
      const std::uint32_t old = s.z[i];
      --doc_counts[old];
      --s.n_kw[old * s.V + w];
      --s.n_k[old];

      double total = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        total += (doc_counts[k] + alpha) * (s.n_kw[k * s.V + w] + beta) / (s.n_k[k] + vbeta);
        cumulative[k] = total;
      }
      const double u = s.rng.uniform() * total;
      std::uint32_t k_new = static_cast<std::uint32_t>(K - 1);
      for (std::size_t k = 0; k < K; ++k) {
        if (u < cumulative[k]) {
          k_new = static_cast<std::uint32_t>(k);
          break;
        }
      }

      s.z[i] = k_new;
      ++doc_counts[k_new];
      ++s.n_kw[k_new * s.V + w];
      ++s.n_k[k_new];
    }
  }
  ++s.sweeps;
}

/// Collapsed joint log p(w, z | α, β).
inline double log_likelihood(const LdaState& s, const LdaConfig& config) {
  const double alpha = config.effective_alpha();
  const double beta = config.beta;
  const auto K = static_cast<double>(s.K);
  const auto V = static_cast<double>(s.V);
  const auto D = static_cast<double>(s.num_docs());

  double ll = K * (std::lgamma(V * beta) - V * std::lgamma(beta));
  for (std::size_t k = 0; k < s.K; ++k) {
    for (std::size_t w = 0; w < s.V; ++w) ll += std::lgamma(s.topic_word(k, w) + beta);
    ll -= std::lgamma(s.n_k[k] + V * beta);
  }
  ll += D * (std::lgamma(K * alpha) - K * std::lgamma(alpha));
  for (std::size_t d = 0; d < s.num_docs(); ++d) {
    for (std::size_t k = 0; k < s.K; ++k) ll += std::lgamma(s.doc_topic(d, k) + alpha);
    ll -= std::lgamma(s.n_d[d] + K * alpha);
  }
  return ll;
}

class LdaModel {
public:
  LdaModel() = default;

  /// Builds a model from count tables; n_k and N_d are derived from them.
  LdaModel(LdaConfig config, std::size_t V, std::vector<std::uint32_t> n_kw, std::vector<std::uint32_t> n_dk)
      : config_(std::move(config)), V_(V), n_kw_(std::move(n_kw)), n_dk_(std::move(n_dk)) {
    config_.validate();
    const std::size_t K = config_.topics;
    if (V_ == 0 || n_kw_.size() != K * V_ || n_dk_.size() % K != 0) throw Error("LdaModel: count table shape mismatch");
    D_ = n_dk_.size() / K;
    estimate();
  }

  static LdaModel from_state(const LdaState& s, const LdaConfig& config) { return LdaModel(config, s.V, s.n_kw, s.n_dk); }

  const LdaConfig& config() const { return config_; }
  std::size_t K() const { return config_.topics; }
  std::size_t V() const { return V_; }
  std::size_t D() const { return D_; }

  double phi(std::size_t k, std::size_t w) const { return phi_(k, w); }
  double theta(std::size_t d, std::size_t k) const { return theta_(d, k); }
  const Matrix& phi() const { return phi_; }
  const Matrix& theta() const { return theta_; }
  const std::vector<std::uint32_t>& topic_word_counts() const { return n_kw_; }
  const std::vector<std::uint32_t>& doc_topic_counts() const { return n_dk_; }

  /// Optional word strings for summaries.
  void set_vocabulary(std::shared_ptr<const Vocabulary> vocab) {
    if (vocab && vocab->size() != V_) throw Error("LdaModel: vocabulary size does not match V");
    vocab_ = std::move(vocab);
  }
  const Vocabulary* vocabulary() const { return vocab_.get(); }

  /// (sweep, log-likelihood) samples recorded during training.
  std::vector<std::pair<std::size_t, double>> ll_trace;

private:
  void estimate() {
    const std::size_t K = config_.topics;
    const double alpha = config_.effective_alpha();
    const double beta = config_.beta;
    phi_ = Matrix(K, V_);
    for (std::size_t k = 0; k < K; ++k) {
      double n_k = 0;
      for (std::size_t w = 0; w < V_; ++w) n_k += n_kw_[k * V_ + w];
      const double denom = n_k + static_cast<double>(V_) * beta;
      for (std::size_t w = 0; w < V_; ++w) phi_(k, w) = (n_kw_[k * V_ + w] + beta) / denom;
    }
    theta_ = Matrix(D_, K);
    for (std::size_t d = 0; d < D_; ++d) {
      double n_d = 0;
      for (std::size_t k = 0; k < K; ++k) n_d += n_dk_[d * K + k];
      const double denom = n_d + static_cast<double>(K) * alpha;
      for (std::size_t k = 0; k < K; ++k) theta_(d, k) = (n_dk_[d * K + k] + alpha) / denom;
    }
  }

  LdaConfig config_;
  std::size_t V_ = 0, D_ = 0;
  std::vector<std::uint32_t> n_kw_, n_dk_;
  Matrix phi_, theta_;
  std::shared_ptr<const Vocabulary> vocab_;
};

/// init + burn_in + iterations sweeps; estimates from the final counts.
inline LdaModel train(const DocTermCorpus& corpus, std::size_t V, const LdaConfig& config,
                      std::shared_ptr<const Vocabulary> vocab = nullptr) {
  config.validate();
  if (config.topics > V) {
    log_warn("LDA: K=" + std::to_string(config.topics) + " exceeds V=" + std::to_string(V) + " (degenerate)");
  }
  auto state = init_state(corpus, V, config);
  std::vector<std::pair<std::size_t, double>> trace;
  const std::size_t total = config.burn_in + config.iterations;
  for (std::size_t sweep = 1; sweep <= total; ++sweep) {
    gibbs_sweep(state, config);
    if ((config.log_every > 0 && sweep % config.log_every == 0) || sweep == total) {
      const double ll = log_likelihood(state, config);
      trace.emplace_back(sweep, ll);
      log_info("LDA sweep " + std::to_string(sweep) + "/" + std::to_string(total) + " log-likelihood " +
               std::to_string(ll));
    }
  }
  auto model = LdaModel::from_state(state, config);
  model.ll_trace = std::move(trace);
  model.set_vocabulary(std::move(vocab));
  return model;
}

// ---- summaries ---------------------------------------------------------------

struct WordWeight {
  WordId id = 0;
  std::string word;
  double weight = 0.0;
  bool operator==(const WordWeight&) const = default;
};

struct TopicSummary {
  std::size_t topic = 0;
  std::vector<WordWeight> words;
  bool operator==(const TopicSummary&) const = default;
};

/// Per topic, the n highest-φ words, descending, ties by word id.
inline std::vector<TopicSummary> top_words(const LdaModel& model, std::size_t n) {
  if (n < 1 || n > model.V()) throw Error("top_words: n must be in [1, V]");
  std::vector<TopicSummary> out;
  std::vector<WordId> order(model.V());
  for (std::size_t k = 0; k < model.K(); ++k) {
    std::iota(order.begin(), order.end(), WordId{0});
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                      [&](WordId a, WordId b) {
                        const double pa = model.phi(k, a), pb = model.phi(k, b);
                        return pa != pb ? pa > pb : a < b;
                      });
    TopicSummary summary{k, {}};
    for (std::size_t i = 0; i < n; ++i) {
      const WordId w = order[i];
      summary.words.push_back({w, model.vocabulary() ? model.vocabulary()->word(w) : std::to_string(w), model.phi(k, w)});
    }
    out.push_back(std::move(summary));
  }
  return out;
}

// ---- perplexity --------------------------------------------------------------

/// exp(-Σ_d Σ_i log Σ_k θ_dk φ_k,w_i / N).
inline double perplexity_from(const Matrix& phi, const Matrix& theta, const std::vector<std::vector<WordId>>& docs) {
  if (theta.rows != docs.size()) throw Error("perplexity: theta rows != document count");
  if (theta.cols != phi.rows) throw Error("perplexity: theta/phi topic count mismatch");
  double log_sum = 0.0;
  std::size_t tokens = 0;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    for (const auto w : docs[d]) {
      if (w >= phi.cols) throw Error("perplexity: word id outside the model vocabulary");
      double p = 0.0;
      for (std::size_t k = 0; k < phi.rows; ++k) p += theta(d, k) * phi(k, w);
      log_sum += std::log(p);
      ++tokens;
    }
  }
  if (tokens == 0) throw Error("perplexity: held-out corpus has no tokens");
  return std::exp(-log_sum / static_cast<double>(tokens));
}

/// θ for unseen docs: Gibbs sweeps over their tokens with φ held fixed.
inline Matrix fold_in(const LdaModel& model, const DocTermCorpus& heldout, std::size_t sweeps = 20,
                      std::optional<std::uint64_t> seed = std::nullopt) {
  if (heldout.docs.empty()) throw Error("fold_in: empty held-out corpus");
  const std::size_t K = model.K();
  const double alpha = model.config().effective_alpha();
  Rng rng(seed ? *seed : derive_seed(model.config().seed, 0xF01D));
  Matrix theta(heldout.docs.size(), K);
  std::vector<double> cumulative(K);
  for (std::size_t d = 0; d < heldout.docs.size(); ++d) {
    const auto& doc = heldout.docs[d];
    std::vector<std::uint32_t> z(doc.size());
    std::vector<std::uint32_t> counts(K, 0);
    for (std::size_t i = 0; i < doc.size(); ++i) {
      if (doc[i] >= model.V()) throw Error("fold_in: word id outside the model vocabulary");
      z[i] = rng.below(static_cast<std::uint32_t>(K));
      ++counts[z[i]];
    }
    for (std::size_t sweep = 0; sweep < sweeps; ++sweep) {
      for (std::size_t i = 0; i < doc.size(); ++i) {
        --counts[z[i]];
        double total = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
          total += (counts[k] + alpha) * model.phi(k, doc[i]);
          cumulative[k] = total;
        }
        const double u = rng.uniform() * total;
        std::uint32_t k_new = static_cast<std::uint32_t>(K - 1);
        for (std::size_t k = 0; k < K; ++k) {
          if (u < cumulative[k]) {
            k_new = static_cast<std::uint32_t>(k);
            break;
          }
        }
        z[i] = k_new;
        ++counts[k_new];
      }
    }
    const double denom = static_cast<double>(doc.size()) + static_cast<double>(K) * alpha;
    for (std::size_t k = 0; k < K; ++k) theta(d, k) = (counts[k] + alpha) / denom;
  }
  return theta;
}

/// Held-out perplexity with θ from 20 fold-in sweeps.
inline double perplexity(const LdaModel& model, const DocTermCorpus& heldout, std::size_t fold_in_sweeps = 20) {
  if (heldout.docs.empty()) throw Error("perplexity: empty held-out corpus");
  return perplexity_from(model.phi(), fold_in(model, heldout, fold_in_sweeps), heldout.docs);
}

// ---- model file ("OALDA1") -------------------------------------------------
//
// magic "OALDA1" | u32 version | u64 K | u64 V | u64 D | f64 alpha | f64 beta |
// u64 seed | u64 burn_in | u64 iterations | K*V u32 n_kw | D*K u32 n_dk
// Little-endian. φ and θ are recomputed from the counts on load.

inline constexpr std::string_view kModelMagic = "OALDA1";
inline constexpr std::uint32_t kModelVersion = 1;

inline std::string serialize_model(const LdaModel& m) {
  std::string out(kModelMagic);
  const auto& c = m.config();
  detail::put_u32(out, kModelVersion);
  detail::put_u64(out, m.K());
  detail::put_u64(out, m.V());
  detail::put_u64(out, m.D());
  detail::put_f64(out, c.effective_alpha());
  detail::put_f64(out, c.beta);
  detail::put_u64(out, c.seed);
  detail::put_u64(out, c.burn_in);
  detail::put_u64(out, c.iterations);
  for (const auto v : m.topic_word_counts()) detail::put_u32(out, v);
  for (const auto v : m.doc_topic_counts()) detail::put_u32(out, v);
  return out;
}

inline LdaModel deserialize_model(std::string_view data) {
  detail::ByteReader in(data, "model");
  if (in.bytes(kModelMagic.size()) != kModelMagic) throw Error("model: bad magic (expected OALDA1)");
  if (const auto v = in.u32(); v != kModelVersion) throw Error("model: unsupported version " + std::to_string(v));
  LdaConfig c;
  c.topics = in.u64();
  const auto V = in.u64();
  const auto D = in.u64();
  c.alpha = in.f64();
  c.beta = in.f64();
  c.seed = in.u64();
  c.burn_in = in.u64();
  c.iterations = in.u64();
  std::vector<std::uint32_t> n_kw(c.topics * V), n_dk(D * c.topics);
  for (auto& v : n_kw) v = in.u32();
  for (auto& v : n_dk) v = in.u32();
  if (!in.at_end()) throw Error("model: trailing bytes");
  return LdaModel(c, V, std::move(n_kw), std::move(n_dk));
}

inline void save_model(const std::filesystem::path& path, const LdaModel& m) { write_file_atomic(path, serialize_model(m)); }
inline LdaModel load_model(const std::filesystem::path& path) { return deserialize_model(read_file(path)); }

}  // namespace oatlas
