#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "container.hpp"
#include "document.hpp"
#include "error.hpp"
#include "rng.hpp"
#include "textprep.hpp"

namespace sdgkit {

// ---------------------------------------------------------------------------
// Vector helpers

/// Sparse vector with entries sorted by index and no explicit zeros.
struct SparseVector {
  std::vector<std::pair<std::uint32_t, double>> entries;

  double get(std::uint32_t index) const {
    auto it = std::lower_bound(entries.begin(), entries.end(), index,
                               [](const auto& e, std::uint32_t i) { return e.first < i; });
    return (it != entries.end() && it->first == index) ? it->second : 0.0;
  }

  double norm() const {
    double s = 0;
    for (const auto& [i, v] : entries) s += v * v;
    return std::sqrt(s);
  }

  bool is_zero() const noexcept { return entries.empty(); }

  static SparseVector from_dense(std::span<const double> dense) {
    SparseVector out;
    for (std::size_t i = 0; i < dense.size(); ++i)
      if (dense[i] != 0.0) out.entries.emplace_back(static_cast<std::uint32_t>(i), dense[i]);
    return out;
  }
};

template <typename A, typename B>
double dot(std::span<const A> a, std::span<const B> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return s;
}

/// Cosine similarity in [-1, 1]; 0 when either vector is zero. Bitwise-equal
/// nonzero vectors give exactly 1.
template <typename A, typename B>
double cosine_similarity(std::span<const A> a, std::span<const B> b) {
  if (a.size() != b.size()) throw Error("cosine_similarity: dimension mismatch");
  const double na = std::sqrt(dot(a, a));
  const double nb = std::sqrt(dot(b, b));
  if (na == 0.0 || nb == 0.0) return 0.0;
  if constexpr (std::same_as<A, B>) {
    if (std::equal(a.begin(), a.end(), b.begin())) return 1.0;
  }
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

namespace detail {

inline nlohmann::ordered_json vocabulary_to_json(const Vocabulary& v) {
  nlohmann::ordered_json j;
  j["num_docs"] = v.num_docs();
  j["terms"] = v.terms();
  j["df"] = v.df_values();
  j["cf"] = v.cf_values();
  return j;
}

inline Vocabulary vocabulary_from_json(const nlohmann::ordered_json& j) {
  return Vocabulary::from_parts(j.at("terms").get<std::vector<std::string>>(), j.at("df").get<std::vector<std::uint64_t>>(),
                                j.at("cf").get<std::vector<std::uint64_t>>(), j.at("num_docs").get<std::uint64_t>());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// TF-IDF

enum class TfidfNorm { l2, none };

/// Smoothed inverse document frequency: ln((1+N)/(1+df)) + 1.
inline double smoothed_idf(std::uint64_t num_docs, std::uint64_t df) {
  return std::log((1.0 + static_cast<double>(num_docs)) / (1.0 + static_cast<double>(df))) + 1.0;
}

struct TfidfModel {
  Vocabulary vocabulary;
  std::vector<double> idf;
  TfidfNorm norm = TfidfNorm::l2;
  PrepConfig prep;

  std::size_t dimension() const noexcept { return vocabulary.size(); }

  /// Raw term counts times idf, optionally L2-normalized. Out-of-vocabulary
  /// tokens are ignored.
  SparseVector transform(std::string_view text) const {
    std::map<std::uint32_t, double> tf;
    for (const auto& tok : preprocess(text, prep))
      if (auto idx = vocabulary.find(tok)) tf[static_cast<std::uint32_t>(*idx)] += 1.0;
    SparseVector out;
    out.entries.reserve(tf.size());
    for (const auto& [i, count] : tf) out.entries.emplace_back(i, count * idf[i]);
    if (norm == TfidfNorm::l2) {
      const double n = out.norm();
      if (n > 0)
        for (auto& e : out.entries) e.second /= n;
    }
    return out;
  }
};

inline TfidfModel fit_tfidf(const Corpus& corpus, const PrepConfig& config, TfidfNorm norm = TfidfNorm::l2) {
  TfidfModel m;
  m.prep = config;
  m.norm = norm;
  m.vocabulary = build_vocabulary(corpus, config);
  m.idf.resize(m.vocabulary.size());
  for (std::size_t i = 0; i < m.idf.size(); ++i) m.idf[i] = smoothed_idf(m.vocabulary.num_docs(), m.vocabulary.df(i));
  return m;
}

// ---------------------------------------------------------------------------
// Skip-gram with negative sampling

/// Numerically stable -ln(sigmoid(x)).
inline double neg_log_sigmoid(double x) { return x > 0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x)); }

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Negative-sampling loss for one (center, context, negatives) tuple:
/// -ln s(u_ctx . v) - sum_neg ln s(-u_neg . v).
template <std::floating_point T>
double sgns_loss(std::span<const T> center, std::span<const T> context, std::span<const std::span<const T>> negatives) {
  double loss = neg_log_sigmoid(dot(context, center));
  for (const auto& neg : negatives) loss += neg_log_sigmoid(-dot(neg, center));
  return loss;
}

template <std::floating_point T>
struct SgnsGradients {
  double loss = 0;
  std::vector<double> center;
  std::vector<double> context;
  std::vector<std::vector<double>> negatives;
};

/// Analytic gradients of sgns_loss with respect to every input vector.
template <std::floating_point T>
SgnsGradients<T> sgns_gradients(std::span<const T> center, std::span<const T> context,
                                std::span<const std::span<const T>> negatives) {
  const std::size_t d = center.size();
  SgnsGradients<T> g;
  g.center.assign(d, 0.0);
  const double pos = dot(context, center);
  g.loss = neg_log_sigmoid(pos);
  const double coef_pos = sigmoid(pos) - 1.0;
  g.context.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    g.center[i] += coef_pos * context[i];
    g.context[i] = coef_pos * center[i];
  }
  for (const auto& neg : negatives) {
    const double s = dot(neg, center);
    g.loss += neg_log_sigmoid(-s);
    const double coef = sigmoid(s);
    std::vector<double> gn(d);
    for (std::size_t i = 0; i < d; ++i) {
      g.center[i] += coef * neg[i];
      gn[i] = coef * center[i];
    }
    g.negatives.push_back(std::move(gn));
  }
  return g;
}

enum class SgnsUpdate { all, center_only };

/// One gradient step on the negative-sampling loss, applied in place. All
/// gradients are taken at the incoming values before any update, so a
/// vector repeated among the negatives accumulates both updates. Returns the
/// loss before the step.
template <std::floating_point T>
double sgns_step(std::span<T> center, std::span<T> context, std::span<const std::span<T>> negatives, T learning_rate,
                 SgnsUpdate mode = SgnsUpdate::all) {
  const std::size_t d = center.size();
  if (!(learning_rate > 0)) throw Error("sgns_step: learning rate must be positive");
  if (context.size() != d) throw Error("sgns_step: dimension mismatch");
  for (const auto& n : negatives)
    if (n.size() != d) throw Error("sgns_step: dimension mismatch");
  const double pos = dot(std::span<const T>(context), std::span<const T>(center));
  if (!std::isfinite(pos)) throw Error("sgns_step: non-finite input");
  double loss = neg_log_sigmoid(pos);
  const double coef_pos = sigmoid(pos) - 1.0;

  std::vector<double> coefs(negatives.size());
  for (std::size_t k = 0; k < negatives.size(); ++k) {
    const double s = dot(std::span<const T>(negatives[k]), std::span<const T>(center));
    if (!std::isfinite(s)) throw Error("sgns_step: non-finite input");
    loss += neg_log_sigmoid(-s);
    coefs[k] = sigmoid(s);
  }

  std::vector<double> grad_center(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) grad_center[i] = coef_pos * context[i];
  for (std::size_t k = 0; k < negatives.size(); ++k)
    for (std::size_t i = 0; i < d; ++i) grad_center[i] += coefs[k] * negatives[k][i];

  if (mode == SgnsUpdate::all) {
    const std::vector<T> center_before(center.begin(), center.end());
    for (std::size_t i = 0; i < d; ++i) context[i] -= static_cast<T>(learning_rate * coef_pos * center_before[i]);
    for (std::size_t k = 0; k < negatives.size(); ++k)
      for (std::size_t i = 0; i < d; ++i) negatives[k][i] -= static_cast<T>(learning_rate * coefs[k] * center_before[i]);
  }
  for (std::size_t i = 0; i < d; ++i) center[i] -= static_cast<T>(learning_rate * grad_center[i]);
  return loss;
}

/// Value-returning form of sgns_step: the loss and the vectors after one step.
struct SgnsStepResult {
  double loss = 0;
  std::vector<double> center;
  std::vector<double> context;
  std::vector<std::vector<double>> negatives;
};

inline SgnsStepResult sgns_update(std::vector<double> center, std::vector<double> context,
                                  std::vector<std::vector<double>> negatives, double learning_rate) {
  std::vector<std::span<double>> refs;
  for (auto& n : negatives) refs.emplace_back(n);
  SgnsStepResult r;
  r.loss = sgns_step<double>(center, context, refs, learning_rate);
  r.center = std::move(center);
  r.context = std::move(context);
  r.negatives = std::move(negatives);
  return r;
}

struct SgnsConfig {
  std::size_t dimension = 100;
  std::size_t window = 5;
  std::size_t negatives = 5;
  double learning_rate = 0.025;
  std::size_t epochs = 5;
  std::uint64_t seed = 1;
  double subsample = 1e-3;

  void validate() const {
    if (dimension < 1 || window < 1 || negatives < 1 || epochs < 1 || !(learning_rate > 0) || !(subsample > 0))
      throw InputError("SGNS hyperparameters must all be positive");
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["dimension"] = dimension;
    j["window"] = window;
    j["negatives"] = negatives;
    j["learning_rate"] = learning_rate;
    j["epochs"] = epochs;
    j["seed"] = seed;
    j["subsample"] = subsample;
    return j;
  }

  static SgnsConfig from_json(const nlohmann::ordered_json& j) {
    SgnsConfig c;
    c.dimension = j.at("dimension").get<std::size_t>();
    c.window = j.at("window").get<std::size_t>();
    c.negatives = j.at("negatives").get<std::size_t>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.epochs = j.at("epochs").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.subsample = j.at("subsample").get<double>();
    c.validate();
    return c;
  }
};

/// Word vectors. `output` holds the context vectors and is empty for tables
/// loaded from word2vec text files.
struct EmbeddingTable {
  Vocabulary vocabulary;
  std::size_t dimension = 0;
  FloatMatrix input;
  FloatMatrix output;
  std::vector<double> epoch_losses;

  std::span<const float> vector(std::size_t idx) const { return input.row(idx); }

  std::optional<std::span<const float>> find(std::string_view term) const {
    auto idx = vocabulary.find(term);
    if (!idx) return std::nullopt;
    return vector(*idx);
  }

  friend bool operator==(const EmbeddingTable& a, const EmbeddingTable& b) {
    return a.vocabulary.terms() == b.vocabulary.terms() && a.dimension == b.dimension && a.input == b.input;
  }
};

namespace detail {

/// Draws negatives from the unigram distribution raised to 0.75.
class UnigramSampler {
 public:
  explicit UnigramSampler(const Vocabulary& vocab) {
    cumulative_.reserve(vocab.size());
    double acc = 0;
    for (std::size_t i = 0; i < vocab.size(); ++i) {
      acc += std::pow(static_cast<double>(vocab.cf(i)), 0.75);
      cumulative_.push_back(acc);
    }
  }

  double mass_excluding(std::size_t idx) const {
    const double own = cumulative_[idx] - (idx ? cumulative_[idx - 1] : 0.0);
    return cumulative_.back() - own;
  }

  std::size_t draw(Rng& rng) const {
    const double r = rng.uniform() * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), r);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), cumulative_.size() - 1);
  }

 private:
  std::vector<double> cumulative_;
};

/// word2vec-style frequent-word subsampling keep probability.
inline std::vector<double> keep_probabilities(const Vocabulary& vocab, double threshold) {
  const double total = static_cast<double>(vocab.total_tokens());
  std::vector<double> keep(vocab.size());
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    const double f = static_cast<double>(vocab.cf(i)) / total;
    keep[i] = std::min(1.0, (std::sqrt(f / threshold) + 1.0) * threshold / f);
  }
  return keep;
}

inline std::vector<std::vector<std::uint32_t>> to_ids(const std::vector<std::vector<std::string>>& docs,
                                                      const Vocabulary& vocab) {
  std::vector<std::vector<std::uint32_t>> out;
  out.reserve(docs.size());
  for (const auto& d : docs) {
    std::vector<std::uint32_t> ids;
    ids.reserve(d.size());
    for (const auto& t : d)
      if (auto idx = vocab.find(t)) ids.push_back(static_cast<std::uint32_t>(*idx));
    out.push_back(std::move(ids));
  }
  return out;
}

inline FloatMatrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  FloatMatrix m{rows, cols, std::vector<float>(rows * cols)};
  for (auto& v : m.values) v = static_cast<float>((rng.uniform() - 0.5) / static_cast<double>(cols));
  return m;
}

/// Shared SGNS driver: for every (center row, context word) pair produced by
/// `pairs`, takes one step against sampled negatives. Returns mean loss per pair.
class SgnsTrainer {
 public:
  SgnsTrainer(const Vocabulary& vocab, const SgnsConfig& config, FloatMatrix& output, Rng& rng)
      : config_(config), sampler_(vocab), output_(output), rng_(rng) {}

  double step(std::span<float> center, std::uint32_t context, float lr, SgnsUpdate mode = SgnsUpdate::all) {
    negs_.clear();
    // redraw collisions with the context so every pair sees exactly k negatives
    if (sampler_.mass_excluding(context) > 0) {
      while (negs_.size() < config_.negatives) {
        const auto n = sampler_.draw(rng_);
        if (n != context) negs_.push_back(output_.row(n));
      }
    }
    return sgns_step<float>(center, output_.row(context), negs_, lr, mode);
  }

 private:
  const SgnsConfig& config_;
  UnigramSampler sampler_;
  FloatMatrix& output_;
  Rng& rng_;
  std::vector<std::span<float>> negs_;
};

inline float decayed_rate(const SgnsConfig& c, std::uint64_t processed, std::uint64_t planned) {
  const double frac = planned ? static_cast<double>(processed) / static_cast<double>(planned) : 0.0;
  return static_cast<float>(c.learning_rate * std::max(1e-4, 1.0 - frac));
}

}  // namespace detail

/// Trains skip-gram word vectors with negative sampling. Single-threaded and
/// deterministic for a fixed seed. Learning rate decays linearly over all
/// epochs; each center word uses a window shrunk uniformly in 1..window.
inline EmbeddingTable train_skipgram(const Corpus& corpus, const SgnsConfig& config, const PrepConfig& prep = {}) {
  config.validate();
  const auto tokens = tokenize_corpus(corpus, prep);
  EmbeddingTable table;
  table.vocabulary = Vocabulary::from_token_docs(tokens);
  const auto& vocab = table.vocabulary;
  if (vocab.total_tokens() < config.window)
    throw InputError("corpus has fewer tokens than the context window");
  const auto docs = detail::to_ids(tokens, vocab);
  const auto keep = detail::keep_probabilities(vocab, config.subsample);

  Rng rng(config.seed);
  table.dimension = config.dimension;
  table.input = detail::random_matrix(vocab.size(), config.dimension, rng);
  table.output = FloatMatrix{vocab.size(), config.dimension, std::vector<float>(vocab.size() * config.dimension, 0.0f)};
  detail::SgnsTrainer trainer(vocab, config, table.output, rng);

  const std::uint64_t planned = vocab.total_tokens() * config.epochs;
  std::uint64_t processed = 0;
  std::vector<std::uint32_t> kept;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double loss = 0;
    std::uint64_t pairs = 0;
    for (const auto& doc : docs) {
      kept.clear();
      for (auto w : doc)
        if (keep[w] >= 1.0 || rng.uniform() < keep[w]) kept.push_back(w);
      for (std::size_t pos = 0; pos < kept.size(); ++pos) {
        const float lr = detail::decayed_rate(config, processed, planned);
        const std::size_t span = config.window - rng.below(config.window);
        const std::size_t lo = pos >= span ? pos - span : 0;
        const std::size_t hi = std::min(kept.size() - 1, pos + span);
        for (std::size_t c = lo; c <= hi; ++c) {
          if (c == pos) continue;
          loss += trainer.step(table.input.row(kept[pos]), kept[c], lr);
          ++pairs;
        }
      }
      processed += doc.size();
    }
    table.epoch_losses.push_back(pairs ? loss / static_cast<double>(pairs) : 0.0);
  }
  return table;
}

/// Mean of the in-vocabulary token vectors; zero vector when none are known.
inline std::vector<double> embed_document(const EmbeddingTable& table, std::string_view text, const PrepConfig& prep = {}) {
  std::vector<double> out(table.dimension, 0.0);
  std::size_t n = 0;
  for (const auto& tok : preprocess(text, prep)) {
    if (auto v = table.find(tok)) {
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += (*v)[i];
      ++n;
    }
  }
  if (n > 0)
    for (auto& x : out) x /= static_cast<double>(n);
  return out;
}

// ---------------------------------------------------------------------------
// word2vec text format

inline std::string format_float(float v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

/// Writes "V d" then one "term v1 .. vd" line per word, shortest round-trip floats.
inline void save_word2vec_text(const std::string& path, const EmbeddingTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write embeddings file: " + path);
  out << table.vocabulary.size() << ' ' << table.dimension << '\n';
  for (std::size_t i = 0; i < table.vocabulary.size(); ++i) {
    out << table.vocabulary.term(i);
    for (float v : table.vector(i)) out << ' ' << format_float(v);
    out << '\n';
  }
}

inline EmbeddingTable parse_word2vec_text(std::istream& in) {
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) throw ParseError("missing header", 1);
  std::size_t vocab_size = 0, dim = 0;
  {
    std::istringstream hs(line);
    std::string extra;
    if (!(hs >> vocab_size >> dim) || (hs >> extra)) throw ParseError("header must be 'V d'", 1);
    if (dim < 1) throw ParseError("dimension must be >= 1", 1);
  }
  EmbeddingTable table;
  table.dimension = dim;
  table.input = FloatMatrix{0, dim, {}};
  std::vector<std::string> terms;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (terms.size() == vocab_size) throw ParseError("more rows than the header declares (" + std::to_string(vocab_size) + ")", lineno);
    std::string_view rest(line);
    const auto sp = rest.find(' ');
    if (sp == std::string_view::npos || sp == 0) throw ParseError("expected a term followed by components", lineno);
    terms.emplace_back(rest.substr(0, sp));
    rest.remove_prefix(sp + 1);
    std::size_t count = 0;
    while (!rest.empty()) {
      while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
      if (rest.empty()) break;
      auto end = rest.find(' ');
      auto tok = rest.substr(0, end);
      float v = 0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw ParseError("non-numeric component '" + std::string(tok) + "'", lineno);
      table.input.values.push_back(v);
      ++count;
      rest.remove_prefix(end == std::string_view::npos ? rest.size() : end);
    }
    if (count != dim)
      throw ParseError("expected " + std::to_string(dim) + " components, got " + std::to_string(count), lineno);
  }
  if (terms.size() != vocab_size)
    throw ParseError("header declares " + std::to_string(vocab_size) + " words, file has " + std::to_string(terms.size()), lineno);
  table.input.rows = vocab_size;
  const std::size_t n = terms.size();
  try {
    table.vocabulary = Vocabulary::from_parts(std::move(terms), std::vector<std::uint64_t>(n, 0), std::vector<std::uint64_t>(n, 0), 0);
  } catch (const InputError& e) {
    throw ParseError(e.what(), lineno);
  }
  return table;
}

inline EmbeddingTable load_pretrained_embeddings(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open embeddings file: " + path);
  try {
    return parse_word2vec_text(in);
  } catch (const ParseError& e) {
    throw InputError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// PV-DBOW document vectors

struct DocEmbeddingModel {
  std::vector<std::string> doc_ids;
  FloatMatrix doc_vectors;
  Vocabulary vocabulary;
  FloatMatrix output;
  SgnsConfig config;
  PrepConfig prep;
  std::vector<double> epoch_losses;

  std::size_t dimension() const noexcept { return config.dimension; }

  /// Vector for unseen text: a fresh document vector trained against the
  /// frozen output vectors. Deterministic in (model, text).
  std::vector<double> infer(std::string_view text) const {
    const auto tokens = preprocess(text, prep);
    std::vector<std::uint32_t> ids;
    for (const auto& t : tokens)
      if (auto idx = vocabulary.find(t)) ids.push_back(static_cast<std::uint32_t>(*idx));
    Rng rng(config.seed ^ fnv1a64(text));
    FloatMatrix vec = detail::random_matrix(1, config.dimension, rng);
    if (!ids.empty()) {
      // center_only never writes the output vectors
      detail::SgnsTrainer trainer(vocabulary, config, const_cast<FloatMatrix&>(output), rng);
      const std::uint64_t planned = ids.size() * config.epochs;
      std::uint64_t processed = 0;
      for (std::size_t e = 0; e < config.epochs; ++e)
        for (auto w : ids) trainer.step(vec.row(0), w, detail::decayed_rate(config, processed++, planned), SgnsUpdate::center_only);
    }
    return std::vector<double>(vec.values.begin(), vec.values.end());
  }
};

/// PV-DBOW: each document vector is the center that predicts the document's
/// own tokens under the negative-sampling objective.
inline DocEmbeddingModel train_doc_embeddings(const Corpus& corpus, const SgnsConfig& config, const PrepConfig& prep = {}) {
  config.validate();
  if (corpus.empty()) throw InputError("cannot train document vectors on an empty corpus");
  const auto tokens = tokenize_corpus(corpus, prep);
  DocEmbeddingModel m;
  m.config = config;
  m.prep = prep;
  m.vocabulary = Vocabulary::from_token_docs(tokens);
  if (m.vocabulary.total_tokens() < config.window) throw InputError("corpus has fewer tokens than the context window");
  const auto docs = detail::to_ids(tokens, m.vocabulary);
  const auto keep = detail::keep_probabilities(m.vocabulary, config.subsample);
  for (const auto& d : corpus) m.doc_ids.push_back(d.id);

  Rng rng(config.seed);
  m.doc_vectors = detail::random_matrix(corpus.size(), config.dimension, rng);
  m.output = FloatMatrix{m.vocabulary.size(), config.dimension, std::vector<float>(m.vocabulary.size() * config.dimension, 0.0f)};
  detail::SgnsTrainer trainer(m.vocabulary, config, m.output, rng);

  const std::uint64_t planned = m.vocabulary.total_tokens() * config.epochs;
  std::uint64_t processed = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double loss = 0;
    std::uint64_t pairs = 0;
    for (std::size_t d = 0; d < docs.size(); ++d) {
      for (auto w : docs[d]) {
        const float lr = detail::decayed_rate(config, processed++, planned);
        if (keep[w] < 1.0 && rng.uniform() >= keep[w]) continue;
        loss += trainer.step(m.doc_vectors.row(d), w, lr);
        ++pairs;
      }
    }
    m.epoch_losses.push_back(pairs ? loss / static_cast<double>(pairs) : 0.0);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Feature models for the classifiers

/// Mean-of-word-vectors document features over a trained or pretrained table.
struct MeanEmbeddingVectorizer {
  EmbeddingTable table;
  PrepConfig prep;
};

using FeatureModel = std::variant<TfidfModel, MeanEmbeddingVectorizer, DocEmbeddingModel>;

inline std::string vectorizer_kind(const FeatureModel& fm) {
  return std::visit(
      [](const auto& m) -> std::string {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::same_as<M, TfidfModel>) return "tfidf";
        else if constexpr (std::same_as<M, MeanEmbeddingVectorizer>) return "word2vec";
        else return "doc2vec";
      },
      fm);
}

inline std::size_t feature_dimension(const FeatureModel& fm) {
  return std::visit(
      [](const auto& m) -> std::size_t {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::same_as<M, TfidfModel>) return m.dimension();
        else if constexpr (std::same_as<M, MeanEmbeddingVectorizer>) return m.table.dimension;
        else return m.dimension();
      },
      fm);
}

/// True when every feature value is >= 0 (TF-IDF only).
inline bool features_non_negative(const FeatureModel& fm) { return std::holds_alternative<TfidfModel>(fm); }

inline SparseVector featurize(const FeatureModel& fm, std::string_view text) {
  return std::visit(
      [&](const auto& m) -> SparseVector {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::same_as<M, TfidfModel>) return m.transform(text);
        else if constexpr (std::same_as<M, MeanEmbeddingVectorizer>) return SparseVector::from_dense(embed_document(m.table, text, m.prep));
        else return SparseVector::from_dense(m.infer(text));
      },
      fm);
}

// ---------------------------------------------------------------------------
// Serialization into model containers

inline void write_feature_model(ContainerWriter& w, const FeatureModel& fm) {
  auto& h = w.header()["vectorizer"];
  h["kind"] = vectorizer_kind(fm);
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::same_as<M, TfidfModel>) {
          h["norm"] = m.norm == TfidfNorm::l2 ? "l2" : "none";
          h["prep"] = m.prep.to_json();
          h["vocabulary"] = detail::vocabulary_to_json(m.vocabulary);
        } else if constexpr (std::same_as<M, MeanEmbeddingVectorizer>) {
          h["prep"] = m.prep.to_json();
          h["dimension"] = m.table.dimension;
          h["vocabulary"] = detail::vocabulary_to_json(m.table.vocabulary);
          h["epoch_losses"] = m.table.epoch_losses;
          w.add_array("word_input", m.table.input);
        } else {
          h["prep"] = m.prep.to_json();
          h["sgns"] = m.config.to_json();
          h["doc_ids"] = m.doc_ids;
          h["vocabulary"] = detail::vocabulary_to_json(m.vocabulary);
          h["epoch_losses"] = m.epoch_losses;
          w.add_array("doc_vectors", m.doc_vectors);
          w.add_array("word_output", m.output);
        }
      },
      fm);
}

inline FeatureModel read_feature_model(const ContainerReader& r) {
  const auto& h = r.header().at("vectorizer");
  const auto kind = h.at("kind").get<std::string>();
  if (kind == "tfidf") {
    TfidfModel m;
    m.norm = h.at("norm").get<std::string>() == "l2" ? TfidfNorm::l2 : TfidfNorm::none;
    m.prep = PrepConfig::from_json(h.at("prep"));
    m.vocabulary = detail::vocabulary_from_json(h.at("vocabulary"));
    m.idf.resize(m.vocabulary.size());
    for (std::size_t i = 0; i < m.idf.size(); ++i) m.idf[i] = smoothed_idf(m.vocabulary.num_docs(), m.vocabulary.df(i));
    return m;
  }
  if (kind == "word2vec") {
    MeanEmbeddingVectorizer m;
    m.prep = PrepConfig::from_json(h.at("prep"));
    m.table.dimension = h.at("dimension").get<std::size_t>();
    m.table.vocabulary = detail::vocabulary_from_json(h.at("vocabulary"));
    m.table.epoch_losses = h.at("epoch_losses").get<std::vector<double>>();
    m.table.input = r.array("word_input");
    return m;
  }
  if (kind == "doc2vec") {
    DocEmbeddingModel m;
    m.prep = PrepConfig::from_json(h.at("prep"));
    m.config = SgnsConfig::from_json(h.at("sgns"));
    m.doc_ids = h.at("doc_ids").get<std::vector<std::string>>();
    m.vocabulary = detail::vocabulary_from_json(h.at("vocabulary"));
    m.epoch_losses = h.at("epoch_losses").get<std::vector<double>>();
    m.doc_vectors = r.array("doc_vectors");
    m.output = r.array("word_output");
    return m;
  }
  throw InputError("unknown vectorizer kind in model file: " + kind);
}

/// Standalone word-embedding model file (input and output vectors).
inline std::string embedding_model_bytes(const EmbeddingTable& table, const SgnsConfig& config, const PrepConfig& prep) {
  ContainerWriter w;
  w.header()["kind"] = "skipgram_embeddings";
  w.header()["sgns"] = config.to_json();
  w.header()["prep"] = prep.to_json();
  w.header()["vocabulary"] = detail::vocabulary_to_json(table.vocabulary);
  w.header()["epoch_losses"] = table.epoch_losses;
  w.add_array("word_input", table.input);
  w.add_array("word_output", table.output);
  return w.to_bytes();
}

inline std::string doc_embedding_model_bytes(const DocEmbeddingModel& m) {
  ContainerWriter w;
  w.header()["kind"] = "pv_dbow";
  write_feature_model(w, m);
  return w.to_bytes();
}

}  // namespace sdgkit
