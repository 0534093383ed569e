#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "container.hpp"
#include "corpus.hpp"
#include "error.hpp"
#include "labels.hpp"
#include "rng.hpp"
#include "vectorize.hpp"

namespace sdgkit {

enum class Method { logistic_regression, multinomial_nb, linear_svm };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::logistic_regression: return "logistic_regression";
    case Method::multinomial_nb: return "multinomial_nb";
    case Method::linear_svm: return "linear_svm";
  }
  return "";
}

inline Method parse_method(std::string_view s) {
  if (s == "logistic_regression" || s == "lr") return Method::logistic_regression;
  if (s == "multinomial_nb" || s == "nb") return Method::multinomial_nb;
  if (s == "linear_svm" || s == "svm") return Method::linear_svm;
  throw InputError("unknown classification method: '" + std::string(s) + "'");
}

/// Hyperparameters. Logistic regression: SGD on log-loss with constant
/// rate and per-epoch L2 shrinkage. Linear SVM: SGD on hinge loss with the
/// same schedule. Naive Bayes: Laplace smoothing.
struct TrainingOptions {
  double learning_rate = 0.5;
  std::size_t epochs = 50;
  double l2 = 1e-4;
  double svm_learning_rate = 0.1;
  double nb_alpha = 1.0;

  nlohmann::ordered_json to_json() const {
    return {{"learning_rate", learning_rate}, {"epochs", epochs}, {"l2", l2}, {"svm_learning_rate", svm_learning_rate}, {"nb_alpha", nb_alpha}};
  }

  static TrainingOptions from_json(const nlohmann::ordered_json& j) {
    TrainingOptions o;
    o.learning_rate = j.at("learning_rate").get<double>();
    o.epochs = j.at("epochs").get<std::size_t>();
    o.l2 = j.at("l2").get<double>();
    o.svm_learning_rate = j.at("svm_learning_rate").get<double>();
    o.nb_alpha = j.at("nb_alpha").get<double>();
    return o;
  }
};

/// Per-class score thresholds in [0,1], indexed by SDG.
class DecisionThresholds {
 public:
  explicit DecisionThresholds(double all = 0.5) { set_all(all); }

  void set_all(double tau) {
    check(tau);
    values_.fill(tau);
  }
  void set(int sdg, double tau) {
    check(tau);
    if (!is_valid_sdg(sdg)) throw InputError("threshold SDG out of range: " + std::to_string(sdg));
    values_[static_cast<std::size_t>(sdg)] = tau;
  }
  double get(int sdg) const { return values_.at(static_cast<std::size_t>(sdg)); }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (int s = kMinSdg; s <= kMaxSdg; ++s) j[std::to_string(s)] = get(s);
    return j;
  }
  static DecisionThresholds from_json(const nlohmann::ordered_json& j) {
    DecisionThresholds t;
    for (auto it = j.begin(); it != j.end(); ++it) t.set(std::stoi(it.key()), it.value().get<double>());
    return t;
  }

  friend bool operator==(const DecisionThresholds&, const DecisionThresholds&) = default;

 private:
  static void check(double tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw InputError("decision thresholds must lie in [0,1]");
  }
  std::array<double, kMaxSdg + 1> values_{};
};

/// {c : score_c >= tau_c}.
inline SdgLabelSet labels_from_scores(const std::vector<int>& classes, const std::vector<double>& scores,
                                      const DecisionThresholds& thresholds) {
  SdgLabelSet out;
  for (std::size_t i = 0; i < classes.size(); ++i)
    if (scores[i] >= thresholds.get(classes[i])) out.insert(classes[i]);
  return out;
}

/// One-vs-rest linear scorer over a fitted vectorizer. Parameters are stored
/// as float32 so that a saved model scores identically after reloading.
struct ClassifierModel {
  Method method = Method::logistic_regression;
  std::vector<int> classes;
  FloatMatrix weights;  // classes x features
  FloatMatrix biases;   // 1 x classes
  FeatureModel vectorizer;
  std::string vectorizer_id;
  std::uint64_t seed = 0;
  TrainingOptions options;
  DecisionThresholds thresholds;
  /// Naive Bayes over signed features: each feature splits into (max(x,0), max(-x,0)).
  bool split_signs = false;

  std::vector<double> scores_from_features(const SparseVector& x) const {
    std::vector<double> raw(classes.size());
    for (std::size_t c = 0; c < classes.size(); ++c) {
      const auto w = weights.row(c);
      double s = biases.values[c];
      for (const auto& [i, v] : x.entries) {
        if (split_signs) {
          s += v > 0 ? v * w[2 * i] : -v * w[2 * i + 1];
        } else {
          s += v * w[i];
        }
      }
      raw[c] = s;
    }
    if (method == Method::multinomial_nb) {
      const double mx = *std::max_element(raw.begin(), raw.end());
      double z = 0;
      for (auto& r : raw) z += std::exp(r - mx);
      for (auto& r : raw) r = std::exp(r - mx) / z;
    } else {
      for (auto& r : raw) r = sigmoid(r);
    }
    return raw;
  }

  /// Per-class scores in [0,1], aligned with `classes`. One-vs-rest: the
  /// scores need not sum to 1 (naive Bayes posteriors do).
  std::vector<double> predict_scores(std::string_view text) const { return scores_from_features(featurize(vectorizer, text)); }

  SdgLabelSet predict_labels(const DecisionThresholds& t, std::string_view text) const {
    return labels_from_scores(classes, predict_scores(text), t);
  }
  SdgLabelSet predict_labels(std::string_view text) const { return predict_labels(thresholds, text); }
};

inline std::vector<double> predict_scores(const ClassifierModel& model, std::string_view text) {
  return model.predict_scores(text);
}

inline SdgLabelSet predict_labels(const ClassifierModel& model, const DecisionThresholds& thresholds, std::string_view text) {
  return model.predict_labels(thresholds, text);
}

namespace detail {

inline FloatMatrix to_float(const std::vector<std::vector<double>>& rows, std::size_t cols) {
  FloatMatrix m{rows.size(), cols, {}};
  m.values.reserve(rows.size() * cols);
  for (const auto& r : rows)
    for (double v : r) m.values.push_back(static_cast<float>(v));
  return m;
}

inline std::string feature_model_id(const FeatureModel& fm) {
  ContainerWriter w;
  write_feature_model(w, fm);
  return vectorizer_kind(fm) + ":" + hex64(fnv1a64(w.to_bytes()));
}

}  // namespace detail

/// Trains one head per SDG class present in `train`. Deterministic for a
/// fixed seed.
inline ClassifierModel fit_classifier(const Corpus& train, Method method, FeatureModel vectorizer, std::uint64_t seed,
                                      const TrainingOptions& options = {}) {
  SdgLabelSet present;
  for (const auto& d : train) {
    if (d.labels.empty()) throw InputError("training document '" + d.id + "' has no label");
    present = present | d.labels;
  }
  if (present.size() < 2) throw InputError("training corpus must contain at least two classes");

  ClassifierModel m;
  m.method = method;
  m.classes = present.members();
  m.seed = seed;
  m.options = options;
  m.vectorizer_id = detail::feature_model_id(vectorizer);

  std::vector<SparseVector> xs;
  xs.reserve(train.size());
  bool any_nonzero = false;
  for (const auto& d : train) {
    xs.push_back(featurize(vectorizer, d.text));
    any_nonzero = any_nonzero || !xs.back().is_zero();
  }
  const std::size_t dim = feature_dimension(vectorizer);
  if (dim == 0 || !any_nonzero) throw InputError("training documents produce no features");

  const std::size_t nclass = m.classes.size();
  std::vector<std::vector<double>> w(nclass);
  std::vector<double> b(nclass, 0.0);

  if (method == Method::multinomial_nb) {
    m.split_signs = !features_non_negative(vectorizer);
    const std::size_t width = m.split_signs ? 2 * dim : dim;
    double total_docs = 0;
    std::vector<double> class_docs(nclass, 0.0);
    for (std::size_t c = 0; c < nclass; ++c) {
      std::vector<double> counts(width, 0.0);
      for (std::size_t n = 0; n < xs.size(); ++n) {
        if (!train[n].labels.contains(m.classes[c])) continue;
        class_docs[c] += 1;
        for (const auto& [i, v] : xs[n].entries) {
          if (m.split_signs) counts[v > 0 ? 2 * i : 2 * i + 1] += std::abs(v);
          else counts[i] += v;
        }
      }
      double sum = 0;
      for (double x : counts) sum += x;
      w[c].resize(width);
      for (std::size_t j = 0; j < width; ++j) w[c][j] = std::log((counts[j] + options.nb_alpha) / (sum + options.nb_alpha * static_cast<double>(width)));
      total_docs += class_docs[c];
    }
    for (std::size_t c = 0; c < nclass; ++c) b[c] = std::log(class_docs[c] / total_docs);
    m.weights = detail::to_float(w, width);
  } else {
    const bool hinge = method == Method::linear_svm;
    const double rate = hinge ? options.svm_learning_rate : options.learning_rate;
    const double shrink = std::pow(std::max(0.0, 1.0 - rate * options.l2), static_cast<double>(xs.size()));
    for (std::size_t c = 0; c < nclass; ++c) {
      w[c].assign(dim, 0.0);
      Rng rng(seed + static_cast<std::uint64_t>(m.classes[c]));
      std::vector<std::size_t> order(xs.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        rng.shuffle(order);
        for (auto n : order) {
          const double y = train[n].labels.contains(m.classes[c]) ? 1.0 : 0.0;
          double s = b[c];
          for (const auto& [i, v] : xs[n].entries) s += w[c][i] * v;
          double g;
          if (hinge) {
            const double ys = y > 0 ? 1.0 : -1.0;
            g = ys * s < 1.0 ? -ys : 0.0;
          } else {
            g = sigmoid(s) - y;
          }
          if (g == 0.0) continue;
          for (const auto& [i, v] : xs[n].entries) w[c][i] -= rate * g * v;
          b[c] -= rate * g;
        }
        for (auto& x : w[c]) x *= shrink;
      }
    }
    m.weights = detail::to_float(w, dim);
  }
  m.biases = FloatMatrix{1, nclass, std::vector<float>(b.begin(), b.end())};
  m.vectorizer = std::move(vectorizer);
  return m;
}

// ---------------------------------------------------------------------------
// Serialization

inline std::string classifier_model_bytes(const ClassifierModel& m) {
  ContainerWriter w;
  auto& h = w.header();
  h["kind"] = "sdg_classifier";
  h["method"] = to_string(m.method);
  h["classes"] = m.classes;
  h["vectorizer_id"] = m.vectorizer_id;
  h["seed"] = m.seed;
  h["options"] = m.options.to_json();
  h["thresholds"] = m.thresholds.to_json();
  h["split_signs"] = m.split_signs;
  w.add_array("weights", m.weights);
  w.add_array("biases", m.biases);
  write_feature_model(w, m.vectorizer);
  return w.to_bytes();
}

inline ClassifierModel classifier_model_from_bytes(std::string_view bytes) {
  const auto r = ContainerReader::from_bytes(bytes);
  const auto& h = r.header();
  if (h.value("kind", "") != "sdg_classifier") throw InputError("model file is not a classifier model");
  ClassifierModel m;
  m.method = parse_method(h.at("method").get<std::string>());
  m.classes = h.at("classes").get<std::vector<int>>();
  m.vectorizer_id = h.at("vectorizer_id").get<std::string>();
  m.seed = h.at("seed").get<std::uint64_t>();
  m.options = TrainingOptions::from_json(h.at("options"));
  m.thresholds = DecisionThresholds::from_json(h.at("thresholds"));
  m.split_signs = h.at("split_signs").get<bool>();
  m.weights = r.array("weights");
  m.biases = r.array("biases");
  m.vectorizer = read_feature_model(r);
  if (m.weights.rows != m.classes.size() || m.biases.cols != m.classes.size())
    throw InputError("classifier model arrays do not match the class list");
  return m;
}

inline void save_classifier(const std::string& path, const ClassifierModel& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write model file: " + path);
  const auto bytes = classifier_model_bytes(m);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline ClassifierModel load_classifier(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open model file: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return classifier_model_from_bytes(bytes);
}

// ---------------------------------------------------------------------------
// Evaluation

struct ClassMetrics {
  int sdg = 0;
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double precision = 0, recall = 0, f1 = 0;

  std::size_t support() const noexcept { return tp + fn; }
};

struct EvalReport {
  std::string method;
  std::string vectorizer;
  std::uint64_t split_seed = 0;
  std::size_t test_size = 0;
  std::vector<ClassMetrics> per_class;
  double micro_precision = 0, micro_recall = 0, micro_f1 = 0;
  double macro_f1 = 0;
  double accuracy = 0;  // exact label-set match

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["method"] = method;
    j["vectorizer"] = vectorizer;
    j["split_seed"] = split_seed;
    j["test_size"] = test_size;
    j["accuracy"] = accuracy;
    j["micro_precision"] = micro_precision;
    j["micro_recall"] = micro_recall;
    j["micro_f1"] = micro_f1;
    j["macro_f1"] = macro_f1;
    auto& rows = j["per_class"] = nlohmann::ordered_json::array();
    for (const auto& c : per_class)
      rows.push_back({{"sdg", c.sdg}, {"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn},
                      {"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1}});
    return j;
  }
};

inline double safe_ratio(double num, double den) { return den == 0 ? 0.0 : num / den; }
inline double f1_score(double p, double r) { return p + r == 0 ? 0.0 : 2 * p * r / (p + r); }

/// Metrics from paired truth/prediction label sets over the given classes.
inline EvalReport evaluate_predictions(const std::vector<SdgLabelSet>& truth, const std::vector<SdgLabelSet>& predicted,
                                       std::vector<int> classes) {
  if (truth.empty()) throw InputError("cannot evaluate on an empty test set");
  if (truth.size() != predicted.size()) throw InputError("truth and prediction counts differ");
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  EvalReport r;
  r.test_size = truth.size();
  std::size_t exact = 0, tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) exact += truth[i] == predicted[i];
  double f1_sum = 0;
  for (int c : classes) {
    ClassMetrics m;
    m.sdg = c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const bool t = truth[i].contains(c), p = predicted[i].contains(c);
      if (t && p) ++m.tp;
      else if (!t && p) ++m.fp;
      else if (t && !p) ++m.fn;
      else ++m.tn;
    }
    m.precision = safe_ratio(static_cast<double>(m.tp), static_cast<double>(m.tp + m.fp));
    m.recall = safe_ratio(static_cast<double>(m.tp), static_cast<double>(m.tp + m.fn));
    m.f1 = f1_score(m.precision, m.recall);
    tp += m.tp;
    fp += m.fp;
    fn += m.fn;
    f1_sum += m.f1;
    r.per_class.push_back(m);
  }
  r.accuracy = static_cast<double>(exact) / static_cast<double>(truth.size());
  r.micro_precision = safe_ratio(static_cast<double>(tp), static_cast<double>(tp + fp));
  r.micro_recall = safe_ratio(static_cast<double>(tp), static_cast<double>(tp + fn));
  r.micro_f1 = f1_score(r.micro_precision, r.micro_recall);
  r.macro_f1 = classes.empty() ? 0.0 : f1_sum / static_cast<double>(classes.size());
  return r;
}

/// Per-class P/R/F1 over the union of model classes and test labels.
inline EvalReport evaluate(const ClassifierModel& model, const Corpus& test, const DecisionThresholds& thresholds) {
  if (test.empty()) throw InputError("cannot evaluate on an empty test set");
  std::vector<SdgLabelSet> truth, predicted;
  SdgLabelSet all = SdgLabelSet::from_bits(0);
  for (int c : model.classes) all.insert(c);
  for (const auto& d : test) {
    truth.push_back(d.labels);
    predicted.push_back(model.predict_labels(thresholds, d.text));
    all = all | d.labels;
  }
  auto r = evaluate_predictions(truth, predicted, all.members());
  r.method = to_string(model.method);
  r.vectorizer = vectorizer_kind(model.vectorizer);
  return r;
}

inline EvalReport evaluate(const ClassifierModel& model, const Corpus& test) { return evaluate(model, test, model.thresholds); }

/// Picks, per class, the threshold maximizing F1 on a validation corpus.
/// Candidates are 0.5 and every observed score; ties prefer the value
/// closest to 0.5.
inline DecisionThresholds tune_thresholds(const ClassifierModel& model, const Corpus& validation) {
  DecisionThresholds out = model.thresholds;
  std::vector<std::vector<double>> scores;
  for (const auto& d : validation) scores.push_back(model.predict_scores(d.text));
  for (std::size_t c = 0; c < model.classes.size(); ++c) {
    const int sdg = model.classes[c];
    std::vector<double> candidates{0.5};
    for (const auto& s : scores) candidates.push_back(s[c]);
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    double best_f1 = -1, best_tau = 0.5;
    for (double tau : candidates) {
      std::size_t tp = 0, fp = 0, fn = 0;
      for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool t = validation[i].labels.contains(sdg), p = scores[i][c] >= tau;
        tp += t && p;
        fp += !t && p;
        fn += t && !p;
      }
      const double f1 = f1_score(safe_ratio(tp, tp + fp), safe_ratio(tp, tp + fn));
      if (f1 > best_f1 + 1e-12 || (std::abs(f1 - best_f1) <= 1e-12 && std::abs(tau - 0.5) < std::abs(best_tau - 0.5))) {
        best_f1 = f1;
        best_tau = tau;
      }
    }
    out.set(sdg, best_tau);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Method comparison

enum class VectorizerKind { tfidf, word2vec, doc2vec };

inline std::string to_string(VectorizerKind k) {
  switch (k) {
    case VectorizerKind::tfidf: return "tfidf";
    case VectorizerKind::word2vec: return "word2vec";
    case VectorizerKind::doc2vec: return "doc2vec";
  }
  return "";
}

inline VectorizerKind parse_vectorizer_kind(std::string_view s) {
  if (s == "tfidf") return VectorizerKind::tfidf;
  if (s == "word2vec") return VectorizerKind::word2vec;
  if (s == "doc2vec") return VectorizerKind::doc2vec;
  throw InputError("unknown vectorizer: '" + std::string(s) + "'");
}

struct VectorizerSettings {
  PrepConfig prep;
  SgnsConfig sgns;
  /// word2vec text file; when set, the word2vec vectorizer uses it instead of training.
  std::optional<std::string> pretrained_path;
};

inline FeatureModel fit_vectorizer(VectorizerKind kind, const Corpus& train, const VectorizerSettings& settings) {
  switch (kind) {
    case VectorizerKind::tfidf: return fit_tfidf(train, settings.prep);
    case VectorizerKind::word2vec:
      if (settings.pretrained_path) return MeanEmbeddingVectorizer{load_pretrained_embeddings(*settings.pretrained_path), settings.prep};
      return MeanEmbeddingVectorizer{train_skipgram(train, settings.sgns, settings.prep), settings.prep};
    case VectorizerKind::doc2vec: return train_doc_embeddings(train, settings.sgns, settings.prep);
  }
  throw InputError("unknown vectorizer");
}

/// Trains every method x vectorizer combination on one shared split and
/// ranks by macro-F1, then micro-F1, then method and vectorizer name.
inline std::vector<EvalReport> compare_methods(const Corpus& corpus, const std::vector<Method>& methods,
                                               const std::vector<VectorizerKind>& vectorizers, const SplitSpec& split,
                                               const VectorizerSettings& settings = {}, const TrainingOptions& options = {}) {
  if (methods.empty() || vectorizers.empty()) throw InputError("compare_methods needs at least one method and one vectorizer");
  const auto parts = split_train_test(corpus, split);
  std::vector<EvalReport> reports;
  for (auto vk : vectorizers) {
    const FeatureModel fm = fit_vectorizer(vk, parts.train, settings);
    for (auto method : methods) {
      const auto model = fit_classifier(parts.train, method, fm, split.seed, options);
      auto report = evaluate(model, parts.test);
      report.split_seed = split.seed;
      reports.push_back(std::move(report));
    }
  }
  std::stable_sort(reports.begin(), reports.end(), [](const EvalReport& a, const EvalReport& b) {
    if (a.macro_f1 != b.macro_f1) return a.macro_f1 > b.macro_f1;
    if (a.micro_f1 != b.micro_f1) return a.micro_f1 > b.micro_f1;
    if (a.method != b.method) return a.method < b.method;
    return a.vectorizer < b.vectorizer;
  });
  return reports;
}

}  // namespace sdgkit
