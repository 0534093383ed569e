#include <catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "sdgkit/corpus.hpp"
#include "sdgkit/vectorize.hpp"

using namespace sdgkit;

namespace {

Corpus toy_corpus() { return load_corpus(std::string(SDGKIT_DATA_DIR) + "/toy_corpus.jsonl"); }

double cos_rows(const EmbeddingTable& t, const std::string& a, const std::string& b) {
  return cosine_similarity(*t.find(a), *t.find(b));
}

std::vector<double> random_vec(Rng& rng, std::size_t d, double scale) {
  std::vector<double> v(d);
  for (auto& x : v) x = (rng.uniform() * 2 - 1) * scale;
  return v;
}

double loss_of(const std::vector<double>& c, const std::vector<double>& ctx, const std::vector<std::vector<double>>& negs) {
  std::vector<std::span<const double>> refs(negs.begin(), negs.end());
  return sgns_loss<double>(c, ctx, refs);
}

}  // namespace

TEST_CASE("smoothed idf values") {
  CHECK(smoothed_idf(1, 1) == 1.0);
  CHECK(smoothed_idf(3, 1) == Catch::Approx(1.6931471805599453).epsilon(1e-15));
  const Corpus all({{"1", "xx yy", {}, Source::other}, {"2", "yy xx", {}, Source::other}});
  for (double v : fit_tfidf(all, {}).idf) CHECK(v == 1.0);
}

TEST_CASE("tfidf matrix matches a manual computation") {
  const Corpus c({{"d1", "solar wind solar", {}, Source::other},
                  {"d2", "wind water", {}, Source::other},
                  {"d3", "water health", {}, Source::other},
                  {"d4", "health health solar", {}, Source::other},
                  {"d5", "carbon", {}, Source::other}});
  const auto m = fit_tfidf(c, {});
  REQUIRE(m.vocabulary.terms() == std::vector<std::string>{"carbon", "health", "solar", "water", "wind"});
  // term counts per document, columns in vocabulary order
  const std::array<std::array<double, 5>, 5> tf = {{{0, 0, 2, 0, 1}, {0, 0, 0, 1, 1}, {0, 1, 0, 1, 0}, {0, 2, 1, 0, 0}, {1, 0, 0, 0, 0}}};
  const std::array<double, 5> df = {1, 2, 2, 2, 2};
  for (std::size_t d = 0; d < 5; ++d) {
    std::array<double, 5> w{};
    double norm = 0;
    for (std::size_t t = 0; t < 5; ++t) {
      w[t] = tf[d][t] * (std::log(6.0 / (1.0 + df[t])) + 1.0);
      norm += w[t] * w[t];
    }
    const auto v = m.transform(c[d].text);
    for (std::size_t t = 0; t < 5; ++t) CHECK(std::abs(v.get(static_cast<std::uint32_t>(t)) - w[t] / std::sqrt(norm)) < 1e-9);
    CHECK(std::abs(v.norm() - 1.0) < 1e-12);
  }
}

TEST_CASE("tfidf out-of-vocabulary and single-term vectors") {
  const Corpus c({{"a", "solar power", {}, Source::other}, {"b", "water", {}, Source::other}});
  const auto m = fit_tfidf(c, {});
  CHECK(m.transform("unrelated words only").is_zero());
  const auto v = m.transform("water");
  REQUIRE(v.entries.size() == 1);
  CHECK(v.entries[0].second == 1.0);
  const auto raw = fit_tfidf(c, {}, TfidfNorm::none);
  CHECK(raw.transform("solar solar").get(1) > raw.transform("solar").get(1));
}

TEST_CASE("sgns loss at zero vectors is (1+k) ln 2") {
  for (std::size_t k = 0; k <= 6; ++k) {
    const std::vector<double> z(4, 0.0);
    const std::vector<std::vector<double>> negs(k, z);
    CHECK(std::abs(loss_of(z, z, negs) - static_cast<double>(1 + k) * std::log(2.0)) < 1e-12);
  }
  std::vector<double> big(3, 10.0);
  CHECK(loss_of(big, big, {}) < 1e-12);
}

TEST_CASE("sgns gradients match central finite differences") {
  Rng rng(2024);
  const double h = 1e-6;
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6}); };
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 2 + rng.below(8), k = rng.below(6);
    auto center = random_vec(rng, d, 1.0), ctx = random_vec(rng, d, 1.0);
    std::vector<std::vector<double>> negs;
    for (std::size_t j = 0; j < k; ++j) negs.push_back(random_vec(rng, d, 1.0));
    std::vector<std::span<const double>> refs(negs.begin(), negs.end());
    const auto g = sgns_gradients<double>(center, ctx, refs);
    CHECK(g.loss >= 0);
    CHECK(std::abs(g.loss - loss_of(center, ctx, negs)) < 1e-12);
    for (std::size_t i = 0; i < d; ++i) {
      auto p = center, m = center;
      p[i] += h;
      m[i] -= h;
      CHECK(rel(g.center[i], (loss_of(p, ctx, negs) - loss_of(m, ctx, negs)) / (2 * h)) < 1e-4);
      p = ctx;
      m = ctx;
      p[i] += h;
      m[i] -= h;
      CHECK(rel(g.context[i], (loss_of(center, p, negs) - loss_of(center, m, negs)) / (2 * h)) < 1e-4);
      for (std::size_t j = 0; j < k; ++j) {
        auto np = negs, nm = negs;
        np[j][i] += h;
        nm[j][i] -= h;
        CHECK(rel(g.negatives[j][i], (loss_of(center, ctx, np) - loss_of(center, ctx, nm)) / (2 * h)) < 1e-4);
      }
    }
  }
}

TEST_CASE("sgns step applies gradients taken before the update") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto center = random_vec(rng, 4, 0.5), ctx = random_vec(rng, 4, 0.5);
    const std::vector<std::vector<double>> negs = {random_vec(rng, 4, 0.5), random_vec(rng, 4, 0.5)};
    std::vector<std::span<const double>> refs(negs.begin(), negs.end());
    const auto g = sgns_gradients<double>(center, ctx, refs);
    const double lr = 0.1;
    const auto r = sgns_update(center, ctx, negs, lr);
    CHECK(r.loss == g.loss);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(std::abs(r.center[i] - (center[i] - lr * g.center[i])) < 1e-15);
      CHECK(std::abs(r.context[i] - (ctx[i] - lr * g.context[i])) < 1e-15);
      CHECK(std::abs(r.negatives[1][i] - (negs[1][i] - lr * g.negatives[1][i])) < 1e-15);
    }
    CHECK(loss_of(r.center, r.context, r.negatives) < r.loss);
  }
  std::vector<double> nan_vec{std::nan(""), 0.0};
  CHECK_THROWS(sgns_update(nan_vec, {1.0, 0.0}, {}, 0.1));
  CHECK_THROWS(sgns_update({1.0, 0.0}, {1.0, 0.0}, {}, 0.0));
}

TEST_CASE("cosine similarity properties") {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = random_vec(rng, 6, 3.0), b = random_vec(rng, 6, 3.0);
    const double ab = cosine_similarity<double, double>(a, b);
    CHECK(ab == cosine_similarity<double, double>(b, a));
    CHECK(ab >= -1.0);
    CHECK(ab <= 1.0);
    CHECK(cosine_similarity<double, double>(a, a) == 1.0);
  }
  const std::vector<double> z(3, 0.0), one{1, 0, 0};
  CHECK(cosine_similarity<double, double>(z, one) == 0.0);
}

TEST_CASE("skip-gram places shared-context words together") {
  SgnsConfig cfg;
  cfg.dimension = 24;
  cfg.window = 4;
  cfg.epochs = 20;
  cfg.seed = 11;
  const auto t = train_skipgram(toy_corpus(), cfg);
  REQUIRE(t.find("sun"));
  const double close = cos_rows(t, "sun", "solar");
  for (const char* other : {"hospital", "sanitation", "greenhouse", "vaccines"}) CHECK(close > cos_rows(t, "sun", other));
}

TEST_CASE("skip-gram is deterministic and losses do not increase") {
  // default hyperparameters on the bundled toy corpus
  SgnsConfig cfg;
  const auto a = train_skipgram(toy_corpus(), cfg);
  const auto b = train_skipgram(toy_corpus(), cfg);
  CHECK(a.input == b.input);
  CHECK(a.output == b.output);
  REQUIRE(a.epoch_losses.size() == cfg.epochs);
  for (std::size_t e = 1; e < a.epoch_losses.size(); ++e) CHECK(a.epoch_losses[e] <= a.epoch_losses[e - 1]);
  cfg.window = 1000000;
  CHECK_THROWS_AS(train_skipgram(toy_corpus(), cfg), InputError);
}

TEST_CASE("word2vec text format") {
  std::istringstream two("2 3\nsolar 0.5 -1 2\nwind 1e-3 0 0.25\n");
  const auto t = parse_word2vec_text(two);
  CHECK(t.vocabulary.size() == 2);
  CHECK(t.dimension == 3);
  CHECK(t.find("wind")->front() == 1e-3f);
  CHECK((*t.find("solar"))[2] == 2.0f);

  std::istringstream short_file("5 2\na 1 2\nb 1 2\nc 1 2\nd 1 2\n");
  CHECK_THROWS_AS(parse_word2vec_text(short_file), ParseError);
  std::istringstream bad_dim("1 3\na 1 2\n");
  try {
    parse_word2vec_text(bad_dim);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  std::istringstream bad_num("1 1\na one\n");
  CHECK_THROWS_AS(parse_word2vec_text(bad_num), ParseError);

  SgnsConfig cfg;
  cfg.dimension = 8;
  cfg.epochs = 1;
  const auto trained = train_skipgram(toy_corpus(), cfg);
  const auto path = (std::filesystem::temp_directory_path() / "sdgkit_w2v.txt").string();
  save_word2vec_text(path, trained);
  const auto back = load_pretrained_embeddings(path);
  CHECK(back.vocabulary.terms() == trained.vocabulary.terms());
  CHECK(back.input == trained.input);
  CHECK_THROWS_AS(load_pretrained_embeddings(path + ".missing"), InputError);
}

TEST_CASE("document embedding is the mean of known token vectors") {
  std::istringstream in("2 2\nsolar 1 2\nwind 3 -4\n");
  const auto t = parse_word2vec_text(in);
  CHECK(embed_document(t, "solar") == std::vector<double>{1, 2});
  CHECK(embed_document(t, "solar wind unknown") == std::vector<double>{2, -1});
  CHECK(embed_document(t, "nothing known") == std::vector<double>{0, 0});
}

TEST_CASE("paragraph vectors") {
  const auto base = toy_corpus();
  std::vector<LabeledDocument> docs(base.begin(), base.end());
  const std::string twin = "solar panels convert solar light into electricity for homes and the regional grid";
  docs.push_back({"twin-a", twin, {7}, Source::other});
  docs.push_back({"twin-b", twin, {7}, Source::other});
  docs.push_back({"other", "hospital staff track disease outbreaks and improve patient care quality", {3}, Source::other});
  const Corpus c(docs);
  SgnsConfig cfg;
  cfg.dimension = 24;
  cfg.epochs = 30;
  cfg.learning_rate = 0.05;
  cfg.seed = 3;
  const auto m = train_doc_embeddings(c, cfg);
  const auto row = [&](const std::string& id) {
    const auto it = std::find(m.doc_ids.begin(), m.doc_ids.end(), id);
    return m.doc_vectors.row(static_cast<std::size_t>(it - m.doc_ids.begin()));
  };
  CHECK(m.doc_vectors.rows == c.size());
  CHECK(cosine_similarity(row("twin-a"), row("twin-b")) > cosine_similarity(row("twin-a"), row("other")));

  const auto again = train_doc_embeddings(c, cfg);
  CHECK(again.doc_vectors == m.doc_vectors);
  CHECK(m.infer(twin) == again.infer(twin));
  const auto inferred = m.infer(twin);
  const std::vector<double> twin_vec(row("twin-a").begin(), row("twin-a").end());
  const std::vector<double> other_vec(row("other").begin(), row("other").end());
  CHECK(cosine_similarity<double, double>(inferred, twin_vec) > cosine_similarity<double, double>(inferred, other_vec));
  CHECK_THROWS_AS(train_doc_embeddings(Corpus{}, cfg), InputError);
}

TEST_CASE("paragraph vector losses do not increase") {
  const SgnsConfig cfg;
  const auto m = train_doc_embeddings(toy_corpus(), cfg);
  REQUIRE(m.epoch_losses.size() == cfg.epochs);
  for (std::size_t e = 1; e < m.epoch_losses.size(); ++e) CHECK(m.epoch_losses[e] <= m.epoch_losses[e - 1]);
}

TEST_CASE("feature models survive serialization") {
  const auto corpus = toy_corpus();
  SgnsConfig cfg;
  cfg.dimension = 8;
  cfg.epochs = 2;
  const std::vector<FeatureModel> models = {fit_tfidf(corpus, {}), MeanEmbeddingVectorizer{train_skipgram(corpus, cfg), {}},
                                            train_doc_embeddings(corpus, cfg)};
  for (const auto& fm : models) {
    ContainerWriter w;
    write_feature_model(w, fm);
    const auto back = read_feature_model(ContainerReader::from_bytes(w.to_bytes()));
    CHECK(vectorizer_kind(back) == vectorizer_kind(fm));
    CHECK(feature_dimension(back) == feature_dimension(fm));
    for (const auto& d : corpus) CHECK(featurize(back, d.text).entries == featurize(fm, d.text).entries);
  }
}
