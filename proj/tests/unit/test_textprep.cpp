#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "sdgkit/textprep.hpp"
#include "support/fixtures.hpp"

using namespace sdgkit;
using Tokens = std::vector<std::string>;

TEST_CASE("preprocess examples") {
  const PrepConfig c;
  CHECK(preprocess("Solar energy, for ALL!", c) == Tokens{"solar", "energy"});
  CHECK(preprocess("", c).empty());
  CHECK(preprocess("a b c", c).empty());
  CHECK(preprocess("  \t\n ", c).empty());
}

TEST_CASE("punctuation splits tokens") {
  const PrepConfig c;
  CHECK(preprocess("low-carbon (energy); co2/ghg", c) == Tokens{"low", "carbon", "energy", "co2", "ghg"});
  CHECK(preprocess("\xE2\x80\x9Cquoted\xE2\x80\x9D \xE2\x80\x94 dash", c) == Tokens{"quoted", "dash"});
}

TEST_CASE("unicode letters lowercase and count as one character") {
  const PrepConfig c;
  CHECK(preprocess("\xC3\x84MMIN \xC3\x96KOLOGIE", c) == Tokens{"\xC3\xA4mmin", "\xC3\xB6kologie"});
  CHECK(preprocess("\xCE\xA3\xCE\x9F", c) == Tokens{"\xCF\x83\xCE\xBF"});
  PrepConfig min3;
  min3.min_token_len = 3;
  // two code points, four bytes: too short
  CHECK(preprocess("\xC3\xA4\xC3\xB6", min3).empty());
}

TEST_CASE("configuration switches") {
  PrepConfig c;
  c.lowercase = false;
  c.stopwords.clear();
  CHECK(preprocess("Solar for ALL", c) == Tokens{"Solar", "for", "ALL"});
  c.strip_punctuation = false;
  CHECK(preprocess("low-carbon, energy", c) == Tokens{"low-carbon,", "energy"});
  c.min_token_len = 0;
  CHECK_THROWS_AS(c.validate(), InputError);
}

TEST_CASE("preprocess is idempotent through join") {
  const PrepConfig c;
  sdgkit::Rng rng(4);
  const std::vector<std::string> pieces = {"Solar", "ENERGY", "the", "a", ",", "!", "\xC3\x84pfel", "co-op", "x", "and",
                                           "\xC5\xB8", "\xCE\xA9mega", "  ", "data.", "(SDG)"};
  for (int trial = 0; trial < 300; ++trial) {
    std::string text;
    const auto n = rng.below(12);
    for (std::size_t i = 0; i < n; ++i) text += pieces[rng.below(pieces.size())] + (rng.below(2) ? " " : "");
    const auto once = preprocess(text, c);
    CHECK(preprocess(join_tokens(once), c) == once);
  }
}

TEST_CASE("vocabulary document frequencies") {
  const PrepConfig c;
  const Corpus two({{"1", "xx yy", {}, Source::other}, {"2", "yy zz", {}, Source::other}});
  const auto v = build_vocabulary(two, c);
  CHECK(v.size() == 3);
  CHECK(v.df("yy") == 2);
  CHECK(v.df("xx") == 1);
  CHECK(v.df("zz") == 1);
  CHECK(v.terms() == Tokens{"xx", "yy", "zz"});
  const Corpus one({{"1", "yy yy yy", {}, Source::other}});
  const auto w = build_vocabulary(one, c);
  CHECK(w.df("yy") == 1);
  CHECK(w.cf(0) == 3);
}

TEST_CASE("vocabulary matches brute-force recount") {
  const PrepConfig c;
  sdgkit::Rng rng(8);
  std::vector<LabeledDocument> docs;
  for (int i = 0; i < 50; ++i) docs.push_back({"d" + std::to_string(i), fixtures::synthetic_text(rng, 1 + rng.below(30), 60), {}, Source::other});
  const Corpus corpus(docs);
  const auto v = build_vocabulary(corpus, c);
  std::map<std::string, std::uint64_t> df, cf;
  std::uint64_t total = 0;
  for (const auto& d : corpus) {
    const auto toks = preprocess(d.text, c);
    total += toks.size();
    for (const auto& t : toks) ++cf[t];
    for (const auto& t : std::set<std::string>(toks.begin(), toks.end())) ++df[t];
  }
  REQUIRE(v.size() == df.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    CHECK(v.df(i) == df.at(v.term(i)));
    CHECK(v.cf(i) == cf.at(v.term(i)));
    CHECK(v.df(i) >= 1);
    CHECK(v.df(i) <= v.num_docs());
    CHECK(v.find(v.term(i)) == i);
  }
  CHECK(v.total_tokens() == total);
}

TEST_CASE("empty vocabulary is an error") {
  const PrepConfig c;
  CHECK_THROWS_AS(build_vocabulary(Corpus{}, c), InputError);
  CHECK_THROWS_AS(build_vocabulary(Corpus({{"1", "the a of", {}, Source::other}}), c), InputError);
}

TEST_CASE("bundled stopword file matches the default list") {
  const auto path = std::string(SDGKIT_DATA_DIR) + "/stopwords_en.txt";
  REQUIRE(std::filesystem::exists(path));
  const auto loaded = load_stopwords(path);
  CHECK(loaded == default_stopwords());
  CHECK(loaded.contains("the"));
  CHECK(loaded.size() > 150);
}

TEST_CASE("utf8 helpers") {
  CHECK(utf8::is_valid("plain"));
  CHECK(utf8::is_valid("\xC3\xA4"));
  CHECK_FALSE(utf8::is_valid("\xC3"));
  CHECK_FALSE(utf8::is_valid("\xFF"));
  CHECK(utf8::to_lower(U'A') == U'a');
  CHECK(utf8::to_lower(0x178) == 0xFF);
  CHECK(utf8::to_lower(utf8::to_lower(0x178)) == 0xFF);
}

TEST_CASE("prep config json round-trip") {
  PrepConfig c;
  c.min_token_len = 3;
  c.stopwords = {"foo"};
  const auto d = PrepConfig::from_json(c.to_json());
  CHECK(d.min_token_len == 3);
  CHECK(d.stopwords == c.stopwords);
}
