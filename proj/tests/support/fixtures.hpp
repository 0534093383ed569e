#pragma once

// Fixture builders and brute-force oracles shared by unit and acceptance tests.

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sdgkit/analyze.hpp"
#include "sdgkit/corpus.hpp"
#include "sdgkit/labels.hpp"
#include "sdgkit/rng.hpp"

namespace fixtures {

using sdgkit::Corpus;
using sdgkit::DetectionRecord;
using sdgkit::LabeledDocument;
using sdgkit::Rng;
using sdgkit::SdgLabelSet;

inline std::string pad_id(const std::string& prefix, std::size_t i, int width = 4) {
  std::string n = std::to_string(i);
  while (static_cast<int>(n.size()) < width) n.insert(n.begin(), '0');
  return prefix + n;
}

// ---------------------------------------------------------------------------
// Few-shot table

/// One row of the reference few-shot table. Percent cells are kept as
/// printed strings so comparisons honour the printed precision.
struct Table6Row {
  int label;
  int n;
  int expected_count;
  int total_identification;
  const char* total_identification_pct;
  int as_expected;
  const char* as_expected_pct;
  bool bracketed;
  int correct;
  const char* correct_pct;
};

inline const std::vector<Table6Row>& table6_rows() {
  static const std::vector<Table6Row> rows = {
      {1, 12, 0, 6, "50.00", 4, "33.33", true, 4, "33.33"},
      {2, 15, 15, 60, "400.00", 15, "100.00", false, 15, "100.00"},
      {3, 11, 0, 14, "127.27", 6, "54.55", true, 5, "45.45"},
      {4, 16, 0, 5, "31.25", 11, "68.75", true, 3, "18.75"},
      {5, 11, 0, 6, "54.55", 6, "54.55", true, 4, "36.36"},
      {6, 15, 0, 14, "93.33", 3, "20.00", true, 9, "60.00"},
      {7, 10, 10, 32, "320.00", 10, "100.00", false, 10, "100.00"},
      {8, 12, 0, 6, "50.00", 3, "25.00", true, 3, "25.00"},
      {9, 9, 0, 1, "11.11", 5, "55.56", true, 0, "0.00"},
      {10, 18, 0, 5, "27.78", 12, "66.67", true, 0, "0.00"},
      {11, 7, 0, 5, "71.43", 0, "0.00", true, 0, "0.00"},
      {12, 9, 0, 3, "33.33", 1, "11.1", true, 2, "22.22"},
      {13, 13, 0, 16, "123.08", 2, "15.38", true, 5, "38.46"},
      {14, 14, 0, 15, "107.14", 2, "14.29", true, 7, "50.00"},
      {15, 16, 0, 5, "31.25", 5, "31.25", true, 0, "0.00"},
      {16, 12, 0, 2, "16.67", 5, "41.67", true, 1, "8.33"},
  };
  return rows;
}

struct FewShotFixture {
  Corpus truth;
  std::map<std::string, SdgLabelSet> predictions;
  SdgLabelSet tags;
};

/// 200 single-label items whose predictions reproduce every count of the
/// reference few-shot table. Per label y: the first `correct` items predict a
/// set containing y; for untagged labels the next `as_expected` items predict
/// nothing; the rest predict a set without y. Remaining identification
/// budget per label is spread greedily over nonempty predictions that do
/// not contain that label and whose item is not labeled with it.
inline FewShotFixture table6_fixture() {
  FewShotFixture f;
  f.tags = SdgLabelSet{2, 7};
  std::vector<LabeledDocument> docs;
  std::vector<SdgLabelSet> preds;
  std::vector<int> wrong_items;  // nonempty predictions lacking the item's label
  std::array<int, 18> budget{};
  for (const auto& r : table6_rows()) {
    budget[static_cast<std::size_t>(r.label)] = r.total_identification - r.correct;
    const bool tagged = f.tags.contains(r.label);
    const int empties = tagged ? 0 : r.as_expected;
    for (int k = 0; k < r.n; ++k) {
      const std::size_t idx = docs.size();
      docs.push_back({pad_id("abs-", idx + 1, 3), "abstract text for item " + std::to_string(idx + 1),
                      SdgLabelSet{r.label}, sdgkit::Source::abstract_text});
      SdgLabelSet p;
      if (k < r.correct) {
        p.insert(r.label);
      } else if (k >= r.correct + empties) {
        wrong_items.push_back(static_cast<int>(idx));
      }
      preds.push_back(p);
    }
  }
  auto best_label = [&](const LabeledDocument& d, const SdgLabelSet& p) {
    int best = 0;
    for (int s = 1; s <= 17; ++s) {
      if (d.labels.contains(s) || p.contains(s) || budget[static_cast<std::size_t>(s)] <= 0) continue;
      if (best == 0 || budget[static_cast<std::size_t>(s)] > budget[static_cast<std::size_t>(best)]) best = s;
    }
    return best;
  };
  for (int idx : wrong_items) {
    const auto i = static_cast<std::size_t>(idx);
    const int s = best_label(docs[i], preds[i]);
    preds[i].insert(s);
    --budget[static_cast<std::size_t>(s)];
  }
  bool progress = true;
  while (progress) {
    progress = false;
    for (std::size_t i = 0; i < docs.size(); ++i) {
      if (preds[i].empty()) continue;
      const int s = best_label(docs[i], preds[i]);
      if (s == 0) continue;
      preds[i].insert(s);
      --budget[static_cast<std::size_t>(s)];
      progress = true;
    }
  }
  for (std::size_t i = 0; i < docs.size(); ++i) f.predictions[docs[i].id] = preds[i];
  f.truth = Corpus(std::move(docs));
  return f;
}

// ---------------------------------------------------------------------------
// Overlap fixtures

struct OverlapCounts {
  std::int64_t total;
  std::int64_t including_empty;
  std::int64_t detected_a;
  std::int64_t detected_b;
  std::int64_t intersection;
  std::int64_t labels_a;
  std::int64_t labels_b;
};

/// Records realizing the given overlap counts. Overlapping pairs share SDG 1;
/// disjoint nonempty pairs use SDG 2 vs SDG 3; single-sided detections use
/// SDG 4 or 5. Extra labels (6..17) top up the label totals.
inline std::vector<DetectionRecord> overlap_fixture(const OverlapCounts& c) {
  const std::int64_t both_empty = c.including_empty - c.intersection;
  // total = inter + disjoint + (a_only) + (b_only) + both_empty, with
  // a_only = det_a - inter - disjoint and b_only = det_b - inter - disjoint.
  const std::int64_t disjoint = c.intersection + (c.detected_a - c.intersection) + (c.detected_b - c.intersection) + both_empty - c.total;
  const std::int64_t a_only = c.detected_a - c.intersection - disjoint;
  const std::int64_t b_only = c.detected_b - c.intersection - disjoint;
  if (both_empty < 0 || disjoint < 0 || a_only < 0 || b_only < 0) throw sdgkit::Error("overlap fixture: inconsistent counts");
  std::vector<DetectionRecord> out;
  std::size_t next_id = 0;
  auto add = [&](std::int64_t n, SdgLabelSet a, SdgLabelSet b) {
    for (std::int64_t i = 0; i < n; ++i) out.push_back({pad_id("co-", ++next_id, 5), a, b});
  };
  add(c.intersection, {1}, {1});
  add(disjoint, {2}, {3});
  add(a_only, {4}, {});
  add(b_only, {}, {5});
  add(both_empty, {}, {});
  auto top_up = [&](bool side_a, std::int64_t target) {
    std::int64_t have = side_a ? c.detected_a : c.detected_b;
    for (int extra = 6; extra <= 17 && have < target; ++extra)
      for (auto& r : out) {
        auto& s = side_a ? r.side_a : r.side_b;
        if (have >= target) break;
        if (!s.empty() && !s.contains(extra)) {
          s.insert(extra);
          ++have;
        }
      }
  };
  top_up(true, c.labels_a);
  top_up(false, c.labels_b);
  return out;
}

// ---------------------------------------------------------------------------
// Random result sets and recount oracles

inline SdgLabelSet random_labels(Rng& rng, double p_empty = 0.3, int max_size = 4) {
  SdgLabelSet s;
  if (rng.uniform() < p_empty) return s;
  const int k = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_size)));
  for (int i = 0; i < k; ++i) s.insert(1 + static_cast<int>(rng.below(17)));
  return s;
}

inline std::vector<DetectionRecord> random_records(Rng& rng, std::size_t n) {
  std::vector<DetectionRecord> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({pad_id("r", i), random_labels(rng), random_labels(rng)});
  return out;
}

inline std::set<int> as_set(const SdgLabelSet& s) {
  const auto m = s.members();
  return {m.begin(), m.end()};
}

/// Half-up rounding to hundredths via quotient and remainder.
inline std::int64_t oracle_hundredths(std::int64_t count, std::int64_t total) {
  if (total == 0) return 0;
  const std::int64_t q = count * 10000 / total;
  const std::int64_t r = count * 10000 % total;
  return 2 * r >= total ? q + 1 : q;
}

struct OracleOverlap {
  std::int64_t total = 0, including_empty = 0, detected_a = 0, detected_b = 0, intersection = 0;
  std::int64_t labels_a = 0, labels_b = 0;
  double avg_a = 0, avg_b = 0;
};

inline OracleOverlap oracle_overlap(const std::vector<DetectionRecord>& records) {
  OracleOverlap o;
  for (const auto& r : records) {
    const auto a = as_set(r.side_a);
    const auto b = as_set(r.side_b);
    bool common = false;
    for (int x : a) common = common || b.count(x) > 0;
    ++o.total;
    if (common || (a.empty() && b.empty())) ++o.including_empty;
    if (common) ++o.intersection;
    if (!a.empty()) ++o.detected_a;
    if (!b.empty()) ++o.detected_b;
    o.labels_a += static_cast<std::int64_t>(a.size());
    o.labels_b += static_cast<std::int64_t>(b.size());
  }
  o.avg_a = o.detected_a ? static_cast<double>(o.labels_a) / static_cast<double>(o.detected_a) : 0.0;
  o.avg_b = o.detected_b ? static_cast<double>(o.labels_b) / static_cast<double>(o.detected_b) : 0.0;
  return o;
}

inline std::array<std::int64_t, 18> oracle_detection_counts(const std::vector<SdgLabelSet>& sets) {
  std::array<std::int64_t, 18> counts{};
  for (const auto& s : sets)
    for (int sdg = 1; sdg <= 17; ++sdg)
      if (as_set(s).count(sdg)) ++counts[static_cast<std::size_t>(sdg)];
  return counts;
}

struct OracleFewShotRow {
  std::int64_t n = 0, ident = 0, as_expected = 0, correct = 0;
};

inline std::array<OracleFewShotRow, 18> oracle_fewshot(const Corpus& truth, const std::map<std::string, SdgLabelSet>& preds,
                                                       const SdgLabelSet& tags) {
  std::array<OracleFewShotRow, 18> rows{};
  for (const auto& d : truth) {
    const int y = d.labels.members().front();
    const auto p = as_set(preds.at(d.id));
    rows[static_cast<std::size_t>(y)].n++;
    for (int s : p) rows[static_cast<std::size_t>(s)].ident++;
    if (p.count(y)) rows[static_cast<std::size_t>(y)].correct++;
    const bool ok = tags.contains(y) ? p.count(y) > 0 : p.empty();
    if (ok) rows[static_cast<std::size_t>(y)].as_expected++;
  }
  return rows;
}

/// Random single-label truth with random predictions.
inline FewShotFixture random_fewshot(Rng& rng, std::size_t n) {
  FewShotFixture f;
  f.tags = SdgLabelSet{2, 7};
  std::vector<LabeledDocument> docs;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = 1 + static_cast<int>(rng.below(17));
    docs.push_back({pad_id("t", i), "text", SdgLabelSet{y}, sdgkit::Source::abstract_text});
    f.predictions[docs.back().id] = random_labels(rng, 0.35, 3);
  }
  f.truth = Corpus(std::move(docs));
  return f;
}

// ---------------------------------------------------------------------------
// Synthetic corpora

/// Pronounceable pseudo-words that are never stopwords: "zab", "zac", ...
inline std::string synthetic_word(std::size_t i) {
  static const char* consonants = "bcdfgklmnprstv";
  static const char* vowels = "aeiou";
  std::string w = "z";
  do {
    w += consonants[i % 14];
    i /= 14;
    w += vowels[i % 5];
    i /= 5;
  } while (i > 0);
  return w;
}

inline std::string synthetic_text(Rng& rng, std::size_t tokens, std::size_t vocab = 400) {
  std::string t;
  for (std::size_t k = 0; k < tokens; ++k) {
    if (!t.empty()) t += ' ';
    t += synthetic_word(static_cast<std::size_t>(rng.below(vocab)));
  }
  return t;
}

/// n documents; `short_docs` of them (spread through the corpus) carry fewer
/// than `min_tokens` tokens, the rest at least `min_tokens`. Both boundary
/// lengths are represented.
inline Corpus eligibility_corpus(std::size_t n, std::size_t short_docs, std::size_t min_tokens, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<bool> is_short(n, false);
  for (std::size_t i = 0; i < short_docs; ++i) is_short[order[i]] = true;
  std::vector<LabeledDocument> docs;
  std::size_t shorts_seen = 0, longs_seen = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t len;
    if (is_short[i]) {
      len = shorts_seen++ == 0 ? min_tokens - 1 : 1 + static_cast<std::size_t>(rng.below(min_tokens - 1));
    } else {
      len = longs_seen++ == 0 ? min_tokens : min_tokens + static_cast<std::size_t>(rng.below(60));
    }
    docs.push_back({pad_id("desc-", i + 1, 4), synthetic_text(rng, len), {}, sdgkit::Source::prescribed});
  }
  return Corpus(std::move(docs));
}

/// Three-class corpus with planted class keywords over a shared background
/// vocabulary. Classes are SDG 3, 7 and 13.
inline Corpus planted_corpus(std::size_t n, std::uint64_t seed) {
  static const std::array<std::array<const char*, 5>, 3> keywords = {{
      {"health", "vaccine", "hospital", "disease", "patients"},
      {"solar", "renewable", "electricity", "wind", "battery"},
      {"climate", "emissions", "carbon", "warming", "adaptation"},
  }};
  static const std::array<int, 3> classes = {3, 7, 13};
  Rng rng(seed);
  std::vector<LabeledDocument> docs;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % 3;
    std::vector<std::string> words;
    const std::size_t background = 12 + static_cast<std::size_t>(rng.below(12));
    for (std::size_t k = 0; k < background; ++k) words.push_back(synthetic_word(static_cast<std::size_t>(rng.below(300))));
    const std::size_t planted = 2 + static_cast<std::size_t>(rng.below(3));
    for (std::size_t k = 0; k < planted; ++k) words.push_back(keywords[c][rng.below(5)]);
    rng.shuffle(words);
    std::string text;
    for (const auto& w : words) text += (text.empty() ? "" : " ") + w;
    docs.push_back({pad_id("doc-", i + 1, 4), text, SdgLabelSet{classes[c]}, sdgkit::Source::abstract_text});
  }
  return Corpus(std::move(docs));
}

// ---------------------------------------------------------------------------
// Response parser corpus

struct ParserCase {
  const char* response;
  SdgLabelSet expected;
  /// Whether the case routes through strip_however first.
  bool strip = false;
};

inline const std::vector<ParserCase>& parser_cases() {
  static const std::vector<ParserCase> cases = {
      {"This directly contributes to SDG 7 (Affordable and Clean Energy).", {7}},
      {"NA", {}},
      {"N/A", {}},
      {"na.", {}},
      {"SDGs 3, 4 and 9", {3, 4, 9}},
      {"SDG 3, 4 and 7", {3, 4, 7}},
      {"SDG7, SDG9", {7, 9}},
      {"SDG2, SDG7", {2, 7}},
      {"Goal 13: Climate Action", {13}},
      {"Goals 6 and 14 are directly relevant.", {6, 14}},
      {"sdg-12 (responsible consumption)", {12}},
      {"The company contributes to SDG #8 and SDG #9.", {8, 9}},
      {"SDG 18 is not a real goal, but SDG 17 is.", {17}},
      {"SDG 0, SDG 99", {}},
      {"Relevant targets: SDG 7.2 and SDG 13.1", {7, 13}},
      {"SDGs: 3 & 5", {3, 5}},
      {"SDG 11 / SDG 12", {11, 12}},
      {"SDGS 1,2,3", {1, 2, 3}},
      {"Contributes to SDG 3. However, SDG 13 is not addressed.", {3}, true},
      {"This text contributes to SDG 9 and SDG 11; however, it does not address SDG 5.", {9, 11}, true},
      {"HOWEVER nothing here relates to SDG 4.", {}, true},
      {"The showever festival supports SDG 4.", {4}, true},
      {"No SDG is directly relevant.", {}},
      {"The company's work aims to reduce carbon emissions by 2030.", {}},
      {"Our goal is to reach 100 clients in 5 years.", {}},
      {"SDG 6 (Clean Water) - SDG 14 (Life Below Water)", {6, 14}},
      {"Sustainable Development Goal 15: Life on Land", {15}},
      {"sdg16", {16}},
  };
  return cases;
}

}  // namespace fixtures
