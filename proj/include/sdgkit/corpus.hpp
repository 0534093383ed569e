#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "csv.hpp"
#include "document.hpp"
#include "error.hpp"
#include "rng.hpp"
#include "textprep.hpp"

namespace sdgkit {

enum class CorpusFormat { jsonl, csv };

inline CorpusFormat parse_corpus_format(std::string_view s) {
  if (s == "jsonl") return CorpusFormat::jsonl;
  if (s == "csv") return CorpusFormat::csv;
  throw InputError("unknown corpus format: '" + std::string(s) + "'");
}

namespace detail {

inline SdgLabelSet labels_from_json(const nlohmann::json& arr, const std::string& id, std::size_t line) {
  if (!arr.is_array()) throw ParseError("'labels' must be an array (id " + id + ")", line);
  SdgLabelSet out;
  for (const auto& v : arr) {
    if (!v.is_number_integer()) throw ParseError("non-integer label (id " + id + ")", line);
    const auto n = v.get<long long>();
    if (!is_valid_sdg(n)) throw ParseError("label " + std::to_string(n) + " outside 1..17 (id " + id + ")", line);
    out.insert(n);
  }
  return out;
}

inline std::string required_string(const nlohmann::json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) throw ParseError(std::string("missing string field '") + key + "'", line);
  return it->get<std::string>();
}

}  // namespace detail

/// Parses a corpus from JSONL text. Blank lines are skipped.
inline Corpus parse_corpus_jsonl(std::istream& in) {
  std::vector<LabeledDocument> docs;
  std::map<std::string, std::size_t> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("malformed JSON record: ") + e.what(), lineno);
    }
    if (!j.is_object()) throw ParseError("record is not a JSON object", lineno);
    LabeledDocument d;
    d.id = detail::required_string(j, "id", lineno);
    d.text = detail::required_string(j, "text", lineno);
    if (d.id.empty()) throw ParseError("empty id", lineno);
    if (auto it = j.find("labels"); it != j.end() && !it->is_null()) d.labels = detail::labels_from_json(*it, d.id, lineno);
    if (auto it = j.find("source"); it != j.end() && !it->is_null()) {
      if (!it->is_string()) throw ParseError("'source' must be a string", lineno);
      try {
        d.source = parse_source(it->get<std::string>());
      } catch (const InputError& e) {
        throw ParseError(e.what(), lineno);
      }
    }
    if (auto [pos, fresh] = seen.emplace(d.id, lineno); !fresh)
      throw ParseError("duplicate id '" + d.id + "' (first seen on line " + std::to_string(pos->second) + ")", lineno);
    docs.push_back(std::move(d));
  }
  return Corpus(std::move(docs));
}

/// Parses a CSV corpus with header id,text[,labels][,source]; labels are
/// semicolon-joined integers.
inline Corpus parse_corpus_csv(std::istream& in) {
  csv::Reader reader(in);
  auto header = reader.next();
  if (!header) return Corpus();
  if (!header->empty() && header->front().starts_with("\xEF\xBB\xBF")) header->front().erase(0, 3);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header->size(); ++i) col[(*header)[i]] = i;
  if (!col.contains("id") || !col.contains("text")) throw ParseError("CSV header must contain id and text", 1);

  std::vector<LabeledDocument> docs;
  std::map<std::string, std::size_t> seen;
  while (auto row = reader.next()) {
    const std::size_t lineno = reader.record_line();
    if (row->size() == 1 && row->front().empty()) continue;
    if (row->size() != header->size())
      throw ParseError("expected " + std::to_string(header->size()) + " fields, got " + std::to_string(row->size()), lineno);
    LabeledDocument d;
    d.id = (*row)[col["id"]];
    d.text = (*row)[col["text"]];
    if (d.id.empty()) throw ParseError("empty id", lineno);
    if (!utf8::is_valid(d.text)) throw ParseError("text is not valid UTF-8 (id " + d.id + ")", lineno);
    try {
      if (auto it = col.find("labels"); it != col.end()) d.labels = SdgLabelSet::parse((*row)[it->second]);
      if (auto it = col.find("source"); it != col.end()) d.source = parse_source((*row)[it->second]);
    } catch (const InputError& e) {
      throw ParseError(std::string(e.what()) + " (id " + d.id + ")", lineno);
    }
    if (auto [pos, fresh] = seen.emplace(d.id, lineno); !fresh)
      throw ParseError("duplicate id '" + d.id + "' (first seen on line " + std::to_string(pos->second) + ")", lineno);
    docs.push_back(std::move(d));
  }
  return Corpus(std::move(docs));
}

inline Corpus load_corpus(const std::string& path, CorpusFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open corpus file: " + path);
  try {
    Corpus c = format == CorpusFormat::jsonl ? parse_corpus_jsonl(in) : parse_corpus_csv(in);
    c.set_metadata("source_path", path);
    return c;
  } catch (const ParseError& e) {
    throw InputError(path + ": " + e.what());
  }
}

/// Picks the format from the file extension (.csv, otherwise JSONL).
inline Corpus load_corpus(const std::string& path) {
  const bool is_csv = path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
  return load_corpus(path, is_csv ? CorpusFormat::csv : CorpusFormat::jsonl);
}

/// Canonical JSONL line: keys in the order id, text, labels, source.
inline std::string to_jsonl_line(const LabeledDocument& d) {
  nlohmann::ordered_json j;
  j["id"] = d.id;
  j["text"] = d.text;
  j["labels"] = d.labels.members();
  j["source"] = std::string(to_string(d.source));
  return j.dump();
}

inline void write_corpus_jsonl(std::ostream& out, const Corpus& corpus) {
  for (const auto& d : corpus) out << to_jsonl_line(d) << '\n';
}

inline void save_corpus(const std::string& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write corpus file: " + path);
  write_corpus_jsonl(out, corpus);
}

inline void save_corpus_csv(const std::string& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write corpus file: " + path);
  csv::write_row(out, {"id", "text", "labels", "source"});
  for (const auto& d : corpus) csv::write_row(out, {d.id, d.text, d.labels.to_string(), std::string(to_string(d.source))});
}

// ---------------------------------------------------------------------------
// Eligibility

struct EligibilitySplit {
  Corpus eligible;
  Corpus rejected;
};

/// A document is eligible iff it has at least min_tokens tokens after
/// preprocessing. Order is preserved in both partitions.
inline EligibilitySplit eligibility_filter(const Corpus& corpus, std::size_t min_tokens,
                                           const PrepConfig& config = {}) {
  if (min_tokens < 1) throw InputError("min_tokens must be >= 1");
  std::vector<std::size_t> keep, drop;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    (preprocess(corpus[i].text, config).size() >= min_tokens ? keep : drop).push_back(i);
  return {corpus.select(keep), corpus.select(drop)};
}

// ---------------------------------------------------------------------------
// Train/test split

struct SplitSpec {
  double train_fraction = 0.70;
  std::uint64_t seed = 42;
  bool stratified = true;

  void validate() const {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw InputError("train_fraction must be in (0,1)");
  }
};

struct TrainTestSplit {
  Corpus train;
  Corpus test;
};

/// Stratum of a document for stratified splitting: its smallest label, or 0
/// for unlabeled documents.
inline int split_stratum(const LabeledDocument& d) { return d.labels.first(); }

/// Seeded split. The train size is round(fraction * N); in stratified mode
/// the per-stratum quotas are apportioned by largest remainder so that each
/// stratum is within one document of its proportional share. Both outputs
/// keep the input order.
inline TrainTestSplit split_train_test(const Corpus& corpus, const SplitSpec& spec) {
  spec.validate();
  if (corpus.empty()) throw InputError("cannot split an empty corpus");
  const std::size_t n = corpus.size();
  const auto target = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(n)));
  Rng rng(spec.seed);
  std::vector<char> in_train(n, 0);

  if (!spec.stratified) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    for (std::size_t i = 0; i < target; ++i) in_train[order[i]] = 1;
  } else {
    std::map<int, std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < n; ++i) strata[split_stratum(corpus[i])].push_back(i);
    struct Quota {
      int key;
      std::size_t take;
      double remainder;
    };
    std::vector<Quota> quotas;
    std::size_t assigned = 0;
    for (auto& [key, members] : strata) {
      if (members.size() < 2)
        throw InputError("stratification impossible: class " + std::to_string(key) + " has a single member");
      const double exact = spec.train_fraction * static_cast<double>(members.size());
      const auto take = static_cast<std::size_t>(std::floor(exact + 1e-9));
      quotas.push_back({key, take, exact - static_cast<double>(take)});
      assigned += take;
    }
    std::vector<std::size_t> by_remainder(quotas.size());
    for (std::size_t i = 0; i < quotas.size(); ++i) by_remainder[i] = i;
    std::stable_sort(by_remainder.begin(), by_remainder.end(),
                     [&](std::size_t a, std::size_t b) { return quotas[a].remainder > quotas[b].remainder + 1e-12; });
    for (std::size_t i = 0; assigned < target && i < by_remainder.size(); ++i, ++assigned) ++quotas[by_remainder[i]].take;
    for (const auto& q : quotas) {
      auto members = strata[q.key];
      rng.shuffle(members);
      for (std::size_t i = 0; i < q.take && i < members.size(); ++i) in_train[members[i]] = 1;
    }
  }

  std::vector<std::size_t> train, test;
  for (std::size_t i = 0; i < n; ++i) (in_train[i] ? train : test).push_back(i);
  return {corpus.select(train), corpus.select(test)};
}

}  // namespace sdgkit
