#pragma once

#include <algorithm>
#include <fstream>
#include <iterator>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "corpus.hpp"
#include "csv.hpp"
#include "diagnostics.hpp"
#include "error.hpp"
#include "labels.hpp"
#include "textprep.hpp"
#include "vectorize.hpp"

namespace sdgkit {

/// One terminology entry and its lexically similar expansions, sorted by
/// similarity descending.
struct TermEntry {
  int sdg = 0;
  std::string term;
  std::vector<std::pair<std::string, double>> expansions;
};

/// Disjunction of conjunctions: a document matches when every token of at
/// least one clause occurs in it.
struct SdgQuery {
  int sdg = 0;
  std::vector<std::vector<std::string>> clauses;

  void validate() const {
    if (!is_valid_sdg(sdg)) throw InputError("query SDG out of range: " + std::to_string(sdg));
    if (clauses.empty()) throw InputError("query for SDG " + std::to_string(sdg) + " has no clauses");
    for (const auto& c : clauses)
      if (c.empty()) throw InputError("query for SDG " + std::to_string(sdg) + " has an empty conjunction");
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["sdg"] = sdg;
    j["clauses"] = clauses;
    return j;
  }

  static SdgQuery from_json(const nlohmann::ordered_json& j) {
    SdgQuery q;
    q.sdg = j.at("sdg").get<int>();
    q.clauses = j.at("clauses").get<std::vector<std::vector<std::string>>>();
    q.validate();
    return q;
  }
};

/// Reads a terminology CSV with header sdg,term.
inline std::vector<TermEntry> load_taxonomy(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open taxonomy file: " + path);
  csv::Reader reader(in);
  auto header = reader.next();
  if (!header || header->size() < 2 || (*header)[0] != "sdg" || (*header)[1] != "term")
    throw InputError(path + ": taxonomy header must be 'sdg,term'");
  std::vector<TermEntry> out;
  while (auto row = reader.next()) {
    if (row->size() == 1 && row->front().empty()) continue;
    if (row->size() < 2) throw InputError(path + ": line " + std::to_string(reader.record_line()) + ": expected sdg,term");
    TermEntry e;
    try {
      std::size_t used = 0;
      e.sdg = std::stoi((*row)[0], &used);
      if (used != (*row)[0].size() || !is_valid_sdg(e.sdg)) throw std::invalid_argument("range");
    } catch (const std::exception&) {
      throw InputError(path + ": line " + std::to_string(reader.record_line()) + ": invalid SDG '" + (*row)[0] + "'");
    }
    e.term = (*row)[1];
    if (e.term.empty()) throw InputError(path + ": line " + std::to_string(reader.record_line()) + ": empty term");
    out.push_back(std::move(e));
  }
  return out;
}

/// Adds up to k vocabulary words whose cosine similarity to the term vector
/// (mean of token vectors for multiword terms) is at least min_sim. The
/// term's own tokens are never proposed. Ties break lexicographically.
inline TermEntry expand_terms(const TermEntry& entry, const EmbeddingTable& embeddings, int k, double min_sim,
                              const PrepConfig& prep = {}) {
  if (k <= 0) throw InputError("expand_terms: k must be positive");
  const auto tokens = preprocess(entry.term, prep);
  std::vector<double> target(embeddings.dimension, 0.0);
  for (const auto& t : tokens) {
    auto v = embeddings.find(t);
    if (!v) {
      warn("term '" + entry.term + "' has token '" + t + "' outside the embedding vocabulary; not expanded");
      return entry;
    }
    for (std::size_t i = 0; i < target.size(); ++i) target[i] += (*v)[i];
  }
  if (tokens.empty()) {
    warn("term '" + entry.term + "' has no tokens after preprocessing; not expanded");
    return entry;
  }
  for (auto& x : target) x /= static_cast<double>(tokens.size());
  // For a single token keep the float vector so an identical row scores exactly 1.
  std::vector<float> target_f(target.begin(), target.end());

  std::vector<std::pair<std::string, double>> scored;
  const auto& vocab = embeddings.vocabulary;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    const auto& word = vocab.term(i);
    if (word == entry.term || std::find(tokens.begin(), tokens.end(), word) != tokens.end()) continue;
    const double sim = tokens.size() == 1 ? cosine_similarity(std::span<const float>(target_f), embeddings.vector(i))
                                          : cosine_similarity(std::span<const double>(target), embeddings.vector(i));
    if (sim >= min_sim) scored.emplace_back(word, sim);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (scored.size() > static_cast<std::size_t>(k)) scored.resize(static_cast<std::size_t>(k));
  TermEntry out = entry;
  out.expansions = std::move(scored);
  return out;
}

/// One query per SDG: each term contributes a clause of its tokens, each
/// expansion a single-token clause. Terms that preprocess to nothing are
/// dropped.
inline std::vector<SdgQuery> compile_queries(const std::vector<TermEntry>& entries, const PrepConfig& prep = {}) {
  std::map<int, std::vector<std::vector<std::string>>> by_sdg;
  auto add = [&](int sdg, std::vector<std::string> clause) {
    if (clause.empty()) return;
    std::sort(clause.begin(), clause.end());
    clause.erase(std::unique(clause.begin(), clause.end()), clause.end());
    auto& clauses = by_sdg[sdg];
    if (std::find(clauses.begin(), clauses.end(), clause) == clauses.end()) clauses.push_back(std::move(clause));
  };
  for (const auto& e : entries) {
    add(e.sdg, preprocess(e.term, prep));
    for (const auto& [word, sim] : e.expansions) add(e.sdg, preprocess(word, prep));
  }
  std::vector<SdgQuery> out;
  for (auto& [sdg, clauses] : by_sdg)
    if (!clauses.empty()) out.push_back({sdg, std::move(clauses)});
  return out;
}

/// Token -> sorted, deduplicated list of document positions.
class InvertedIndex {
 public:
  using Postings = std::vector<std::uint32_t>;

  InvertedIndex(const Corpus& corpus, const PrepConfig& prep) : size_(corpus.size()) {
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      for (const auto& tok : preprocess(corpus[i].text, prep)) {
        auto& list = postings_[tok];
        if (list.empty() || list.back() != i) list.push_back(static_cast<std::uint32_t>(i));
      }
    }
  }

  const Postings& postings(const std::string& token) const {
    static const Postings empty;
    auto it = postings_.find(token);
    return it == postings_.end() ? empty : it->second;
  }

  std::size_t num_docs() const noexcept { return size_; }
  std::size_t num_terms() const noexcept { return postings_.size(); }

  /// Positions of matching documents, ascending.
  Postings evaluate(const SdgQuery& query) const {
    Postings result;
    for (const auto& clause : query.clauses) {
      if (clause.empty()) continue;
      std::vector<const Postings*> lists;
      for (const auto& t : clause) lists.push_back(&postings(t));
      std::sort(lists.begin(), lists.end(), [](auto* a, auto* b) { return a->size() < b->size(); });
      Postings acc = *lists.front();
      for (std::size_t i = 1; i < lists.size() && !acc.empty(); ++i) {
        Postings next;
        std::set_intersection(acc.begin(), acc.end(), lists[i]->begin(), lists[i]->end(), std::back_inserter(next));
        acc = std::move(next);
      }
      Postings merged;
      std::set_union(result.begin(), result.end(), acc.begin(), acc.end(), std::back_inserter(merged));
      result = std::move(merged);
    }
    return result;
  }

 private:
  std::size_t size_ = 0;
  std::map<std::string, Postings, std::less<>> postings_;
};

/// Ids of the documents matching the query, in corpus order.
inline std::vector<std::string> search(const Corpus& corpus, const SdgQuery& query, const PrepConfig& prep = {}) {
  const InvertedIndex index(corpus, prep);
  std::vector<std::string> ids;
  for (auto pos : index.evaluate(query)) ids.push_back(corpus[pos].id);
  return ids;
}

/// Runs every query over one index and returns each document's SDG set.
inline std::vector<SdgLabelSet> search_all(const Corpus& corpus, const std::vector<SdgQuery>& queries,
                                           const PrepConfig& prep = {}) {
  const InvertedIndex index(corpus, prep);
  std::vector<SdgLabelSet> out(corpus.size());
  for (const auto& q : queries)
    for (auto pos : index.evaluate(q)) out[pos].insert(q.sdg);
  return out;
}

}  // namespace sdgkit
