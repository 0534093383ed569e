#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "document.hpp"
#include "error.hpp"

namespace sdgkit {

namespace utf8 {

/// Decodes one code point starting at s[i] and advances i. Invalid bytes
/// decode as U+FFFD and consume a single byte.
inline char32_t next(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) -> int {
    if (i + k >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[i + k]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  if ((b0 & 0xE0) == 0xC0) {
    int c1 = cont(1);
    if (c1 >= 0 && b0 >= 0xC2) {
      i += 2;
      return static_cast<char32_t>(((b0 & 0x1F) << 6) | c1);
    }
  } else if ((b0 & 0xF0) == 0xE0) {
    int c1 = cont(1), c2 = cont(2);
    if (c1 >= 0 && c2 >= 0) {
      char32_t cp = static_cast<char32_t>(((b0 & 0x0F) << 12) | (c1 << 6) | c2);
      if (cp >= 0x800 && (cp < 0xD800 || cp > 0xDFFF)) {
        i += 3;
        return cp;
      }
    }
  } else if ((b0 & 0xF8) == 0xF0) {
    int c1 = cont(1), c2 = cont(2), c3 = cont(3);
    if (c1 >= 0 && c2 >= 0 && c3 >= 0) {
      char32_t cp = static_cast<char32_t>(((b0 & 0x07) << 18) | (c1 << 12) | (c2 << 6) | c3);
      if (cp >= 0x10000 && cp <= 0x10FFFF) {
        i += 4;
        return cp;
      }
    }
  }
  ++i;
  return 0xFFFD;
}

inline void append(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

inline bool is_valid(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const std::size_t before = i;
    const char32_t cp = next(s, i);
    if (cp == 0xFFFD && !(i - before == 3 && s.substr(before, 3) == "\xEF\xBF\xBD")) return false;
  }
  return true;
}

inline bool is_space(char32_t cp) {
  return cp == ' ' || (cp >= 0x09 && cp <= 0x0D) || cp == 0x85 || cp == 0xA0 || cp == 0x1680 ||
         (cp >= 0x2000 && cp <= 0x200B) || cp == 0x2028 || cp == 0x2029 || cp == 0x202F || cp == 0x205F ||
         cp == 0x3000 || cp == 0xFEFF;
}

/// Punctuation and symbols: ASCII punctuation plus the common Unicode
/// punctuation/symbol blocks.
inline bool is_punct(char32_t cp) {
  if (cp < 0x80) return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) || (cp >= 0x5B && cp <= 0x60) ||
                        (cp >= 0x7B && cp <= 0x7E);
  if (cp >= 0xA1 && cp <= 0xBF) return cp != 0xAA && cp != 0xB5 && cp != 0xBA && cp != 0xB2 && cp != 0xB3 && cp != 0xB9 &&
                                       cp != 0xBC && cp != 0xBD && cp != 0xBE;
  if (cp == 0xD7 || cp == 0xF7) return true;
  if (cp >= 0x2010 && cp <= 0x2027) return true;
  if (cp >= 0x2030 && cp <= 0x205E) return true;
  if (cp >= 0x20A0 && cp <= 0x20CF) return true;  // currency
  if (cp >= 0x2190 && cp <= 0x2BFF) return true;  // arrows, math operators, shapes
  if (cp >= 0x2E00 && cp <= 0x2E7F) return true;
  if (cp >= 0x3001 && cp <= 0x3003) return true;
  if (cp >= 0x3008 && cp <= 0x3011) return true;
  if (cp >= 0xFE10 && cp <= 0xFE19) return true;
  if (cp >= 0xFE30 && cp <= 0xFE4F) return true;
  if (cp >= 0xFF01 && cp <= 0xFF0F) return true;
  if (cp >= 0xFF1A && cp <= 0xFF20) return true;
  return cp == 0xFFFD;
}

/// Simple case folding for ASCII, Latin-1, Latin Extended-A, Greek and Cyrillic.
inline char32_t to_lower(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  if (cp < 0xC0) return cp;
  if (cp <= 0xDE && cp != 0xD7) return cp + 32;
  if (cp >= 0x100 && cp <= 0x17F) {
    if (cp == 0x178) return 0xFF;
    if (cp == 0x130 || cp == 0x131 || cp == 0x138 || cp == 0x149 || cp == 0x17F) return cp;
    const bool odd_upper = (cp >= 0x139 && cp <= 0x148) || (cp >= 0x179 && cp <= 0x17E);
    if (odd_upper) return (cp % 2 == 1) ? cp + 1 : cp;
    return (cp % 2 == 0) ? cp + 1 : cp;
  }
  if (cp >= 0x391 && cp <= 0x3AB && cp != 0x3A2) return cp + 32;
  if (cp >= 0x410 && cp <= 0x42F) return cp + 32;
  if (cp >= 0x400 && cp <= 0x40F) return cp + 80;
  return cp;
}

}  // namespace utf8

/// The bundled English stopword list (the common NLTK English set).
inline const std::set<std::string, std::less<>>& default_stopwords() {
  static const std::set<std::string, std::less<>> words = {
      "a", "about", "above", "after", "again", "against", "ain", "all", "am", "an", "and", "any", "are", "aren",
      "as", "at", "be", "because", "been", "before", "being", "below", "between", "both", "but", "by", "can",
      "couldn", "d", "did", "didn", "do", "does", "doesn", "doing", "don", "down", "during", "each", "few", "for",
      "from", "further", "had", "hadn", "has", "hasn", "have", "haven", "having", "he", "her", "here", "hers",
      "herself", "him", "himself", "his", "how", "i", "if", "in", "into", "is", "isn", "it", "its", "itself",
      "just", "ll", "m", "ma", "me", "mightn", "more", "most", "mustn", "my", "myself", "needn", "no", "nor",
      "not", "now", "o", "of", "off", "on", "once", "only", "or", "other", "our", "ours", "ourselves", "out",
      "over", "own", "re", "s", "same", "shan", "she", "should", "shouldn", "so", "some", "such", "t", "than",
      "that", "the", "their", "theirs", "them", "themselves", "then", "there", "these", "they", "this", "those",
      "through", "to", "too", "under", "until", "up", "ve", "very", "was", "wasn", "we", "were", "weren", "what",
      "when", "where", "which", "while", "who", "whom", "why", "will", "with", "won", "wouldn", "y", "you",
      "your", "yours", "yourself", "yourselves"};
  return words;
}

/// Loads a stopword list: one term per line, blank lines and '#' comments ignored.
inline std::set<std::string, std::less<>> load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open stopword file: " + path);
  std::set<std::string, std::less<>> out;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
    std::size_t b = line.find_first_not_of(" \t");
    if (b == std::string::npos || line[b] == '#') continue;
    out.insert(line.substr(b));
  }
  return out;
}

struct PrepConfig {
  bool lowercase = true;
  bool strip_punctuation = true;
  std::set<std::string, std::less<>> stopwords = default_stopwords();
  /// Minimum token length in code points.
  std::size_t min_token_len = 2;

  void validate() const {
    if (min_token_len < 1) throw InputError("min_token_len must be >= 1");
  }

  /// Metadata form recorded into model files. The stopword list is stored
  /// verbatim so a reloaded model tokenizes identically.
  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["lowercase"] = lowercase;
    j["strip_punctuation"] = strip_punctuation;
    j["min_token_len"] = min_token_len;
    j["stopwords"] = std::vector<std::string>(stopwords.begin(), stopwords.end());
    return j;
  }

  static PrepConfig from_json(const nlohmann::ordered_json& j) {
    PrepConfig c;
    c.lowercase = j.at("lowercase").get<bool>();
    c.strip_punctuation = j.at("strip_punctuation").get<bool>();
    c.min_token_len = j.at("min_token_len").get<std::size_t>();
    c.stopwords.clear();
    for (const auto& w : j.at("stopwords")) c.stopwords.insert(w.get<std::string>());
    c.validate();
    return c;
  }
};

/// Normalizes and tokenizes text: splits on whitespace (and punctuation when
/// configured), lowercases, drops short tokens and stopwords.
inline std::vector<std::string> preprocess(std::string_view text, const PrepConfig& config) {
  config.validate();
  std::vector<std::string> tokens;
  std::string current;
  std::size_t current_len = 0;
  auto flush = [&] {
    if (current_len >= config.min_token_len && !config.stopwords.contains(current)) tokens.push_back(current);
    current.clear();
    current_len = 0;
  };
  std::size_t i = 0;
  while (i < text.size()) {
    char32_t cp = utf8::next(text, i);
    if (utf8::is_space(cp) || (config.strip_punctuation && utf8::is_punct(cp))) {
      flush();
      continue;
    }
    if (config.lowercase) cp = utf8::to_lower(cp);
    utf8::append(current, cp);
    ++current_len;
  }
  flush();
  return tokens;
}

inline std::string join_tokens(std::span<const std::string> tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

/// Term -> contiguous index, with document and collection frequencies.
/// Terms are indexed in lexicographic order.
class Vocabulary {
 public:
  Vocabulary() = default;

  /// Builds from already-tokenized documents. Throws if every document is empty.
  static Vocabulary from_token_docs(std::span<const std::vector<std::string>> docs) {
    std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> counts;  // term -> (df, cf)
    for (const auto& doc : docs) {
      std::set<std::string_view> seen;
      for (const auto& t : doc) {
        auto& c = counts[t];
        ++c.second;
        if (seen.insert(t).second) ++c.first;
      }
    }
    if (counts.empty()) throw InputError("vocabulary is empty: every document preprocesses to no tokens");
    Vocabulary v;
    v.num_docs_ = docs.size();
    for (auto& [term, c] : counts) v.add(term, c.first, c.second);
    return v;
  }

  /// Rebuilds from stored arrays (model loading).
  static Vocabulary from_parts(std::vector<std::string> terms, std::vector<std::uint64_t> df,
                               std::vector<std::uint64_t> cf, std::uint64_t num_docs) {
    if (terms.size() != df.size() || terms.size() != cf.size()) throw InputError("vocabulary arrays differ in length");
    Vocabulary v;
    v.num_docs_ = num_docs;
    for (std::size_t i = 0; i < terms.size(); ++i) {
      if (v.index_.contains(terms[i])) throw InputError("duplicate vocabulary term: " + terms[i]);
      if (df[i] > num_docs) throw InputError("df exceeds document count for term: " + terms[i]);
      v.add(terms[i], df[i], cf[i]);
    }
    return v;
  }

  std::size_t size() const noexcept { return terms_.size(); }
  std::uint64_t num_docs() const noexcept { return num_docs_; }

  std::optional<std::size_t> find(std::string_view term) const {
    auto it = index_.find(std::string(term));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& term(std::size_t idx) const { return terms_.at(idx); }
  const std::vector<std::string>& terms() const noexcept { return terms_; }
  std::uint64_t df(std::size_t idx) const { return df_.at(idx); }
  std::uint64_t cf(std::size_t idx) const { return cf_.at(idx); }
  const std::vector<std::uint64_t>& df_values() const noexcept { return df_; }
  const std::vector<std::uint64_t>& cf_values() const noexcept { return cf_; }

  std::uint64_t df(std::string_view term) const {
    auto idx = find(term);
    return idx ? df_[*idx] : 0;
  }

  std::uint64_t total_tokens() const {
    std::uint64_t n = 0;
    for (auto c : cf_) n += c;
    return n;
  }

 private:
  void add(const std::string& term, std::uint64_t df, std::uint64_t cf) {
    index_.emplace(term, terms_.size());
    terms_.push_back(term);
    df_.push_back(df);
    cf_.push_back(cf);
  }

  std::vector<std::string> terms_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::uint64_t> df_;
  std::vector<std::uint64_t> cf_;
  std::uint64_t num_docs_ = 0;
};

}  // namespace sdgkit

namespace sdgkit {

inline std::vector<std::vector<std::string>> tokenize_corpus(const Corpus& corpus, const PrepConfig& config) {
  std::vector<std::vector<std::string>> docs;
  docs.reserve(corpus.size());
  for (const auto& d : corpus.documents()) docs.push_back(preprocess(d.text, config));
  return docs;
}

/// Distinct tokens across the corpus with document frequencies.
inline Vocabulary build_vocabulary(const Corpus& corpus, const PrepConfig& config) {
  if (corpus.empty()) throw InputError("cannot build a vocabulary from an empty corpus");
  const auto docs = tokenize_corpus(corpus, config);
  return Vocabulary::from_token_docs(docs);
}

}  // namespace sdgkit
