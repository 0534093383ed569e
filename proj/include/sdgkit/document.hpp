#pragma once

#include <map>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "error.hpp"
#include "labels.hpp"

namespace sdgkit {

enum class Source { prescribed, generated, abstract_text, other };

inline std::string_view to_string(Source s) {
  switch (s) {
    case Source::prescribed: return "prescribed";
    case Source::generated: return "generated";
    case Source::abstract_text: return "abstract";
    case Source::other: return "other";
  }
  return "other";
}

inline Source parse_source(std::string_view s) {
  if (s == "prescribed") return Source::prescribed;
  if (s == "generated") return Source::generated;
  if (s == "abstract") return Source::abstract_text;
  if (s == "other" || s.empty()) return Source::other;
  throw InputError("unknown source tag: '" + std::string(s) + "'");
}

struct LabeledDocument {
  std::string id;
  std::string text;
  SdgLabelSet labels;
  Source source = Source::other;

  friend bool operator==(const LabeledDocument&, const LabeledDocument&) = default;
};

/// Ordered document collection with unique ids.
class Corpus {
 public:
  Corpus() = default;

  explicit Corpus(std::vector<LabeledDocument> documents, std::map<std::string, std::string> metadata = {})
      : documents_(std::move(documents)), metadata_(std::move(metadata)) {
    std::unordered_set<std::string_view> seen;
    for (const auto& d : documents_) {
      if (d.id.empty()) throw InputError("document id must be nonempty");
      if (!seen.insert(d.id).second) throw InputError("duplicate document id: " + d.id);
    }
  }

  const std::vector<LabeledDocument>& documents() const noexcept { return documents_; }
  const LabeledDocument& operator[](std::size_t i) const { return documents_.at(i); }
  std::size_t size() const noexcept { return documents_.size(); }
  bool empty() const noexcept { return documents_.empty(); }
  auto begin() const noexcept { return documents_.begin(); }
  auto end() const noexcept { return documents_.end(); }

  const std::map<std::string, std::string>& metadata() const noexcept { return metadata_; }
  void set_metadata(const std::string& key, std::string value) { metadata_[key] = std::move(value); }

  /// Subset by positions, preserving the given order.
  Corpus select(const std::vector<std::size_t>& positions) const {
    std::vector<LabeledDocument> docs;
    docs.reserve(positions.size());
    for (auto p : positions) docs.push_back(documents_.at(p));
    return Corpus(std::move(docs), metadata_);
  }

  friend bool operator==(const Corpus& a, const Corpus& b) { return a.documents_ == b.documents_; }

 private:
  std::vector<LabeledDocument> documents_;
  std::map<std::string, std::string> metadata_;
};

}  // namespace sdgkit
