#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "corpus.hpp"
#include "csv.hpp"
#include "diagnostics.hpp"
#include "error.hpp"
#include "labels.hpp"

namespace sdgkit {

/// A percentage held as an integer count of hundredths, rounded half-up from
/// the exact rational 100*count/total.
struct Percent {
  std::int64_t hundredths = 0;

  double value() const noexcept { return static_cast<double>(hundredths) / 100.0; }

  std::string str() const {
    const std::int64_t whole = hundredths / 100;
    const std::int64_t frac = hundredths % 100;
    return std::to_string(whole) + '.' + (frac < 10 ? "0" : "") + std::to_string(frac);
  }

  friend auto operator<=>(const Percent&, const Percent&) = default;
};

/// 100*count/total rounded half-up to two decimals, exactly. A zero total
/// yields 0.00.
inline Percent percent_of(std::int64_t count, std::int64_t total) {
  if (count < 0 || total < 0) throw InputError("percent_of: negative count");
  if (total == 0) return {};
  return {(20000 * count + total) / (2 * total)};
}

/// Unrounded 100*count/total.
inline double exact_percent(std::int64_t count, std::int64_t total) {
  return total == 0 ? 0.0 : 100.0 * static_cast<double>(count) / static_cast<double>(total);
}

inline double safe_mean(std::int64_t sum, std::int64_t n) {
  return n == 0 ? 0.0 : static_cast<double>(sum) / static_cast<double>(n);
}

/// Fixed-point rendering of a ratio with two decimals, half-up.
inline std::string format_ratio2(double x) {
  const auto h = static_cast<std::int64_t>(std::floor(x * 100.0 + 0.5));
  return Percent{h}.str();
}

struct DetectionRecord {
  std::string id;
  SdgLabelSet side_a;
  SdgLabelSet side_b;
};

/// True when a and b share an SDG, or when include_empty is set and both are empty.
inline bool nonrestrictive_overlap(const SdgLabelSet& a, const SdgLabelSet& b, bool include_empty) {
  if (a.intersects(b)) return true;
  return include_empty && a.empty() && b.empty();
}

struct CountPercent {
  std::int64_t count = 0;
  Percent percent;
  double exact = 0.0;
};

inline CountPercent count_percent(std::int64_t count, std::int64_t total) {
  return {count, percent_of(count, total), exact_percent(count, total)};
}

struct OverlapReport {
  std::int64_t total = 0;
  CountPercent intersection_including_empty;
  CountPercent detected_a;
  CountPercent detected_b;
  CountPercent intersection_detected;
  std::int64_t labels_a = 0;  // sum of |side_a|
  std::int64_t labels_b = 0;
  /// labels / items with at least one detection on that side.
  double avg_per_detected_a = 0.0;
  double avg_per_detected_b = 0.0;
  /// labels / all items.
  double avg_all_a = 0.0;
  double avg_all_b = 0.0;
};

inline void check_unique_ids(const std::vector<DetectionRecord>& records) {
  std::unordered_set<std::string> seen;
  for (const auto& r : records)
    if (!seen.insert(r.id).second) throw InputError("duplicate id in detection records: '" + r.id + "'");
}

inline OverlapReport overlap_report(const std::vector<DetectionRecord>& records) {
  if (records.empty()) throw InputError("overlap_report: no records");
  check_unique_ids(records);
  std::int64_t incl = 0, det_a = 0, det_b = 0, inter = 0;
  OverlapReport r;
  r.total = static_cast<std::int64_t>(records.size());
  for (const auto& rec : records) {
    incl += nonrestrictive_overlap(rec.side_a, rec.side_b, true);
    inter += nonrestrictive_overlap(rec.side_a, rec.side_b, false);
    det_a += !rec.side_a.empty();
    det_b += !rec.side_b.empty();
    r.labels_a += static_cast<std::int64_t>(rec.side_a.size());
    r.labels_b += static_cast<std::int64_t>(rec.side_b.size());
  }
  r.intersection_including_empty = count_percent(incl, r.total);
  r.detected_a = count_percent(det_a, r.total);
  r.detected_b = count_percent(det_b, r.total);
  r.intersection_detected = count_percent(inter, r.total);
  r.avg_per_detected_a = safe_mean(r.labels_a, det_a);
  r.avg_per_detected_b = safe_mean(r.labels_b, det_b);
  r.avg_all_a = safe_mean(r.labels_a, r.total);
  r.avg_all_b = safe_mean(r.labels_b, r.total);
  return r;
}

enum class Side { a, b };

struct DetectionRateTable {
  std::int64_t total = 0;
  std::array<std::int64_t, kMaxSdg + 1> counts{};  // index 0 unused
  std::array<Percent, kMaxSdg + 1> rates{};
  std::array<double, kMaxSdg + 1> exact{};

  std::int64_t count(int sdg) const { return counts.at(static_cast<std::size_t>(sdg)); }
  Percent rate(int sdg) const { return rates.at(static_cast<std::size_t>(sdg)); }

  /// SDGs ordered by count descending, ties by SDG ascending.
  std::vector<int> ranking() const {
    std::vector<int> order;
    for (int s = kMinSdg; s <= kMaxSdg; ++s) order.push_back(s);
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return count(x) > count(y); });
    return order;
  }

  /// The first n SDGs of the ranking with a nonzero count.
  std::vector<int> top(std::size_t n) const {
    std::vector<int> out;
    for (int s : ranking())
      if (out.size() < n && count(s) > 0) out.push_back(s);
    return out;
  }
};

inline DetectionRateTable detection_rates(const std::vector<SdgLabelSet>& detections) {
  if (detections.empty()) throw InputError("detection_rates: no records");
  DetectionRateTable t;
  t.total = static_cast<std::int64_t>(detections.size());
  for (const auto& d : detections)
    for (int s : d.members()) ++t.counts[static_cast<std::size_t>(s)];
  for (int s = kMinSdg; s <= kMaxSdg; ++s) {
    const auto i = static_cast<std::size_t>(s);
    t.rates[i] = percent_of(t.counts[i], t.total);
    t.exact[i] = exact_percent(t.counts[i], t.total);
  }
  return t;
}

inline DetectionRateTable detection_rates(const std::vector<DetectionRecord>& records, Side side) {
  std::vector<SdgLabelSet> d;
  d.reserve(records.size());
  for (const auto& r : records) d.push_back(side == Side::a ? r.side_a : r.side_b);
  return detection_rates(d);
}

// ---------------------------------------------------------------------------
// Few-shot identification

struct FewShotRow {
  int label = 0;
  std::int64_t n = 0;
  /// True when the label is among the prompted tags, so the expected output is the label itself.
  bool expected = false;
  /// n when expected, else 0.
  std::int64_t expected_count = 0;
  CountPercent total_identification;  // over all items, percent of n
  CountPercent as_expected;           // percent of n
  /// as_expected counts empty outputs (expected output is the empty set).
  bool bracketed = false;
  CountPercent correct;  // percent of n
};

struct FewShotReport {
  SdgLabelSet tags;
  std::vector<FewShotRow> rows;  // SDG 1..17 in order
  std::int64_t n_total = 0;
  std::int64_t total_identifications = 0;
  std::int64_t items_with_any = 0;
  CountPercent items_with_any_pct;  // percent of n_total
  CountPercent as_expected_total;   // percent of n_total
  CountPercent correct_total;       // percent of n_total
  double avg_per_identified = 0.0;  // total_identifications / items_with_any
  double avg_all = 0.0;             // total_identifications / n_total

  const FewShotRow& row(int sdg) const { return rows.at(static_cast<std::size_t>(sdg - kMinSdg)); }
};

/// Table of per-label identification counts for a few-shot tagging run.
/// Truth items must carry exactly one label; every truth id needs a
/// prediction (possibly empty).
inline FewShotReport fewshot_report(const Corpus& truth, const std::map<std::string, SdgLabelSet>& predictions,
                                    const SdgLabelSet& expected_tags) {
  if (truth.empty()) throw InputError("fewshot_report: empty truth corpus");
  FewShotReport r;
  r.tags = expected_tags;
  for (int s = kMinSdg; s <= kMaxSdg; ++s) {
    FewShotRow row;
    row.label = s;
    row.expected = expected_tags.contains(s);
    row.bracketed = !row.expected;
    r.rows.push_back(row);
  }
  std::array<std::int64_t, kMaxSdg + 1> ident{}, n{}, as_exp{}, correct{};
  std::int64_t matched = 0;
  for (const auto& doc : truth) {
    if (doc.labels.size() != 1)
      throw InputError("fewshot_report: item '" + doc.id + "' must carry exactly one label, has " +
                       std::to_string(doc.labels.size()));
    auto it = predictions.find(doc.id);
    if (it == predictions.end()) throw InputError("fewshot_report: no prediction for item '" + doc.id + "'");
    ++matched;
    const int y = doc.labels.first();
    const auto& p = it->second;
    const auto yi = static_cast<std::size_t>(y);
    ++n[yi];
    for (int s : p.members()) ++ident[static_cast<std::size_t>(s)];
    if (p.contains(y)) ++correct[yi];
    if (expected_tags.contains(y) ? p.contains(y) : p.empty()) ++as_exp[yi];
    r.total_identifications += static_cast<std::int64_t>(p.size());
    r.items_with_any += !p.empty();
  }
  if (static_cast<std::size_t>(matched) != predictions.size())
    warn("fewshot_report: " + std::to_string(predictions.size() - static_cast<std::size_t>(matched)) +
         " prediction(s) have no truth item and were ignored");
  r.n_total = static_cast<std::int64_t>(truth.size());
  std::int64_t as_exp_total = 0, correct_total = 0;
  for (auto& row : r.rows) {
    const auto i = static_cast<std::size_t>(row.label);
    row.n = n[i];
    row.expected_count = row.expected ? n[i] : 0;
    row.total_identification = count_percent(ident[i], n[i]);
    row.as_expected = count_percent(as_exp[i], n[i]);
    row.correct = count_percent(correct[i], n[i]);
    as_exp_total += as_exp[i];
    correct_total += correct[i];
  }
  r.items_with_any_pct = count_percent(r.items_with_any, r.n_total);
  r.as_expected_total = count_percent(as_exp_total, r.n_total);
  r.correct_total = count_percent(correct_total, r.n_total);
  r.avg_per_identified = safe_mean(r.total_identifications, r.items_with_any);
  r.avg_all = safe_mean(r.total_identifications, r.n_total);
  return r;
}

// ---------------------------------------------------------------------------
// Detection files

/// Ordered (id, labels) pairs.
using Detections = std::vector<std::pair<std::string, SdgLabelSet>>;

/// Reads detections from CSV (header with id and labels columns, labels
/// semicolon-joined) or JSONL (objects with "id" and "labels"; LLM records
/// carrying an "error" field are rejected).
inline Detections load_detections(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open detections file: " + path);
  Detections out;
  std::unordered_set<std::string> seen;
  auto add = [&](std::string id, SdgLabelSet labels, std::size_t line) {
    if (id.empty()) throw InputError(path + ": line " + std::to_string(line) + ": empty id");
    if (!seen.insert(id).second) throw InputError(path + ": line " + std::to_string(line) + ": duplicate id '" + id + "'");
    out.emplace_back(std::move(id), labels);
  };
  const bool is_csv = path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
  if (is_csv) {
    csv::Reader reader(in);
    auto header = reader.next();
    if (!header) return out;
    std::size_t id_col = header->size(), lab_col = header->size();
    for (std::size_t i = 0; i < header->size(); ++i) {
      if ((*header)[i] == "id") id_col = i;
      if ((*header)[i] == "labels") lab_col = i;
    }
    if (id_col == header->size() || lab_col == header->size())
      throw InputError(path + ": detections CSV needs 'id' and 'labels' columns");
    while (auto row = reader.next()) {
      if (row->size() == 1 && row->front().empty()) continue;
      const std::size_t line = reader.record_line();
      if (row->size() <= std::max(id_col, lab_col)) throw InputError(path + ": line " + std::to_string(line) + ": too few columns");
      SdgLabelSet labels;
      try {
        labels = SdgLabelSet::parse((*row)[lab_col]);
      } catch (const std::exception& e) {
        throw InputError(path + ": line " + std::to_string(line) + ": " + e.what());
      }
      add((*row)[id_col], labels, line);
    }
    return out;
  }
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw InputError(path + ": line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string())
      throw InputError(path + ": line " + std::to_string(lineno) + ": record lacks string 'id'");
    if (j.contains("error"))
      throw InputError(path + ": line " + std::to_string(lineno) + ": record '" + j["id"].get<std::string>() +
                       "' failed (" + j["error"].get<std::string>() + "); rerun or remove it");
    SdgLabelSet labels;
    try {
      for (const auto& l : j.value("labels", nlohmann::json::array())) labels.insert(l.get<long long>());
    } catch (const std::exception& e) {
      throw InputError(path + ": line " + std::to_string(lineno) + ": " + e.what());
    }
    add(j["id"].get<std::string>(), labels, lineno);
  }
  return out;
}

/// Pairs two detection sets by id in the order of `a`. Both must cover the same ids.
inline std::vector<DetectionRecord> join_detections(const Detections& a, const Detections& b) {
  std::map<std::string, SdgLabelSet> bmap(b.begin(), b.end());
  std::vector<DetectionRecord> out;
  for (const auto& [id, labels] : a) {
    auto it = bmap.find(id);
    if (it == bmap.end()) throw InputError("id '" + id + "' present in side A but missing from side B");
    out.push_back({id, labels, it->second});
    bmap.erase(it);
  }
  if (!bmap.empty()) throw InputError("id '" + bmap.begin()->first + "' present in side B but missing from side A");
  return out;
}

}  // namespace sdgkit
