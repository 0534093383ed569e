#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "analyze.hpp"
#include "csv.hpp"
#include "error.hpp"
#include "labels.hpp"

namespace sdgkit {

/// Display names for the two sides of a comparison.
struct SideNames {
  std::string a = "A";
  std::string b = "B";
};

namespace detail {

inline std::string fixed2(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

inline nlohmann::ordered_json cp_json(const CountPercent& c) {
  nlohmann::ordered_json j;
  j["count"] = c.count;
  j["percent"] = c.percent.str();
  j["exact_percent"] = c.exact;
  return j;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Overlap

inline std::string overlap_report_csv(const OverlapReport& r, const SideNames& names) {
  std::ostringstream out;
  const std::string pair = names.a + " vs " + names.b;
  csv::write_row(out, {"statistic", "value", "percent"});
  csv::write_row(out, {"Total Companies", std::to_string(r.total), "--"});
  csv::write_row(out, {"Intersection: " + pair + " including companies with no detected SDGs",
                       std::to_string(r.intersection_including_empty.count), r.intersection_including_empty.percent.str()});
  csv::write_row(out, {"Companies with Detected SDGs: " + names.a, std::to_string(r.detected_a.count), r.detected_a.percent.str()});
  csv::write_row(out, {"Companies with Detected SDGs: " + names.b, std::to_string(r.detected_b.count), r.detected_b.percent.str()});
  csv::write_row(out, {"Intersection: " + pair, std::to_string(r.intersection_detected.count), r.intersection_detected.percent.str()});
  csv::write_row(out, {"Average Number of SDGs Detected per Company: " + names.a, format_ratio2(r.avg_per_detected_a), "--"});
  csv::write_row(out, {"Average Number of SDGs Detected per Company: " + names.b, format_ratio2(r.avg_per_detected_b), "--"});
  csv::write_row(out, {"Average Number of SDGs per Company (all companies): " + names.a, format_ratio2(r.avg_all_a), "--"});
  csv::write_row(out, {"Average Number of SDGs per Company (all companies): " + names.b, format_ratio2(r.avg_all_b), "--"});
  csv::write_row(out, {"Total SDGs Detected: " + names.a, std::to_string(r.labels_a), "--"});
  csv::write_row(out, {"Total SDGs Detected: " + names.b, std::to_string(r.labels_b), "--"});
  return out.str();
}

inline nlohmann::ordered_json overlap_report_json(const OverlapReport& r, const SideNames& names) {
  nlohmann::ordered_json j;
  j["side_a"] = names.a;
  j["side_b"] = names.b;
  j["total"] = r.total;
  j["intersection_including_empty"] = detail::cp_json(r.intersection_including_empty);
  j["detected_a"] = detail::cp_json(r.detected_a);
  j["detected_b"] = detail::cp_json(r.detected_b);
  j["intersection_detected"] = detail::cp_json(r.intersection_detected);
  j["labels_a"] = r.labels_a;
  j["labels_b"] = r.labels_b;
  j["avg_per_detected_a"] = r.avg_per_detected_a;
  j["avg_per_detected_b"] = r.avg_per_detected_b;
  j["avg_all_a"] = r.avg_all_a;
  j["avg_all_b"] = r.avg_all_b;
  return j;
}

// ---------------------------------------------------------------------------
// Detection rates

/// One row per SDG with count and rate for each side.
inline std::string detection_rates_csv(const DetectionRateTable& a, const DetectionRateTable& b, const SideNames& names) {
  std::ostringstream out;
  csv::write_row(out, {"sdg", "count_" + names.a, "rate_" + names.a, "count_" + names.b, "rate_" + names.b});
  for (int s = kMinSdg; s <= kMaxSdg; ++s)
    csv::write_row(out, {std::to_string(s), std::to_string(a.count(s)), a.rate(s).str(), std::to_string(b.count(s)), b.rate(s).str()});
  return out.str();
}

/// Plot-ready two-column CSV: sdg,rate.
inline std::string detection_rates_plot_csv(const DetectionRateTable& t) {
  std::ostringstream out;
  out << "sdg,rate\n";
  for (int s = kMinSdg; s <= kMaxSdg; ++s) out << s << ',' << t.rate(s).str() << '\n';
  return out.str();
}

inline nlohmann::ordered_json detection_rates_json(const DetectionRateTable& t) {
  nlohmann::ordered_json j;
  j["total"] = t.total;
  auto& rows = j["sdgs"] = nlohmann::ordered_json::array();
  for (int s = kMinSdg; s <= kMaxSdg; ++s) {
    const auto i = static_cast<std::size_t>(s);
    rows.push_back({{"sdg", s}, {"count", t.counts[i]}, {"rate", t.rates[i].str()}, {"exact_rate", t.exact[i]}});
  }
  j["ranking"] = t.ranking();
  return j;
}

/// Grouped bar chart of per-SDG detection rates: 17 groups of two bars.
inline std::string detection_rates_svg(const DetectionRateTable& a, const DetectionRateTable& b, const SideNames& names,
                                       const std::string& title = "Detection Rate by SDG") {
  constexpr int kLeft = 60, kRight = 20, kTop = 50, kBottom = 60;
  constexpr int kGroup = 40, kBar = 16, kPlotH = 300;
  constexpr int kWidth = kLeft + kGroup * kMaxSdg + kRight;
  constexpr int kHeight = kTop + kPlotH + kBottom;
  double max_rate = 0;
  for (int s = kMinSdg; s <= kMaxSdg; ++s) max_rate = std::max({max_rate, a.rate(s).value(), b.rate(s).value()});
  const int y_max = std::max(10, static_cast<int>(std::ceil(max_rate / 10.0)) * 10);
  auto y_of = [&](double v) { return kTop + kPlotH - v / y_max * kPlotH; };
  auto esc = [](const std::string& s) {
    std::string o;
    for (char c : s) {
      switch (c) {
        case '&': o += "&amp;"; break;
        case '<': o += "&lt;"; break;
        case '>': o += "&gt;"; break;
        case '"': o += "&quot;"; break;
        default: o += c;
      }
    }
    return o;
  };
  const char* colors[2] = {"#4e79a7", "#e15759"};

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" viewBox=\"0 0 "
    << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << esc(title) << "</text>\n";
  for (int tick = 0; tick <= y_max; tick += y_max / 5 > 0 ? y_max / 5 : 1) {
    const std::string y = detail::fixed2(y_of(tick));
    o << "<line x1=\"" << kLeft << "\" y1=\"" << y << "\" x2=\"" << kWidth - kRight << "\" y2=\"" << y << "\" stroke=\"#dddddd\"/>\n";
    o << "<text x=\"" << kLeft - 6 << "\" y=\"" << y << "\" text-anchor=\"end\" dominant-baseline=\"middle\">" << tick << "</text>\n";
  }
  o << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + kPlotH << "\" x2=\"" << kWidth - kRight << "\" y2=\"" << kTop + kPlotH
    << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + kPlotH << "\" stroke=\"black\"/>\n";
  for (int s = kMinSdg; s <= kMaxSdg; ++s) {
    const int gx = kLeft + (s - 1) * kGroup + (kGroup - 2 * kBar) / 2;
    o << "<g class=\"sdg\" data-sdg=\"" << s << "\">\n";
    const DetectionRateTable* sides[2] = {&a, &b};
    for (int k = 0; k < 2; ++k) {
      const double v = sides[k]->rate(s).value();
      const double y = y_of(v);
      o << "<rect x=\"" << gx + k * kBar << "\" y=\"" << detail::fixed2(y) << "\" width=\"" << kBar << "\" height=\""
        << detail::fixed2(kTop + kPlotH - y) << "\" fill=\"" << colors[k] << "\"><title>SDG" << s << ' '
        << esc(k == 0 ? names.a : names.b) << ": " << sides[k]->rate(s).str() << "%</title></rect>\n";
    }
    o << "<text x=\"" << gx + kBar << "\" y=\"" << kTop + kPlotH + 16 << "\" text-anchor=\"middle\">" << s << "</text>\n";
    o << "</g>\n";
  }
  o << "<text x=\"" << kLeft + kGroup * kMaxSdg / 2 << "\" y=\"" << kHeight - 22 << "\" text-anchor=\"middle\">SDG</text>\n";
  o << "<text x=\"16\" y=\"" << kTop + kPlotH / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << kTop + kPlotH / 2
    << ")\">Detection rate (%)</text>\n";
  for (int k = 0; k < 2; ++k) {
    const int lx = kLeft + 10 + k * 180;
    o << "<rect x=\"" << lx << "\" y=\"" << kHeight - 14 << "\" width=\"10\" height=\"10\" fill=\"" << colors[k] << "\"/>\n";
    o << "<text x=\"" << lx + 14 << "\" y=\"" << kHeight - 5 << "\">" << esc(k == 0 ? names.a : names.b) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

// ---------------------------------------------------------------------------
// Few-shot

/// One row per SDG (all 17) plus a Total row.
inline std::string fewshot_report_csv(const FewShotReport& r) {
  std::ostringstream out;
  csv::write_row(out, {"label", "n", "expected", "total_identification", "total_identification_pct", "as_expected",
                       "as_expected_pct", "as_expected_bracketed", "correct", "correct_pct"});
  for (const auto& row : r.rows)
    csv::write_row(out, {"SDG" + std::to_string(row.label), std::to_string(row.n), std::to_string(row.expected_count),
                         std::to_string(row.total_identification.count), row.total_identification.percent.str(),
                         std::to_string(row.as_expected.count), row.as_expected.percent.str(), row.bracketed ? "1" : "0",
                         std::to_string(row.correct.count), row.correct.percent.str()});
  csv::write_row(out, {"Total", std::to_string(r.n_total), std::to_string(r.n_total), std::to_string(r.total_identifications),
                       r.items_with_any_pct.percent.str(), std::to_string(r.as_expected_total.count),
                       r.as_expected_total.percent.str(), "0", std::to_string(r.correct_total.count),
                       r.correct_total.percent.str()});
  return out.str();
}

inline nlohmann::ordered_json fewshot_report_json(const FewShotReport& r) {
  nlohmann::ordered_json j;
  j["tags"] = r.tags.members();
  auto& rows = j["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : r.rows) {
    nlohmann::ordered_json x;
    x["label"] = row.label;
    x["n"] = row.n;
    x["expected"] = row.expected;
    x["expected_count"] = row.expected_count;
    x["total_identification"] = detail::cp_json(row.total_identification);
    x["as_expected"] = detail::cp_json(row.as_expected);
    x["bracketed"] = row.bracketed;
    x["correct"] = detail::cp_json(row.correct);
    rows.push_back(std::move(x));
  }
  nlohmann::ordered_json t;
  t["n"] = r.n_total;
  t["total_identifications"] = r.total_identifications;
  t["items_with_any"] = detail::cp_json(r.items_with_any_pct);
  t["as_expected"] = detail::cp_json(r.as_expected_total);
  t["correct"] = detail::cp_json(r.correct_total);
  t["avg_per_identified"] = r.avg_per_identified;
  t["avg_all"] = r.avg_all;
  j["totals"] = std::move(t);
  return j;
}

/// Compact plain-text table; rows with N=0 are omitted, bracketed counts
/// mark empty outputs counted as expected.
inline std::string fewshot_report_text(const FewShotReport& r) {
  std::ostringstream o;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-7s %5s %5s %8s %8s %7s %8s %6s %8s\n", "Label", "N", "E(y)", "Ident", "%", "AsExp", "%",
                "Corr", "%");
  o << buf;
  for (const auto& row : r.rows) {
    if (row.n == 0) continue;
    const std::string as_exp = row.bracketed ? "[" + std::to_string(row.as_expected.count) + "]" : std::to_string(row.as_expected.count);
    std::snprintf(buf, sizeof buf, "%-7s %5lld %5lld %8lld %8s %7s %8s %6lld %8s\n", ("SDG" + std::to_string(row.label)).c_str(),
                  static_cast<long long>(row.n), static_cast<long long>(row.expected_count),
                  static_cast<long long>(row.total_identification.count), row.total_identification.percent.str().c_str(),
                  as_exp.c_str(), row.as_expected.percent.str().c_str(), static_cast<long long>(row.correct.count),
                  row.correct.percent.str().c_str());
    o << buf;
  }
  std::snprintf(buf, sizeof buf, "%-7s %5lld %5lld %8lld %8s %7lld %8s %6lld %8s\n", "Total", static_cast<long long>(r.n_total),
                static_cast<long long>(r.n_total), static_cast<long long>(r.total_identifications),
                r.items_with_any_pct.percent.str().c_str(), static_cast<long long>(r.as_expected_total.count),
                r.as_expected_total.percent.str().c_str(), static_cast<long long>(r.correct_total.count),
                r.correct_total.percent.str().c_str());
  o << buf;
  o << "Average SDGs per item with an identification: " << format_ratio2(r.avg_per_identified) << '\n';
  return o.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write output file: " + path);
  out << content;
  if (!out) throw InputError("failed writing output file: " + path);
}

}  // namespace sdgkit
