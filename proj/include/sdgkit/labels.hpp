#pragma once

#include <bit>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"

namespace sdgkit {

inline constexpr int kMinSdg = 1;
inline constexpr int kMaxSdg = 17;

constexpr bool is_valid_sdg(long long value) noexcept { return value >= kMinSdg && value <= kMaxSdg; }

/// A set of SDG identifiers in 1..=17. The empty set means "no SDG".
class SdgLabelSet {
 public:
  constexpr SdgLabelSet() = default;

  SdgLabelSet(std::initializer_list<int> members) {
    for (int m : members) insert(m);
  }

  static SdgLabelSet from_bits(std::uint32_t bits) {
    SdgLabelSet s;
    s.bits_ = bits & kAllBits;
    return s;
  }

  void insert(long long sdg) {
    if (!is_valid_sdg(sdg)) throw InputError("SDG label out of range 1..17: " + std::to_string(sdg));
    bits_ |= (1u << sdg);
  }

  void erase(int sdg) noexcept {
    if (is_valid_sdg(sdg)) bits_ &= ~(1u << sdg);
  }

  bool contains(int sdg) const noexcept { return is_valid_sdg(sdg) && (bits_ >> sdg) & 1u; }
  bool empty() const noexcept { return bits_ == 0; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(std::popcount(bits_)); }
  std::uint32_t bits() const noexcept { return bits_; }

  bool intersects(const SdgLabelSet& other) const noexcept { return (bits_ & other.bits_) != 0; }

  SdgLabelSet operator&(const SdgLabelSet& o) const noexcept { return from_bits(bits_ & o.bits_); }
  SdgLabelSet operator|(const SdgLabelSet& o) const noexcept { return from_bits(bits_ | o.bits_); }
  bool is_subset_of(const SdgLabelSet& o) const noexcept { return (bits_ & ~o.bits_) == 0; }

  /// Members in ascending order.
  std::vector<int> members() const {
    std::vector<int> out;
    for (int s = kMinSdg; s <= kMaxSdg; ++s)
      if (contains(s)) out.push_back(s);
    return out;
  }

  /// Smallest member, or 0 when empty.
  int first() const noexcept { return empty() ? 0 : std::countr_zero(bits_); }

  /// Semicolon-joined members, e.g. "3;7;12". Empty set renders as "".
  std::string to_string(char sep = ';') const {
    std::string out;
    for (int s : members()) {
      if (!out.empty()) out += sep;
      out += std::to_string(s);
    }
    return out;
  }

  /// Parses "3;7;12" (also accepts ',' and surrounding spaces). Throws InputError.
  static SdgLabelSet parse(std::string_view text) {
    SdgLabelSet out;
    std::size_t i = 0;
    while (i < text.size()) {
      while (i < text.size() && (text[i] == ' ' || text[i] == ';' || text[i] == ',' || text[i] == '\t')) ++i;
      if (i >= text.size()) break;
      std::size_t j = i;
      long long v = 0;
      while (j < text.size() && text[j] >= '0' && text[j] <= '9') {
        if (v < 1000) v = v * 10 + (text[j] - '0');
        ++j;
      }
      if (j == i) throw InputError("invalid label list: '" + std::string(text) + "'");
      out.insert(v);
      i = j;
    }
    return out;
  }

  friend bool operator==(const SdgLabelSet&, const SdgLabelSet&) = default;

 private:
  static constexpr std::uint32_t kAllBits = ((1u << (kMaxSdg + 1)) - 1) & ~1u;
  std::uint32_t bits_ = 0;
};

}  // namespace sdgkit
