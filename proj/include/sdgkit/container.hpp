#pragma once

// Model container layout (all integers little-endian):
//
//   bytes 0..7    magic "SDGKIT\0\1"
//   bytes 8..15   u64 header length H
//   next H bytes  UTF-8 JSON header; header["arrays"] lists every matrix as
//                 {"name", "rows", "cols", "offset"} with offset counted in
//                 floats from the start of the payload
//   remainder     payload of IEEE-754 float32 values, little-endian

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "error.hpp"

namespace sdgkit {

inline constexpr char kContainerMagic[8] = {'S', 'D', 'G', 'K', 'I', 'T', '\0', '\1'};

struct FloatMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> values;

  std::span<const float> row(std::size_t r) const { return {values.data() + r * cols, cols}; }
  std::span<float> row(std::size_t r) { return {values.data() + r * cols, cols}; }

  friend bool operator==(const FloatMatrix&, const FloatMatrix&) = default;
};

class ContainerWriter {
 public:
  nlohmann::ordered_json& header() { return header_; }

  void add_array(const std::string& name, const FloatMatrix& m) {
    if (m.values.size() != m.rows * m.cols) throw Error("matrix '" + name + "' has inconsistent shape");
    nlohmann::ordered_json entry;
    entry["name"] = name;
    entry["rows"] = m.rows;
    entry["cols"] = m.cols;
    entry["offset"] = payload_.size();
    arrays_.push_back(std::move(entry));
    payload_.insert(payload_.end(), m.values.begin(), m.values.end());
  }

  std::string to_bytes() const {
    nlohmann::ordered_json h = header_;
    h["arrays"] = arrays_;
    const std::string text = h.dump();
    std::string out(kContainerMagic, sizeof kContainerMagic);
    put_u64(out, text.size());
    out += text;
    out.reserve(out.size() + payload_.size() * 4);
    for (float f : payload_) {
      auto bits = std::bit_cast<std::uint32_t>(f);
      for (int i = 0; i < 4; ++i, bits >>= 8) out += static_cast<char>(bits & 0xFF);
    }
    return out;
  }

  void write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write model file: " + path);
    const auto bytes = to_bytes();
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }

 private:
  static void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i, v >>= 8) out += static_cast<char>(v & 0xFF);
  }

  nlohmann::ordered_json header_ = nlohmann::ordered_json::object();
  nlohmann::ordered_json arrays_ = nlohmann::ordered_json::array();
  std::vector<float> payload_;
};

class ContainerReader {
 public:
  static ContainerReader from_bytes(std::string_view bytes) {
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kContainerMagic, 8) != 0)
      throw InputError("not a model container (bad magic)");
    std::uint64_t hlen = 0;
    for (int i = 7; i >= 0; --i) hlen = (hlen << 8) | static_cast<unsigned char>(bytes[8 + static_cast<std::size_t>(i)]);
    if (hlen > bytes.size() - 16) throw InputError("model container header truncated");
    ContainerReader r;
    try {
      r.header_ = nlohmann::ordered_json::parse(bytes.substr(16, hlen));
    } catch (const nlohmann::json::exception& e) {
      throw InputError(std::string("model container header is not JSON: ") + e.what());
    }
    const std::string_view payload = bytes.substr(16 + hlen);
    if (payload.size() % 4 != 0) throw InputError("model container payload is not a whole number of floats");
    const std::size_t nfloats = payload.size() / 4;
    for (const auto& a : r.header_.at("arrays")) {
      FloatMatrix m;
      m.rows = a.at("rows").get<std::size_t>();
      m.cols = a.at("cols").get<std::size_t>();
      const auto offset = a.at("offset").get<std::size_t>();
      if (offset > nfloats || m.rows * m.cols > nfloats - offset) throw InputError("model container array out of bounds");
      m.values.resize(m.rows * m.cols);
      for (std::size_t i = 0; i < m.values.size(); ++i) {
        std::uint32_t bits = 0;
        const std::size_t base = (offset + i) * 4;
        for (int k = 3; k >= 0; --k) bits = (bits << 8) | static_cast<unsigned char>(payload[base + static_cast<std::size_t>(k)]);
        m.values[i] = std::bit_cast<float>(bits);
      }
      r.arrays_.emplace(a.at("name").get<std::string>(), std::move(m));
    }
    return r;
  }

  static ContainerReader read(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open model file: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_bytes(bytes);
  }

  const nlohmann::ordered_json& header() const { return header_; }

  const FloatMatrix& array(const std::string& name) const {
    auto it = arrays_.find(name);
    if (it == arrays_.end()) throw InputError("model container lacks array '" + name + "'");
    return it->second;
  }

  bool has_array(const std::string& name) const { return arrays_.contains(name); }

 private:
  nlohmann::ordered_json header_;
  std::map<std::string, FloatMatrix> arrays_;
};

}  // namespace sdgkit
