#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sfwm/common.hpp"

namespace sfwm {

inline constexpr std::size_t kDefaultWatermarkBits = 30;

// Binary watermark; each entry is 0 or 1.
class watermark {
 public:
  watermark() = default;
  explicit watermark(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
    for (auto b : bits_)
      if (b > 1) throw parameter_error("watermark bits must be 0 or 1");
  }

  static watermark random(rng_t& rng, std::size_t length = kDefaultWatermarkBits) {
    std::vector<std::uint8_t> bits(length);
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng() >> 63);
    return watermark(std::move(bits));
  }

  // Accepts "0b"/binary strings of 0/1 characters or "0x"-prefixed hex. Hex
  // strings encode the bits most significant first; leading pad bits (when the
  // length is not a multiple of 4) must be zero.
  static watermark parse(const std::string& text, std::size_t length = kDefaultWatermarkBits) {
    std::vector<std::uint8_t> bits;
    if (text.rfind("0x", 0) == 0 || text.rfind("0X", 0) == 0) {
      const std::string hex = text.substr(2);
      if (hex.empty()) throw parameter_error("empty hex watermark");
      std::vector<std::uint8_t> all;
      for (char ch : hex) {
        int v;
        if (ch >= '0' && ch <= '9') v = ch - '0';
        else if (ch >= 'a' && ch <= 'f') v = ch - 'a' + 10;
        else if (ch >= 'A' && ch <= 'F') v = ch - 'A' + 10;
        else throw parameter_error("malformed hex watermark: " + text);
        for (int s = 3; s >= 0; --s) all.push_back(static_cast<std::uint8_t>((v >> s) & 1));
      }
      if (all.size() < length || all.size() - length >= 4)
        throw parameter_error("hex watermark must encode exactly " + std::to_string(length) + " bits");
      const std::size_t pad = all.size() - length;
      for (std::size_t i = 0; i < pad; ++i)
        if (all[i]) throw parameter_error("hex watermark has nonzero padding bits");
      bits.assign(all.begin() + static_cast<std::ptrdiff_t>(pad), all.end());
    } else {
      std::string body = text.rfind("0b", 0) == 0 ? text.substr(2) : text;
      for (char ch : body) {
        if (ch != '0' && ch != '1') throw parameter_error("malformed binary watermark: " + text);
        bits.push_back(static_cast<std::uint8_t>(ch - '0'));
      }
      if (bits.size() != length)
        throw parameter_error("watermark must have exactly " + std::to_string(length) + " bits, got " +
                              std::to_string(bits.size()));
    }
    return watermark(std::move(bits));
  }

  std::string to_string() const {
    std::string s;
    for (auto b : bits_) s.push_back(static_cast<char>('0' + b));
    return s;
  }

  std::size_t size() const noexcept { return bits_.size(); }
  std::uint8_t operator[](std::size_t i) const { return bits_[i]; }
  const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }
  bool operator==(const watermark&) const = default;

 private:
  std::vector<std::uint8_t> bits_;
};

// Real-valued decoder output.
struct watermark_logits {
  std::vector<double> values;
};

// Bit i is 1 when logit i >= 0.5.
inline watermark harden(const watermark_logits& logits) {
  std::vector<std::uint8_t> bits(logits.values.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    const double v = logits.values[i];
    if (!std::isfinite(v)) throw numeric_error("non-finite watermark logit");
    bits[i] = v >= 0.5 ? 1 : 0;
  }
  return watermark(std::move(bits));
}

inline double bitwise_accuracy(const watermark& a, const watermark& b) {
  if (a.size() != b.size()) throw shape_error("bitwise_accuracy: watermark lengths differ");
  if (a.size() == 0) throw shape_error("bitwise_accuracy: empty watermarks");
  std::size_t match = 0;
  for (std::size_t i = 0; i < a.size(); ++i) match += a[i] == b[i];
  return static_cast<double>(match) / static_cast<double>(a.size());
}

}  // namespace sfwm
