#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace nc {

// Shape of a dense 4-D tensor: (batch, channel, height, width), row-major.
struct Shape {
  int64_t b = 0, c = 0, h = 0, w = 0;

  int64_t numel() const { return b * c * h * w; }
  bool operator==(const Shape&) const = default;

  std::string str() const {
    return "(" + std::to_string(b) + "," + std::to_string(c) + "," +
           std::to_string(h) + "," + std::to_string(w) + ")";
  }
};

// Thrown when a bitstream or checkpoint cannot be parsed or fails validation.
class DecodeError : public std::runtime_error {
 public:
  explicit DecodeError(const std::string& msg) : std::runtime_error(msg) {}
};

[[noreturn]] inline void fail_shape(const std::string& op, const std::string& detail) {
  throw std::invalid_argument(op + ": " + detail);
}

template <typename T>
inline void check_finite(const T* p, int64_t n, const char* op) {
  for (int64_t i = 0; i < n; ++i) {
    if (!std::isfinite(static_cast<double>(p[i])))
      throw std::invalid_argument(std::string(op) + ": non-finite input value");
  }
}

}  // namespace nc
