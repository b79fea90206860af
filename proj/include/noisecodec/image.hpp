#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "noisecodec/tensor.hpp"

namespace nc::img {

// 3-channel planar image, values in [0,1] (8-bit sources divided by 255).
struct ImageBuffer {
  int64_t width = 0;
  int64_t height = 0;
  std::vector<float> data;  // 3 * height * width, channel-major

  int64_t pixels() const { return width * height; }
};

// Round-half-away-from-zero quantization to 8 bits after clamping to [0,1].
uint8_t to_byte(float v);

// Reads an 8-bit PNG or binary PPM (P6), sniffed by magic bytes. Gray and
// alpha PNG variants are expanded/stripped to RGB. Throws std::runtime_error
// on unreadable files.
ImageBuffer read_image(const std::string& path);

// Writes PNG or PPM chosen by file extension (.png otherwise .ppm).
void write_image(const std::string& path, const ImageBuffer& img);

Tensor<float> to_tensor(const ImageBuffer& img);          // 1x3xHxW
ImageBuffer from_tensor(const Tensor<float>& t);          // clamps to [0,1]

}  // namespace nc::img
