#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "noisecodec/codec.hpp"
#include "noisecodec/image.hpp"

namespace nc::net {

// Bitstream container layout, all integers little-endian:
//   magic "JDCB", version u16, flags u16 (bit 0: context model,
//   bit 1: perceptual metric), quality u8, original w/h u32, padded w/h u32,
//   hyper payload (u32 length + bytes), main payload (u32 length + bytes),
//   crc32 u32 over both payloads.
inline constexpr uint16_t kStreamVersion = 1;
inline constexpr uint16_t kFlagContext = 1u << 0;
inline constexpr uint16_t kFlagPerceptual = 1u << 1;

struct CompressResult {
  std::vector<uint8_t> stream;
  img::ImageBuffer recon;  // encoder-side reconstruction, cropped to source size
  double est_bits = 0.0;   // table-based rate estimate over both payloads
};

// Runs the denoising branch, codes both latent levels, and packages the
// stream. The model must carry the tags (quality, metric) the stream should
// declare.
CompressResult compress_image(const img::ImageBuffer& image, const CodecModel& model);

// Rejects streams whose version, flags, or quality do not match the supplied
// model. Throws DecodeError on any malformed or mismatched input.
img::ImageBuffer decompress_stream(std::span<const uint8_t> stream, const CodecModel& model);

void compress_file(const std::string& image_path, const std::string& stream_path,
                   const CodecModel& model);
void decompress_file(const std::string& stream_path, const std::string& image_path,
                     const CodecModel& model);

}  // namespace nc::net
