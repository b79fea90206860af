#include "noisecodec/container.hpp"

#include <algorithm>
#include <fstream>

#include "noisecodec/entropy.hpp"

namespace nc::net {

namespace {

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v & 0xff));
  out.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}

struct Cursor {
  std::span<const uint8_t> buf;
  size_t pos = 0;

  void need(size_t n) const {
    if (pos + n > buf.size()) throw DecodeError("truncated stream");
  }
  uint8_t u8() {
    need(1);
    return buf[pos++];
  }
  uint16_t u16() {
    uint16_t v = u8();
    return static_cast<uint16_t>(v | (u8() << 8));
  }
  uint32_t u32() {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::span<const uint8_t> bytes(size_t n) {
    need(n);
    auto s = buf.subspan(pos, n);
    pos += n;
    return s;
  }
};

int64_t padded_extent(int64_t v) {
  return (v + kPadMultiple - 1) / kPadMultiple * kPadMultiple;
}

uint16_t stream_flags(const CodecModel& model) {
  uint16_t flags = 0;
  if (model.arch().context_enabled) flags |= kFlagContext;
  if (model.metric() == Metric::msssim) flags |= kFlagPerceptual;
  return flags;
}

// Crops the padded reconstruction and converts to an image.
img::ImageBuffer finish_recon(const Tensor<float>& xhat, int64_t h, int64_t w) {
  return img::from_tensor(crop_hw(xhat, h, w));
}

}  // namespace

CompressResult compress_image(const img::ImageBuffer& image, const CodecModel& model) {
  if (image.width < 1 || image.height < 1)
    fail_shape("compress_image", "empty image");
  NoGradGuard ng;
  auto x = img::to_tensor(image);
  auto xp = pad_to_multiple(x).first;
  auto z1 = model.analyze(xp, Branch::denoising).second;
  auto coded = model.code_latents(z1);

  const auto prior_models = model.prior().models();
  const Shape s2 = coded.z2hat.shape();
  const int64_t plane2 = s2.h * s2.w;
  auto model2_at = [&](size_t i) -> const ent::SymbolModel& {
    return prior_models[i / static_cast<size_t>(plane2)];
  };
  auto bytes2 = ent::rans_encode(coded.sym2, model2_at);
  double bits = ent::rate_estimate_bits(coded.sym2, model2_at);

  const Shape s1 = coded.z1hat.shape();
  auto sgd = coded.sigma.data();
  std::vector<size_t> order;
  order.reserve(static_cast<size_t>(s1.numel()));
  for (int64_t y = 0; y < s1.h; ++y)
    for (int64_t x1 = 0; x1 < s1.w; ++x1)
      for (int64_t c = 0; c < s1.c; ++c)
        order.push_back(static_cast<size_t>((c * s1.h + y) * s1.w + x1));
  ent::SymbolModel scratch;
  auto model1_at = [&](size_t i) -> const ent::SymbolModel& {
    // sym1 holds residuals against mu, so the coder sees a zero-mean gaussian.
    scratch = ent::gaussian_model(0.0, sgd[order[i]]);
    return scratch;
  };
  auto bytes1 = ent::rans_encode(coded.sym1, model1_at);
  bits += ent::rate_estimate_bits(coded.sym1, model1_at);

  CompressResult out;
  out.est_bits = bits;
  out.recon = finish_recon(model.synthesize(coded.z1hat), image.height, image.width);

  auto& s = out.stream;
  s.insert(s.end(), {'J', 'D', 'C', 'B'});
  put_u16(s, kStreamVersion);
  put_u16(s, stream_flags(model));
  s.push_back(static_cast<uint8_t>(model.quality()));
  put_u32(s, static_cast<uint32_t>(image.width));
  put_u32(s, static_cast<uint32_t>(image.height));
  put_u32(s, static_cast<uint32_t>(padded_extent(image.width)));
  put_u32(s, static_cast<uint32_t>(padded_extent(image.height)));
  put_u32(s, static_cast<uint32_t>(bytes2.size()));
  s.insert(s.end(), bytes2.begin(), bytes2.end());
  put_u32(s, static_cast<uint32_t>(bytes1.size()));
  s.insert(s.end(), bytes1.begin(), bytes1.end());
  uint32_t crc = ent::crc32(bytes2);
  crc = ent::crc32(bytes1, crc);
  put_u32(s, crc);
  return out;
}

img::ImageBuffer decompress_stream(std::span<const uint8_t> stream, const CodecModel& model) {
  Cursor cur{stream};
  {
    auto magic = cur.bytes(4);
    if (!std::equal(magic.begin(), magic.end(), "JDCB")) throw DecodeError("bad stream magic");
  }
  const uint16_t version = cur.u16();
  if (version != kStreamVersion)
    throw DecodeError("unsupported stream version " + std::to_string(version));
  const uint16_t flags = cur.u16();
  if (flags != stream_flags(model))
    throw DecodeError("stream flags do not match the model configuration");
  const int quality = cur.u8();
  if (quality != model.quality())
    throw DecodeError("stream quality " + std::to_string(quality) +
                      " does not match model quality " + std::to_string(model.quality()));
  const int64_t w = cur.u32();
  const int64_t h = cur.u32();
  const int64_t pw = cur.u32();
  const int64_t ph = cur.u32();
  if (w < 1 || h < 1 || pw != padded_extent(w) || ph != padded_extent(h))
    throw DecodeError("inconsistent stream geometry");
  auto bytes2 = cur.bytes(cur.u32());
  auto bytes1 = cur.bytes(cur.u32());
  const uint32_t crc_stored = cur.u32();
  if (cur.pos != stream.size()) throw DecodeError("trailing bytes after stream");
  uint32_t crc = ent::crc32(bytes2);
  crc = ent::crc32(bytes1, crc);
  if (crc != crc_stored) throw DecodeError("stream checksum mismatch");

  NoGradGuard ng;
  const auto& arch = model.arch();
  const Shape s2{1, arch.m2, ph / kZ2Stride, pw / kZ2Stride};
  const Shape s1{1, arch.m1, ph / kZ1Stride, pw / kZ1Stride};

  const auto prior_models = model.prior().models();
  auto z2hat = Tensor<float>::zeros(s2);
  {
    ent::RansDecoder dec(bytes2);
    auto qd = z2hat.data();
    const int64_t plane2 = s2.h * s2.w;
    for (int64_t c = 0; c < s2.c; ++c) {
      const auto& m = prior_models[static_cast<size_t>(c)];
      for (int64_t i = 0; i < plane2; ++i)
        qd[static_cast<size_t>(c * plane2 + i)] = static_cast<float>(dec.decode(m));
    }
    dec.finish();
  }

  ent::RansDecoder dec1(bytes1);
  auto z1hat = model.decode_z1(z2hat, s1, [&](size_t, float, float sigma) -> int64_t {
    return dec1.decode(ent::gaussian_model(0.0, sigma));
  });
  dec1.finish();

  return finish_recon(model.synthesize(z1hat), h, w);
}

void compress_file(const std::string& image_path, const std::string& stream_path,
                   const CodecModel& model) {
  auto result = compress_image(img::read_image(image_path), model);
  std::ofstream os(stream_path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write stream: " + stream_path);
  os.write(reinterpret_cast<const char*>(result.stream.data()),
           static_cast<std::streamsize>(result.stream.size()));
  if (!os) throw std::runtime_error("stream write failed: " + stream_path);
}

void decompress_file(const std::string& stream_path, const std::string& image_path,
                     const CodecModel& model) {
  std::ifstream is(stream_path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read stream: " + stream_path);
  std::vector<uint8_t> data((std::istreambuf_iterator<char>(is)),
                            std::istreambuf_iterator<char>());
  img::write_image(image_path, decompress_stream(data, model));
}

}  // namespace nc::net
