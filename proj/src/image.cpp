#include "noisecodec/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>

namespace nc::img {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& why) {
  throw std::runtime_error("image " + path + ": " + why);
}

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

ImageBuffer from_interleaved(int64_t w, int64_t h, const std::vector<uint8_t>& rgb) {
  ImageBuffer img;
  img.width = w;
  img.height = h;
  img.data.resize(static_cast<size_t>(3 * w * h));
  const int64_t plane = w * h;
  for (int64_t i = 0; i < plane; ++i)
    for (int64_t c = 0; c < 3; ++c)
      img.data[c * plane + i] = rgb[3 * i + c] / 255.f;
  return img;
}

std::vector<uint8_t> to_interleaved(const ImageBuffer& img) {
  const int64_t plane = img.pixels();
  std::vector<uint8_t> rgb(static_cast<size_t>(3 * plane));
  for (int64_t i = 0; i < plane; ++i)
    for (int64_t c = 0; c < 3; ++c)
      rgb[3 * i + c] = to_byte(img.data[c * plane + i]);
  return rgb;
}

ImageBuffer read_png(const std::string& path, FILE* f) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail(path, "libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    fail(path, "libpng init failed");
  }
  std::vector<uint8_t> interleaved;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, "corrupt PNG");
  }
  png_init_io(png, f);
  png_read_info(png, info);

  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);

  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  if (color & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS))
    png_set_strip_alpha(png);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  if (png_get_rowbytes(png, info) != 3 * w) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, "unsupported PNG layout");
  }
  interleaved.resize(static_cast<size_t>(3) * w * h);
  rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y)
    rows[y] = interleaved.data() + static_cast<size_t>(3) * w * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return from_interleaved(w, h, interleaved);
}

ImageBuffer read_ppm(const std::string& path, std::ifstream& in) {
  auto next_token = [&]() -> std::string {
    std::string tok;
    char c;
    while (in.get(c)) {
      if (c == '#') {
        std::string line;
        std::getline(in, line);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        if (!tok.empty()) return tok;
        continue;
      }
      tok += c;
    }
    return tok;
  };
  if (next_token() != "P6") fail(path, "not a binary PPM");
  int64_t w = 0, h = 0, maxval = 0;
  try {
    w = std::stoll(next_token());
    h = std::stoll(next_token());
    maxval = std::stoll(next_token());
  } catch (const std::exception&) {
    fail(path, "malformed PPM header");
  }
  if (w < 1 || h < 1 || maxval != 255) fail(path, "unsupported PPM geometry");
  std::vector<uint8_t> rgb(static_cast<size_t>(3 * w * h));
  in.read(reinterpret_cast<char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
  if (in.gcount() != static_cast<std::streamsize>(rgb.size())) fail(path, "truncated PPM");
  return from_interleaved(w, h, rgb);
}

}  // namespace

uint8_t to_byte(float v) {
  const float c = std::clamp(v, 0.f, 1.f);
  return static_cast<uint8_t>(std::lround(c * 255.f));
}

ImageBuffer read_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  char magic[2] = {0, 0};
  in.read(magic, 2);
  in.seekg(0);
  if (magic[0] == 'P' && magic[1] == '6') return read_ppm(path, in);
  in.close();
  if (static_cast<unsigned char>(magic[0]) == 0x89 && magic[1] == 'P') {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) fail(path, "cannot open");
    return read_png(path, f.get());
  }
  fail(path, "unrecognized format (PNG or binary PPM expected)");
}

void write_image(const std::string& path, const ImageBuffer& img) {
  if (img.width < 1 || img.height < 1 ||
      img.data.size() != static_cast<size_t>(3 * img.pixels()))
    fail(path, "malformed image buffer");
  const auto rgb = to_interleaved(img);
  const bool png_out = path.size() >= 4 && path.compare(path.size() - 4, 4, ".png") == 0;
  if (!png_out) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(path, "cannot open for writing");
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(rgb.data()),
              static_cast<std::streamsize>(rgb.size()));
    if (!out) fail(path, "write failed");
    return;
  }

  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) fail(path, "cannot open for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail(path, "libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    fail(path, "libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(path, "PNG write failed");
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
               static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int64_t y = 0; y < img.height; ++y)
    png_write_row(png, const_cast<png_bytep>(rgb.data() + 3 * img.width * y));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Tensor<float> to_tensor(const ImageBuffer& img) {
  return Tensor<float>::from_data(Shape{1, 3, img.height, img.width}, img.data);
}

ImageBuffer from_tensor(const Tensor<float>& t) {
  const Shape s = t.shape();
  if (s.b != 1 || s.c != 3) fail_shape("from_tensor", "expected 1x3xHxW, got " + s.str());
  ImageBuffer img;
  img.width = s.w;
  img.height = s.h;
  img.data.assign(t.data().begin(), t.data().end());
  for (auto& v : img.data) v = std::clamp(v, 0.f, 1.f);
  return img;
}

}  // namespace nc::img
