#pragma once

#include <string>
#include <utility>
#include <vector>

#include "noisecodec/ops.hpp"
#include "noisecodec/rng.hpp"

namespace nc::net {

inline constexpr float kLeakySlope = 0.01f;

using NamedParams = std::vector<std::pair<std::string, Tensor<float>>>;

// Strided convolution with bias, uniform fan-in initialization.
struct ConvLayer {
  Tensor<float> w, b;
  int64_t stride = 1, pad = 0;

  ConvLayer() = default;
  ConvLayer(int64_t cin, int64_t cout, int64_t k, int64_t stride, int64_t pad, Rng& rng,
            bool zero_init = false);
  Tensor<float> forward(const Tensor<float>& x) const;
  void collect(const std::string& prefix, NamedParams& out);
};

// Stride-2 transposed convolution with bias; kernel 4, padding 1, so the
// spatial extent doubles exactly.
struct TConvLayer {
  Tensor<float> w, b;
  int64_t stride = 2, pad = 1;

  TConvLayer() = default;
  TConvLayer(int64_t cin, int64_t cout, int64_t k, Rng& rng);
  Tensor<float> forward(const Tensor<float>& x) const;
  void collect(const std::string& prefix, NamedParams& out);
};

// x + conv(leaky(conv(x))), both 3x3.
struct ResBlock {
  ConvLayer c1, c2;

  ResBlock() = default;
  ResBlock(int64_t ch, Rng& rng);
  Tensor<float> forward(const Tensor<float>& x) const;
  void collect(const std::string& prefix, NamedParams& out);
};

// x + trunk(x) * sigmoid(mask(x)): trunk is a residual block, the mask branch
// a residual block followed by a 1x1 projection.
struct AttentionBlock {
  ResBlock trunk, mask;
  ConvLayer proj;

  AttentionBlock() = default;
  AttentionBlock(int64_t ch, Rng& rng);
  Tensor<float> forward(const Tensor<float>& x) const;
  void collect(const std::string& prefix, NamedParams& out);
};

// Residual attention block with a zero-initialized output projection, so a
// freshly constructed denoiser contributes exactly nothing.
struct Denoiser {
  ResBlock trunk, mask;
  ConvLayer proj, out;

  Denoiser() = default;
  Denoiser(int64_t ch, Rng& rng);
  Tensor<float> forward(const Tensor<float>& x) const;
  void collect(const std::string& prefix, NamedParams& out);
};

}  // namespace nc::net
