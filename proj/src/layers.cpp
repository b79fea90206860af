#include "noisecodec/layers.hpp"

#include <cmath>

namespace nc::net {

namespace {

Tensor<float> uniform_init(Shape s, int64_t fan_in, Rng& rng) {
  const float bound = static_cast<float>(1.0 / std::sqrt(static_cast<double>(fan_in)));
  auto t = Tensor<float>::rand_uniform(s, rng, -bound, bound);
  t.set_requires_grad(true);
  return t;
}

Tensor<float> zero_param(Shape s) {
  auto t = Tensor<float>::zeros(s);
  t.set_requires_grad(true);
  return t;
}

}  // namespace

ConvLayer::ConvLayer(int64_t cin, int64_t cout, int64_t k, int64_t stride_, int64_t pad_,
                     Rng& rng, bool zero_init)
    : stride(stride_), pad(pad_) {
  const int64_t fan_in = cin * k * k;
  if (zero_init) {
    w = zero_param(Shape{cout, cin, k, k});
    b = zero_param(Shape{1, cout, 1, 1});
  } else {
    w = uniform_init(Shape{cout, cin, k, k}, fan_in, rng);
    b = uniform_init(Shape{1, cout, 1, 1}, fan_in, rng);
  }
}

Tensor<float> ConvLayer::forward(const Tensor<float>& x) const {
  return conv2d(x, w, &b, stride, pad);
}

void ConvLayer::collect(const std::string& prefix, NamedParams& out) {
  out.emplace_back(prefix + ".w", w);
  out.emplace_back(prefix + ".b", b);
}

TConvLayer::TConvLayer(int64_t cin, int64_t cout, int64_t k, Rng& rng) {
  w = uniform_init(Shape{cin, cout, k, k}, cin * k * k, rng);
  b = uniform_init(Shape{1, cout, 1, 1}, cin * k * k, rng);
}

Tensor<float> TConvLayer::forward(const Tensor<float>& x) const {
  return bias_channels(conv2d_transpose(x, w, stride, pad), b);
}

void TConvLayer::collect(const std::string& prefix, NamedParams& out) {
  out.emplace_back(prefix + ".w", w);
  out.emplace_back(prefix + ".b", b);
}

ResBlock::ResBlock(int64_t ch, Rng& rng)
    : c1(ch, ch, 3, 1, 1, rng), c2(ch, ch, 3, 1, 1, rng) {}

Tensor<float> ResBlock::forward(const Tensor<float>& x) const {
  return add(x, c2.forward(leaky_relu(c1.forward(x), kLeakySlope)));
}

void ResBlock::collect(const std::string& prefix, NamedParams& out) {
  c1.collect(prefix + ".c1", out);
  c2.collect(prefix + ".c2", out);
}

AttentionBlock::AttentionBlock(int64_t ch, Rng& rng)
    : trunk(ch, rng), mask(ch, rng), proj(ch, ch, 1, 1, 0, rng) {}

Tensor<float> AttentionBlock::forward(const Tensor<float>& x) const {
  auto gate = sigmoid(proj.forward(mask.forward(x)));
  return add(x, mul(trunk.forward(x), gate));
}

void AttentionBlock::collect(const std::string& prefix, NamedParams& out) {
  trunk.collect(prefix + ".trunk", out);
  mask.collect(prefix + ".mask", out);
  proj.collect(prefix + ".proj", out);
}

Denoiser::Denoiser(int64_t ch, Rng& rng)
    : trunk(ch, rng),
      mask(ch, rng),
      proj(ch, ch, 1, 1, 0, rng),
      out(ch, ch, 3, 1, 1, rng, /*zero_init=*/true) {}

Tensor<float> Denoiser::forward(const Tensor<float>& x) const {
  auto gate = sigmoid(proj.forward(mask.forward(x)));
  return out.forward(mul(trunk.forward(x), gate));
}

void Denoiser::collect(const std::string& prefix, NamedParams& out_list) {
  trunk.collect(prefix + ".trunk", out_list);
  mask.collect(prefix + ".mask", out_list);
  proj.collect(prefix + ".proj", out_list);
  out.collect(prefix + ".out", out_list);
}

}  // namespace nc::net
