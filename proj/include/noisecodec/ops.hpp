#pragma once

#include "noisecodec/tensor.hpp"

namespace nc {

// Elementwise binaries. Shapes must match exactly, except that either side
// may be a scalar tensor (numel == 1); no other broadcasting.
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> div(const Tensor<T>& a, const Tensor<T>& b);

template <typename T> Tensor<T> add_scalar(const Tensor<T>& a, T c);
template <typename T> Tensor<T> scale(const Tensor<T>& a, T c);

template <typename T> Tensor<T> neg(const Tensor<T>& a);
template <typename T> Tensor<T> leaky_relu(const Tensor<T>& a, T slope);
template <typename T> Tensor<T> sigmoid(const Tensor<T>& a);
template <typename T> Tensor<T> abs(const Tensor<T>& a);
template <typename T> Tensor<T> tanh_op(const Tensor<T>& a);
template <typename T> Tensor<T> log_op(const Tensor<T>& a);
template <typename T> Tensor<T> exp_op(const Tensor<T>& a);
template <typename T> Tensor<T> softplus(const Tensor<T>& a);
template <typename T> Tensor<T> pow_scalar(const Tensor<T>& a, T p);

// Standard normal CDF, elementwise; gradient is the normal pdf.
template <typename T> Tensor<T> normal_cdf(const Tensor<T>& a);

// min(max(x, lo), hi); gradient passes only strictly inside (lo, hi).
template <typename T> Tensor<T> clamp(const Tensor<T>& a, T lo, T hi);

// max(x, bound) with a training-friendly gradient: passes wherever x >= bound
// or the incoming gradient pushes the value up. Keeps floored likelihoods
// trainable.
template <typename T> Tensor<T> lower_bound(const Tensor<T>& a, T bound);

// round-half-away-from-zero; not differentiable, output is detached.
template <typename T> Tensor<T> round_nograd(const Tensor<T>& a);

// Reductions to a (1,1,1,1) scalar; accumulate in double.
template <typename T> Tensor<T> sum(const Tensor<T>& a);
template <typename T> Tensor<T> mean(const Tensor<T>& a);

// Adds a per-channel bias of shape (1, C, 1, 1).
template <typename T> Tensor<T> bias_channels(const Tensor<T>& a, const Tensor<T>& bias);

// Multiplies by a per-channel factor of shape (1, C, 1, 1).
template <typename T> Tensor<T> scale_channels(const Tensor<T>& a, const Tensor<T>& s);

template <typename T> Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> slice_channels(const Tensor<T>& a, int64_t c0, int64_t c1);

// 2x2 average pool, stride 2, floor geometry.
template <typename T> Tensor<T> avg_pool2(const Tensor<T>& a);

// Pads bottom/right by reflection without repeating the edge sample,
// bouncing repeatedly for pads wider than the extent. Differentiable.
template <typename T> Tensor<T> pad_reflect_hw(const Tensor<T>& a, int64_t ph, int64_t pw);

// Keeps the top-left (h, w) window. Differentiable.
template <typename T> Tensor<T> crop_hw(const Tensor<T>& a, int64_t h, int64_t w);

// Cross-correlation with kernel (Cout, Cin/groups, kH, kW); optional bias of
// shape (1, Cout, 1, 1). Output spatial extent is
// floor((H + 2*padding - kH)/stride) + 1 per axis.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel,
                 const Tensor<T>* bias, int64_t stride, int64_t padding,
                 int64_t groups = 1);

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel,
                 int64_t stride, int64_t padding, int64_t groups = 1) {
  return conv2d(input, kernel, static_cast<const Tensor<T>*>(nullptr), stride,
                padding, groups);
}

// Adjoint of conv2d. Kernel layout is (Cin, Cout, kH, kW); output spatial
// extent is (H-1)*stride - 2*padding + kH per axis. For matching geometry,
// <conv2d(a,k), b> == <a, conv2d_transpose(b,k)>.
template <typename T>
Tensor<T> conv2d_transpose(const Tensor<T>& input, const Tensor<T>& kernel,
                           int64_t stride, int64_t padding);

enum class MaskType { A };

// conv2d with the kernel spatially masked so that position p in the output
// depends only on input positions strictly earlier in raster order. Stride 1,
// padding (k-1)/2; kernel extents must be odd.
template <typename T>
Tensor<T> masked_conv2d(const Tensor<T>& input, const Tensor<T>& kernel,
                        MaskType type = MaskType::A);

// The spatial 0/1 mask applied by masked_conv2d, shape (1, 1, kH, kW).
template <typename T> Tensor<T> raster_mask(int64_t kh, int64_t kw, MaskType type);

}  // namespace nc
