#pragma once

#include "noisecodec/image.hpp"
#include "noisecodec/tensor.hpp"

namespace nc::metrics {

// 10*log10(1/MSE) on [0,1] values; +inf for identical images.
double psnr(const img::ImageBuffer& a, const img::ImageBuffer& b);

// Largest scale count s <= 5 with min(h, w) >= 2^(s-1) * 11; 0 if even a
// single 11-tap window does not fit.
int max_scales(int64_t h, int64_t w);

// Differentiable MS-SSIM over matching (B,C,H,W) tensors: canonical weights,
// 11x11 Gaussian window sigma 1.5, k1=0.01, k2=0.03, valid-window SSIM, 2x
// average pooling between scales. Fewer than 5 scales renormalizes the
// leading weights. Returns a scalar tensor.
template <typename T>
Tensor<T> ms_ssim_t(const Tensor<T>& a, const Tensor<T>& b, int scales);

// Evaluation wrapper: double precision, gradient-free. scales = 0 picks
// max_scales automatically.
double ms_ssim(const img::ImageBuffer& a, const img::ImageBuffer& b, int scales = 0);

// -10*log10(1 - v); +inf at v = 1.
double ms_ssim_db(double v);

}  // namespace nc::metrics
