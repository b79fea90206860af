#include "noisecodec/metrics.hpp"

#include <cmath>
#include <limits>

#include "noisecodec/ops.hpp"

namespace nc::metrics {

namespace {

constexpr double kWeights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

template <typename T>
Tensor<T> gaussian_window_row(int64_t channels) {
  double g[11], sum = 0;
  for (int i = 0; i < 11; ++i) {
    const double d = i - 5.0;
    g[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
    sum += g[i];
  }
  std::vector<T> k(static_cast<size_t>(channels) * 11);
  for (int64_t c = 0; c < channels; ++c)
    for (int i = 0; i < 11; ++i) k[c * 11 + i] = static_cast<T>(g[i] / sum);
  return Tensor<T>::from_data(Shape{channels, 1, 1, 11}, k);
}

// Separable valid-window blur, one group per channel.
template <typename T>
Tensor<T> blur(const Tensor<T>& x, const Tensor<T>& row) {
  const int64_t c = x.shape().c;
  auto h = conv2d(x, row, 1, 0, c);
  std::vector<T> colk(row.data().begin(), row.data().end());
  auto col = Tensor<T>::from_data(Shape{c, 1, 11, 1}, colk);
  return conv2d(h, col, 1, 0, c);
}

template <typename T>
struct SsimMaps {
  Tensor<T> luminance;  // (2 mu_a mu_b + C1) / (mu_a^2 + mu_b^2 + C1)
  Tensor<T> contrast;   // (2 cov + C2) / (var_a + var_b + C2)
};

template <typename T>
SsimMaps<T> ssim_maps(const Tensor<T>& a, const Tensor<T>& b, const Tensor<T>& row) {
  auto mu_a = blur(a, row);
  auto mu_b = blur(b, row);
  auto mu_aa = mul(mu_a, mu_a);
  auto mu_bb = mul(mu_b, mu_b);
  auto mu_ab = mul(mu_a, mu_b);
  auto var_a = sub(blur(mul(a, a), row), mu_aa);
  auto var_b = sub(blur(mul(b, b), row), mu_bb);
  auto cov = sub(blur(mul(a, b), row), mu_ab);

  auto l_num = add_scalar(scale(mu_ab, T(2)), static_cast<T>(kC1));
  auto l_den = add_scalar(add(mu_aa, mu_bb), static_cast<T>(kC1));
  auto c_num = add_scalar(scale(cov, T(2)), static_cast<T>(kC2));
  auto c_den = add_scalar(add(var_a, var_b), static_cast<T>(kC2));
  return {div(l_num, l_den), div(c_num, c_den)};
}

}  // namespace

double psnr(const img::ImageBuffer& a, const img::ImageBuffer& b) {
  if (a.width != b.width || a.height != b.height)
    fail_shape("psnr", "extent mismatch");
  double mse = 0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - b.data[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.data.size());
  if (mse == 0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

int max_scales(int64_t h, int64_t w) {
  int s = 0;
  while (s < 5 && std::min(h, w) >= (int64_t{11} << s)) ++s;
  return s;
}

template <typename T>
Tensor<T> ms_ssim_t(const Tensor<T>& a, const Tensor<T>& b, int scales) {
  if (!(a.shape() == b.shape())) fail_shape("ms_ssim", "extent mismatch");
  const int smax = max_scales(a.shape().h, a.shape().w);
  if (scales < 1 || scales > smax)
    fail_shape("ms_ssim", "image supports at most " + std::to_string(smax) +
                              " scales (needs min extent 2^(s-1)*11), requested " +
                              std::to_string(scales));
  double wsum = 0;
  for (int i = 0; i < scales; ++i) wsum += kWeights[i];

  auto row = gaussian_window_row<T>(a.shape().c);
  Tensor<T> x = a, y = b;
  Tensor<T> result = Tensor<T>::scalar(T(1));
  for (int s = 0; s < scales; ++s) {
    auto maps = ssim_maps(x, y, row);
    Tensor<T> term = s + 1 < scales ? mean(maps.contrast)
                                    : mean(mul(maps.luminance, maps.contrast));
    // Contrast can dip below zero on adversarial inputs; floor it so the
    // fractional power stays defined.
    term = lower_bound(term, static_cast<T>(1e-8));
    result = mul(result, pow_scalar(term, static_cast<T>(kWeights[s] / wsum)));
    if (s + 1 < scales) {
      x = avg_pool2(x);
      y = avg_pool2(y);
    }
  }
  return result;
}

template Tensor<float> ms_ssim_t(const Tensor<float>&, const Tensor<float>&, int);
template Tensor<double> ms_ssim_t(const Tensor<double>&, const Tensor<double>&, int);

double ms_ssim(const img::ImageBuffer& a, const img::ImageBuffer& b, int scales) {
  if (a.width != b.width || a.height != b.height)
    fail_shape("ms_ssim", "extent mismatch");
  if (scales == 0) scales = max_scales(a.height, a.width);
  NoGradGuard ng;
  auto mk = [](const img::ImageBuffer& i) {
    std::vector<double> v(i.data.begin(), i.data.end());
    return Tensor<double>::from_data(Shape{1, 3, i.height, i.width}, v);
  };
  return ms_ssim_t(mk(a), mk(b), scales).item();
}

double ms_ssim_db(double v) {
  if (v >= 1.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(1.0 - v);
}

}  // namespace nc::metrics
