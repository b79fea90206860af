#include "noisecodec/noise.hpp"

#include <algorithm>
#include <cmath>

#include "noisecodec/common.hpp"

namespace nc::noise {

NoiseParams gain_preset(int gain) {
  switch (gain) {
    case 1: return {std::pow(10.0, -2.1), std::pow(10.0, -2.6)};
    case 2: return {std::pow(10.0, -1.8), std::pow(10.0, -2.3)};
    case 4: return {std::pow(10.0, -1.4), std::pow(10.0, -1.9)};
    case 8: return {std::pow(10.0, -1.1), std::pow(10.0, -1.5)};
    default: fail_shape("gain_preset", "gain must be 1, 2, 4, or 8");
  }
}

double gamma_forward(double y) {
  y = std::clamp(y, 0.0, 1.0);
  if (y <= kGammaB) return kGammaM * y;
  return (1.0 + kGammaA) * std::pow(y, 1.0 / kGammaExp) - kGammaA;
}

double gamma_inverse(double x) {
  x = std::clamp(x, 0.0, 1.0);
  if (x <= kGammaM * kGammaB) return x / kGammaM;
  return std::pow((x + kGammaA) / (1.0 + kGammaA), kGammaExp);
}

std::vector<float> synthesize_noise(std::span<const float> x, NoiseParams p,
                                    uint64_t seed, std::vector<double>* pre_clamp) {
  if (p.sigma_r < 0 || p.sigma_s < 0)
    fail_shape("synthesize_noise", "negative noise parameter");
  check_finite(x.data(), static_cast<int64_t>(x.size()), "synthesize_noise");

  std::vector<float> out(x.size());
  if (pre_clamp) pre_clamp->resize(x.size());
  if (p.sigma_r == 0 && p.sigma_s == 0) {
    for (size_t i = 0; i < x.size(); ++i) {
      out[i] = std::clamp(x[i], 0.f, 1.f);
      if (pre_clamp) (*pre_clamp)[i] = gamma_inverse(out[i]);
    }
    return out;
  }

  Rng rng(seed);
  const double var_floor = p.sigma_r * p.sigma_r;
  for (size_t i = 0; i < x.size(); ++i) {
    const double y = gamma_inverse(x[i]);
    const double sd = std::sqrt(p.sigma_s * y + var_floor);
    const double noisy = y + sd * rng.normal();
    if (pre_clamp) (*pre_clamp)[i] = noisy;
    out[i] = static_cast<float>(gamma_forward(std::clamp(noisy, 0.0, 1.0)));
  }
  return out;
}

NoiseParams sample_noise_params(Rng& rng) {
  NoiseParams p;
  p.sigma_r = std::pow(10.0, rng.uniform(-3.0, -1.5));
  p.sigma_s = std::pow(10.0, rng.uniform(-4.0, -2.0));
  return p;
}

}  // namespace nc::noise
