#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "noisecodec/rng.hpp"

namespace nc::noise {

// sRGB gamma constants; the piecewise halves meet at Y = b.
inline constexpr double kGammaA = 0.055;
inline constexpr double kGammaB = 0.0031308;
inline constexpr double kGammaM = 12.92;
inline constexpr double kGammaExp = 2.4;

struct NoiseParams {
  double sigma_r = 0;  // readout noise: contributes sigma_r^2 to the variance
  double sigma_s = 0;  // shot noise: variance slope against true intensity
};

// Preset pairs for gains 1, 2, 4, 8; other gains are rejected.
NoiseParams gain_preset(int gain);

double gamma_forward(double y);
double gamma_inverse(double x);

// Planar [0,1] image in, noisy image out; out-of-range inputs are clamped
// first. One normal variate is drawn per element in storage order. If
// pre_clamp is non-null it receives the linear-domain samples before the
// [0,1] clamp (for variance measurements).
std::vector<float> synthesize_noise(std::span<const float> x, NoiseParams p,
                                    uint64_t seed,
                                    std::vector<double>* pre_clamp = nullptr);

// Log-uniform draws: log10(sigma_r) ~ U[-3, -1.5], log10(sigma_s) ~ U[-4, -2],
// sigma_r drawn first.
NoiseParams sample_noise_params(Rng& rng);

}  // namespace nc::noise
