#pragma once

#include <string>
#include <utility>
#include <vector>

#include "noisecodec/entropy.hpp"
#include "noisecodec/ops.hpp"
#include "noisecodec/rng.hpp"

namespace nc::ent {

// Likelihoods below this are floored before taking logs.
inline constexpr double kLikelihoodFloor = 1e-9;

// Per-channel learned prior: a monotone scalar CDF built from a stack of
// softplus-weighted affine stages with tanh gating, evaluated with grouped
// 1x1 convolutions so all channels run in one pass. Discretizing the CDF to
// unit bins gives the pmf used both for the training rate term and for the
// coder tables.
template <typename T>
class FactorizedPrior {
 public:
  FactorizedPrior(int64_t channels, Rng& rng, int64_t stages = 4, int64_t filters = 3);

  // Elementwise CDF of x, per channel; x is (B, C, H, W), result in (0, 1).
  Tensor<T> cdf(const Tensor<T>& x) const;

  // P(symbol covers x) = cdf(x + 0.5) - cdf(x - 0.5), floored.
  Tensor<T> likelihood(const Tensor<T>& x) const;

  std::vector<Tensor<T>> parameters() const;
  std::vector<std::pair<std::string, Tensor<T>>> named_parameters(const std::string& prefix) const;

  int64_t channels() const { return channels_; }

  // Scalar median of each channel's distribution, found by bisection.
  std::vector<double> medians() const;

  // Coder-ready window models, one per channel, centered at the medians.
  std::vector<SymbolModel> models() const;

 private:
  int64_t channels_, stages_, filters_;
  std::vector<Tensor<T>> mats_, biases_, factors_;
};

extern template class FactorizedPrior<float>;
extern template class FactorizedPrior<double>;

}  // namespace nc::ent
