#pragma once

#include <iosfwd>
#include <vector>

#include "noisecodec/tensor.hpp"

namespace nc {

// Adam with bias correction over a fixed list of parameters. Gradients are
// read from the parameters' own grad buffers; an empty buffer counts as a
// zero gradient. Moments are kept per parameter with matching shapes.
struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  explicit Adam(std::vector<Tensor<float>> params, AdamConfig cfg = AdamConfig());

  void step();
  void zero_grad();

  double lr() const { return cfg_.lr; }
  void set_lr(double lr) { cfg_.lr = lr; }
  int64_t t() const { return t_; }

  // Moment buffers in parameter order, for checkpointing.
  const std::vector<std::vector<float>>& m() const { return m_; }
  const std::vector<std::vector<float>>& v() const { return v_; }
  void restore(int64_t t, std::vector<std::vector<float>> m,
               std::vector<std::vector<float>> v);

 private:
  std::vector<Tensor<float>> params_;
  AdamConfig cfg_;
  int64_t t_ = 0;
  std::vector<std::vector<float>> m_, v_;
};

}  // namespace nc
