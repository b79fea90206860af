#include "noisecodec/adam.hpp"

#include <cmath>

namespace nc {

Adam::Adam(std::vector<Tensor<float>> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (auto& p : params_) {
    m_.emplace_back(static_cast<size_t>(p.numel()), 0.f);
    v_.emplace_back(static_cast<size_t>(p.numel()), 0.f);
  }
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t i = 0; i < params_.size(); ++i) {
    auto g = params_[i].grad();
    if (g.empty()) {
      // Zero gradient still decays the moments.
      for (size_t j = 0; j < m_[i].size(); ++j) {
        m_[i][j] = static_cast<float>(cfg_.beta1 * m_[i][j]);
        v_[i][j] = static_cast<float>(cfg_.beta2 * v_[i][j]);
      }
    } else {
      for (size_t j = 0; j < m_[i].size(); ++j) {
        m_[i][j] = static_cast<float>(cfg_.beta1 * m_[i][j] + (1.0 - cfg_.beta1) * g[j]);
        v_[i][j] = static_cast<float>(cfg_.beta2 * v_[i][j] +
                                      (1.0 - cfg_.beta2) * static_cast<double>(g[j]) * g[j]);
      }
    }
    auto p = params_[i].data();
    for (size_t j = 0; j < m_[i].size(); ++j) {
      const double mhat = m_[i][j] / c1;
      const double vhat = v_[i][j] / c2;
      p[j] = static_cast<float>(p[j] - cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps));
    }
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

void Adam::restore(int64_t t, std::vector<std::vector<float>> m,
                   std::vector<std::vector<float>> v) {
  if (m.size() != params_.size() || v.size() != params_.size())
    fail_shape("Adam::restore", "moment count mismatch");
  for (size_t i = 0; i < params_.size(); ++i)
    if (m[i].size() != m_[i].size() || v[i].size() != v_[i].size())
      fail_shape("Adam::restore", "moment extent mismatch");
  t_ = t;
  m_ = std::move(m);
  v_ = std::move(v);
}

}  // namespace nc
