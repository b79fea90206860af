#include "noisecodec/factorized.hpp"

#include <cmath>

#include "noisecodec/mathfn.hpp"

namespace nc::ent {

template <typename T>
FactorizedPrior<T>::FactorizedPrior(int64_t channels, Rng& rng, int64_t stages, int64_t filters)
    : channels_(channels), stages_(stages), filters_(filters) {
  if (channels < 1 || stages < 2 || filters < 1)
    throw std::invalid_argument("factorized: bad dimensions");
  std::vector<int64_t> dims(static_cast<size_t>(stages) + 1, filters);
  dims.front() = 1;
  dims.back() = 1;
  const double scale = std::pow(10.0, 1.0 / static_cast<double>(stages));
  for (int64_t k = 0; k < stages; ++k) {
    const int64_t din = dims[static_cast<size_t>(k)], dout = dims[static_cast<size_t>(k) + 1];
    const T init = static_cast<T>(math::softplus_inv(1.0 / (scale * static_cast<double>(dout))));
    auto m = Tensor<T>::filled(Shape{channels * dout, din, 1, 1}, init);
    auto b = Tensor<T>::rand_uniform(Shape{1, channels * dout, 1, 1}, rng, T(-0.5), T(0.5));
    m.set_requires_grad(true);
    b.set_requires_grad(true);
    mats_.push_back(m);
    biases_.push_back(b);
    if (k < stages - 1) {
      auto f = Tensor<T>::zeros(Shape{1, channels * dout, 1, 1});
      f.set_requires_grad(true);
      factors_.push_back(f);
    }
  }
}

template <typename T>
Tensor<T> FactorizedPrior<T>::cdf(const Tensor<T>& x) const {
  if (x.shape().c != channels_)
    fail_shape("factorized", "expected " + std::to_string(channels_) + " channels, got " +
                                 x.shape().str());
  Tensor<T> h = x;
  for (size_t k = 0; k < mats_.size(); ++k) {
    h = conv2d(h, softplus(mats_[k]), 1, 0, channels_);
    h = bias_channels(h, biases_[k]);
    if (k + 1 < mats_.size())
      h = add(h, scale_channels(tanh_op(h), tanh_op(factors_[k])));
    else
      h = sigmoid(h);
  }
  return h;
}

template <typename T>
Tensor<T> FactorizedPrior<T>::likelihood(const Tensor<T>& x) const {
  auto up = cdf(add_scalar(x, T(0.5)));
  auto dn = cdf(add_scalar(x, T(-0.5)));
  return lower_bound(sub(up, dn), static_cast<T>(kLikelihoodFloor));
}

template <typename T>
std::vector<Tensor<T>> FactorizedPrior<T>::parameters() const {
  std::vector<Tensor<T>> out;
  for (size_t k = 0; k < mats_.size(); ++k) {
    out.push_back(mats_[k]);
    out.push_back(biases_[k]);
    if (k < factors_.size()) out.push_back(factors_[k]);
  }
  return out;
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>>> FactorizedPrior<T>::named_parameters(
    const std::string& prefix) const {
  std::vector<std::pair<std::string, Tensor<T>>> out;
  for (size_t k = 0; k < mats_.size(); ++k) {
    out.emplace_back(prefix + ".m" + std::to_string(k), mats_[k]);
    out.emplace_back(prefix + ".b" + std::to_string(k), biases_[k]);
    if (k < factors_.size()) out.emplace_back(prefix + ".f" + std::to_string(k), factors_[k]);
  }
  return out;
}

template <typename T>
std::vector<double> FactorizedPrior<T>::medians() const {
  NoGradGuard ng;
  std::vector<double> lo(static_cast<size_t>(channels_), -2.0);
  std::vector<double> hi(static_cast<size_t>(channels_), 2.0);
  auto eval = [&](const std::vector<double>& at) {
    std::vector<T> v(at.size());
    for (size_t i = 0; i < at.size(); ++i) v[i] = static_cast<T>(at[i]);
    auto t = Tensor<T>::from_data(Shape{1, channels_, 1, 1}, std::move(v));
    auto c = cdf(t);
    std::vector<double> out(at.size());
    auto cv = c.data();
    for (size_t i = 0; i < at.size(); ++i) out[i] = static_cast<double>(cv[i]);
    return out;
  };
  // Expand brackets until lo is below the median and hi above it.
  for (int round = 0; round < 64; ++round) {
    auto clo = eval(lo);
    auto chi = eval(hi);
    bool ok = true;
    for (size_t i = 0; i < lo.size(); ++i) {
      if (clo[i] >= 0.5) {
        lo[i] *= 2;
        ok = false;
      }
      if (chi[i] < 0.5) {
        hi[i] *= 2;
        ok = false;
      }
    }
    if (ok) break;
    if (round == 63) throw std::runtime_error("factorized: median bracket diverged");
  }
  std::vector<double> mid(lo.size());
  for (int it = 0; it < 80; ++it) {
    for (size_t i = 0; i < lo.size(); ++i) mid[i] = 0.5 * (lo[i] + hi[i]);
    auto cm = eval(mid);
    for (size_t i = 0; i < lo.size(); ++i) (cm[i] < 0.5 ? lo[i] : hi[i]) = mid[i];
  }
  for (size_t i = 0; i < lo.size(); ++i) mid[i] = 0.5 * (lo[i] + hi[i]);
  return mid;
}

template <typename T>
std::vector<SymbolModel> FactorizedPrior<T>::models() const {
  NoGradGuard ng;
  const auto med = medians();
  std::vector<int64_t> lo(med.size());
  std::vector<T> edges(med.size() * (kAlphabet + 1));
  for (size_t c = 0; c < med.size(); ++c) {
    lo[c] = std::llround(med[c]) - kWindow;
    for (int64_t j = 0; j <= kAlphabet; ++j)
      edges[c * (kAlphabet + 1) + static_cast<size_t>(j)] =
          static_cast<T>(static_cast<double>(lo[c] + j) - 0.5);
  }
  auto e = cdf(Tensor<T>::from_data(Shape{1, channels_, kAlphabet + 1, 1}, std::move(edges)));
  auto ev = e.data();

  std::vector<SymbolModel> out(med.size());
  std::vector<double> pmf(kAlphabet);
  for (size_t c = 0; c < med.size(); ++c) {
    const T* row = ev.data() + c * (kAlphabet + 1);
    pmf[0] = static_cast<double>(row[1]);
    for (int64_t j = 1; j + 1 < kAlphabet; ++j)
      pmf[static_cast<size_t>(j)] = static_cast<double>(row[j + 1]) - static_cast<double>(row[j]);
    pmf[kAlphabet - 1] = 1.0 - static_cast<double>(row[kAlphabet - 1]);
    out[c].lo = lo[c];
    out[c].freq = quantize_pmf(pmf);
    out[c].build_cum();
  }
  return out;
}

template class FactorizedPrior<float>;
template class FactorizedPrior<double>;

}  // namespace nc::ent
