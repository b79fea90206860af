#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "noisecodec/factorized.hpp"
#include "noisecodec/layers.hpp"

namespace nc::net {

// Spatial reduction factors of the transform stack.
inline constexpr int64_t kPadMultiple = 64;
inline constexpr int64_t kZ1Stride = 16;
inline constexpr int64_t kZ2Stride = 64;

struct ArchConfig {
  int64_t n = 16;           // transform width
  int64_t m1 = 16;          // main latent channels
  int64_t m2 = 16;          // hyper latent channels
  int64_t ctx_kernel = 5;   // masked context extent, odd
  bool context_enabled = true;

  void validate() const;
  std::string to_json() const;
  static ArchConfig from_json(const std::string& text);
};

enum class Branch { guidance, denoising };
enum class QuantMode { train_noise, infer_round };
enum class Metric { mse, msssim };

std::string metric_name(Metric m);
Metric metric_from_name(const std::string& name);

// Additive U(-0.5, 0.5) surrogate (training) or residual rounding about mu
// (inference; mu omitted means rounding about zero).
Tensor<float> quantize(const Tensor<float>& z, QuantMode mode, Rng* rng = nullptr,
                       const Tensor<float>* mu = nullptr);

// Pads to the next multiple of kPadMultiple and remembers the original size.
struct PadRecord {
  int64_t h = 0, w = 0;
};
std::pair<Tensor<float>, PadRecord> pad_to_multiple(const Tensor<float>& x);

// P(unit bin around z) under N(mu, sigma), floored; all inputs same shape.
Tensor<float> gaussian_likelihood(const Tensor<float>& z, const Tensor<float>& mu,
                                  const Tensor<float>& sigma);

// Encoder-side quantization products, in coding order: sym2 walks z2 storage
// order; sym1 walks z1 position-major (y, x, then channel). z1hat elements are
// mu + residual.
struct CodedLatents {
  Tensor<float> z2hat, z1hat, mu, sigma;
  std::vector<int64_t> sym2, sym1;
};

class CodecModel {
 public:
  CodecModel(ArchConfig arch, uint64_t seed, int quality = 1, Metric metric = Metric::mse);

  const ArchConfig& arch() const { return arch_; }
  int quality() const { return quality_; }
  Metric metric() const { return metric_; }
  void set_tags(int quality, Metric metric);

  NamedParams named_params();
  std::vector<Tensor<float>> parameters();
  std::vector<Tensor<float>> compressor_parameters();  // everything but the denoisers
  std::vector<Tensor<float>> denoiser_parameters();

  // Eq.-style two-level analysis. Returns (z0-level, z1-level) features.
  std::pair<Tensor<float>, Tensor<float>> analyze(const Tensor<float>& x, Branch branch) const;

  Tensor<float> hyper_analysis(const Tensor<float>& z1) const;
  Tensor<float> hyper_synthesis(const Tensor<float>& z2hat) const;

  // Masked-causal features of the quantized main latent; zero tensor of the
  // same layout when the context model is disabled.
  Tensor<float> context_features(const Tensor<float>& z1hat) const;

  // Two-layer 1x1 head over concatenated hyper + context features.
  std::pair<Tensor<float>, Tensor<float>> entropy_parameters(const Tensor<float>& hyper_feat,
                                                             const Tensor<float>& ctx_feat) const;

  Tensor<float> synthesize(const Tensor<float>& z1hat) const;

  ent::FactorizedPrior<float>& prior() { return prior_; }
  const ent::FactorizedPrior<float>& prior() const { return prior_; }

  // Training-mode hyper path on the noisy-quantized latents: likelihoods for
  // the rate terms plus the surrogate-quantized tensors.
  struct TrainPath {
    Tensor<float> z1_tilde, z2_tilde, mu, sigma, lik1, lik2;
  };
  TrainPath train_path(const Tensor<float>& z1, Rng& rng) const;

  // Inference-mode quantization for coding. Walks the causal scan when the
  // context model is enabled; both coder sides reproduce it exactly.
  CodedLatents code_latents(const Tensor<float>& z1) const;

  // Decoder-side reconstruction of z1hat given the coded hyper latent and a
  // residual source (typically the entropy decoder).
  Tensor<float> decode_z1(const Tensor<float>& z2hat, Shape z1_shape,
                          const std::function<int64_t(size_t, float, float)>& residual_at) const;

 private:
  void scan_causal(const Tensor<float>& hyper_feat, Tensor<float>& z1hat, Tensor<float>* mu_out,
                   Tensor<float>* sigma_out,
                   const std::function<int64_t(size_t, float, float)>& residual_at) const;

  ArchConfig arch_;
  int quality_;
  Metric metric_;
  Rng rng_;  // construction-time stream; members below draw from it in order

  ConvLayer ga0_c1_;
  ResBlock ga0_r1_;
  ConvLayer ga0_c2_;
  ResBlock ga0_r2_;
  ConvLayer ga1_c1_;
  ResBlock ga1_r1_;
  ConvLayer ga1_c2_;
  ResBlock ga1_r2_;
  AttentionBlock ga1_att_;
  Denoiser d0_, d1_;
  AttentionBlock gs_att_;
  TConvLayer gs_t1_;
  ResBlock gs_r1_;
  TConvLayer gs_t2_;
  ResBlock gs_r2_;
  TConvLayer gs_t3_;
  ResBlock gs_r3_;
  TConvLayer gs_t4_;
  ConvLayer ha_c1_;
  ResBlock ha_r1_;
  ConvLayer ha_c2_;
  ResBlock ha_r2_;
  TConvLayer hs_t1_;
  ResBlock hs_r1_;
  TConvLayer hs_t2_;
  Tensor<float> ctx_w_, ctx_b_;
  ConvLayer ep1_, ep2_;
  ent::FactorizedPrior<float> prior_;
};

// Versioned binary checkpoint with named parameter records.
void save_checkpoint(const std::string& path, CodecModel& model);
CodecModel load_checkpoint(const std::string& path);

}  // namespace nc::net
