#pragma once

#include <deque>
#include <string>
#include <vector>

#include "noisecodec/adam.hpp"
#include "noisecodec/codec.hpp"

namespace nc::train {

struct TrainConfig {
  int quality = 1;
  net::Metric metric = net::Metric::mse;
  double lambda_d = 0.0018;
  double lambda_g = 3.0;
  int64_t batch_size = 8;
  int64_t patch = 64;
  int64_t epochs = 60;
  std::vector<int64_t> lr_drops = {45, 55};  // lr *= 0.1 entering each listed epoch
  double base_lr = 1e-4;
  int64_t warmup_epochs = 0;  // linear ramp from 1e-6 up to base_lr
  double loss_cap_factor = 5.0;
  int64_t cap_window = 100;  // applied-loss history feeding the running median
  uint64_t seed = 0;

  void validate() const;
  std::string to_json() const;
  static TrainConfig from_json(const std::string& text);

  // The published distortion weights per quality tier. The perceptual set
  // only defines tiers 2, 3, 5, 6; other combinations are rejected.
  static double default_lambda(int quality, net::Metric metric);

  // Learning rate for a zero-based epoch index under warmup and drops.
  double lr_at(int64_t epoch) const;
};

struct LossReport {
  double bpp_z1 = 0, bpp_z2 = 0, D = 0, G = 0, total = 0;
};

// R terms are sum(-log2 likelihood) / pixel count of x; D is 255^2-scaled MSE
// or 1 - MS-SSIM (scales auto-reduced to the patch size). Distortion uses the
// unclamped reconstruction so saturated pixels keep their gradients.
Tensor<float> rd_loss(const Tensor<float>& x, const Tensor<float>& xhat,
                      const Tensor<float>& lik1, const Tensor<float>& lik2,
                      double lambda_d, net::Metric metric, LossReport* report = nullptr);

// Mean L1 distance to the guiding features, summed over the two levels.
// Callers pass detached targets; this function does not block gradients.
Tensor<float> guidance_loss(const Tensor<float>& z0, const Tensor<float>& z0gt,
                            const Tensor<float>& z1, const Tensor<float>& z1gt);

// Clean-branch rate-distortion objective on arbitrary extents (input is
// reflect-padded, the reconstruction cropped back). The quantization
// surrogate draws from a generator seeded with noise_seed, so repeated calls
// are identical.
Tensor<float> rd_objective(const net::CodecModel& model, const Tensor<float>& x,
                           double lambda_d, net::Metric metric, uint64_t noise_seed,
                           LossReport* report = nullptr);

// Full fine-tuning objective: denoising-branch RD against the clean image
// plus lambda_g times the guidance loss against detached clean-branch
// features.
Tensor<float> full_objective(const net::CodecModel& model, const Tensor<float>& x_noisy,
                             const Tensor<float>& x_clean, double lambda_d, double lambda_g,
                             net::Metric metric, uint64_t noise_seed,
                             LossReport* report = nullptr);

// Synthetic textured patches: oriented sinusoid mixtures over smooth color
// gradients with a little white noise, deterministic in the seed. Each entry
// is (1, 3, patch, patch) in [0, 1].
std::vector<Tensor<float>> make_texture_corpus(int64_t count, int64_t patch, uint64_t seed);

// Running lower-median window for the loss cap.
class LossWindow {
 public:
  explicit LossWindow(int64_t limit, double factor) : limit_(limit), factor_(factor) {}

  // +inf until the window has filled once.
  double cap() const;
  void push(double loss);
  const std::deque<double>& values() const { return vals_; }
  void restore(std::deque<double> vals) { vals_ = std::move(vals); }

 private:
  int64_t limit_;
  double factor_;
  std::deque<double> vals_;
};

// Applies one optimizer step unless the loss breaches the cap. A skipped
// step leaves parameters and optimizer state untouched; gradients are only
// computed for applied steps. Non-finite losses throw.
bool apply_step(Adam& opt, const Tensor<float>& loss, double cap);

struct EpochStats {
  int64_t epoch = 0;
  double lr = 0, bpp_z1 = 0, bpp_z2 = 0, D = 0, G = 0, L = 0;
  int64_t skipped = 0;
};

// One CSV row: epoch,lr,bpp_z1,bpp_z2,D,G,L,skipped_steps. The same
// formatting backs the log file and the tests that replay it.
std::string csv_row(const EpochStats& s);
inline constexpr const char* kCsvHeader = "epoch,lr,bpp_z1,bpp_z2,D,G,L,skipped_steps";

struct TrainResult {
  std::vector<EpochStats> epochs;
  int64_t skipped_total = 0;
};

// Rate-distortion pretraining of the guidance branch on clean images.
// Writes epoch_NNN.jdcm / .opt pairs plus pretrain_log.csv into out_dir when
// it is nonempty. start_epoch > 0 resumes: the model must already hold the
// epoch start_epoch-1 weights and the matching .opt sidecar must exist.
TrainResult pretrain(net::CodecModel& model, const std::vector<Tensor<float>>& images,
                     const TrainConfig& cfg, const std::string& out_dir,
                     int64_t start_epoch = 0);

// Fine-tuning with per-batch synthetic noise and the guidance loss. Same
// file conventions with finetune_log.csv.
TrainResult finetune(net::CodecModel& model, const std::vector<Tensor<float>>& images,
                     const TrainConfig& cfg, const std::string& out_dir,
                     int64_t start_epoch = 0);

// Mean RD objective (guidance term excluded) of the denoising branch over
// fixed noisy/clean pairs. The surrogate generator is seeded identically per
// call, so two models are scored on exactly the same draws.
double eval_objective(const net::CodecModel& model, const std::vector<Tensor<float>>& noisy,
                      const std::vector<Tensor<float>>& clean, double lambda_d,
                      net::Metric metric, uint64_t seed);

}  // namespace nc::train
