#include "noisecodec/train.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "json.hpp"
#include "noisecodec/metrics.hpp"
#include "noisecodec/noise.hpp"

namespace nc::train {

namespace {

constexpr double kWarmupFloor = 1e-6;
constexpr uint64_t kFinetuneStream = 1u << 20;

const double kLambdaMse[] = {0.0018, 0.0035, 0.0067, 0.0130, 0.0250, 0.0483};

std::string epoch_stem(const std::string& dir, int64_t epoch) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "epoch_%03lld", static_cast<long long>(epoch));
  return (std::filesystem::path(dir) / buf).string();
}

}  // namespace

void TrainConfig::validate() const {
  if (quality < 1 || quality > 6)
    throw std::invalid_argument("train config: quality must be 1..6");
  if (!(lambda_d > 0)) throw std::invalid_argument("train config: lambda_d must be > 0");
  if (lambda_g < 0) throw std::invalid_argument("train config: lambda_g must be >= 0");
  if (batch_size < 1 || patch < 1 || epochs < 1)
    throw std::invalid_argument("train config: batch, patch, and epochs must be positive");
  if (warmup_epochs < 0 || warmup_epochs >= epochs)
    throw std::invalid_argument("train config: warmup must be shorter than the run");
  if (!(base_lr > 0)) throw std::invalid_argument("train config: base_lr must be > 0");
  if (loss_cap_factor <= 0 || cap_window < 1)
    throw std::invalid_argument("train config: loss cap settings must be positive");
  for (int64_t d : lr_drops)
    if (d < 0 || d >= epochs)
      throw std::invalid_argument("train config: lr drop outside the schedule");
}

std::string TrainConfig::to_json() const {
  nlohmann::json j;
  j["quality"] = quality;
  j["metric"] = net::metric_name(metric);
  j["lambda_d"] = lambda_d;
  j["lambda_g"] = lambda_g;
  j["batch_size"] = batch_size;
  j["patch"] = patch;
  j["epochs"] = epochs;
  j["lr_drops"] = lr_drops;
  j["base_lr"] = base_lr;
  j["warmup_epochs"] = warmup_epochs;
  j["loss_cap_factor"] = loss_cap_factor;
  j["cap_window"] = cap_window;
  j["seed"] = seed;
  return j.dump();
}

TrainConfig TrainConfig::from_json(const std::string& text) {
  TrainConfig c;
  try {
    auto j = nlohmann::json::parse(text);
    c.quality = j.value("quality", c.quality);
    if (j.contains("metric")) c.metric = net::metric_from_name(j.at("metric"));
    c.lambda_d = j.value("lambda_d", c.lambda_d);
    c.lambda_g = j.value("lambda_g", c.lambda_g);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.patch = j.value("patch", c.patch);
    c.epochs = j.value("epochs", c.epochs);
    c.lr_drops = j.value("lr_drops", c.lr_drops);
    c.base_lr = j.value("base_lr", c.base_lr);
    c.warmup_epochs = j.value("warmup_epochs", c.warmup_epochs);
    c.loss_cap_factor = j.value("loss_cap_factor", c.loss_cap_factor);
    c.cap_window = j.value("cap_window", c.cap_window);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw DecodeError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

double TrainConfig::default_lambda(int quality, net::Metric metric) {
  if (quality < 1 || quality > 6)
    throw std::invalid_argument("quality must be 1..6");
  if (metric == net::Metric::mse) return kLambdaMse[quality - 1];
  switch (quality) {
    case 2: return 4.58;
    case 3: return 8.73;
    case 5: return 31.73;
    case 6: return 60.50;
    default:
      throw std::invalid_argument("perceptual tiers are defined for qualities 2, 3, 5, 6");
  }
}

double TrainConfig::lr_at(int64_t epoch) const {
  if (epoch < warmup_epochs)
    return kWarmupFloor + (base_lr - kWarmupFloor) * static_cast<double>(epoch) /
                              static_cast<double>(warmup_epochs);
  double lr = base_lr;
  for (int64_t d : lr_drops)
    if (epoch >= d) lr *= 0.1;
  return lr;
}

Tensor<float> rd_loss(const Tensor<float>& x, const Tensor<float>& xhat,
                      const Tensor<float>& lik1, const Tensor<float>& lik2,
                      double lambda_d, net::Metric metric, LossReport* report) {
  if (!(lambda_d > 0)) throw std::invalid_argument("rd_loss: lambda_d must be positive");
  if (!(x.shape() == xhat.shape()))
    fail_shape("rd_loss", "reconstruction " + xhat.shape().str() +
                              " does not match source " + x.shape().str());
  const Shape& s = x.shape();
  const double px = static_cast<double>(s.b * s.h * s.w);
  const float to_bpp = static_cast<float>(1.0 / (std::log(2.0) * px));
  auto bpp1 = scale(sum(neg(log_op(lik1))), to_bpp);
  auto bpp2 = scale(sum(neg(log_op(lik2))), to_bpp);

  Tensor<float> d;
  if (metric == net::Metric::mse) {
    d = scale(mean(pow_scalar(sub(x, xhat), 2.0f)), 255.0f * 255.0f);
  } else {
    const int scales = metrics::max_scales(s.h, s.w);
    d = add_scalar(neg(metrics::ms_ssim_t<float>(x, xhat, scales)), 1.0f);
  }
  auto loss = add(add(bpp1, bpp2), scale(d, static_cast<float>(lambda_d)));
  if (report) {
    report->bpp_z1 = bpp1.item();
    report->bpp_z2 = bpp2.item();
    report->D = d.item();
    report->G = 0.0;
    report->total = loss.item();
  }
  return loss;
}

Tensor<float> guidance_loss(const Tensor<float>& z0, const Tensor<float>& z0gt,
                            const Tensor<float>& z1, const Tensor<float>& z1gt) {
  return add(mean(nc::abs(sub(z0, z0gt))), mean(nc::abs(sub(z1, z1gt))));
}

Tensor<float> rd_objective(const net::CodecModel& model, const Tensor<float>& x,
                           double lambda_d, net::Metric metric, uint64_t noise_seed,
                           LossReport* report) {
  Rng qrng(noise_seed);
  auto padded = net::pad_to_multiple(x).first;
  auto z1 = model.analyze(padded, net::Branch::guidance).second;
  auto tp = model.train_path(z1, qrng);
  auto xhat = crop_hw(model.synthesize(tp.z1_tilde), x.shape().h, x.shape().w);
  return rd_loss(x, xhat, tp.lik1, tp.lik2, lambda_d, metric, report);
}

Tensor<float> full_objective(const net::CodecModel& model, const Tensor<float>& x_noisy,
                             const Tensor<float>& x_clean, double lambda_d, double lambda_g,
                             net::Metric metric, uint64_t noise_seed, LossReport* report) {
  if (!(x_noisy.shape() == x_clean.shape()))
    fail_shape("full_objective", "noisy " + x_noisy.shape().str() + " vs clean " +
                                     x_clean.shape().str());
  Rng qrng(noise_seed);
  Tensor<float> z0gt, z1gt;
  {
    NoGradGuard ng;
    auto clean_padded = net::pad_to_multiple(x_clean).first;
    std::tie(z0gt, z1gt) = model.analyze(clean_padded, net::Branch::guidance);
  }
  auto noisy_padded = net::pad_to_multiple(x_noisy).first;
  auto [z0, z1] = model.analyze(noisy_padded, net::Branch::denoising);
  auto tp = model.train_path(z1, qrng);
  auto xhat = crop_hw(model.synthesize(tp.z1_tilde), x_clean.shape().h, x_clean.shape().w);
  LossReport r;
  auto rd = rd_loss(x_clean, xhat, tp.lik1, tp.lik2, lambda_d, metric, &r);
  auto g = guidance_loss(z0, z0gt, z1, z1gt);
  auto loss = add(rd, scale(g, static_cast<float>(lambda_g)));
  r.G = g.item();
  r.total = loss.item();
  if (report) *report = r;
  return loss;
}

std::vector<Tensor<float>> make_texture_corpus(int64_t count, int64_t patch, uint64_t seed) {
  if (count < 1 || patch < 1)
    throw std::invalid_argument("texture corpus: count and patch must be positive");
  std::vector<Tensor<float>> out;
  out.reserve(static_cast<size_t>(count));
  Rng base(seed);
  for (int64_t i = 0; i < count; ++i) {
    Rng r = base.fork(static_cast<uint64_t>(i));
    double c0[3], gx[3], gy[3];
    for (int ch = 0; ch < 3; ++ch) {
      c0[ch] = 0.25 + 0.5 * r.uniform();
      gx[ch] = r.uniform(-0.3, 0.3) / static_cast<double>(patch);
      gy[ch] = r.uniform(-0.3, 0.3) / static_cast<double>(patch);
    }
    const int waves = 2 + static_cast<int>(r.uniform() * 3.0);
    struct Wave {
      double fx, fy, phase, amp, gain[3];
    };
    std::vector<Wave> ws(static_cast<size_t>(waves));
    for (auto& wv : ws) {
      const double f = r.uniform(0.05, 0.55);
      const double th = r.uniform(0.0, 6.283185307179586);
      wv.fx = f * std::cos(th);
      wv.fy = f * std::sin(th);
      wv.phase = r.uniform(0.0, 6.283185307179586);
      wv.amp = r.uniform(0.04, 0.18);
      for (int ch = 0; ch < 3; ++ch) wv.gain[ch] = r.uniform(0.5, 1.0);
    }
    auto t = Tensor<float>::zeros(Shape{1, 3, patch, patch});
    auto d = t.data();
    for (int ch = 0; ch < 3; ++ch)
      for (int64_t y = 0; y < patch; ++y)
        for (int64_t x = 0; x < patch; ++x) {
          double v = c0[ch] + gx[ch] * static_cast<double>(x) +
                     gy[ch] * static_cast<double>(y);
          for (const auto& wv : ws)
            v += wv.amp * wv.gain[ch] *
                 std::sin(wv.fx * static_cast<double>(x) +
                          wv.fy * static_cast<double>(y) + wv.phase);
          v += 0.02 * (r.uniform() - 0.5);
          d[static_cast<size_t>((ch * patch + y) * patch + x)] =
              static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
    out.push_back(std::move(t));
  }
  return out;
}

double LossWindow::cap() const {
  if (static_cast<int64_t>(vals_.size()) < limit_)
    return std::numeric_limits<double>::infinity();
  // Lower median: deterministic for even window sizes.
  std::vector<double> v(vals_.begin(), vals_.end());
  const size_t mid = (v.size() - 1) / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<ptrdiff_t>(mid), v.end());
  return factor_ * v[mid];
}

void LossWindow::push(double loss) {
  vals_.push_back(loss);
  if (static_cast<int64_t>(vals_.size()) > limit_) vals_.pop_front();
}

bool apply_step(Adam& opt, const Tensor<float>& loss, double cap) {
  const double v = loss.item();
  if (!std::isfinite(v))
    throw std::runtime_error("training diverged: non-finite loss");
  if (v > cap) return false;
  opt.zero_grad();
  backward(loss);
  opt.step();
  return true;
}

std::string csv_row(const EpochStats& s) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%lld,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%lld",
                static_cast<long long>(s.epoch), s.lr, s.bpp_z1, s.bpp_z2, s.D, s.G,
                s.L, static_cast<long long>(s.skipped));
  return buf;
}

namespace {

void append_csv(const std::string& path, const EpochStats& s) {
  const bool fresh = !std::filesystem::exists(path);
  std::ofstream os(path, std::ios::app);
  if (!os) throw std::runtime_error("cannot write training log: " + path);
  if (fresh) os << kCsvHeader << "\n";
  os << csv_row(s) << "\n";
}

void put_u32f(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64f(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void save_opt_state(const std::string& path, const Adam& opt, const LossWindow& win) {
  std::string buf = "JDOS";
  put_u32f(buf, 1);
  put_u64f(buf, static_cast<uint64_t>(opt.t()));
  put_u32f(buf, static_cast<uint32_t>(opt.m().size()));
  for (size_t p = 0; p < opt.m().size(); ++p) {
    put_u32f(buf, static_cast<uint32_t>(opt.m()[p].size()));
    for (float v : opt.m()[p]) put_u32f(buf, std::bit_cast<uint32_t>(v));
    for (float v : opt.v()[p]) put_u32f(buf, std::bit_cast<uint32_t>(v));
  }
  put_u32f(buf, static_cast<uint32_t>(win.values().size()));
  for (double v : win.values()) put_u64f(buf, std::bit_cast<uint64_t>(v));
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write optimizer state: " + path);
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void load_opt_state(const std::string& path, Adam& opt, LossWindow& win) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read optimizer state: " + path);
  std::string data((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  size_t pos = 0;
  auto need = [&](size_t n) {
    if (pos + n > data.size()) throw DecodeError("truncated optimizer state");
  };
  auto u32 = [&]() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<uint8_t>(data[pos++])) << (8 * i);
    return v;
  };
  auto u64 = [&]() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<uint8_t>(data[pos++])) << (8 * i);
    return v;
  };
  need(4);
  if (data.compare(0, 4, "JDOS") != 0) throw DecodeError("bad optimizer state magic");
  pos = 4;
  if (u32() != 1) throw DecodeError("unsupported optimizer state version");
  const int64_t t = static_cast<int64_t>(u64());
  const uint32_t np = u32();
  if (np != opt.m().size()) throw DecodeError("optimizer state parameter count mismatch");
  std::vector<std::vector<float>> m(np), v(np);
  for (uint32_t p = 0; p < np; ++p) {
    const uint32_t n = u32();
    if (n != opt.m()[p].size()) throw DecodeError("optimizer state length mismatch");
    m[p].resize(n);
    v[p].resize(n);
    for (uint32_t i = 0; i < n; ++i) m[p][i] = std::bit_cast<float>(u32());
    for (uint32_t i = 0; i < n; ++i) v[p][i] = std::bit_cast<float>(u32());
  }
  const uint32_t wn = u32();
  std::deque<double> wv;
  for (uint32_t i = 0; i < wn; ++i) wv.push_back(std::bit_cast<double>(u64()));
  if (pos != data.size()) throw DecodeError("trailing bytes in optimizer state");
  opt.restore(t, std::move(m), std::move(v));
  win.restore(std::move(wv));
}

// Stacks batch_size patches (random crops when images are larger) chosen by
// the permutation starting at slot `first`.
Tensor<float> make_batch(const std::vector<Tensor<float>>& images,
                         const std::vector<size_t>& perm, size_t first, int64_t batch,
                         int64_t patch, Rng& rng) {
  auto out = Tensor<float>::zeros(Shape{batch, 3, patch, patch});
  auto od = out.data();
  for (int64_t j = 0; j < batch; ++j) {
    const auto& im = images[perm[(first + static_cast<size_t>(j)) % perm.size()]];
    const Shape& s = im.shape();
    int64_t oy = 0, ox = 0;
    if (s.h > patch) oy = static_cast<int64_t>(rng.uniform() * static_cast<double>(s.h - patch + 1));
    if (s.w > patch) ox = static_cast<int64_t>(rng.uniform() * static_cast<double>(s.w - patch + 1));
    auto id = im.data();
    for (int64_t c = 0; c < 3; ++c)
      for (int64_t y = 0; y < patch; ++y)
        for (int64_t x = 0; x < patch; ++x)
          od[static_cast<size_t>(((j * 3 + c) * patch + y) * patch + x)] =
              id[static_cast<size_t>((c * s.h + oy + y) * s.w + ox + x)];
  }
  return out;
}

Tensor<float> add_batch_noise(const Tensor<float>& x, noise::NoiseParams p, uint64_t seed) {
  auto noisy = noise::synthesize_noise(x.data(), p, seed);
  return Tensor<float>::from_data(x.shape(), std::move(noisy));
}

TrainResult run_phase(net::CodecModel& model, const std::vector<Tensor<float>>& images,
                      const TrainConfig& cfg, const std::string& out_dir,
                      int64_t start_epoch, bool fine) {
  cfg.validate();
  if (images.empty()) throw std::invalid_argument("training set is empty");
  for (const auto& im : images) {
    const Shape& s = im.shape();
    if (s.b != 1 || s.c != 3 || s.h < cfg.patch || s.w < cfg.patch)
      fail_shape("train", "image " + s.str() + " unusable for patch size " +
                              std::to_string(cfg.patch));
  }
  if (start_epoch < 0 || start_epoch >= cfg.epochs)
    throw std::invalid_argument("start epoch outside the schedule");

  auto params = fine ? model.parameters() : model.compressor_parameters();
  AdamConfig acfg;
  acfg.lr = cfg.lr_at(start_epoch);
  Adam opt(params, acfg);
  LossWindow window(cfg.cap_window, cfg.loss_cap_factor);
  if (start_epoch > 0) {
    if (out_dir.empty())
      throw std::invalid_argument("resume requires a checkpoint directory");
    load_opt_state(epoch_stem(out_dir, start_epoch - 1) + ".opt", opt, window);
  }
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

  const int64_t steps =
      std::max<int64_t>(1, static_cast<int64_t>(images.size()) / cfg.batch_size);
  const uint64_t stream_base = fine ? kFinetuneStream : 0;
  const std::string log_name = fine ? "finetune_log.csv" : "pretrain_log.csv";

  TrainResult result;
  for (int64_t epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.lr_at(epoch);
    opt.set_lr(lr);
    Rng base(cfg.seed);
    Rng erng = base.fork(stream_base + static_cast<uint64_t>(epoch));
    std::vector<size_t> perm(images.size());
    for (size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    for (size_t i = perm.size(); i > 1; --i)
      std::swap(perm[i - 1],
                perm[static_cast<size_t>(erng.uniform() * static_cast<double>(i))]);

    EpochStats st;
    st.epoch = epoch;
    st.lr = lr;
    int64_t applied = 0;
    for (int64_t step = 0; step < steps; ++step) {
      auto x = make_batch(images, perm, static_cast<size_t>(step * cfg.batch_size),
                          cfg.batch_size, cfg.patch, erng);
      LossReport rep;
      Tensor<float> loss;
      if (fine) {
        auto np = noise::sample_noise_params(erng);
        auto xn = add_batch_noise(x, np, erng.next_u64());
        loss = full_objective(model, xn, x, cfg.lambda_d, cfg.lambda_g, cfg.metric,
                              erng.next_u64(), &rep);
      } else {
        loss = rd_objective(model, x, cfg.lambda_d, cfg.metric, erng.next_u64(), &rep);
      }
      if (apply_step(opt, loss, window.cap())) {
        window.push(rep.total);
        ++applied;
        st.bpp_z1 += rep.bpp_z1;
        st.bpp_z2 += rep.bpp_z2;
        st.D += rep.D;
        st.G += rep.G;
        st.L += rep.total;
      } else {
        ++st.skipped;
      }
    }
    if (applied > 0) {
      st.bpp_z1 /= static_cast<double>(applied);
      st.bpp_z2 /= static_cast<double>(applied);
      st.D /= static_cast<double>(applied);
      st.G /= static_cast<double>(applied);
      st.L /= static_cast<double>(applied);
    }
    result.skipped_total += st.skipped;
    result.epochs.push_back(st);
    if (!out_dir.empty()) {
      append_csv((std::filesystem::path(out_dir) / log_name).string(), st);
      const std::string stem = epoch_stem(out_dir, epoch);
      net::save_checkpoint(stem + ".jdcm", model);
      save_opt_state(stem + ".opt", opt, window);
    }
  }
  if (!out_dir.empty())
    net::save_checkpoint((std::filesystem::path(out_dir) / "final.jdcm").string(), model);
  return result;
}

}  // namespace

TrainResult pretrain(net::CodecModel& model, const std::vector<Tensor<float>>& images,
                     const TrainConfig& cfg, const std::string& out_dir,
                     int64_t start_epoch) {
  return run_phase(model, images, cfg, out_dir, start_epoch, false);
}

TrainResult finetune(net::CodecModel& model, const std::vector<Tensor<float>>& images,
                     const TrainConfig& cfg, const std::string& out_dir,
                     int64_t start_epoch) {
  return run_phase(model, images, cfg, out_dir, start_epoch, true);
}

double eval_objective(const net::CodecModel& model, const std::vector<Tensor<float>>& noisy,
                      const std::vector<Tensor<float>>& clean, double lambda_d,
                      net::Metric metric, uint64_t seed) {
  if (noisy.empty() || noisy.size() != clean.size())
    throw std::invalid_argument("eval_objective: need matching noisy/clean sets");
  NoGradGuard ng;
  Rng base(seed);
  double total = 0;
  for (size_t i = 0; i < noisy.size(); ++i) {
    LossReport rep;
    full_objective(model, noisy[i], clean[i], lambda_d, 0.0, metric,
                   base.fork(i).next_u64(), &rep);
    total += rep.bpp_z1 + rep.bpp_z2 + lambda_d * rep.D;
  }
  return total / static_cast<double>(noisy.size());
}

}  // namespace nc::train
