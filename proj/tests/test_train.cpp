#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "doctest.h"
#include "noisecodec/entropy.hpp"
#include "noisecodec/metrics.hpp"
#include "noisecodec/noise.hpp"
#include "noisecodec/train.hpp"

using nc::Shape;
using nc::Tensor;
using namespace nc::train;

namespace {

nc::net::ArchConfig tiny_arch() {
  nc::net::ArchConfig a;
  a.n = 8;
  a.m1 = 8;
  a.m2 = 4;
  return a;
}

TrainConfig quick_config(int epochs, uint64_t seed) {
  TrainConfig c;
  c.quality = 1;
  c.lambda_d = TrainConfig::default_lambda(1, nc::net::Metric::mse);
  c.batch_size = 4;
  c.patch = 64;
  c.epochs = epochs;
  c.lr_drops = {};
  c.seed = seed;
  return c;
}

bool bits_equal(const Tensor<float>& a, const Tensor<float>& b) {
  if (!(a.shape() == b.shape())) return false;
  for (size_t i = 0; i < a.data().size(); ++i)
    if (std::bit_cast<uint32_t>(a.data()[i]) != std::bit_cast<uint32_t>(b.data()[i]))
      return false;
  return true;
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name)
      : path(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string str() const { return path.string(); }
};

}  // namespace

TEST_CASE("default lambda tables") {
  const double mse[] = {0.0018, 0.0035, 0.0067, 0.0130, 0.0250, 0.0483};
  for (int q = 1; q <= 6; ++q)
    CHECK(TrainConfig::default_lambda(q, nc::net::Metric::mse) == mse[q - 1]);
  CHECK(TrainConfig::default_lambda(2, nc::net::Metric::msssim) == 4.58);
  CHECK(TrainConfig::default_lambda(3, nc::net::Metric::msssim) == 8.73);
  CHECK(TrainConfig::default_lambda(5, nc::net::Metric::msssim) == 31.73);
  CHECK(TrainConfig::default_lambda(6, nc::net::Metric::msssim) == 60.50);
  CHECK_THROWS_AS(TrainConfig::default_lambda(1, nc::net::Metric::msssim),
                  std::invalid_argument);
  CHECK_THROWS_AS(TrainConfig::default_lambda(4, nc::net::Metric::msssim),
                  std::invalid_argument);
  CHECK_THROWS_AS(TrainConfig::default_lambda(0, nc::net::Metric::mse),
                  std::invalid_argument);
  CHECK_THROWS_AS(TrainConfig::default_lambda(7, nc::net::Metric::mse),
                  std::invalid_argument);
}

TEST_CASE("train config json round trip and validation") {
  TrainConfig c;
  c.quality = 5;
  c.metric = nc::net::Metric::msssim;
  c.lambda_d = 31.73;
  c.batch_size = 2;
  c.epochs = 10;
  c.lr_drops = {7, 9};
  c.warmup_epochs = 3;
  c.seed = 99;
  auto d = TrainConfig::from_json(c.to_json());
  CHECK(d.quality == 5);
  CHECK(d.metric == nc::net::Metric::msssim);
  CHECK(d.lambda_d == 31.73);
  CHECK(d.lr_drops == std::vector<int64_t>{7, 9});
  CHECK(d.warmup_epochs == 3);
  CHECK(d.seed == 99);

  CHECK_THROWS_AS(TrainConfig::from_json("nope"), nc::DecodeError);
  TrainConfig bad;
  bad.lambda_d = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = TrainConfig{};
  bad.warmup_epochs = bad.epochs;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = TrainConfig{};
  bad.lr_drops = {999};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("learning rate schedule: warmup ramp and decade drops") {
  TrainConfig c;
  c.epochs = 60;
  c.warmup_epochs = 2;
  c.base_lr = 1e-4;
  c.lr_drops = {45, 55};
  CHECK(c.lr_at(0) == 1e-6);
  CHECK(c.lr_at(1) == doctest::Approx(1e-6 + (1e-4 - 1e-6) * 0.5).epsilon(1e-12));
  CHECK(c.lr_at(2) == 1e-4);
  CHECK(c.lr_at(44) == 1e-4);
  CHECK(c.lr_at(45) == doctest::Approx(1e-5).epsilon(1e-12));
  CHECK(c.lr_at(54) == doctest::Approx(1e-5).epsilon(1e-12));
  CHECK(c.lr_at(55) == doctest::Approx(1e-6).epsilon(1e-12));
  CHECK(c.lr_at(59) == doctest::Approx(1e-6).epsilon(1e-12));

  // The ramp is monotone and hits base exactly at the first post-warmup epoch.
  TrainConfig w;
  w.epochs = 20;
  w.warmup_epochs = 5;
  w.lr_drops = {};
  for (int e = 1; e < 5; ++e) CHECK(w.lr_at(e) > w.lr_at(e - 1));
  CHECK(w.lr_at(5) == w.base_lr);
}

TEST_CASE("rd_loss oracles") {
  nc::Rng rng(1);
  auto x = Tensor<float>::rand_uniform(Shape{1, 3, 16, 16}, rng, 0.f, 1.f);

  // One latent covering the 16x16 image at likelihood 0.5 on both levels.
  auto lik_half = Tensor<float>::filled(Shape{1, 1, 1, 1}, 0.5f);
  LossReport rep;
  auto loss = rd_loss(x, x, lik_half, lik_half, 0.01, nc::net::Metric::mse, &rep);
  CHECK(rep.D == 0.0);
  CHECK(rep.bpp_z1 == doctest::Approx(1.0 / 256.0).epsilon(1e-6));
  CHECK(rep.bpp_z2 == doctest::Approx(1.0 / 256.0).epsilon(1e-6));
  CHECK(loss.item() == doctest::Approx(2.0 / 256.0).epsilon(1e-6));

  // The same count in coder units: one symbol under a half/half table.
  nc::ent::SymbolModel m;
  m.lo = 0;
  m.freq = {nc::ent::kProbScale / 2, nc::ent::kProbScale / 2};
  m.build_cum();
  const int64_t sym[] = {0};
  CHECK(nc::ent::rate_estimate_bits(sym, m) / 256.0 ==
        doctest::Approx(rep.bpp_z1).epsilon(1e-6));

  // Doubling lambda doubles the distortion contribution exactly.
  auto xhat = Tensor<float>::rand_uniform(Shape{1, 3, 16, 16}, rng, 0.f, 1.f);
  LossReport r1, r2;
  auto l1 = rd_loss(x, xhat, lik_half, lik_half, 0.01, nc::net::Metric::mse, &r1);
  auto l2 = rd_loss(x, xhat, lik_half, lik_half, 0.02, nc::net::Metric::mse, &r2);
  CHECK(r1.D == r2.D);
  CHECK(l2.item() - l1.item() == doctest::Approx(0.01 * r1.D).epsilon(1e-5));

  // Report additivity.
  CHECK(r1.total ==
        doctest::Approx(r1.bpp_z1 + r1.bpp_z2 + 0.01 * r1.D).epsilon(1e-6));

  // Perceptual distortion term.
  LossReport rp;
  rd_loss(x, xhat, lik_half, lik_half, 4.58, nc::net::Metric::msssim, &rp);
  const double direct =
      1.0 - nc::metrics::ms_ssim_t<float>(x, xhat, nc::metrics::max_scales(16, 16)).item();
  CHECK(rp.D == doctest::Approx(direct).epsilon(1e-6));

  CHECK_THROWS_AS(rd_loss(x, xhat, lik_half, lik_half, 0.0, nc::net::Metric::mse, nullptr),
                  std::invalid_argument);
  auto wrong = Tensor<float>::zeros(Shape{1, 3, 8, 8});
  CHECK_THROWS_AS(rd_loss(x, wrong, lik_half, lik_half, 0.01, nc::net::Metric::mse, nullptr),
                  std::invalid_argument);
}

TEST_CASE("guidance loss oracles") {
  nc::Rng rng(2);
  auto a0 = Tensor<float>::rand_normal(Shape{2, 4, 6, 6}, rng);
  auto a1 = Tensor<float>::rand_normal(Shape{2, 8, 3, 3}, rng);
  CHECK(guidance_loss(a0, a0, a1, a1).item() == 0.0f);

  auto b0 = nc::add_scalar(a0, 0.5f);
  auto b1 = nc::add_scalar(a1, -0.5f);
  CHECK(guidance_loss(b0, a0, b1, a1).item() == doctest::Approx(1.0).epsilon(1e-6));

  // Swapping the two batch entries leaves the mean unchanged.
  auto swap_batch = [](const Tensor<float>& t) {
    auto out = t.detach();
    const int64_t half = t.numel() / 2;
    for (int64_t i = 0; i < half; ++i) {
      out.data()[static_cast<size_t>(i)] = t.data()[static_cast<size_t>(half + i)];
      out.data()[static_cast<size_t>(half + i)] = t.data()[static_cast<size_t>(i)];
    }
    return out;
  };
  CHECK(guidance_loss(swap_batch(b0), swap_batch(a0), swap_batch(b1), swap_batch(a1))
            .item() == doctest::Approx(1.0).epsilon(1e-6));

  CHECK_THROWS_AS(guidance_loss(a0, a1, a1, a1), std::invalid_argument);
}

TEST_CASE("texture corpus is deterministic and in range") {
  auto a = make_texture_corpus(5, 32, 7);
  auto b = make_texture_corpus(5, 32, 7);
  auto c = make_texture_corpus(3, 32, 7);
  auto d = make_texture_corpus(5, 32, 8);
  REQUIRE(a.size() == 5);
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].shape() == Shape{1, 3, 32, 32});
    for (float v : a[i].data()) {
      CHECK(v >= 0.f);
      CHECK(v <= 1.f);
    }
    CHECK(bits_equal(a[i], b[i]));
    if (i < c.size()) CHECK(bits_equal(a[i], c[i]));  // prefix-stable
  }
  CHECK_FALSE(bits_equal(a[0], d[0]));
  CHECK_FALSE(bits_equal(a[0], a[1]));
  CHECK_THROWS_AS(make_texture_corpus(0, 32, 1), std::invalid_argument);
}

TEST_CASE("loss window cap: lower median times factor after fill") {
  LossWindow w(4, 5.0);
  CHECK(std::isinf(w.cap()));
  w.push(1);
  w.push(2);
  w.push(3);
  CHECK(std::isinf(w.cap()));
  w.push(10);
  CHECK(w.cap() == 10.0);  // lower median of {1,2,3,10} is 2
  w.push(11);              // window slides to {2,3,10,11}
  CHECK(w.cap() == 15.0);
}

TEST_CASE("apply_step skips over-cap batches without touching state") {
  auto p = Tensor<float>::from_data(Shape{1, 1, 1, 3}, {1.f, -2.f, 3.f});
  p.set_requires_grad(true);
  nc::Adam opt({p});

  auto loss_of = [&]() { return nc::sum(nc::pow_scalar(p, 2.0f)); };
  CHECK(apply_step(opt, loss_of(), std::numeric_limits<double>::infinity()));
  CHECK(opt.t() == 1);

  const std::vector<float> snap(p.data().begin(), p.data().end());
  const auto m_snap = opt.m();
  const auto v_snap = opt.v();
  CHECK_FALSE(apply_step(opt, loss_of(), 1e-9));
  CHECK(opt.t() == 1);
  for (size_t i = 0; i < snap.size(); ++i)
    CHECK(std::bit_cast<uint32_t>(p.data()[i]) == std::bit_cast<uint32_t>(snap[i]));
  CHECK(opt.m() == m_snap);
  CHECK(opt.v() == v_snap);

  auto inf_loss = Tensor<float>::scalar(std::numeric_limits<float>::infinity());
  CHECK_THROWS_AS(apply_step(opt, inf_loss, 1e9), std::runtime_error);
}

TEST_CASE("full objective: zero noise and fresh denoisers give zero guidance") {
  nc::net::CodecModel model(tiny_arch(), 17);
  auto corpus = make_texture_corpus(1, 64, 3);
  LossReport rep;
  auto loss = full_objective(model, corpus[0], corpus[0], 0.01, 3.0, nc::net::Metric::mse,
                             123, &rep);
  CHECK(rep.G == 0.0);
  CHECK(rep.total == doctest::Approx(rep.bpp_z1 + rep.bpp_z2 + 0.01 * rep.D + 3.0 * rep.G)
                         .epsilon(1e-6));
  CHECK(std::isfinite(loss.item()));

  // Same seed, same loss; different surrogate seed, different loss.
  LossReport rep2, rep3;
  full_objective(model, corpus[0], corpus[0], 0.01, 3.0, nc::net::Metric::mse, 123, &rep2);
  full_objective(model, corpus[0], corpus[0], 0.01, 3.0, nc::net::Metric::mse, 124, &rep3);
  CHECK(rep.total == rep2.total);
  CHECK(rep.total != rep3.total);
}

TEST_CASE("denoiser gradient flow") {
  nc::net::CodecModel model(tiny_arch(), 18);
  auto corpus = make_texture_corpus(1, 64, 4);
  auto noisy_vals =
      nc::noise::synthesize_noise(corpus[0].data(), nc::noise::gain_preset(8), 55);
  auto noisy = Tensor<float>::from_data(corpus[0].shape(), std::move(noisy_vals));

  // Guidance term alone, clean inputs, zero-initialized denoisers: the
  // residual sits exactly at the L1 kink and its subgradient is zero.
  {
    auto clean_padded = nc::net::pad_to_multiple(corpus[0]).first;
    Tensor<float> z0gt, z1gt;
    {
      nc::NoGradGuard ng;
      std::tie(z0gt, z1gt) = model.analyze(clean_padded, nc::net::Branch::guidance);
    }
    auto [z0, z1] = model.analyze(clean_padded, nc::net::Branch::denoising);
    auto g = guidance_loss(z0, z0gt, z1, z1gt);
    CHECK(g.item() == 0.0f);
    for (auto& t : model.parameters()) t.zero_grad();
    nc::backward(g);
    for (auto& t : model.denoiser_parameters())
      for (float v : t.grad()) CHECK(v == 0.0f);
  }

  // The full objective on a noisy batch reaches the denoisers. With the
  // output convolutions still at zero, gradient stops there: exactly the
  // four output tensors (weight and bias per denoiser) move first.
  auto count_nonzero = [&]() {
    int n = 0;
    for (auto& t : model.denoiser_parameters())
      for (float v : t.grad())
        if (v != 0.f) {
          ++n;
          break;
        }
    return n;
  };
  for (auto& t : model.parameters()) t.zero_grad();
  auto loss = full_objective(model, noisy, corpus[0], 0.01, 3.0, nc::net::Metric::mse,
                             321, nullptr);
  nc::backward(loss);
  CHECK(count_nonzero() == 4);

  // One optimizer step makes those weights nonzero and opens the inner layers.
  nc::Adam opt(model.denoiser_parameters(), {.lr = 1e-3});
  opt.step();
  for (auto& t : model.parameters()) t.zero_grad();
  auto loss2 = full_objective(model, noisy, corpus[0], 0.01, 3.0, nc::net::Metric::mse,
                              321, nullptr);
  nc::backward(loss2);
  CHECK(count_nonzero() > 8);
}

TEST_CASE("pretraining smoke run lowers the epoch objective") {
  nc::net::CodecModel model(tiny_arch(), 19);
  auto corpus = make_texture_corpus(16, 64, 5);
  auto cfg = quick_config(3, 11);
  auto result = pretrain(model, corpus, cfg, "");
  REQUIRE(result.epochs.size() == 3);
  CHECK(result.epochs[2].L < result.epochs[0].L);
  CHECK(result.skipped_total == 0);
  for (const auto& e : result.epochs) {
    CHECK(std::isfinite(e.L));
    CHECK(e.bpp_z1 > 0);
    CHECK(e.bpp_z2 > 0);
    CHECK(e.G == 0.0);
  }
}

TEST_CASE("training is deterministic and resumable") {
  auto corpus = make_texture_corpus(8, 64, 6);
  auto cfg = quick_config(4, 21);

  TempDir da("nc_train_a");
  TempDir db("nc_train_b");
  nc::net::CodecModel ma(tiny_arch(), 23);
  nc::net::CodecModel mb(tiny_arch(), 23);
  auto ra = pretrain(ma, corpus, cfg, da.str());
  auto rb = pretrain(mb, corpus, cfg, db.str());
  REQUIRE(ra.epochs.size() == rb.epochs.size());
  for (size_t i = 0; i < ra.epochs.size(); ++i) {
    CHECK(ra.epochs[i].L == rb.epochs[i].L);
    CHECK(csv_row(ra.epochs[i]) == csv_row(rb.epochs[i]));
  }
  CHECK(slurp(da.str() + "/final.jdcm") == slurp(db.str() + "/final.jdcm"));
  CHECK(slurp(da.str() + "/pretrain_log.csv") == slurp(db.str() + "/pretrain_log.csv"));

  // Resume from the epoch-1 checkpoint and replay epochs 2..3 bit-exactly.
  TempDir dc("nc_train_c");
  for (int e = 0; e < 2; ++e) {
    char stem[32];
    std::snprintf(stem, sizeof(stem), "epoch_%03d", e);
    std::filesystem::copy(da.path / (std::string(stem) + ".jdcm"),
                          dc.path / (std::string(stem) + ".jdcm"));
    std::filesystem::copy(da.path / (std::string(stem) + ".opt"),
                          dc.path / (std::string(stem) + ".opt"));
  }
  auto mc = nc::net::load_checkpoint(da.str() + "/epoch_001.jdcm");
  auto rc = pretrain(mc, corpus, cfg, dc.str(), 2);
  REQUIRE(rc.epochs.size() == 2);
  CHECK(rc.epochs[0].L == ra.epochs[2].L);
  CHECK(rc.epochs[1].L == ra.epochs[3].L);
  CHECK(slurp(dc.str() + "/epoch_003.jdcm") == slurp(da.str() + "/epoch_003.jdcm"));
  CHECK(slurp(dc.str() + "/final.jdcm") == slurp(da.str() + "/final.jdcm"));
}

TEST_CASE("csv log replays the schedule byte for byte") {
  auto corpus = make_texture_corpus(4, 64, 8);
  auto cfg = quick_config(4, 31);
  cfg.warmup_epochs = 2;
  cfg.lr_drops = {3};
  TempDir dir("nc_train_csv");
  nc::net::CodecModel model(tiny_arch(), 29);
  auto result = pretrain(model, corpus, cfg, dir.str());

  std::ifstream is(dir.str() + "/pretrain_log.csv");
  std::string line;
  REQUIRE(std::getline(is, line));
  CHECK(line == kCsvHeader);
  for (int e = 0; e < 4; ++e) {
    REQUIRE(std::getline(is, line));
    CHECK(line == csv_row(result.epochs[static_cast<size_t>(e)]));
    char lr[64];
    std::snprintf(lr, sizeof(lr), "%.10g", cfg.lr_at(e));
    const std::string row = line;
    const size_t c1 = row.find(',');
    const size_t c2 = row.find(',', c1 + 1);
    CHECK(row.substr(c1 + 1, c2 - c1 - 1) == lr);
  }
  CHECK_FALSE(std::getline(is, line));
}

TEST_CASE("an aggressive cap skips every later batch and the books balance") {
  auto corpus = make_texture_corpus(8, 64, 9);
  auto cfg = quick_config(2, 41);
  cfg.cap_window = 1;
  cfg.loss_cap_factor = 1e-9;
  nc::net::CodecModel model(tiny_arch(), 37);
  auto before = model.parameters();
  std::vector<std::vector<float>> snap;
  for (auto& t : before) snap.emplace_back(t.data().begin(), t.data().end());

  auto result = finetune(model, corpus, cfg, "");
  const int64_t steps_per_epoch = 2;  // 8 images / batch 4
  REQUIRE(result.epochs.size() == 2);
  CHECK(result.epochs[0].skipped == steps_per_epoch - 1);
  CHECK(result.epochs[1].skipped == steps_per_epoch);
  CHECK(result.skipped_total == 2 * steps_per_epoch - 1);

  // Exactly one step was applied, so parameters moved once and only once.
  int changed = 0;
  auto after = model.parameters();
  for (size_t i = 0; i < after.size(); ++i)
    if (!std::equal(after[i].data().begin(), after[i].data().end(), snap[i].begin()))
      ++changed;
  CHECK(changed > 0);
}

TEST_CASE("finetune logs guidance loss and stays finite") {
  auto corpus = make_texture_corpus(8, 64, 10);
  auto cfg = quick_config(2, 51);
  nc::net::CodecModel model(tiny_arch(), 43);
  pretrain(model, corpus, quick_config(2, 52), "");
  auto result = finetune(model, corpus, cfg, "");
  REQUIRE(result.epochs.size() == 2);
  for (const auto& e : result.epochs) {
    CHECK(std::isfinite(e.L));
    CHECK(e.G >= 0.0);
    CHECK(e.skipped == 0);
  }
  CHECK(result.epochs[0].G > 0.0);  // real noise separates the branches
}

TEST_CASE("eval objective is deterministic and model-sensitive") {
  nc::net::CodecModel model(tiny_arch(), 61);
  auto clean = make_texture_corpus(2, 64, 12);
  std::vector<Tensor<float>> noisy;
  for (size_t i = 0; i < clean.size(); ++i) {
    auto nv = nc::noise::synthesize_noise(clean[i].data(), nc::noise::gain_preset(4),
                                          900 + i);
    noisy.push_back(Tensor<float>::from_data(clean[i].shape(), std::move(nv)));
  }
  const double a = eval_objective(model, noisy, clean, 0.01, nc::net::Metric::mse, 77);
  const double b = eval_objective(model, noisy, clean, 0.01, nc::net::Metric::mse, 77);
  CHECK(a == b);
  CHECK(std::isfinite(a));
  CHECK(a > 0);

  nc::net::CodecModel other(tiny_arch(), 62);
  const double c = eval_objective(other, noisy, clean, 0.01, nc::net::Metric::mse, 77);
  CHECK(a != c);
  CHECK_THROWS_AS(eval_objective(model, noisy, {}, 0.01, nc::net::Metric::mse, 1),
                  std::invalid_argument);
}
