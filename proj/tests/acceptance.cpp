// Release gate: one check per shipping criterion, each printing a single
// PASS/FAIL line. Run via ctest or directly; exits nonzero if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "noisecodec/adam.hpp"
#include "noisecodec/container.hpp"
#include "noisecodec/entropy.hpp"
#include "noisecodec/evaluate.hpp"
#include "noisecodec/factorized.hpp"
#include "noisecodec/metrics.hpp"
#include "noisecodec/noise.hpp"
#include "noisecodec/train.hpp"

using nc::Rng;
using nc::Shape;
using nc::Tensor;
using clk = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string g_info;  // extra non-gating observations, printed at the end

double secs(clk::time_point t0) {
  return std::chrono::duration<double>(clk::now() - t0).count();
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

int64_t sample_symbol(const nc::ent::SymbolModel& m, Rng& rng) {
  const uint32_t u = static_cast<uint32_t>(rng.next_u64() % nc::ent::kProbScale);
  const auto it = std::upper_bound(m.cum.begin(), m.cum.end(), u);
  return m.lo + (it - m.cum.begin()) - 1;
}

// ---------------------------------------------------------------- criterion 1

Outcome c1_losslessness() {
  Rng rng(101);
  const auto t0 = clk::now();
  size_t total = 0;

  std::vector<std::vector<int64_t>> blocks;
  std::vector<nc::ent::SymbolModel> models;
  for (int b = 0; b < 100; ++b) {
    const double mu = rng.uniform(-20.0, 20.0);
    const double sigma = std::exp(rng.uniform(std::log(0.11), std::log(8.0)));
    models.push_back(nc::ent::gaussian_model(mu, sigma));
    auto& sy = blocks.emplace_back();
    sy.reserve(5000);
    for (int i = 0; i < 5000; ++i) sy.push_back(sample_symbol(models.back(), rng));
  }
  Rng frng(102);
  nc::ent::FactorizedPrior<float> prior(8, frng);
  for (const auto& m : prior.models()) {
    models.push_back(m);
    auto& sy = blocks.emplace_back();
    sy.reserve(62500);
    for (int i = 0; i < 62500; ++i) sy.push_back(sample_symbol(m, rng));
  }

  for (size_t b = 0; b < blocks.size(); ++b) {
    auto bytes = nc::ent::rans_encode(blocks[b], models[b]);
    nc::ent::RansDecoder dec(bytes);
    for (int64_t want : blocks[b])
      if (dec.decode(models[b]) != want)
        return {false, fmt("symbol mismatch in block %zu", b)};
    dec.finish();
    total += blocks[b].size();
  }
  const double t = secs(t0);
  return {total == 1000000 && t < 10.0,
          fmt("%zu symbols round-tripped in %.2f s (budget 10 s)", total, t)};
}

// ---------------------------------------------------------------- criterion 2

Outcome c2_rate_faithfulness() {
  Rng rng(201);
  double worst = 0;
  int blocks = 0;

  auto check_block = [&](std::span<const int64_t> sy,
                         const nc::ent::SymbolModel& m) -> bool {
    const double est = nc::ent::rate_estimate_bits(sy, m);
    const double actual = 8.0 * static_cast<double>(nc::ent::rans_encode(sy, m).size());
    const double slack = 0.02 * est + 256.0;
    worst = std::max(worst, std::abs(actual - est) - slack);
    ++blocks;
    return std::abs(actual - est) <= slack;
  };

  bool ok = true;
  std::vector<int64_t> sy(20000);
  for (int b = 0; b < 10; ++b) {  // generic gaussian blocks
    const double mu = rng.uniform(-15.0, 15.0);
    const double sigma = std::exp(rng.uniform(std::log(0.11), std::log(10.0)));
    auto m = nc::ent::gaussian_model(mu, sigma);
    for (auto& s : sy) s = sample_symbol(m, rng);
    ok = check_block(sy, m) && ok;
  }
  for (double sigma : {0.11, 0.3, 30.0}) {  // near-deterministic and flat extremes
    auto m = nc::ent::gaussian_model(0.25, sigma);
    for (auto& s : sy) s = sample_symbol(m, rng);
    ok = check_block(sy, m) && ok;
  }
  Rng frng(202);
  nc::ent::FactorizedPrior<float> prior(4, frng);
  for (const auto& m : prior.models()) {
    for (auto& s : sy) s = sample_symbol(m, rng);
    ok = check_block(sy, m) && ok;
  }
  return {ok, fmt("%d blocks of 2e4 symbols, worst margin %+.1f bits vs 2%%+256 allowance",
                  blocks, worst)};
}

// ---------------------------------------------------------------- criterion 3

template <typename T>
struct FdProblem {
  std::vector<Tensor<T>> inputs;
  std::function<Tensor<T>()> forward;  // closes over inputs, returns any shape
};

// Checks autograd against central differences at the highest-|grad|
// coordinates of every input. Returns the worst relative error seen.
template <typename T>
double fd_check(FdProblem<T>& p, Rng& rng, T h_base, int coords_per_input) {
  auto out = p.forward();
  auto w = Tensor<T>::rand_uniform(out.shape(), rng, T(-1), T(1)).detach();
  auto loss = nc::sum(nc::mul(out, w));
  for (auto& in : p.inputs) in.zero_grad();
  nc::backward(loss);

  auto eval = [&]() -> double {
    nc::NoGradGuard ng;
    return static_cast<double>(nc::sum(nc::mul(p.forward(), w)).item());
  };

  double worst = 0;
  for (auto& in : p.inputs) {
    auto g = in.grad();
    auto x = in.data();
    std::vector<size_t> idx(x.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::partial_sort(idx.begin(),
                      idx.begin() + std::min<size_t>(coords_per_input, idx.size()),
                      idx.end(), [&](size_t a, size_t b) {
                        return std::abs(g[a]) > std::abs(g[b]);
                      });
    for (int k = 0; k < coords_per_input && k < static_cast<int>(idx.size()); ++k) {
      const size_t i = idx[static_cast<size_t>(k)];
      const T x0 = x[i];
      const T h = h_base * (T(1) + std::abs(x0));
      x[i] = x0 + h;
      const double fp = eval();
      x[i] = x0 - h;
      const double fm = eval();
      x[i] = x0;
      const double fd = (fp - fm) / (2.0 * static_cast<double>(h));
      const double an = static_cast<double>(g[i]);
      const double err = std::abs(fd - an) / std::max({1.0, std::abs(fd), std::abs(an)});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

template <typename T>
Tensor<T> fd_input(Shape s, Rng& rng, T lo = T(-1), T hi = T(1)) {
  auto t = Tensor<T>::rand_uniform(s, rng, lo, hi);
  t.set_requires_grad(true);
  return t;
}

// Shifts every element at least `margin` away from the listed kink points so
// finite differences do not step across a non-smooth spot.
template <typename T>
void avoid_kinks(Tensor<T>& t, std::initializer_list<double> kinks, double margin) {
  for (auto& v : t.data())
    for (double k : kinks)
      if (std::abs(static_cast<double>(v) - k) < margin)
        v = static_cast<T>(k + (v >= k ? margin : -margin) * 1.5);
}

template <typename T>
int run_op_suite(Rng& rng, double tol, double& worst_err, std::string& worst_name,
                 int rounds) {
  const T h = std::is_same_v<T, double> ? T(1e-5) : T(1e-2);
  int configs = 0;

  auto run = [&](const char* name, FdProblem<T>& p) {
    const double err = fd_check(p, rng, h, 3);
    if (err > worst_err) {
      worst_err = err;
      worst_name = name;
    }
    ++configs;
  };

  for (int r = 0; r < rounds; ++r) {
    const int64_t b = 1 + static_cast<int64_t>(rng.next_u64() % 2);
    const int64_t c = 2 + static_cast<int64_t>(rng.next_u64() % 3);
    const int64_t hw = 5 + static_cast<int64_t>(rng.next_u64() % 4);
    const Shape s{b, c, hw, hw};

    {
      FdProblem<T> p;
      p.inputs = {fd_input<T>(s, rng), fd_input<T>(s, rng)};
      p.forward = [&p] { return nc::add(p.inputs[0], p.inputs[1]); };
      run("add", p);
      p.forward = [&p] { return nc::sub(p.inputs[0], p.inputs[1]); };
      run("sub", p);
      p.forward = [&p] { return nc::mul(p.inputs[0], p.inputs[1]); };
      run("mul", p);
    }
    {
      FdProblem<T> p;
      p.inputs = {fd_input<T>(s, rng), fd_input<T>(Shape{1, 1, 1, 1}, rng, T(0.5), T(1.5))};
      p.forward = [&p] { return nc::div(p.inputs[0], p.inputs[1]); };
      run("div_scalar_rhs", p);
    }
    {
      FdProblem<T> p;
      p.inputs = {fd_input<T>(s, rng)};
      p.forward = [&p] { return nc::add_scalar(p.inputs[0], T(0.7)); };
      run("add_scalar", p);
      p.forward = [&p] { return nc::scale(p.inputs[0], T(-1.3)); };
      run("scale", p);
      p.forward = [&p] { return nc::neg(p.inputs[0]); };
      run("neg", p);
      p.forward = [&p] { return nc::sigmoid(p.inputs[0]); };
      run("sigmoid", p);
      p.forward = [&p] { return nc::tanh_op(p.inputs[0]); };
      run("tanh", p);
      p.forward = [&p] { return nc::exp_op(p.inputs[0]); };
      run("exp", p);
      p.forward = [&p] { return nc::softplus(p.inputs[0]); };
      run("softplus", p);
      p.forward = [&p] { return nc::normal_cdf(p.inputs[0]); };
      run("normal_cdf", p);
      p.forward = [&p] { return nc::mean(p.inputs[0]); };
      run("mean", p);
      p.forward = [&p] { return nc::sum(p.inputs[0]); };
      run("sum", p);
      p.forward = [&p] { return nc::avg_pool2(p.inputs[0]); };
      run("avg_pool2", p);
      p.forward = [&p] { return nc::pad_reflect_hw(p.inputs[0], 3, 2); };
      run("pad_reflect", p);
      p.forward = [&p] { return nc::crop_hw(p.inputs[0], 3, 4); };
      run("crop", p);
    }
    {
      FdProblem<T> p;  // kinked ops, inputs pushed off the kinks
      p.inputs = {fd_input<T>(s, rng)};
      avoid_kinks(p.inputs[0], {0.0}, 0.1);
      p.forward = [&p] { return nc::leaky_relu(p.inputs[0], T(0.01)); };
      run("leaky_relu", p);
      p.forward = [&p] { return nc::abs(p.inputs[0]); };
      run("abs", p);
      avoid_kinks(p.inputs[0], {-0.5, 0.5}, 0.1);
      p.forward = [&p] { return nc::clamp(p.inputs[0], T(-0.5), T(0.5)); };
      run("clamp", p);
      avoid_kinks(p.inputs[0], {0.2}, 0.1);
      p.forward = [&p] { return nc::lower_bound(p.inputs[0], T(0.2)); };
      run("lower_bound", p);
    }
    {
      FdProblem<T> p;
      p.inputs = {fd_input<T>(s, rng, T(0.2), T(2.0))};
      p.forward = [&p] { return nc::log_op(p.inputs[0]); };
      run("log", p);
      p.forward = [&p] { return nc::pow_scalar(p.inputs[0], T(1.7)); };
      run("pow_scalar", p);
    }
    {
      FdProblem<T> p;
      p.inputs = {fd_input<T>(s, rng), fd_input<T>(Shape{1, c, 1, 1}, rng)};
      p.forward = [&p] { return nc::bias_channels(p.inputs[0], p.inputs[1]); };
      run("bias_channels", p);
      p.forward = [&p] { return nc::scale_channels(p.inputs[0], p.inputs[1]); };
      run("scale_channels", p);
    }
    {
      FdProblem<T> p;
      p.inputs = {fd_input<T>(s, rng), fd_input<T>(s, rng)};
      p.forward = [&p] { return nc::concat_channels(p.inputs[0], p.inputs[1]); };
      run("concat_channels", p);
      p.forward = [&p, c] { return nc::slice_channels(p.inputs[0], 1, c); };
      run("slice_channels", p);
    }
    {
      const int64_t co = 2 + static_cast<int64_t>(rng.next_u64() % 3);
      FdProblem<T> p;
      p.inputs = {fd_input<T>(s, rng), fd_input<T>(Shape{co, c, 3, 3}, rng),
                  fd_input<T>(Shape{1, co, 1, 1}, rng)};
      p.forward = [&p] {
        return nc::conv2d(p.inputs[0], p.inputs[1], &p.inputs[2], 2, 1);
      };
      run("conv2d_s2", p);
      p.forward = [&p] { return nc::conv2d(p.inputs[0], p.inputs[1], 1, 1); };
      run("conv2d_s1", p);
    }
    {
      FdProblem<T> p;
      p.inputs = {fd_input<T>(s, rng), fd_input<T>(Shape{c, 3, 4, 4}, rng)};
      p.forward = [&p] { return nc::conv2d_transpose(p.inputs[0], p.inputs[1], 2, 1); };
      run("conv2d_transpose", p);
    }
    {
      FdProblem<T> p;
      p.inputs = {fd_input<T>(s, rng), fd_input<T>(Shape{c, c, 5, 5}, rng)};
      p.forward = [&p] { return nc::masked_conv2d(p.inputs[0], p.inputs[1]); };
      run("masked_conv2d", p);
    }
    if constexpr (std::is_same_v<T, float>) {
      const Shape sg{1, 2, 4, 4};
      FdProblem<T> p;  // discretized gaussian likelihood composite
      p.inputs = {fd_input<T>(sg, rng, T(-3), T(3)), fd_input<T>(sg, rng, T(-1), T(1)),
                  fd_input<T>(sg, rng, T(0.3), T(2))};
      p.forward = [&p] {
        return nc::net::gaussian_likelihood(p.inputs[0], p.inputs[1], p.inputs[2]);
      };
      run("gaussian_likelihood", p);
    }
    {
      FdProblem<T> p;
      p.inputs = {fd_input<T>(Shape{1, 3, 32, 32}, rng, T(0.05), T(0.95)),
                  fd_input<T>(Shape{1, 3, 32, 32}, rng, T(0.05), T(0.95))};
      p.forward = [&p] { return nc::metrics::ms_ssim_t<T>(p.inputs[0], p.inputs[1], 2); };
      run("ms_ssim", p);
    }
  }
  return configs;
}

Outcome c3_gradients() {
  Rng rng(301);
  double worst_d = 0, worst_f = 0;
  std::string name_d, name_f;
  int configs = run_op_suite<double>(rng, 1e-5, worst_d, name_d, 3);
  configs += run_op_suite<float>(rng, 1e-3, worst_f, name_f, 1);

  // Full training objective on a 1x3x16x16 input, single precision. The
  // surrogate noise is re-seeded per evaluation so differences are exact.
  nc::net::ArchConfig arch;
  arch.n = 8;
  arch.m1 = 8;
  arch.m2 = 4;
  nc::net::CodecModel model(arch, 303);
  for (auto& [nm, t] : model.named_params())  // open the zero-initialized taps
    if (nm.find(".out.") != std::string::npos)
      for (float& v : t.data()) v = static_cast<float>(rng.uniform(-0.05, 0.05));

  auto clean = nc::train::make_texture_corpus(1, 16, 304)[0];
  auto noisy = nc::add(clean, Tensor<float>::rand_normal(clean.shape(), rng, 0.f, 0.05f))
                   .detach();
  double worst_obj = 0;
  int obj_coords = 0;
  for (uint64_t seed : {901ull, 902ull}) {
    auto objective = [&] {
      return nc::train::full_objective(model, noisy, clean, 0.0035, 3.0,
                                       nc::net::Metric::mse, seed, nullptr);
    };
    auto loss = objective();
    for (auto& t : model.parameters()) t.zero_grad();
    nc::backward(loss);

    for (const char* nm : {"ga0.c1.w", "ga1.c2.w", "ep.l1.w", "hs.t1.w", "d0.out.w"}) {
      for (auto& [pname, t] : model.named_params()) {
        if (pname != nm) continue;
        auto g = t.grad();
        auto x = t.data();
        size_t best = 0;
        for (size_t i = 1; i < g.size(); ++i)
          if (std::abs(g[i]) > std::abs(g[best])) best = i;
        if (std::abs(g[best]) < 1e-3) continue;  // path closed at this seed
        const float x0 = x[best];
        const float h = 3e-3f * (1.f + std::abs(x0));
        double fp, fm;
        {
          nc::NoGradGuard ng;
          x[best] = x0 + h;
          fp = nc::train::full_objective(model, noisy, clean, 0.0035, 3.0,
                                         nc::net::Metric::mse, seed, nullptr)
                   .item();
          x[best] = x0 - h;
          fm = nc::train::full_objective(model, noisy, clean, 0.0035, 3.0,
                                         nc::net::Metric::mse, seed, nullptr)
                   .item();
          x[best] = x0;
        }
        const double fd = (fp - fm) / (2.0 * h);
        const double an = g[best];
        const double err = std::abs(fd - an) / std::max({1.0, std::abs(fd), std::abs(an)});
        worst_obj = std::max(worst_obj, err);
        ++obj_coords;
      }
    }
    ++configs;
  }

  const bool ok = worst_d <= 1e-5 && worst_f <= 1e-3 && worst_obj <= 1e-3 &&
                  configs >= 100 && obj_coords >= 6;
  return {ok, fmt("%d configs; worst double %.2e (%s), float %.2e (%s), objective %.2e "
                  "over %d param coords",
                  configs, worst_d, name_d.c_str(), worst_f, name_f.c_str(), worst_obj,
                  obj_coords)};
}

// ---------------------------------------------------------------- criterion 4

Outcome c4_noise_stats() {
  const size_t n = 1000000;
  bool ok = true;
  double worst_z = 0;
  std::string worst_at;
  uint64_t seed = 401;
  for (int gain : {1, 2, 4, 8}) {
    const auto p = nc::noise::gain_preset(gain);
    for (double y : {0.1, 0.5, 0.9}) {
      std::vector<float> x(n, static_cast<float>(y));
      std::vector<double> linear;
      nc::noise::synthesize_noise(x, p, seed++, &linear);

      const double mean_y = nc::noise::gamma_inverse(
          nc::noise::gamma_forward(y));  // == y, the linearization target
      double m = 0;
      for (double v : linear) m += v;
      m /= static_cast<double>(n);
      double var = 0;
      for (double v : linear) var += (v - m) * (v - m);
      var /= static_cast<double>(n - 1);

      const double expect = p.sigma_s * mean_y + p.sigma_r * p.sigma_r;
      const double se = expect * std::sqrt(2.0 / static_cast<double>(n - 1));
      const double z = std::abs(var - expect) / se;
      if (z > worst_z) {
        worst_z = z;
        worst_at = fmt("gain %d y=%.1f", gain, y);
      }
      ok = ok && z <= 3.0;
    }
  }
  return {ok, fmt("12 preset/level pairs x 1e6 draws, worst |z| = %.2f at %s "
                  "(limit 3; gain 8 y=0.5 expects var 0.0221210)",
                  worst_z, worst_at.c_str())};
}

// ---------------------------------------------------------------- criterion 5

Outcome c5_gamma() {
  using namespace nc::noise;
  bool ok = gamma_forward(0.0) == 0.0 && gamma_forward(1.0) == 1.0;
  const double at_b = gamma_forward(kGammaB);
  ok = ok && std::abs(at_b - 0.040450) <= 1e-6;
  const double gap = std::abs(kGammaM * kGammaB -
                              ((1 + kGammaA) * std::pow(kGammaB, 1.0 / kGammaExp) - kGammaA));
  ok = ok && gap < 1e-4;

  Rng rng(501);
  double worst_f = 0, worst_d = 0;
  for (int i = 0; i < 100000; ++i) {
    const double x = rng.uniform();
    worst_d = std::max(worst_d, std::abs(gamma_inverse(gamma_forward(x)) - x));
    const float xf = static_cast<float>(x);
    const float gf = static_cast<float>(gamma_forward(xf));
    const float rf = static_cast<float>(gamma_inverse(gf));
    worst_f = std::max(worst_f, static_cast<double>(std::abs(rf - xf)));
  }
  ok = ok && worst_f <= 1e-6 && worst_d <= 1e-12;
  return {ok, fmt("gamma(b)=%.6f, junction gap %.1e, round trip max err %.1e single / "
                  "%.1e double over 1e5",
                  at_b, gap, worst_f, worst_d)};
}

// ---------------------------------------------------------------- criterion 6

Outcome c6_degeneracy() {
  nc::net::CodecModel model(nc::net::ArchConfig{}, 601);
  auto x = nc::train::make_texture_corpus(1, 64, 602)[0];
  nc::NoGradGuard ng;
  auto [g0, g1] = model.analyze(x, nc::net::Branch::guidance);
  auto [d0, d1] = model.analyze(x, nc::net::Branch::denoising);
  size_t diff = 0;
  for (size_t i = 0; i < g0.data().size(); ++i)
    diff += std::bit_cast<uint32_t>(g0.data()[i]) != std::bit_cast<uint32_t>(d0.data()[i]);
  for (size_t i = 0; i < g1.data().size(); ++i)
    diff += std::bit_cast<uint32_t>(g1.data()[i]) != std::bit_cast<uint32_t>(d1.data()[i]);
  return {diff == 0, fmt("%zu/%zu feature words differ between branches", diff,
                         g0.data().size() + g1.data().size())};
}

// ---------------------------------------------------------------- criterion 7

struct CoderScore {
  double bpp = 0;
  double d = 0;  // 255^2 * MSE vs the clean patch
};

CoderScore coder_score(const nc::net::CodecModel& model,
                       const std::vector<Tensor<float>>& patches) {
  CoderScore s;
  for (const auto& t : patches) {
    auto image = nc::img::from_tensor(t);
    auto res = nc::net::compress_image(image, model);
    s.bpp += 8.0 * static_cast<double>(res.stream.size()) /
             static_cast<double>(image.pixels());
    double mse = 0;
    for (size_t i = 0; i < image.data.size(); ++i) {
      const double d = static_cast<double>(res.recon.data[i]) - image.data[i];
      mse += d * d;
    }
    s.d += 255.0 * 255.0 * mse / static_cast<double>(image.data.size());
  }
  s.bpp /= static_cast<double>(patches.size());
  s.d /= static_cast<double>(patches.size());
  return s;
}

Outcome c7_training_ordering() {
  const auto t0 = clk::now();
  const auto dir = std::filesystem::temp_directory_path() / "nc_acceptance_c7";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);

  auto corpus = nc::train::make_texture_corpus(220, 64, 777);
  std::vector<Tensor<float>> train(corpus.begin(), corpus.begin() + 200);
  std::vector<Tensor<float>> val(corpus.begin() + 200, corpus.end());

  nc::train::TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.patch = 64;
  cfg.epochs = 30;
  cfg.warmup_epochs = 1;
  cfg.lr_drops = {20, 26};
  cfg.seed = 4242;

  auto pretrain_at = [&](int quality) {
    cfg.quality = quality;
    cfg.lambda_d = nc::train::TrainConfig::default_lambda(quality, nc::net::Metric::mse);
    nc::net::CodecModel model(nc::net::ArchConfig{}, 1000 + quality, quality,
                              nc::net::Metric::mse);
    nc::train::pretrain(model, train, cfg, "");
    return model;
  };
  auto m1 = pretrain_at(1);
  auto m6 = pretrain_at(6);
  const auto q6_path = (dir / "pre_q6.jdcm").string();
  nc::net::save_checkpoint(q6_path, m6);

  const auto s1 = coder_score(m1, val);
  const auto s6 = coder_score(m6, val);
  const bool a_ok = s1.bpp < s6.bpp && s1.d > s6.d;

  // Noisy validation pairs drawn from the training noise range.
  std::vector<Tensor<float>> noisy_val;
  Rng nrng(5150);
  for (size_t i = 0; i < val.size(); ++i) {
    auto fork = nrng.fork(i);
    const auto params = nc::noise::sample_noise_params(fork);
    auto vals = nc::noise::synthesize_noise(val[i].data(), params, fork.next_u64());
    noisy_val.push_back(Tensor<float>::from_data(val[i].shape(), std::move(vals)));
  }

  const double lambda6 = nc::train::TrainConfig::default_lambda(6, nc::net::Metric::mse);
  auto frozen = nc::net::load_checkpoint(q6_path);
  const double L_frozen = nc::train::eval_objective(frozen, noisy_val, val, lambda6,
                                                    nc::net::Metric::mse, 9000);

  auto ft = nc::net::load_checkpoint(q6_path);
  nc::train::TrainConfig fcfg = cfg;
  fcfg.quality = 6;
  fcfg.lambda_d = lambda6;
  fcfg.lambda_g = 3.0;
  fcfg.epochs = 20;
  fcfg.lr_drops = {14, 18};
  fcfg.seed = 616;
  auto fstats = nc::train::finetune(ft, train, fcfg, "");
  const double L_ft = nc::train::eval_objective(ft, noisy_val, val, lambda6,
                                                nc::net::Metric::mse, 9000);
  const bool b_ok = L_ft < L_frozen;

  const double g_first = fstats.epochs[static_cast<size_t>(fcfg.warmup_epochs)].G;
  const double g_last = fstats.epochs.back().G;
  const bool c_ok = g_last <= 0.5 * g_first;

  // Sanity band, not gated: training-time rate vs the coder's estimate.
  {
    nc::NoGradGuard ng;
    nc::train::LossReport rep;
    nc::train::rd_objective(m6, val[0], lambda6, nc::net::Metric::mse, 31337, &rep);
    auto res = nc::net::compress_image(nc::img::from_tensor(val[0]), m6);
    const double coder_bpp = res.est_bits / 4096.0;
    g_info = fmt("info: training rate %.4f bpp vs coder estimate %.4f bpp on a held-out "
                 "patch (documented 10%% sanity band: %s)",
                 rep.bpp_z1 + rep.bpp_z2, coder_bpp,
                 std::abs(rep.bpp_z1 + rep.bpp_z2 - coder_bpp) <=
                         0.1 * std::max(rep.bpp_z1 + rep.bpp_z2, coder_bpp)
                     ? "inside"
                     : "outside");
  }

  std::filesystem::remove_all(dir);
  const double t = secs(t0);
  return {a_ok && b_ok && c_ok && t < 3600.0,
          fmt("(a) bpp %.4f<%.4f D %.0f>%.0f %s; (b) val L %.3f<%.3f %s; "
              "(c) G %.4f -> %.4f (%.0f%% drop) %s; %.0f s of 3600",
              s1.bpp, s6.bpp, s1.d, s6.d, a_ok ? "ok" : "FAIL", L_ft, L_frozen,
              b_ok ? "ok" : "FAIL", g_first, g_last,
              100.0 * (1.0 - (g_first > 0 ? g_last / g_first : 1.0)),
              c_ok ? "ok" : "FAIL", t)};
}

// ---------------------------------------------------------------- criterion 8

Outcome c8_codec_determinism() {
  nc::net::CodecModel model(nc::net::ArchConfig{}, 801, 2, nc::net::Metric::mse);
  Rng rng(802);
  for (auto& [nm, t] : model.named_params()) {  // push latents off all-zero
    if (nm.rfind("ga", 0) != 0) continue;
    if (nm.ends_with(".w"))
      for (float& v : t.data()) v *= 2.0f;
    else
      for (float& v : t.data()) v = static_cast<float>(rng.uniform(-0.2, 0.2));
  }

  auto big = nc::img::from_tensor(nc::train::make_texture_corpus(1, 128, 803)[0]);
  nc::img::ImageBuffer image;
  image.width = 96;
  image.height = 80;
  image.data.resize(3 * 96 * 80);
  for (int64_t c = 0; c < 3; ++c)
    for (int64_t y = 0; y < 80; ++y)
      for (int64_t x = 0; x < 96; ++x)
        image.data[static_cast<size_t>((c * 80 + y) * 96 + x)] =
            big.data[static_cast<size_t>((c * 128 + y) * 128 + x)];

  auto r1 = nc::net::compress_image(image, model);
  auto r2 = nc::net::compress_image(image, model);
  const bool streams_equal = r1.stream == r2.stream;

  auto dec = nc::net::decompress_stream(r1.stream, model);
  size_t diff = 0;
  for (size_t i = 0; i < dec.data.size(); ++i)
    diff += std::bit_cast<uint32_t>(dec.data[i]) !=
            std::bit_cast<uint32_t>(r1.recon.data[i]);

  // Same check through the file interface.
  const auto dir = std::filesystem::temp_directory_path() / "nc_acceptance_c8";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto png = (dir / "x.png").string();
  nc::img::write_image(png, image);
  nc::net::compress_file(png, (dir / "a.jdc").string(), model);
  nc::net::compress_file(png, (dir / "b.jdc").string(), model);
  auto slurp = [](const std::string& p) {
    std::ifstream is(p, std::ios::binary);
    return std::string{std::istreambuf_iterator<char>(is),
                       std::istreambuf_iterator<char>()};
  };
  const bool files_equal = slurp((dir / "a.jdc").string()) ==
                           slurp((dir / "b.jdc").string());
  std::filesystem::remove_all(dir);

  return {streams_equal && diff == 0 && files_equal,
          fmt("stream %zu bytes, re-encode %s, recon words differing %zu, files %s",
              r1.stream.size(), streams_equal ? "identical" : "DIFFERS", diff,
              files_equal ? "identical" : "DIFFER")};
}

// ---------------------------------------------------------------- criterion 9

Outcome c9_metrics() {
  Rng rng(901);
  nc::img::ImageBuffer a;
  a.width = a.height = 64;
  a.data.resize(3 * 64 * 64);
  for (auto& v : a.data)
    v = static_cast<float>(rng.uniform(0.0, 1.0 - 16.0 / 255.0));
  auto b = a;
  for (auto& v : b.data) v += 16.0f / 255.0f;
  const double off = nc::metrics::psnr(a, b);
  const bool psnr_ok = std::abs(off - 24.05) <= 0.01;

  nc::img::ImageBuffer big;
  big.width = big.height = 128;
  big.data.resize(3 * 128 * 128);
  for (auto& v : big.data) v = static_cast<float>(rng.uniform());
  const double self = nc::metrics::ms_ssim(big, big);
  const bool self_ok = std::abs(self - 1.0) <= 1e-9;

  bool db_ok = true;
  for (double v : {0.0, 0.37, 0.9, 0.99, 0.9999})
    db_ok = db_ok &&
            std::abs(nc::metrics::ms_ssim_db(v) - (-10.0 * std::log10(1.0 - v))) <= 1e-9;

  auto clean_t = nc::train::make_texture_corpus(2, 128, 902);
  double by_gain[4] = {0, 0, 0, 0};
  const int gains[4] = {1, 2, 4, 8};
  uint64_t seed = 903;
  for (int gi = 0; gi < 4; ++gi) {
    const auto p = nc::noise::gain_preset(gains[gi]);
    for (int s = 0; s < 20; ++s)
      for (const auto& ct : clean_t) {
        auto clean = nc::img::from_tensor(ct);
        nc::img::ImageBuffer noisy{clean.width, clean.height,
                                   nc::noise::synthesize_noise(clean.data, p, seed++)};
        by_gain[gi] += nc::metrics::ms_ssim(clean, noisy);
      }
    by_gain[gi] /= 40.0;
  }
  const bool mono_ok = by_gain[0] > by_gain[1] && by_gain[1] > by_gain[2] &&
                       by_gain[2] > by_gain[3];

  return {psnr_ok && self_ok && db_ok && mono_ok,
          fmt("offset psnr %.4f dB, self ms-ssim err %.1e, gain means %.4f > %.4f > "
              "%.4f > %.4f",
              off, std::abs(self - 1.0), by_gain[0], by_gain[1], by_gain[2], by_gain[3])};
}

// --------------------------------------------------------------- criterion 10

Outcome c10_cap_and_warmup() {
  // Poisoned batch: a loss above the cap must leave every parameter and the
  // optimizer untouched, bit for bit.
  nc::net::ArchConfig arch;
  arch.n = 8;
  arch.m1 = 8;
  arch.m2 = 4;
  nc::net::CodecModel model(arch, 1001);
  auto batch = nc::train::make_texture_corpus(1, 64, 1002)[0];
  nc::Adam opt(model.compressor_parameters(), {.lr = 1e-4});
  nc::train::LossWindow window(4, 5.0);
  for (int i = 0; i < 4; ++i) {
    auto loss = nc::train::rd_objective(model, batch, 0.0018, nc::net::Metric::mse,
                                        1100 + i, nullptr);
    if (!nc::train::apply_step(opt, loss, window.cap()))
      return {false, "warmup steps unexpectedly skipped"};
    window.push(loss.item());
  }

  std::vector<std::vector<uint32_t>> snap;
  for (const auto& t : model.compressor_parameters()) {
    auto& s = snap.emplace_back();
    for (float v : t.data()) s.push_back(std::bit_cast<uint32_t>(v));
  }
  const auto m0 = opt.m();
  const auto v0 = opt.v();
  const auto t0 = opt.t();

  auto poisoned = nc::scale(nc::train::rd_objective(model, batch, 0.0018,
                                                    nc::net::Metric::mse, 1200, nullptr),
                            1e6f);
  const bool rejected = !nc::train::apply_step(opt, poisoned, window.cap());

  bool identical = opt.t() == t0 && opt.m() == m0 && opt.v() == v0;
  {
    size_t pi = 0;
    for (const auto& t : model.compressor_parameters()) {
      size_t i = 0;
      for (float v : t.data())
        identical = identical && std::bit_cast<uint32_t>(v) == snap[pi][i++];
      ++pi;
    }
  }
  auto ordinary = nc::train::rd_objective(model, batch, 0.0018, nc::net::Metric::mse,
                                          1201, nullptr);
  const bool resumes = nc::train::apply_step(opt, ordinary, window.cap());

  // Warmup ramp: the CSV lr column must replay the documented schedule and
  // reruns must reproduce the file byte for byte.
  nc::train::TrainConfig cfg;
  cfg.lambda_d = 0.0018;
  cfg.batch_size = 4;
  cfg.epochs = 4;
  cfg.warmup_epochs = 2;
  cfg.lr_drops = {3};
  cfg.seed = 1003;
  auto corpus = nc::train::make_texture_corpus(4, 64, 1004);
  const auto base = std::filesystem::temp_directory_path();
  std::string csv[2];
  for (int r = 0; r < 2; ++r) {
    const auto dir = base / ("nc_acceptance_c10_" + std::to_string(r));
    std::filesystem::remove_all(dir);
    nc::net::CodecModel m(arch, 1005);
    nc::train::pretrain(m, corpus, cfg, dir.string());
    std::ifstream is(dir / "pretrain_log.csv", std::ios::binary);
    csv[r] = {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
    std::filesystem::remove_all(dir);
  }
  const bool reproducible = !csv[0].empty() && csv[0] == csv[1];

  bool ramp_ok = true;
  {
    std::vector<std::string> lines;
    for (size_t p = 0; p < csv[0].size();) {
      auto e = csv[0].find('\n', p);
      lines.push_back(csv[0].substr(p, e - p));
      p = e + 1;
    }
    ramp_ok = lines.size() == 5;
    const double want[4] = {1e-6, 1e-6 + (1e-4 - 1e-6) * 0.5, 1e-4, 1e-5};
    for (int e = 0; ramp_ok && e < 4; ++e) {
      char cell[64];
      std::snprintf(cell, sizeof(cell), ",%.10g,", want[e]);
      ramp_ok = lines[static_cast<size_t>(e) + 1].find(cell) != std::string::npos;
    }
  }

  return {rejected && identical && resumes && reproducible && ramp_ok,
          fmt("poisoned step rejected=%d state intact=%d; warmup csv ramp=%d "
              "byte-reproducible=%d",
              rejected, identical, ramp_ok, reproducible)};
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* name;
    Outcome (*fn)();
  };
  const Entry entries[] = {
      {1, "entropy coder losslessness", c1_losslessness},
      {2, "rate estimate faithfulness", c2_rate_faithfulness},
      {3, "gradient correctness", c3_gradients},
      {4, "noise variance statistics", c4_noise_stats},
      {5, "gamma transfer correctness", c5_gamma},
      {6, "two-branch degeneracy", c6_degeneracy},
      {7, "end-to-end training ordering", c7_training_ordering},
      {8, "codec determinism", c8_codec_determinism},
      {9, "metric correctness", c9_metrics},
      {10, "loss cap and warmup semantics", c10_cap_and_warmup},
  };

  int failed = 0;
  for (const auto& e : entries) {
    const auto t0 = clk::now();
    Outcome o;
    try {
      o = e.fn();
    } catch (const std::exception& ex) {
      o = {false, fmt("exception: %s", ex.what())};
    }
    std::printf("criterion %2d: %s  %s (%s) [%.1f s]\n", e.id, o.pass ? "PASS" : "FAIL",
                e.name, o.detail.c_str(), secs(t0));
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  if (!g_info.empty()) std::printf("%s\n", g_info.c_str());
  std::printf("RESULT: %d/10 criteria passed\n", 10 - failed);
  return failed == 0 ? 0 : 1;
}
