#include "noisecodec/codec.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include "json.hpp"
#include "noisecodec/mathfn.hpp"

namespace nc::net {

namespace {

constexpr float kSigmaFloorF = static_cast<float>(ent::kSigmaFloor);

Tensor<float> param_uniform(Shape s, int64_t fan_in, Rng& rng) {
  const float bound = static_cast<float>(1.0 / std::sqrt(static_cast<double>(fan_in)));
  auto t = Tensor<float>::rand_uniform(s, rng, -bound, bound);
  t.set_requires_grad(true);
  return t;
}

ArchConfig validated(ArchConfig a) {
  a.validate();
  return a;
}

}  // namespace

void ArchConfig::validate() const {
  if (n < 1 || m1 < 1 || m2 < 1)
    throw std::invalid_argument("arch: channel counts must be positive");
  if (ctx_kernel < 1 || ctx_kernel % 2 == 0)
    throw std::invalid_argument("arch: context kernel must be odd and positive");
}

std::string ArchConfig::to_json() const {
  nlohmann::json j;
  j["n"] = n;
  j["m1"] = m1;
  j["m2"] = m2;
  j["ctx_kernel"] = ctx_kernel;
  j["context_enabled"] = context_enabled;
  return j.dump();
}

ArchConfig ArchConfig::from_json(const std::string& text) {
  ArchConfig a;
  try {
    auto j = nlohmann::json::parse(text);
    a.n = j.value("n", a.n);
    a.m1 = j.value("m1", a.m1);
    a.m2 = j.value("m2", a.m2);
    a.ctx_kernel = j.value("ctx_kernel", a.ctx_kernel);
    a.context_enabled = j.value("context_enabled", a.context_enabled);
  } catch (const nlohmann::json::exception& e) {
    throw DecodeError(std::string("arch config: ") + e.what());
  }
  a.validate();
  return a;
}

std::string metric_name(Metric m) { return m == Metric::mse ? "mse" : "msssim"; }

Metric metric_from_name(const std::string& name) {
  if (name == "mse") return Metric::mse;
  if (name == "msssim") return Metric::msssim;
  throw std::invalid_argument("unknown metric name: " + name);
}

Tensor<float> quantize(const Tensor<float>& z, QuantMode mode, Rng* rng,
                       const Tensor<float>* mu) {
  if (mode == QuantMode::train_noise) {
    if (!rng) fail_shape("quantize", "train_noise mode requires a generator");
    auto noise = Tensor<float>::rand_uniform(z.shape(), *rng, -0.5f, 0.5f);
    return add(z, noise);
  }
  auto out = Tensor<float>::zeros(z.shape());
  auto zd = z.data();
  auto od = out.data();
  if (mu) {
    if (!(mu->shape() == z.shape()))
      fail_shape("quantize", "mean shape " + mu->shape().str() + " does not match " +
                                 z.shape().str());
    auto md = mu->data();
    for (size_t i = 0; i < zd.size(); ++i) {
      int64_t r = std::llround(static_cast<double>(zd[i]) - static_cast<double>(md[i]));
      r = std::clamp<int64_t>(r, -ent::kWindow, ent::kWindow);
      od[i] = md[i] + static_cast<float>(r);
    }
  } else {
    for (size_t i = 0; i < zd.size(); ++i)
      od[i] = static_cast<float>(std::llround(static_cast<double>(zd[i])));
  }
  return out;
}

std::pair<Tensor<float>, PadRecord> pad_to_multiple(const Tensor<float>& x) {
  const Shape& s = x.shape();
  PadRecord rec{s.h, s.w};
  const int64_t ph = (kPadMultiple - s.h % kPadMultiple) % kPadMultiple;
  const int64_t pw = (kPadMultiple - s.w % kPadMultiple) % kPadMultiple;
  if (ph == 0 && pw == 0) return {x, rec};
  return {pad_reflect_hw(x, ph, pw), rec};
}

Tensor<float> gaussian_likelihood(const Tensor<float>& z, const Tensor<float>& mu,
                                  const Tensor<float>& sigma) {
  auto d = sub(z, mu);
  auto up = normal_cdf(div(add_scalar(d, 0.5f), sigma));
  auto lo = normal_cdf(div(add_scalar(d, -0.5f), sigma));
  return lower_bound(sub(up, lo), static_cast<float>(ent::kLikelihoodFloor));
}

CodecModel::CodecModel(ArchConfig arch, uint64_t seed, int quality, Metric metric)
    : arch_(validated(std::move(arch))),
      quality_(quality),
      metric_(metric),
      rng_(seed),
      ga0_c1_(3, arch_.n, 5, 2, 2, rng_),
      ga0_r1_(arch_.n, rng_),
      ga0_c2_(arch_.n, arch_.n, 5, 2, 2, rng_),
      ga0_r2_(arch_.n, rng_),
      ga1_c1_(arch_.n, arch_.n, 5, 2, 2, rng_),
      ga1_r1_(arch_.n, rng_),
      ga1_c2_(arch_.n, arch_.m1, 5, 2, 2, rng_),
      ga1_r2_(arch_.m1, rng_),
      ga1_att_(arch_.m1, rng_),
      d0_(arch_.n, rng_),
      d1_(arch_.m1, rng_),
      gs_att_(arch_.m1, rng_),
      gs_t1_(arch_.m1, arch_.n, 4, rng_),
      gs_r1_(arch_.n, rng_),
      gs_t2_(arch_.n, arch_.n, 4, rng_),
      gs_r2_(arch_.n, rng_),
      gs_t3_(arch_.n, arch_.n, 4, rng_),
      gs_r3_(arch_.n, rng_),
      gs_t4_(arch_.n, 3, 4, rng_),
      ha_c1_(arch_.m1, arch_.n, 5, 2, 2, rng_),
      ha_r1_(arch_.n, rng_),
      ha_c2_(arch_.n, arch_.m2, 5, 2, 2, rng_),
      ha_r2_(arch_.m2, rng_),
      hs_t1_(arch_.m2, arch_.n, 4, rng_),
      hs_r1_(arch_.n, rng_),
      hs_t2_(arch_.n, 2 * arch_.m1, 4, rng_),
      ctx_w_(param_uniform(Shape{2 * arch_.m1, arch_.m1, arch_.ctx_kernel, arch_.ctx_kernel},
                           arch_.m1 * arch_.ctx_kernel * arch_.ctx_kernel, rng_)),
      ctx_b_(param_uniform(Shape{1, 2 * arch_.m1, 1, 1},
                           arch_.m1 * arch_.ctx_kernel * arch_.ctx_kernel, rng_)),
      ep1_(4 * arch_.m1, 3 * arch_.m1, 1, 1, 0, rng_),
      ep2_(3 * arch_.m1, 2 * arch_.m1, 1, 1, 0, rng_),
      prior_(arch_.m2, rng_) {}

void CodecModel::set_tags(int quality, Metric metric) {
  quality_ = quality;
  metric_ = metric;
}

NamedParams CodecModel::named_params() {
  NamedParams p;
  ga0_c1_.collect("ga0.c1", p);
  ga0_r1_.collect("ga0.r1", p);
  ga0_c2_.collect("ga0.c2", p);
  ga0_r2_.collect("ga0.r2", p);
  ga1_c1_.collect("ga1.c1", p);
  ga1_r1_.collect("ga1.r1", p);
  ga1_c2_.collect("ga1.c2", p);
  ga1_r2_.collect("ga1.r2", p);
  ga1_att_.collect("ga1.att", p);
  d0_.collect("d0", p);
  d1_.collect("d1", p);
  gs_att_.collect("gs.att", p);
  gs_t1_.collect("gs.t1", p);
  gs_r1_.collect("gs.r1", p);
  gs_t2_.collect("gs.t2", p);
  gs_r2_.collect("gs.r2", p);
  gs_t3_.collect("gs.t3", p);
  gs_r3_.collect("gs.r3", p);
  gs_t4_.collect("gs.t4", p);
  ha_c1_.collect("ha.c1", p);
  ha_r1_.collect("ha.r1", p);
  ha_c2_.collect("ha.c2", p);
  ha_r2_.collect("ha.r2", p);
  hs_t1_.collect("hs.t1", p);
  hs_r1_.collect("hs.r1", p);
  hs_t2_.collect("hs.t2", p);
  p.emplace_back("ctx.w", ctx_w_);
  p.emplace_back("ctx.b", ctx_b_);
  ep1_.collect("ep.l1", p);
  ep2_.collect("ep.l2", p);
  for (auto& kv : prior_.named_parameters("prior")) p.push_back(kv);
  return p;
}

std::vector<Tensor<float>> CodecModel::parameters() {
  std::vector<Tensor<float>> out;
  for (auto& [name, t] : named_params()) out.push_back(t);
  return out;
}

std::vector<Tensor<float>> CodecModel::compressor_parameters() {
  std::vector<Tensor<float>> out;
  for (auto& [name, t] : named_params()) {
    if (name.rfind("d0.", 0) == 0 || name.rfind("d1.", 0) == 0) continue;
    out.push_back(t);
  }
  return out;
}

std::vector<Tensor<float>> CodecModel::denoiser_parameters() {
  NamedParams p;
  d0_.collect("d0", p);
  d1_.collect("d1", p);
  std::vector<Tensor<float>> out;
  for (auto& [name, t] : p) out.push_back(t);
  return out;
}

std::pair<Tensor<float>, Tensor<float>> CodecModel::analyze(const Tensor<float>& x,
                                                            Branch branch) const {
  const Shape& s = x.shape();
  if (s.c != 3)
    fail_shape("analyze", "expected 3 input channels, got " + s.str());
  if (s.h % kPadMultiple != 0 || s.w % kPadMultiple != 0)
    fail_shape("analyze", "spatial extents must be multiples of " +
                              std::to_string(kPadMultiple) + ", got " + s.str());
  auto t = ga0_r2_.forward(ga0_c2_.forward(ga0_r1_.forward(ga0_c1_.forward(x))));
  Tensor<float> z0 = branch == Branch::denoising ? add(t, d0_.forward(t)) : t;
  auto u = ga1_att_.forward(
      ga1_r2_.forward(ga1_c2_.forward(ga1_r1_.forward(ga1_c1_.forward(z0)))));
  Tensor<float> z1 = branch == Branch::denoising ? add(u, d1_.forward(u)) : u;
  return {z0, z1};
}

Tensor<float> CodecModel::hyper_analysis(const Tensor<float>& z1) const {
  if (z1.shape().c != arch_.m1)
    fail_shape("hyper_analysis", "expected " + std::to_string(arch_.m1) +
                                     " channels, got " + z1.shape().str());
  return ha_r2_.forward(ha_c2_.forward(ha_r1_.forward(ha_c1_.forward(z1))));
}

Tensor<float> CodecModel::hyper_synthesis(const Tensor<float>& z2hat) const {
  if (z2hat.shape().c != arch_.m2)
    fail_shape("hyper_synthesis", "expected " + std::to_string(arch_.m2) +
                                      " channels, got " + z2hat.shape().str());
  return hs_t2_.forward(hs_r1_.forward(hs_t1_.forward(z2hat)));
}

Tensor<float> CodecModel::context_features(const Tensor<float>& z1hat) const {
  const Shape& s = z1hat.shape();
  if (!arch_.context_enabled)
    return Tensor<float>::zeros(Shape{s.b, 2 * arch_.m1, s.h, s.w});
  return bias_channels(masked_conv2d(z1hat, ctx_w_), ctx_b_);
}

std::pair<Tensor<float>, Tensor<float>> CodecModel::entropy_parameters(
    const Tensor<float>& hyper_feat, const Tensor<float>& ctx_feat) const {
  auto in = concat_channels(hyper_feat, ctx_feat);
  auto h1 = leaky_relu(ep1_.forward(in), kLeakySlope);
  auto o = ep2_.forward(h1);
  auto mu = slice_channels(o, 0, arch_.m1);
  auto sigma = add_scalar(softplus(slice_channels(o, arch_.m1, 2 * arch_.m1)), kSigmaFloorF);
  return {mu, sigma};
}

Tensor<float> CodecModel::synthesize(const Tensor<float>& z1hat) const {
  auto h = gs_att_.forward(z1hat);
  h = gs_r1_.forward(gs_t1_.forward(h));
  h = gs_r2_.forward(gs_t2_.forward(h));
  h = gs_r3_.forward(gs_t3_.forward(h));
  return gs_t4_.forward(h);
}

CodecModel::TrainPath CodecModel::train_path(const Tensor<float>& z1, Rng& rng) const {
  TrainPath out;
  auto z2 = hyper_analysis(z1);
  out.z2_tilde = quantize(z2, QuantMode::train_noise, &rng);
  out.lik2 = prior_.likelihood(out.z2_tilde);
  auto hs = hyper_synthesis(out.z2_tilde);
  out.z1_tilde = quantize(z1, QuantMode::train_noise, &rng);
  auto ctx = context_features(out.z1_tilde);
  std::tie(out.mu, out.sigma) = entropy_parameters(hs, ctx);
  out.lik1 = gaussian_likelihood(out.z1_tilde, out.mu, out.sigma);
  return out;
}

CodedLatents CodecModel::code_latents(const Tensor<float>& z1) const {
  NoGradGuard ng;
  const Shape zs = z1.shape();
  if (zs.b != 1) fail_shape("code_latents", "coding expects batch 1, got " + zs.str());
  CodedLatents out;

  auto z2 = hyper_analysis(z1);
  const auto models = prior_.models();
  out.z2hat = Tensor<float>::zeros(z2.shape());
  auto z2d = z2.data();
  auto qd = out.z2hat.data();
  out.sym2.resize(z2d.size());
  const Shape s2 = z2.shape();
  const int64_t plane2 = s2.h * s2.w;
  for (int64_t c = 0; c < s2.c; ++c) {
    const auto& m = models[static_cast<size_t>(c)];
    for (int64_t i = 0; i < plane2; ++i) {
      const size_t k = static_cast<size_t>(c * plane2 + i);
      const int64_t q = m.clamp_symbol(std::llround(static_cast<double>(z2d[k])));
      qd[k] = static_cast<float>(q);
      out.sym2[k] = q;
    }
  }

  auto hs = hyper_synthesis(out.z2hat);
  out.z1hat = Tensor<float>::zeros(zs);
  out.mu = Tensor<float>::zeros(zs);
  out.sigma = Tensor<float>::zeros(zs);
  out.sym1.reserve(static_cast<size_t>(z1.numel()));
  auto z1d = z1.data();
  scan_causal(hs, out.z1hat, &out.mu, &out.sigma,
              [&](size_t k, float mu, float) -> int64_t {
                int64_t r = std::llround(static_cast<double>(z1d[k]) -
                                         static_cast<double>(mu));
                r = std::clamp<int64_t>(r, -ent::kWindow, ent::kWindow);
                out.sym1.push_back(r);
                return r;
              });
  return out;
}

Tensor<float> CodecModel::decode_z1(
    const Tensor<float>& z2hat, Shape z1_shape,
    const std::function<int64_t(size_t, float, float)>& residual_at) const {
  NoGradGuard ng;
  auto hs = hyper_synthesis(z2hat);
  auto z1hat = Tensor<float>::zeros(z1_shape);
  scan_causal(hs, z1hat, nullptr, nullptr, residual_at);
  return z1hat;
}

// Walks positions in raster order, all channels per position. The context
// taps see only strictly-earlier positions, so the decoder can reproduce the
// exact same scan as it fills z1hat in. Accumulation is in double with a
// fixed loop order; both coder sides run this one implementation, which is
// what makes encode/decode reconstructions bit-identical.
void CodecModel::scan_causal(
    const Tensor<float>& hs_feat, Tensor<float>& z1hat, Tensor<float>* mu_out,
    Tensor<float>* sigma_out,
    const std::function<int64_t(size_t, float, float)>& residual_at) const {
  const Shape zs = z1hat.shape();
  const int64_t m1 = arch_.m1;
  const Shape hss = hs_feat.shape();
  if (zs.b != 1 || zs.c != m1 || hss.b != 1 || hss.c != 2 * m1 || hss.h != zs.h ||
      hss.w != zs.w)
    fail_shape("scan_causal", "hyper features " + hss.str() +
                                  " incompatible with latent " + zs.str());
  const int64_t H = zs.h, W = zs.w;
  auto zd = z1hat.data();

  if (!arch_.context_enabled) {
    // No feedback through the scan: the head runs once on the full tensor.
    auto ctx = context_features(z1hat);
    auto [mu, sigma] = entropy_parameters(hs_feat, ctx);
    auto md = mu.data();
    auto sd = sigma.data();
    for (int64_t y = 0; y < H; ++y)
      for (int64_t x = 0; x < W; ++x)
        for (int64_t c = 0; c < m1; ++c) {
          const size_t k = static_cast<size_t>((c * H + y) * W + x);
          const int64_t r = residual_at(k, md[k], sd[k]);
          zd[k] = md[k] + static_cast<float>(r);
          if (mu_out) mu_out->data()[k] = md[k];
          if (sigma_out) sigma_out->data()[k] = sd[k];
        }
    return;
  }

  const auto hd = hs_feat.data();
  const auto wd = ctx_w_.data();
  const auto bd = ctx_b_.data();
  const auto e1w = ep1_.w.data();
  const auto e1b = ep1_.b.data();
  const auto e2w = ep2_.w.data();
  const auto e2b = ep2_.b.data();
  const int64_t K = arch_.ctx_kernel, R = K / 2;
  std::vector<double> in(static_cast<size_t>(4 * m1));
  std::vector<double> h1(static_cast<size_t>(3 * m1));
  std::vector<double> o(static_cast<size_t>(2 * m1));

  for (int64_t y = 0; y < H; ++y)
    for (int64_t x = 0; x < W; ++x) {
      for (int64_t c = 0; c < 2 * m1; ++c)
        in[static_cast<size_t>(c)] = hd[static_cast<size_t>((c * H + y) * W + x)];
      for (int64_t co = 0; co < 2 * m1; ++co) {
        double acc = bd[static_cast<size_t>(co)];
        for (int64_t ci = 0; ci < m1; ++ci) {
          const float* wrow = &wd[static_cast<size_t>(((co * m1 + ci) * K) * K)];
          for (int64_t dy = 0; dy < K; ++dy) {
            const int64_t iy = y + dy - R;
            if (iy < 0 || iy >= H) continue;
            const int64_t dxmax = dy < R ? K : (dy == R ? R : 0);
            for (int64_t dx = 0; dx < dxmax; ++dx) {
              const int64_t ix = x + dx - R;
              if (ix < 0 || ix >= W) continue;
              acc += static_cast<double>(wrow[dy * K + dx]) *
                     static_cast<double>(zd[static_cast<size_t>((ci * H + iy) * W + ix)]);
            }
          }
        }
        in[static_cast<size_t>(2 * m1 + co)] = acc;
      }
      for (int64_t j = 0; j < 3 * m1; ++j) {
        double acc = e1b[static_cast<size_t>(j)];
        for (int64_t c = 0; c < 4 * m1; ++c)
          acc += static_cast<double>(e1w[static_cast<size_t>(j * 4 * m1 + c)]) *
                 in[static_cast<size_t>(c)];
        h1[static_cast<size_t>(j)] =
            acc > 0 ? acc : static_cast<double>(kLeakySlope) * acc;
      }
      for (int64_t t = 0; t < 2 * m1; ++t) {
        double acc = e2b[static_cast<size_t>(t)];
        for (int64_t j = 0; j < 3 * m1; ++j)
          acc += static_cast<double>(e2w[static_cast<size_t>(t * 3 * m1 + j)]) *
                 h1[static_cast<size_t>(j)];
        o[static_cast<size_t>(t)] = acc;
      }
      for (int64_t c = 0; c < m1; ++c) {
        const float mu = static_cast<float>(o[static_cast<size_t>(c)]);
        const float sg =
            kSigmaFloorF +
            static_cast<float>(math::softplus(o[static_cast<size_t>(m1 + c)]));
        const size_t k = static_cast<size_t>((c * H + y) * W + x);
        const int64_t r = residual_at(k, mu, sg);
        zd[k] = mu + static_cast<float>(r);
        if (mu_out) mu_out->data()[k] = mu;
        if (sigma_out) sigma_out->data()[k] = sg;
      }
    }
}

namespace {

void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct Cursor {
  const std::string& buf;
  size_t pos = 0;

  void need(size_t n) const {
    if (pos + n > buf.size()) throw DecodeError("truncated checkpoint");
  }
  uint8_t u8() {
    need(1);
    return static_cast<uint8_t>(buf[pos++]);
  }
  uint16_t u16() {
    uint16_t v = u8();
    return static_cast<uint16_t>(v | (u8() << 8));
  }
  uint32_t u32() {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::string bytes(size_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

}  // namespace

void save_checkpoint(const std::string& path, CodecModel& model) {
  nlohmann::json j;
  const ArchConfig& a = model.arch();
  j["n"] = a.n;
  j["m1"] = a.m1;
  j["m2"] = a.m2;
  j["ctx_kernel"] = a.ctx_kernel;
  j["context_enabled"] = a.context_enabled;
  j["quality"] = model.quality();
  j["metric"] = metric_name(model.metric());
  const std::string head = j.dump();

  std::string buf = "JDCM";
  put_u16(buf, 1);
  put_u32(buf, static_cast<uint32_t>(head.size()));
  buf += head;
  for (auto& [name, t] : model.named_params()) {
    put_u16(buf, static_cast<uint16_t>(name.size()));
    buf += name;
    buf.push_back(0);  // dtype: f32
    buf.push_back(4);  // rank
    const Shape& s = t.shape();
    for (int64_t e : {s.b, s.c, s.h, s.w}) put_u32(buf, static_cast<uint32_t>(e));
    for (float v : t.data()) put_u32(buf, std::bit_cast<uint32_t>(v));
  }

  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write checkpoint: " + path);
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!os) throw std::runtime_error("checkpoint write failed: " + path);
}

CodecModel load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read checkpoint: " + path);
  std::string data((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());

  Cursor cur{data};
  if (cur.bytes(4) != "JDCM") throw DecodeError("bad checkpoint magic");
  const uint16_t version = cur.u16();
  if (version != 1)
    throw DecodeError("unsupported checkpoint version " + std::to_string(version));
  const uint32_t jlen = cur.u32();
  const std::string head = cur.bytes(jlen);

  ArchConfig arch;
  int quality = 0;
  Metric metric = Metric::mse;
  try {
    auto j = nlohmann::json::parse(head);
    arch.n = j.at("n").get<int64_t>();
    arch.m1 = j.at("m1").get<int64_t>();
    arch.m2 = j.at("m2").get<int64_t>();
    arch.ctx_kernel = j.at("ctx_kernel").get<int64_t>();
    arch.context_enabled = j.at("context_enabled").get<bool>();
    quality = j.at("quality").get<int>();
    metric = metric_from_name(j.at("metric").get<std::string>());
    arch.validate();
  } catch (const DecodeError&) {
    throw;
  } catch (const std::exception& e) {
    throw DecodeError(std::string("checkpoint header: ") + e.what());
  }

  CodecModel model(arch, 0, quality, metric);
  auto params = model.named_params();
  std::unordered_map<std::string, size_t> index;
  for (size_t i = 0; i < params.size(); ++i) index[params[i].first] = i;
  std::vector<bool> seen(params.size(), false);

  while (cur.pos < data.size()) {
    const uint16_t nlen = cur.u16();
    const std::string name = cur.bytes(nlen);
    auto it = index.find(name);
    if (it == index.end()) throw DecodeError("unknown parameter: " + name);
    if (seen[it->second]) throw DecodeError("duplicate parameter: " + name);
    const uint8_t dtype = cur.u8();
    if (dtype != 0) throw DecodeError("unsupported dtype for " + name);
    const uint8_t rank = cur.u8();
    if (rank != 4) throw DecodeError("unsupported rank for " + name);
    Shape s;
    s.b = cur.u32();
    s.c = cur.u32();
    s.h = cur.u32();
    s.w = cur.u32();
    Tensor<float>& t = params[it->second].second;
    if (!(s == t.shape()))
      throw DecodeError("shape mismatch for " + name + ": checkpoint " + s.str() +
                        " vs model " + t.shape().str());
    auto dst = t.data();
    for (auto& v : dst) v = std::bit_cast<float>(cur.u32());
    seen[it->second] = true;
  }
  for (size_t i = 0; i < params.size(); ++i)
    if (!seen[i]) throw DecodeError("missing parameter: " + params[i].first);
  return model;
}

}  // namespace nc::net
