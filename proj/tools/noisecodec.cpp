#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "noisecodec/container.hpp"
#include "noisecodec/evaluate.hpp"
#include "noisecodec/noise.hpp"
#include "noisecodec/train.hpp"

namespace {

using nc::train::TrainConfig;

std::vector<nc::Tensor<float>> load_corpus(const std::string& dir) {
  auto paths = nc::eval::list_images(dir);
  if (paths.empty())
    throw std::runtime_error("no .png or .ppm images in " + dir);
  std::vector<nc::Tensor<float>> out;
  out.reserve(paths.size());
  for (const auto& p : paths) out.push_back(nc::img::to_tensor(nc::img::read_image(p)));
  return out;
}

TrainConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read config: " + path);
  std::string text{std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
  return TrainConfig::from_json(text);
}

std::string epoch_path(const std::string& dir, int64_t epoch) {
  char stem[32];
  std::snprintf(stem, sizeof(stem), "epoch_%03lld", static_cast<long long>(epoch));
  return (std::filesystem::path(dir) / (std::string(stem) + ".jdcm")).string();
}

void report(const nc::train::TrainResult& r) {
  if (r.epochs.empty()) return;
  const auto& last = r.epochs.back();
  std::printf("epoch %lld: L=%.6g bpp=%.4g+%.4g D=%.6g G=%.6g (skipped %lld steps total)\n",
              static_cast<long long>(last.epoch), last.L, last.bpp_z1, last.bpp_z2,
              last.D, last.G, static_cast<long long>(r.skipped_total));
}

// Shared flags for the two training subcommands.
struct TrainArgs {
  std::string data, out, config, init;
  int quality = 1;
  std::string metric = "mse";
  double lambda_d = 0;
  int64_t epochs = -1, batch = -1, patch = -1, warmup = -1, resume = 0;
  uint64_t seed = 0;

  void add_common(CLI::App* cmd, bool fine) {
    cmd->add_option("--data", data, "directory of training images")->required();
    cmd->add_option("--out", out, "output directory for checkpoints and logs")
        ->required();
    cmd->add_option("--config", config, "training config JSON");
    if (fine)
      cmd->add_option("--init", init, "pretrained checkpoint to start from")
          ->required();
    cmd->add_option("--quality", quality, "quality tier 1-6");
    cmd->add_option("--metric", metric, "distortion metric: mse or msssim");
    cmd->add_option("--lambda-d", lambda_d, "distortion weight (default: tier table)");
    cmd->add_option("--epochs", epochs, "override epoch count");
    cmd->add_option("--batch", batch, "override batch size");
    cmd->add_option("--patch", patch, "override patch size");
    cmd->add_option("--warmup", warmup, "override warmup epoch count");
    cmd->add_option("--resume", resume, "restart at this epoch from --out");
    cmd->add_option("--seed", seed, "training seed");
  }

  TrainConfig build(const CLI::App* cmd, int q, nc::net::Metric m) const {
    TrainConfig cfg;
    if (cmd->count("--config")) cfg = load_config(config);
    cfg.quality = q;
    cfg.metric = m;
    if (cmd->count("--lambda-d"))
      cfg.lambda_d = lambda_d;
    else if (!cmd->count("--config"))
      cfg.lambda_d = TrainConfig::default_lambda(q, m);
    if (epochs >= 0) {
      cfg.epochs = epochs;
      if (!cmd->count("--config"))  // trim the stock drop schedule to fit
        std::erase_if(cfg.lr_drops, [&](int64_t d) { return d >= epochs; });
    }
    if (batch >= 0) cfg.batch_size = batch;
    if (patch >= 0) cfg.patch = patch;
    if (warmup >= 0) cfg.warmup_epochs = warmup;
    if (cmd->count("--seed")) cfg.seed = seed;
    return cfg;
  }
};

int run_synth(const std::string& in, const std::string& out, int gain,
              std::optional<double> sr, std::optional<double> ss, uint64_t seed) {
  nc::noise::NoiseParams p;
  if (sr && ss) {
    p.sigma_r = *sr;
    p.sigma_s = *ss;
  } else if (sr || ss) {
    std::fprintf(stderr, "--sigma-r and --sigma-s must be given together\n");
    return 1;
  } else {
    p = nc::noise::gain_preset(gain);
  }
  auto clean = nc::img::read_image(in);
  nc::img::ImageBuffer noisy{clean.width, clean.height,
                             nc::noise::synthesize_noise(clean.data, p, seed)};
  nc::img::write_image(out, noisy);
  return 0;
}

int run_pretrain(const TrainArgs& a, const CLI::App* cmd, const nc::net::ArchConfig& arch) {
  const auto metric = nc::net::metric_from_name(a.metric);
  auto cfg = a.build(cmd, a.quality, metric);
  cfg.validate();
  auto data = load_corpus(a.data);
  auto model = a.resume > 0
                   ? nc::net::load_checkpoint(epoch_path(a.out, a.resume - 1))
                   : nc::net::CodecModel(arch, cfg.seed, a.quality, metric);
  report(nc::train::pretrain(model, data, cfg, a.out, a.resume));
  return 0;
}

int run_finetune(const TrainArgs& a, const CLI::App* cmd) {
  auto model = a.resume > 0 ? nc::net::load_checkpoint(epoch_path(a.out, a.resume - 1))
                            : nc::net::load_checkpoint(a.init);
  const int q = cmd->count("--quality") ? a.quality : model.quality();
  const auto metric =
      cmd->count("--metric") ? nc::net::metric_from_name(a.metric) : model.metric();
  model.set_tags(q, metric);
  auto cfg = a.build(cmd, q, metric);
  cfg.validate();
  auto data = load_corpus(a.data);
  report(nc::train::finetune(model, data, cfg, a.out, a.resume));
  return 0;
}

int run_eval(const std::string& data, const std::vector<std::string>& models,
             const std::vector<int>& presets, const std::string& out_csv,
             const std::string& out_json, uint64_t seed) {
  auto run = nc::eval::evaluate_rd(nc::eval::list_images(data), models, presets, seed);
  {
    std::ofstream os(out_csv, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + out_csv);
    os << nc::eval::render_csv(run.records);
  }
  if (!out_json.empty()) {
    std::ofstream os(out_json, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + out_json);
    os << nc::eval::render_json(run);
  }
  std::printf("%zu records, %zu failed\n", run.records.size(), run.failures);
  return run.failures == run.records.size() ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"joint denoising and compression codec"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth-noise", "add camera noise to an image");
  std::string s_in, s_out;
  int s_gain = 4;
  std::optional<double> s_sr, s_ss;
  uint64_t s_seed = 0;
  synth->add_option("--in", s_in, "clean input image")->required();
  synth->add_option("--out", s_out, "noisy output image")->required();
  synth->add_option("--gain", s_gain, "camera gain preset: 1, 2, 4, or 8");
  synth->add_option("--sigma-r", s_sr, "readout noise sigma (overrides --gain)");
  synth->add_option("--sigma-s", s_ss, "shot noise slope (overrides --gain)");
  synth->add_option("--seed", s_seed, "noise seed");

  TrainArgs pre, fin;
  nc::net::ArchConfig arch;
  bool no_context = false;
  auto* pretrain = app.add_subcommand("pretrain", "train the compressor on clean images");
  pre.add_common(pretrain, false);
  pretrain->add_option("--latent-n", arch.n, "transform channel count");
  pretrain->add_option("--latent-m1", arch.m1, "main latent channel count");
  pretrain->add_option("--hyper-m2", arch.m2, "hyper latent channel count");
  pretrain->add_option("--ctx-kernel", arch.ctx_kernel, "context kernel size");
  pretrain->add_flag("--no-context", no_context, "disable the causal context model");

  auto* finetune = app.add_subcommand("finetune", "adapt a pretrained model to noisy inputs");
  fin.add_common(finetune, true);

  auto* compress = app.add_subcommand("compress", "encode an image to a bitstream");
  std::string c_model, c_in, c_out;
  compress->add_option("--model", c_model, "model checkpoint")->required();
  compress->add_option("--in", c_in, "input image")->required();
  compress->add_option("--out", c_out, "output bitstream (.jdc)")->required();

  auto* decompress = app.add_subcommand("decompress", "decode a bitstream to an image");
  std::string d_model, d_in, d_out;
  decompress->add_option("--model", d_model, "model checkpoint")->required();
  decompress->add_option("--in", d_in, "input bitstream")->required();
  decompress->add_option("--out", d_out, "output image")->required();

  auto* eval = app.add_subcommand("eval", "rate-distortion sweep over a dataset");
  std::string e_data, e_csv, e_json;
  std::vector<std::string> e_models;
  std::vector<int> e_presets{1, 2, 4, 8};
  uint64_t e_seed = 0;
  eval->add_option("--data", e_data, "directory of clean images")->required();
  eval->add_option("--model", e_models, "model checkpoints (repeatable)")->required();
  eval->add_option("--preset", e_presets, "noise gain presets");
  eval->add_option("--out", e_csv, "output CSV path")->required();
  eval->add_option("--json", e_json, "optional JSON summary path");
  eval->add_option("--seed", e_seed, "sweep seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*synth) return run_synth(s_in, s_out, s_gain, s_sr, s_ss, s_seed);
    if (*pretrain) {
      arch.context_enabled = !no_context;
      return run_pretrain(pre, pretrain, arch);
    }
    if (*finetune) return run_finetune(fin, finetune);
    if (*compress) {
      nc::net::compress_file(c_in, c_out, nc::net::load_checkpoint(c_model));
      return 0;
    }
    if (*decompress) {
      nc::net::decompress_file(d_in, d_out, nc::net::load_checkpoint(d_model));
      return 0;
    }
    if (*eval) return run_eval(e_data, e_models, e_presets, e_csv, e_json, e_seed);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
