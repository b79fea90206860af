#include "noisecodec/evaluate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include "json.hpp"
#include "noisecodec/container.hpp"
#include "noisecodec/metrics.hpp"
#include "noisecodec/noise.hpp"
#include "noisecodec/rng.hpp"
#include "noisecodec/threads.hpp"

namespace nc::eval {
namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string csv_safe(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void score_record(const std::string& path, const net::CodecModel& model,
                  RDRecord& r) {
  auto clean = img::read_image(path);
  img::ImageBuffer noisy;
  noisy.width = clean.width;
  noisy.height = clean.height;
  noisy.data = noise::synthesize_noise(clean.data, noise::gain_preset(r.preset), r.seed);

  auto t0 = std::chrono::steady_clock::now();
  auto compressed = net::compress_image(noisy, model);
  r.enc_seconds = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  auto recon = net::decompress_stream(compressed.stream, model);
  r.dec_seconds = seconds_since(t0);

  r.bpp = 8.0 * static_cast<double>(compressed.stream.size()) /
          static_cast<double>(clean.pixels());
  r.psnr_db = metrics::psnr(clean, recon);
  r.scales = metrics::max_scales(clean.height, clean.width);
  r.msssim = metrics::ms_ssim(clean, recon, r.scales);
  r.msssim_db = metrics::ms_ssim_db(r.msssim);
}

}  // namespace

std::vector<std::string> list_images(const std::string& dir) {
  std::vector<std::string> out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    auto ext = e.path().extension().string();
    if (ext == ".png" || ext == ".ppm") out.push_back(e.path().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

EvalRun evaluate_rd(const std::vector<std::string>& image_paths,
                    const std::vector<std::string>& checkpoint_paths,
                    const std::vector<int>& presets, uint64_t seed) {
  if (image_paths.empty()) throw std::invalid_argument("evaluate_rd: no images");
  if (checkpoint_paths.empty())
    throw std::invalid_argument("evaluate_rd: no checkpoints");
  if (presets.empty()) throw std::invalid_argument("evaluate_rd: no noise presets");
  for (int g : presets) noise::gain_preset(g);  // validate early

  std::vector<net::CodecModel> models;
  models.reserve(checkpoint_paths.size());
  for (const auto& p : checkpoint_paths) models.push_back(net::load_checkpoint(p));
  std::vector<size_t> model_order(models.size());
  for (size_t i = 0; i < models.size(); ++i) model_order[i] = i;
  std::sort(model_order.begin(), model_order.end(),
            [&](size_t a, size_t b) { return models[a].quality() < models[b].quality(); });

  std::vector<int> gains = presets;
  std::sort(gains.begin(), gains.end());
  std::vector<std::string> paths = image_paths;
  std::sort(paths.begin(), paths.end(), [](const std::string& a, const std::string& b) {
    return std::filesystem::path(a).filename() < std::filesystem::path(b).filename();
  });

  EvalRun run;
  std::vector<size_t> record_model;
  Rng base(seed);
  for (size_t mi : model_order)
    for (int g : gains)
      for (const auto& p : paths) {
        RDRecord r;
        r.image = std::filesystem::path(p).filename().string();
        r.quality = models[mi].quality();
        r.preset = g;
        r.seed = base.fork(run.records.size()).next_u64();
        run.records.push_back(std::move(r));
        record_model.push_back(mi);
      }

  parallel_for(static_cast<int64_t>(run.records.size()), [&](int64_t i) {
    ScopedSerialMath serial;
    auto& r = run.records[static_cast<size_t>(i)];
    const auto& path = paths[static_cast<size_t>(i) % paths.size()];
    try {
      score_record(path, models[record_model[static_cast<size_t>(i)]], r);
    } catch (const std::exception& e) {
      r.error = e.what();
    }
  });

  for (const auto& r : run.records)
    if (!r.error.empty()) ++run.failures;
  return run;
}

std::string render_csv(const std::vector<RDRecord>& records) {
  std::string out = "row,quality,preset,image,bpp,psnr_db,msssim,msssim_db,msssim_scales\n";
  size_t i = 0;
  while (i < records.size()) {
    const int q = records[i].quality;
    const int g = records[i].preset;
    size_t n = 0;
    double bpp = 0, ps = 0, ms = 0, msdb = 0;
    for (; i < records.size() && records[i].quality == q && records[i].preset == g; ++i) {
      const auto& r = records[i];
      if (!r.error.empty()) {
        out += "error," + std::to_string(q) + "," + std::to_string(g) + "," +
               csv_safe(r.image) + "," + csv_safe(r.error) + "\n";
        continue;
      }
      out += "record," + std::to_string(q) + "," + std::to_string(g) + "," +
             csv_safe(r.image) + "," + fmt(r.bpp) + "," + fmt(r.psnr_db) + "," +
             fmt(r.msssim) + "," + fmt(r.msssim_db) + "," + std::to_string(r.scales) +
             "\n";
      ++n;
      bpp += r.bpp;
      ps += r.psnr_db;
      ms += r.msssim;
      msdb += r.msssim_db;
    }
    const double d = n ? static_cast<double>(n) : std::nan("");
    out += "aggregate," + std::to_string(q) + "," + std::to_string(g) + "," +
           std::to_string(n) + "," + fmt(bpp / d) + "," + fmt(ps / d) + "," +
           fmt(ms / d) + "," + fmt(msdb / d) + "\n";
  }
  return out;
}

std::string render_json(const EvalRun& run) {
  nlohmann::json j;
  j["failures"] = run.failures;
  auto& rows = j["records"];
  rows = nlohmann::json::array();
  for (const auto& r : run.records) {
    nlohmann::json e{{"image", r.image}, {"quality", r.quality},
                     {"preset", r.preset}, {"seed", r.seed}};
    if (r.error.empty()) {
      e["bpp"] = r.bpp;
      e["psnr_db"] = r.psnr_db;
      e["msssim"] = r.msssim;
      e["msssim_db"] = r.msssim_db;
      e["msssim_scales"] = r.scales;
      e["enc_seconds"] = r.enc_seconds;
      e["dec_seconds"] = r.dec_seconds;
    } else {
      e["error"] = r.error;
    }
    rows.push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

}  // namespace nc::eval
