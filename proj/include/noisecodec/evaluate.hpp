#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace nc::eval {

// One (image, quality, preset) scoring result. `error` nonempty marks a
// failed record; its metric fields are meaningless then.
struct RDRecord {
  std::string image;  // file name without directory
  int quality = 0;    // checkpoint quality tag
  int preset = 0;     // noise gain (1/2/4/8)
  uint64_t seed = 0;  // per-record noise seed
  double bpp = 0;     // stream bits / original pixels, from the byte count
  double psnr_db = 0;
  double msssim = 0;
  double msssim_db = 0;
  int scales = 0;  // MS-SSIM scale count used for this image size
  double enc_seconds = 0;
  double dec_seconds = 0;
  std::string error;
};

struct EvalRun {
  std::vector<RDRecord> records;  // sorted by (quality, preset, image)
  size_t failures = 0;
};

// PNG/PPM files directly inside dir, sorted by file name.
std::vector<std::string> list_images(const std::string& dir);

// Scores every (image, quality, preset) triple: synthesize noise with a
// per-record seed forked from `seed`, compress with the matching checkpoint,
// decompress, and rate against the clean original. Records may be processed
// in parallel; results are deterministic either way. Unreadable inputs turn
// into error records rather than aborting the sweep.
EvalRun evaluate_rd(const std::vector<std::string>& image_paths,
                    const std::vector<std::string>& checkpoint_paths,
                    const std::vector<int>& presets, uint64_t seed);

// CSV table: one header, `record` rows in sorted order, and an `aggregate`
// row (success count plus mean bpp/metrics) after each (quality, preset)
// block. Timings are excluded so reruns reproduce the bytes.
std::string render_csv(const std::vector<RDRecord>& records);

// JSON mirror of the table including wall-clock timings.
std::string render_json(const EvalRun& run);

}  // namespace nc::eval
