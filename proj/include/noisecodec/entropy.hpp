#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "noisecodec/common.hpp"

namespace nc::ent {

// Coder probability precision: integer frequencies sum to kProbScale.
inline constexpr int kPrecisionBits = 16;
inline constexpr uint32_t kProbScale = 1u << kPrecisionBits;

// Half-width of the integer symbol window around the model mean.
inline constexpr int kWindow = 32;
inline constexpr int kAlphabet = 2 * kWindow + 1;

// Minimum admissible Gaussian scale for conditional models.
inline constexpr double kSigmaFloor = 0.11;

// Probability that a Gaussian with the given mean and scale, discretized to
// integer bins of width one, lands on symbol k. Bins at the window edges
// absorb the tail mass beyond the window, so the window sums to one.
// The window spans [c - kWindow, c + kWindow] with c = llround(mu).
double gaussian_pmf(int64_t k, double mu, double sigma);

// Turns a nonnegative weight vector into integer frequencies that sum to
// exactly kProbScale with every entry >= 1: scale, floor, then hand out the
// shortfall to the largest fractional remainders (ties resolved by index).
std::vector<uint32_t> quantize_pmf(std::span<const double> pmf);

// A coder-ready alphabet: symbols lo .. lo + freq.size() - 1 with integer
// frequencies summing to kProbScale and their cumulative table.
struct SymbolModel {
  int64_t lo = 0;
  std::vector<uint32_t> freq;
  std::vector<uint32_t> cum;  // size freq.size() + 1, cum.back() == kProbScale

  void build_cum();
  int64_t hi() const { return lo + static_cast<int64_t>(freq.size()) - 1; }
  int64_t clamp_symbol(int64_t k) const;
  double bits(int64_t k) const;  // -log2 of the quantized probability
};

// Quantized window model for the discretized Gaussian above.
SymbolModel gaussian_model(double mu, double sigma);

// Sum of -log2 coded probability over symbols, using the same quantized
// tables the coder uses. model_at(i) supplies the model for symbol i.
double rate_estimate_bits(std::span<const int64_t> symbols,
                          const std::function<const SymbolModel&(size_t)>& model_at);
double rate_estimate_bits(std::span<const int64_t> symbols, const SymbolModel& shared);

// Range-variant ANS, 32-bit state, byte renormalization. The encoder walks
// the symbol list from the back so the decoder can stream forwards.
std::vector<uint8_t> rans_encode(std::span<const int64_t> symbols,
                                 const std::function<const SymbolModel&(size_t)>& model_at);
std::vector<uint8_t> rans_encode(std::span<const int64_t> symbols, const SymbolModel& shared);

class RansDecoder {
 public:
  explicit RansDecoder(std::span<const uint8_t> bytes);
  int64_t decode(const SymbolModel& m);
  // Verifies the final state and that the payload was fully consumed.
  void finish() const;

 private:
  std::span<const uint8_t> bytes_;
  size_t pos_ = 0;
  uint32_t x_ = 0;
};

uint32_t crc32(std::span<const uint8_t> bytes, uint32_t seed = 0);

}  // namespace nc::ent
