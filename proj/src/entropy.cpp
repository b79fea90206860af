#include "noisecodec/entropy.hpp"

#include <algorithm>
#include <cmath>

#include "noisecodec/mathfn.hpp"

namespace nc::ent {

namespace {

constexpr uint32_t kRansL = 1u << 23;  // lower bound of the normalized state

int64_t window_center(double mu) { return std::llround(mu); }

void check_sigma(double sigma) {
  // Slack of one float ulp so float-typed floor values pass.
  if (!std::isfinite(sigma) || sigma < kSigmaFloor - 1e-8)
    throw std::invalid_argument("entropy: sigma " + std::to_string(sigma) +
                                " below floor " + std::to_string(kSigmaFloor));
}

}  // namespace

double gaussian_pmf(int64_t k, double mu, double sigma) {
  check_sigma(sigma);
  const int64_t c = window_center(mu);
  if (k < c - kWindow || k > c + kWindow) return 0.0;
  const double upper =
      (k == c + kWindow) ? 1.0 : math::normal_cdf((static_cast<double>(k) + 0.5 - mu) / sigma);
  const double lower =
      (k == c - kWindow) ? 0.0 : math::normal_cdf((static_cast<double>(k) - 0.5 - mu) / sigma);
  return upper - lower;
}

std::vector<uint32_t> quantize_pmf(std::span<const double> pmf) {
  const size_t n = pmf.size();
  if (n == 0 || n > kProbScale) throw std::invalid_argument("entropy: bad pmf length");
  double total = 0;
  for (double v : pmf) {
    if (!std::isfinite(v)) throw std::invalid_argument("entropy: non-finite pmf value");
    total += std::max(v, 0.0);
  }
  if (total <= 0) throw std::invalid_argument("entropy: pmf has no mass");

  std::vector<uint32_t> freq(n);
  std::vector<std::pair<double, size_t>> rem;
  rem.reserve(n);
  uint64_t assigned = 0;
  for (size_t i = 0; i < n; ++i) {
    const double scaled = std::max(pmf[i], 0.0) / total * kProbScale;
    const double fl = std::floor(scaled);
    freq[i] = static_cast<uint32_t>(fl);
    assigned += freq[i];
    if (scaled > fl) rem.emplace_back(scaled - fl, i);
  }
  // The shortfall never exceeds the number of bins with a fractional part,
  // so zero-remainder bins are skipped above.
  int64_t deficit = static_cast<int64_t>(kProbScale) - static_cast<int64_t>(assigned);
  std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  for (int64_t i = 0; i < deficit && i < static_cast<int64_t>(rem.size()); ++i)
    ++freq[rem[static_cast<size_t>(i)].second];
  for (int64_t i = static_cast<int64_t>(rem.size()); i < deficit; ++i)
    ++freq[static_cast<size_t>(i - static_cast<int64_t>(rem.size()))];

  // Raise empty bins to one quantum, stealing from the fullest bin each time
  // (ties break toward the lower index).
  size_t zeros = 0, big = n;
  uint32_t second = 0;
  for (size_t i = 0; i < n; ++i) {
    if (freq[i] == 0) {
      ++zeros;
    } else if (big == n || freq[i] > freq[big]) {
      if (big != n) second = freq[big];
      big = i;
    } else if (freq[i] > second) {
      second = freq[i];
    }
  }
  if (zeros > 0) {
    if (freq[big] >= second + zeros + 1) {
      // The fullest bin stays strictly fullest through every steal.
      freq[big] -= static_cast<uint32_t>(zeros);
      for (size_t i = 0; i < n; ++i)
        if (freq[i] == 0) freq[i] = 1;
    } else {
      for (size_t i = 0; i < n; ++i) {
        if (freq[i] != 0) continue;
        size_t top = 0;
        for (size_t j = 1; j < n; ++j)
          if (freq[j] > freq[top]) top = j;
        --freq[top];
        freq[i] = 1;
      }
    }
  }
  return freq;
}

void SymbolModel::build_cum() {
  cum.assign(freq.size() + 1, 0);
  for (size_t i = 0; i < freq.size(); ++i) cum[i + 1] = cum[i] + freq[i];
  if (cum.back() != kProbScale)
    throw std::invalid_argument("entropy: frequencies do not sum to the coder scale");
}

int64_t SymbolModel::clamp_symbol(int64_t k) const { return std::clamp(k, lo, hi()); }

double SymbolModel::bits(int64_t k) const {
  if (k < lo || k > hi()) throw std::invalid_argument("entropy: symbol outside model support");
  return kPrecisionBits - std::log2(static_cast<double>(freq[static_cast<size_t>(k - lo)]));
}

SymbolModel gaussian_model(double mu, double sigma) {
  check_sigma(sigma);
  SymbolModel m;
  m.lo = window_center(mu) - kWindow;
  std::array<double, kAlphabet> pmf{};
  // Mass outside 12 sigma is far below one coder quantum; skip those bins.
  const int64_t jlo =
      std::clamp<int64_t>(static_cast<int64_t>(std::floor(mu - 12 * sigma)) - m.lo, 0, kAlphabet - 1);
  const int64_t jhi =
      std::clamp<int64_t>(static_cast<int64_t>(std::ceil(mu + 12 * sigma)) - m.lo, 0, kAlphabet - 1);
  double prev =
      (jlo == 0) ? 0.0 : math::normal_cdf((static_cast<double>(m.lo + jlo) - 0.5 - mu) / sigma);
  for (int64_t j = jlo; j <= jhi; ++j) {
    const double up = (j == kAlphabet - 1)
                          ? 1.0
                          : math::normal_cdf((static_cast<double>(m.lo + j) + 0.5 - mu) / sigma);
    pmf[static_cast<size_t>(j)] = up - prev;
    prev = up;
  }
  m.freq = quantize_pmf(pmf);
  m.build_cum();
  return m;
}

double rate_estimate_bits(std::span<const int64_t> symbols,
                          const std::function<const SymbolModel&(size_t)>& model_at) {
  double bits = 0;
  for (size_t i = 0; i < symbols.size(); ++i) bits += model_at(i).bits(symbols[i]);
  return bits;
}

double rate_estimate_bits(std::span<const int64_t> symbols, const SymbolModel& shared) {
  return rate_estimate_bits(symbols, [&](size_t) -> const SymbolModel& { return shared; });
}

std::vector<uint8_t> rans_encode(std::span<const int64_t> symbols,
                                 const std::function<const SymbolModel&(size_t)>& model_at) {
  std::vector<uint8_t> out;
  out.reserve(symbols.size() / 2 + 16);
  uint32_t x = kRansL;
  for (size_t i = symbols.size(); i-- > 0;) {
    const SymbolModel& m = model_at(i);
    const int64_t k = symbols[i];
    if (k < m.lo || k > m.hi())
      throw std::invalid_argument("entropy: symbol outside model support");
    const size_t j = static_cast<size_t>(k - m.lo);
    const uint32_t f = m.freq[j];
    const uint32_t x_max = ((kRansL >> kPrecisionBits) << 8) * f;
    while (x >= x_max) {
      out.push_back(static_cast<uint8_t>(x & 0xff));
      x >>= 8;
    }
    x = ((x / f) << kPrecisionBits) + (x % f) + m.cum[j];
  }
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<uint8_t>(x & 0xff));
    x >>= 8;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<uint8_t> rans_encode(std::span<const int64_t> symbols, const SymbolModel& shared) {
  return rans_encode(symbols, [&](size_t) -> const SymbolModel& { return shared; });
}

RansDecoder::RansDecoder(std::span<const uint8_t> bytes) : bytes_(bytes) {
  if (bytes_.size() < 4) throw DecodeError("entropy: payload shorter than the coder state");
  for (int i = 0; i < 4; ++i) x_ = (x_ << 8) | bytes_[pos_++];
  if (x_ < kRansL) throw DecodeError("entropy: initial coder state out of range");
}

int64_t RansDecoder::decode(const SymbolModel& m) {
  const uint32_t slot = x_ & (kProbScale - 1);
  const auto it = std::upper_bound(m.cum.begin(), m.cum.end(), slot);
  const size_t j = static_cast<size_t>(it - m.cum.begin()) - 1;
  x_ = m.freq[j] * (x_ >> kPrecisionBits) + slot - m.cum[j];
  while (x_ < kRansL) {
    if (pos_ >= bytes_.size()) throw DecodeError("entropy: truncated payload");
    x_ = (x_ << 8) | bytes_[pos_++];
  }
  return m.lo + static_cast<int64_t>(j);
}

void RansDecoder::finish() const {
  if (x_ != kRansL) throw DecodeError("entropy: coder state mismatch at end of payload");
  if (pos_ != bytes_.size()) throw DecodeError("entropy: trailing bytes after payload");
}

uint32_t crc32(std::span<const uint8_t> bytes, uint32_t seed) {
  static const auto table = [] {
    std::array<uint32_t, 256> t{};
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  uint32_t c = ~seed;
  for (uint8_t b : bytes) c = table[(c ^ b) & 0xff] ^ (c >> 8);
  return ~c;
}

}  // namespace nc::ent
