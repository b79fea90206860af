#include "noisecodec/rng.hpp"

#include <cstring>
#include <istream>
#include <ostream>

namespace nc {

void Rng::save(std::ostream& os) const {
  uint64_t bits = 0;
  static_assert(sizeof(bits) == sizeof(spare_));
  std::memcpy(&bits, &spare_, sizeof(bits));
  os << gen_ << "\n" << (have_spare_ ? 1 : 0) << " " << bits << "\n";
}

void Rng::load(std::istream& is) {
  is >> gen_;
  int flag = 0;
  uint64_t bits = 0;
  is >> flag >> bits;
  std::memcpy(&spare_, &bits, sizeof(bits));
  have_spare_ = flag != 0;
}

}  // namespace nc
