// SPDX-License-Identifier: Apache-2.0
#include "tdsl/rng.hpp"

#include <bit>

namespace tdsl {

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> coords) noexcept {
  std::uint64_t h = mix64(base ^ 0x7464736c2d736565ULL);
  for (std::uint64_t c : coords) h = mix64(h ^ mix64(c));
  return h;
}

std::uint64_t seed_coord(double value) noexcept { return std::bit_cast<std::uint64_t>(value); }

}  // namespace tdsl
