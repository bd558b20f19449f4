#include "iontometer/rng.hpp"

#include "iontometer/constants.hpp"

#include <cmath>

namespace iontometer::rng {

double uniform_phase(std::uint64_t key, std::uint64_t counter) {
  return constants::two_pi * uniform01(key, counter);
}

double normal(std::uint64_t key, std::uint64_t counter) {
  const Block b = philox(key, counter);
  const double u1 =
      (static_cast<double>(b.w0 >> 11) + 1.0) * 0x1.0p-53; // (0, 1]
  const double u2 = static_cast<double>(b.w1 >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(constants::two_pi * u2);
}

} // namespace iontometer::rng
