#include "stab/rng.hpp"

#include "stab/errors.hpp"

namespace stab {

std::uint64_t SplitMix64::next_below(std::uint64_t n) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "next_below(0)");
  const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return r % n;
  }
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t cell) {
  return SplitMix64::mix(root + SplitMix64::kGamma * (cell + 1));
}

}  // namespace stab
