#include "ambiprobe/rng.hpp"

#include <cmath>
#include <numbers>

namespace ambiprobe {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_tag(std::string_view tag) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

CounterRng::CounterRng(std::uint64_t seed, std::string_view purpose) noexcept
    : key_(splitmix64(seed ^ splitmix64(hash_tag(purpose)))) {}

std::uint64_t CounterRng::next_u64() noexcept {
  const std::uint64_t block = key_ + 0xD1B54A32D192ED03ULL * ++counter_;
  return splitmix64(splitmix64(block) ^ key_);
}

std::uint64_t CounterRng::uniform_below(std::uint64_t bound) noexcept {
  // Rejection sampling keeps the result exactly uniform.
  const std::uint64_t limit = bound * (UINT64_MAX / bound);
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return x % bound;
}

double CounterRng::uniform01() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double CounterRng::normal() noexcept {
  double u1 = uniform01();
  while (u1 <= 0.0) u1 = uniform01();
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag,
                          std::uint64_t index) noexcept {
  return splitmix64(splitmix64(seed ^ hash_tag(tag)) + index);
}

}  // namespace ambiprobe
