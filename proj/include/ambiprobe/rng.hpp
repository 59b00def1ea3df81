#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace ambiprobe {

std::uint64_t splitmix64(std::uint64_t x) noexcept;
/// FNV-1a, used to turn purpose tags into stream keys.
std::uint64_t hash_tag(std::string_view tag) noexcept;

/// Counter-based generator: output i of stream (seed, tag) is a pure function
/// of (seed, tag, i). Two streams with different tags never share state, so
/// adding a new random decision never perturbs existing ones.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::string_view purpose) noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t uniform_below(std::uint64_t bound) noexcept;
  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() noexcept;
  bool coin() noexcept { return (next_u64() >> 63) != 0; }
  /// Standard normal via Box-Muller.
  double normal() noexcept;

  template <class T>
  void shuffle(std::vector<T>& v) noexcept {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Independent 64-bit sub-seed derived from (seed, tag, index).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag,
                          std::uint64_t index) noexcept;

}  // namespace ambiprobe
