#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ambiprobe::base64 {

/// Standard alphabet, '=' padded.
std::string encode(std::span<const std::uint8_t> bytes);

/// Strict decode. Returns nullopt on a length that is not a multiple of four,
/// a character outside the alphabet, or misplaced padding.
std::optional<std::vector<std::uint8_t>> decode(std::string_view text);

}  // namespace ambiprobe::base64
