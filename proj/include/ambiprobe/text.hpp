#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// UTF-8 helpers. Character offsets everywhere in this project are Unicode
// code point offsets.
namespace ambiprobe::text {

/// Decodes UTF-8 into code points. Throws ambiprobe::Error on invalid input.
std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);
bool is_valid_utf8(std::string_view s) noexcept;

bool is_unicode_space(char32_t c) noexcept;

/// Simple lowercase mapping for ASCII, Latin-1, Latin Extended-A and basic
/// Greek/Cyrillic. Enough for the Western European datasets this tool sees.
char32_t to_lower(char32_t c) noexcept;
std::u32string to_lower(std::u32string_view s);

bool equals_ignore_case(std::string_view a, std::string_view b);

/// Splits on runs of Unicode whitespace; punctuation stays attached.
std::vector<std::string> split_words(std::string_view s);

/// Number of code points in a valid UTF-8 string.
std::size_t length(std::string_view s);

/// Code point substring [begin, end). Throws on out-of-range bounds.
std::string substr(std::string_view s, std::size_t begin, std::size_t end);

}  // namespace ambiprobe::text
