#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace keyreconf {

// Code points of a UTF-8 string; malformed bytes decode as U+FFFD.
std::u32string utf8_decode(std::string_view text);
std::string utf8_encode(std::u32string_view text);
std::size_t utf8_length(std::string_view text);

// Levenshtein distance with unit insertion, deletion and substitution costs.
std::size_t edit_distance(std::u32string_view a, std::u32string_view b);

// Words per minute, one word being five characters (spaces included).
double wpm(std::string_view response, double duration_s);

// Character error rate: edit distance between stimulus and response over the
// stimulus length in characters. Can exceed 1 for long responses.
double cer(std::string_view stimulus, std::string_view response);

}  // namespace keyreconf
