#pragma once

#include <cstddef>
#include <string>
#include <string_view>

// UTF-8 aware helpers. Lengths are counted in code points, which is what
// "characters" means everywhere in this library.
namespace ptfa::text {

std::size_t char_count(std::string_view s) noexcept;

std::string_view trim(std::string_view s) noexcept;

/// Longest prefix holding at most `max_chars` code points.
std::string_view prefix_chars(std::string_view s, std::size_t max_chars) noexcept;

/// Cut `s` down to `max_chars`, preferring the last sentence end inside the
/// limit, then the last word boundary, then a hard cut.
std::string truncate_sentences(std::string_view s, std::size_t max_chars);

/// Number of maximal runs of non-whitespace characters.
std::size_t word_count(std::string_view s) noexcept;

std::string to_lower_ascii(std::string_view s);

}  // namespace ptfa::text
