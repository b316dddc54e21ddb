#include "ptfa/text.hpp"

#include <cctype>

namespace ptfa::text {
namespace {

bool is_continuation(unsigned char c) { return (c & 0xC0) == 0x80; }

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool ends_sentence(char c) { return c == '.' || c == '!' || c == '?'; }

}  // namespace

std::size_t char_count(std::string_view s) noexcept {
    std::size_t n = 0;
    for (char c : s) {
        if (!is_continuation(static_cast<unsigned char>(c))) ++n;
    }
    return n;
}

std::string_view trim(std::string_view s) noexcept {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return s.substr(b, e - b);
}

std::string_view prefix_chars(std::string_view s, std::size_t max_chars) noexcept {
    std::size_t seen = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!is_continuation(static_cast<unsigned char>(s[i]))) {
            if (seen == max_chars) return s.substr(0, i);
            ++seen;
        }
    }
    return s;
}

std::string truncate_sentences(std::string_view s, std::size_t max_chars) {
    if (char_count(s) <= max_chars) return std::string(s);
    const std::string_view head = prefix_chars(s, max_chars);
    const bool cut_at_space = head.size() < s.size() && is_space(s[head.size()]);

    // Sentence end: terminator followed by whitespace, or by the cut itself
    // when the original continues with whitespace.
    for (std::size_t i = head.size(); i-- > 0;) {
        if (!ends_sentence(head[i])) continue;
        const bool followed_by_space = i + 1 < head.size() ? is_space(head[i + 1]) : cut_at_space;
        if (followed_by_space) return std::string(trim(head.substr(0, i + 1)));
    }
    if (cut_at_space) return std::string(trim(head));
    for (std::size_t i = head.size(); i-- > 0;) {
        if (is_space(head[i])) {
            auto words = trim(head.substr(0, i));
            if (!words.empty()) return std::string(words);
        }
    }
    return std::string(head);
}

std::size_t word_count(std::string_view s) noexcept {
    std::size_t n = 0;
    bool in_word = false;
    for (char c : s) {
        if (is_space(c)) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++n;
        }
    }
    return n;
}

std::string to_lower_ascii(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

}  // namespace ptfa::text
