#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace pti {

// Canonical form of a mention: NFC, default Unicode case folding, surrounding
// whitespace trimmed and internal whitespace runs collapsed to one U+0020.
// Throws std::invalid_argument on ill-formed UTF-8.
std::string normalize_mention(std::string_view text);

bool is_valid_utf8(std::string_view text);

// Byte offsets of every code point start in `text`, plus text.size() as a
// final sentinel. Assumes well-formed UTF-8.
std::vector<std::size_t> code_point_offsets(std::string_view text);

std::size_t code_point_count(std::string_view text);

// Splits a normalized mention on single spaces, dropping duplicates while
// keeping first-occurrence order.
std::vector<std::string> distinct_words(std::string_view normalized);

}  // namespace pti
