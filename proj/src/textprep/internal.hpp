#pragma once

#include "pulsegauge/textprep.hpp"

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pulsegauge::textprep::detail {

std::vector<std::string_view> split_ws(std::string_view text);
std::string join(const std::vector<std::string>& parts);

// A piece of an emoji_to_text split: either plain text or a `:name:` token.
struct EmojiSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::string name;  // empty for plain text
};
std::vector<EmojiSpan> emoji_spans(std::string_view piece, const EmojiTable& table);

// Byte ranges of the tokens inside one whitespace-free piece.
std::vector<std::pair<std::size_t, std::size_t>> token_ranges(std::string_view piece);

bool is_emoji_name(std::string_view token);

// Leading/trailing sentence punctuation lengths of a piece.
std::pair<std::size_t, std::size_t> punct_edges(std::string_view piece);

// Hashtag body (without '#') split into words, in original case.
std::vector<std::string> segment_body(std::string_view body, const WordFrequencies& freq);

} // namespace pulsegauge::textprep::detail
