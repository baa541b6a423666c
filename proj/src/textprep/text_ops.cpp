#include "pulsegauge/textprep.hpp"

#include "common/utf8.hpp"
#include "textprep/internal.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace pulsegauge::textprep {

namespace {

bool is_ascii_space(char c)
{
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_ascii_alnum(char c)
{
    const auto u = static_cast<unsigned char>(c);
    return u < 0x80 && std::isalnum(u);
}

bool kept_punct(char c)
{
    return c == '.' || c == '!' || c == '?' || c == ',' || c == '\'' || c == '"' || c == '#';
}

bool starts_with_nocase(std::string_view s, std::string_view prefix)
{
    if (s.size() < prefix.size())
        return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(s[i])) != prefix[i])
            return false;
    }
    return true;
}

constexpr std::array<std::string_view, 27> kEmoticons = {
    ":)", ":-)", ":(", ":-(", ":d", ":-d", ";)", ";-)", ":p", ":-p", ":/", ":-/", ":'(", ":|",
    ":o", ":-o", "<3", "</3", ":*", ":]", ":[", "=)", "=(", "^_^", "-_-", ":'-(", ";d",
};

// Smart quotes to ASCII; everything else unchanged.
std::string normalize_quotes(std::string_view chunk)
{
    std::string out;
    out.reserve(chunk.size());
    std::size_t pos = 0;
    while (pos < chunk.size()) {
        const std::size_t start = pos;
        const char32_t cp = utf8::decode(chunk, pos);
        if (cp == 0x2018 || cp == 0x2019 || cp == 0x201B || cp == 0x2032)
            out.push_back('\'');
        else if (cp == 0x201C || cp == 0x201D || cp == 0x201F || cp == 0x2033)
            out.push_back('"');
        else
            out.append(chunk.substr(start, pos - start));
    }
    return out;
}

std::string clean_chunk(std::string_view raw, bool urls, bool mentions, bool special)
{
    const std::string chunk = normalize_quotes(raw);
    if (special && is_emoticon(chunk))
        return chunk;
    std::string out;
    std::size_t i = 0;
    while (i < chunk.size()) {
        const std::string_view rest = std::string_view(chunk).substr(i);
        if (urls && (starts_with_nocase(rest, "http://") || starts_with_nocase(rest, "https://") ||
                     starts_with_nocase(rest, "www."))) {
            out.push_back(' ');
            break;  // a URL runs to the end of the chunk
        }
        const char c = chunk[i];
        if (mentions && c == '@' && i + 1 < chunk.size() && (is_ascii_alnum(chunk[i + 1]) || chunk[i + 1] == '_')) {
            ++i;
            while (i < chunk.size() && (is_ascii_alnum(chunk[i]) || chunk[i] == '_'))
                ++i;
            out.push_back(' ');
            continue;
        }
        if (!special) {
            out.push_back(c);
            ++i;
            continue;
        }
        if (static_cast<unsigned char>(c) < 0x80) {
            out.push_back(is_ascii_alnum(c) || kept_punct(c) ? c : ' ');
            ++i;
            continue;
        }
        std::size_t next = i;
        const char32_t cp = utf8::decode(chunk, next);
        if (cp != utf8::kInvalid && (utf8::is_emoji_codepoint(cp) || utf8::is_wordlike_codepoint(cp)))
            out.append(chunk, i, next - i);
        else
            out.push_back(' ');
        i = next;
    }
    return out;
}

std::string collapse_ws(std::string_view text)
{
    std::string out;
    for (const std::string_view w : detail::split_ws(text)) {
        if (!out.empty())
            out.push_back(' ');
        out.append(w);
    }
    return out;
}

} // namespace

namespace detail {

std::vector<std::string_view> split_ws(std::string_view text)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_ascii_space(text[i]))
            ++i;
        const std::size_t start = i;
        while (i < text.size() && !is_ascii_space(text[i]))
            ++i;
        if (i > start)
            out.push_back(text.substr(start, i - start));
    }
    return out;
}

std::string join(const std::vector<std::string>& parts)
{
    std::string out;
    for (const auto& p : parts) {
        if (p.empty())
            continue;
        if (!out.empty())
            out.push_back(' ');
        out += p;
    }
    return out;
}

std::vector<EmojiSpan> emoji_spans(std::string_view piece, const EmojiTable& table)
{
    std::vector<EmojiSpan> spans;
    std::size_t text_start = 0;
    std::size_t i = 0;
    auto flush_text = [&](std::size_t end) {
        if (end > text_start)
            spans.push_back({text_start, end, {}});
    };
    while (i < piece.size()) {
        std::string name;
        if (const std::size_t len = table.match(piece, i, name); len > 0) {
            flush_text(i);
            spans.push_back({i, i + len, std::move(name)});
            i += len;
            text_start = i;
            continue;
        }
        std::size_t next = i;
        const char32_t cp = utf8::decode(piece, next);
        if (cp >= 0x80 && (cp == utf8::kInvalid || utf8::is_emoji_codepoint(cp))) {
            // unknown emoji (or stray joiner/selector): dropped
            flush_text(i);
            text_start = next;
        }
        i = next;
    }
    flush_text(piece.size());
    return spans;
}

bool is_emoji_name(std::string_view token)
{
    if (token.size() < 3 || token.front() != ':' || token.back() != ':')
        return false;
    for (std::size_t i = 1; i + 1 < token.size(); ++i) {
        const char c = token[i];
        if (!(is_ascii_alnum(c) || c == '_' || c == '-'))
            return false;
    }
    return true;
}

std::pair<std::size_t, std::size_t> punct_edges(std::string_view piece)
{
    auto peelable = [](char c) {
        const auto u = static_cast<unsigned char>(c);
        return u < 0x80 && std::ispunct(u) && c != '#' && c != '@';
    };
    std::size_t lead = 0;
    while (lead < piece.size() && peelable(piece[lead]))
        ++lead;
    if (lead == piece.size())
        return {lead, 0};
    std::size_t trail = 0;
    while (trail < piece.size() - lead && peelable(piece[piece.size() - 1 - trail]))
        ++trail;
    return {lead, trail};
}

std::vector<std::pair<std::size_t, std::size_t>> token_ranges(std::string_view piece)
{
    if (piece.empty())
        return {};
    if (is_emoticon(piece) || is_emoji_name(piece))
        return {{0, piece.size()}};
    const auto [lead, trail] = punct_edges(piece);
    if (lead == piece.size())
        return {{0, piece.size()}};
    std::vector<std::pair<std::size_t, std::size_t>> out;
    if (lead > 0)
        out.emplace_back(0, lead);
    out.emplace_back(lead, piece.size() - trail);
    if (trail > 0)
        out.emplace_back(piece.size() - trail, piece.size());
    return out;
}

} // namespace detail

PrepProfile PrepProfile::vader()
{
    return PrepProfile{};
}

PrepProfile PrepProfile::contextual()
{
    PrepProfile p;
    p.remove_stopwords = false;
    p.lemmatize = false;
    return p;
}

std::string TokenSequence::joined() const
{
    return detail::join(tokens);
}

bool is_emoticon(std::string_view token)
{
    if (token.size() < 2 || token.size() > 4)
        return false;
    std::string lower(token);
    for (char& c : lower)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return std::find(kEmoticons.begin(), kEmoticons.end(), lower) != kEmoticons.end();
}

std::string strip_noise(std::string_view text)
{
    return strip_noise(text, true, true, true);
}

std::string strip_noise(std::string_view text, bool urls, bool mentions, bool special)
{
    std::string current = collapse_ws(text);
    // A removal can expose a new match (e.g. "@@a"); iterate to a fixed point.
    for (int round = 0; round < 8; ++round) {
        std::string next;
        for (const std::string_view chunk : detail::split_ws(current)) {
            next += clean_chunk(chunk, urls, mentions, special);
            next.push_back(' ');
        }
        next = collapse_ws(next);
        if (next == current)
            break;
        current = std::move(next);
    }
    return current;
}

std::string lowercase(std::string_view text)
{
    std::string out(text);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto c = static_cast<unsigned char>(out[i]);
        if (c >= 'A' && c <= 'Z') {
            out[i] = static_cast<char>(c + 32);
        } else if (c == 0xC3 && i + 1 < out.size()) {
            // Latin-1 capitals U+00C0..U+00DE (not U+00D7) share the UTF-8 lead byte with their lowercase forms
            const auto d = static_cast<unsigned char>(out[i + 1]);
            if (d >= 0x80 && d <= 0x9E && d != 0x97)
                out[i + 1] = static_cast<char>(d + 0x20);
            ++i;
        }
    }
    return out;
}

std::string emoji_to_text(std::string_view text, const EmojiTable& table)
{
    std::vector<std::string> parts;
    for (const std::string_view piece : detail::split_ws(text)) {
        for (const auto& span : detail::emoji_spans(piece, table))
            parts.push_back(span.name.empty() ? std::string(piece.substr(span.begin, span.end - span.begin)) : span.name);
    }
    return detail::join(parts);
}

std::string expand_abbreviations(std::string_view text, const Abbreviations& dict)
{
    std::vector<std::string> parts;
    for (const std::string_view piece : detail::split_ws(text)) {
        const auto [lead, trail] = detail::punct_edges(piece);
        if (lead < piece.size()) {
            const std::string core = lowercase(piece.substr(lead, piece.size() - lead - trail));
            if (const std::string* expansion = dict.find(core)) {
                parts.push_back(std::string(piece.substr(0, lead)) + *expansion +
                                std::string(piece.substr(piece.size() - trail)));
                continue;
            }
        }
        parts.emplace_back(piece);
    }
    return detail::join(parts);
}

TokenSequence tokenize(std::string_view text)
{
    TokenSequence seq;
    seq.source_text = std::string(text);
    for (const std::string_view piece : detail::split_ws(text)) {
        for (const auto& [b, e] : detail::token_ranges(piece)) {
            seq.tokens.emplace_back(piece.substr(b, e - b));
            seq.shadow.push_back(seq.tokens.back());
        }
    }
    seq.exclamations = static_cast<int>(std::count(text.begin(), text.end(), '!'));
    return seq;
}

std::vector<std::string> remove_stopwords(const std::vector<std::string>& tokens, const Stopwords& stopwords)
{
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) {
        if (Stopwords::is_protected(t) || !stopwords.contains(t))
            out.push_back(t);
    }
    return out;
}

} // namespace pulsegauge::textprep
