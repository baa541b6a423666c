#include "pulsegauge/textprep.hpp"

#include "textprep/internal.hpp"

#include <algorithm>

namespace pulsegauge::textprep {

namespace {

// Whitespace-free chunk of text plus its pre-lowercase form. Both strings
// always have the same byte length, so a range in one addresses the other.
struct Piece {
    std::string text;
    std::string shadow;
};

using Pieces = std::vector<Piece>;

void emoji_stage(Pieces& pieces, const EmojiTable& table)
{
    Pieces out;
    for (const Piece& p : pieces) {
        for (const auto& span : detail::emoji_spans(p.text, table)) {
            if (!span.name.empty())
                out.push_back({span.name, span.name});
            else
                out.push_back({p.text.substr(span.begin, span.end - span.begin),
                               p.shadow.substr(span.begin, span.end - span.begin)});
        }
    }
    pieces = std::move(out);
}

void abbreviation_stage(Pieces& pieces, const Abbreviations& dict)
{
    Pieces out;
    for (Piece& p : pieces) {
        const auto [lead, trail] = detail::punct_edges(p.text);
        const std::string* expansion = nullptr;
        if (lead < p.text.size())
            expansion = dict.find(lowercase(std::string_view(p.text).substr(lead, p.text.size() - lead - trail)));
        if (!expansion) {
            out.push_back(std::move(p));
            continue;
        }
        std::vector<std::string_view> words = detail::split_ws(*expansion);
        std::vector<std::string> parts(words.begin(), words.end());
        parts.front().insert(0, p.text.substr(0, lead));
        parts.back() += p.text.substr(p.text.size() - trail);
        for (auto& w : parts)
            out.push_back({w, w});
    }
    pieces = std::move(out);
}

bool tag_char(char c)
{
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

void hashtag_stage(Pieces& pieces, bool segment, bool lowercased, const WordFrequencies& freq)
{
    Pieces out;
    for (Piece& p : pieces) {
        if (p.text.size() < 2 || p.text[0] != '#') {
            out.push_back(std::move(p));
            continue;
        }
        std::size_t end = 1;
        while (end < p.text.size() && tag_char(p.text[end]))
            ++end;
        const std::string suffix = p.text.substr(end);
        const std::string suffix_shadow = p.shadow.substr(end);
        const std::string body_shadow = p.shadow.substr(1, end - 1);
        std::vector<std::string> words;
        if (body_shadow.empty())
            words = {};
        else if (segment)
            words = detail::segment_body(body_shadow, freq);
        else
            words = {body_shadow};

        if (words.empty()) {
            if (!suffix.empty())
                out.push_back({suffix, suffix_shadow});
            continue;
        }
        for (std::size_t k = 0; k < words.size(); ++k) {
            Piece w{(segment || lowercased) ? lowercase(words[k]) : words[k], words[k]};
            if (k + 1 == words.size()) {
                w.text += suffix;
                w.shadow += suffix_shadow;
            }
            out.push_back(std::move(w));
        }
    }
    pieces = std::move(out);
}

} // namespace

TokenSequence preprocess(std::string_view text, const PrepProfile& profile, const TextResources& resources)
{
    TokenSequence seq;
    seq.source_text = std::string(text);

    std::string cleaned = (profile.strip_urls || profile.strip_mentions || profile.strip_special)
                              ? strip_noise(text, profile.strip_urls, profile.strip_mentions, profile.strip_special)
                              : std::string(text);
    seq.exclamations = static_cast<int>(std::count(cleaned.begin(), cleaned.end(), '!'));

    Pieces pieces;
    for (const std::string_view w : detail::split_ws(cleaned))
        pieces.push_back({std::string(w), std::string(w)});

    if (profile.lowercase) {
        for (Piece& p : pieces)
            p.text = lowercase(p.text);
    }
    if (profile.emoji_to_text)
        emoji_stage(pieces, resources.emoji);
    if (profile.expand_abbreviations)
        abbreviation_stage(pieces, resources.abbreviations);
    hashtag_stage(pieces, profile.segment_hashtags, profile.lowercase, resources.word_freq);

    for (const Piece& p : pieces) {
        if (!profile.tokenize) {
            seq.tokens.push_back(p.text);
            seq.shadow.push_back(p.shadow);
            continue;
        }
        for (const auto& [b, e] : detail::token_ranges(p.text)) {
            seq.tokens.push_back(p.text.substr(b, e - b));
            seq.shadow.push_back(p.shadow.substr(b, e - b));
        }
    }

    auto drop_stopwords = [&] {
        std::size_t keep = 0;
        for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
            const std::string& t = seq.tokens[i];
            if (!Stopwords::is_protected(t) && resources.stopwords.contains(t))
                continue;
            if (keep != i) {
                seq.tokens[keep] = std::move(seq.tokens[i]);
                seq.shadow[keep] = std::move(seq.shadow[i]);
            }
            ++keep;
        }
        seq.tokens.resize(keep);
        seq.shadow.resize(keep);
    };

    if (profile.remove_stopwords)
        drop_stopwords();
    if (profile.lemmatize) {
        for (auto& t : seq.tokens)
            t = lemmatize_word(t, resources.word_freq);
        // a lemma can itself be a stopword ("having" -> "have")
        if (profile.remove_stopwords)
            drop_stopwords();
    }
    return seq;
}

} // namespace pulsegauge::textprep
