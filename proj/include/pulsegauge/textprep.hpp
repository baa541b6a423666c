#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace pulsegauge::textprep {

struct PrepProfile {
    bool strip_urls = true;
    bool strip_mentions = true;
    bool strip_special = true;
    bool lowercase = true;
    bool emoji_to_text = true;
    bool expand_abbreviations = true;
    bool segment_hashtags = true;
    bool tokenize = true;
    bool remove_stopwords = true;
    bool lemmatize = true;

    // Input for the lexicon engine: every stage on.
    static PrepProfile vader();
    // Input for the contextual classifier: keeps stopwords and inflections.
    static PrepProfile contextual();

    bool operator==(const PrepProfile&) const = default;
};

struct TokenSequence {
    std::vector<std::string> tokens;
    std::string source_text;
    // Pre-lowercase form of each token, aligned with `tokens`. Lets the
    // lexicon engine see ALL-CAPS emphasis after normalization.
    std::vector<std::string> shadow;
    // '!' characters left after noise removal.
    int exclamations = 0;

    std::string joined() const;
};

// codepoint sequence -> ":name:". Keys have U+FE0F removed; input is matched
// the same way.
class EmojiTable {
public:
    static EmojiTable load(const std::filesystem::path& path);
    void add(std::u32string codepoints, std::string name);

    // Longest table entry starting at byte `pos`; returns its byte length and
    // sets `name`, or returns 0 when nothing matches.
    std::size_t match(std::string_view text, std::size_t pos, std::string& name) const;
    bool contains(std::u32string_view codepoints) const;
    std::size_t size() const { return names_.size(); }

    std::vector<std::u32string> keys() const;

private:
    std::unordered_map<std::u32string, std::string> names_;
    std::unordered_set<char32_t> first_;
    std::size_t max_len_ = 0;
};

class Abbreviations {
public:
    static Abbreviations load(const std::filesystem::path& path);
    void add(std::string abbreviation, std::string expansion);
    const std::string* find(std::string_view lowercase_token) const;
    std::size_t size() const { return map_.size(); }

private:
    std::unordered_map<std::string, std::string> map_;
};

class WordFrequencies {
public:
    static WordFrequencies load(const std::filesystem::path& path);
    void add(std::string word, std::uint64_t count);

    // 0 for unknown words.
    std::uint64_t count(std::string_view word) const;
    bool contains(std::string_view word) const { return count(word) > 0; }
    std::uint64_t total() const { return total_; }
    std::size_t size() const { return counts_.size(); }

private:
    std::unordered_map<std::string, std::uint64_t> counts_;
    std::uint64_t total_ = 0;
};

class Stopwords {
public:
    static Stopwords load(const std::filesystem::path& path);
    void add(std::string word);
    bool contains(std::string_view word) const;
    // "not", "no", "never", "nor", "n't": survive removal even if listed.
    static bool is_protected(std::string_view word);

private:
    std::unordered_set<std::string> words_;
};

// All shared lookup tables; read-only after load.
struct TextResources {
    EmojiTable emoji;
    Abbreviations abbreviations;
    WordFrequencies word_freq;
    Stopwords stopwords;

    // Expects emoji.tsv, abbreviations.tsv, wordfreq.tsv, stopwords.txt.
    static TextResources load(const std::filesystem::path& dir);
};

// Removes URLs (http://, https://, www.), @mentions and special characters.
// Kept: ASCII letters and digits, letters of other scripts, emoji, the
// punctuation . ! ? , ' " and #, and whole-word emoticons such as ":)".
// Whitespace is collapsed to single spaces and trimmed.
std::string strip_noise(std::string_view text);
std::string strip_noise(std::string_view text, bool urls, bool mentions, bool special);

std::string lowercase(std::string_view text);

// Each known emoji sequence becomes a space-delimited ":name:" token; unknown
// emoji are dropped.
std::string emoji_to_text(std::string_view text, const EmojiTable& table);

// Whole-token, case-insensitive dictionary replacement.
std::string expand_abbreviations(std::string_view text, const Abbreviations& dict);

// Splits "#BigNews" into {"big", "news"}: camel-case / digit boundaries are
// taken first, then each part is split by a dynamic program over the word
// frequency table. Falls back to the whole lowercased tag when no known word
// is found.
std::vector<std::string> segment_hashtag(std::string_view tag, const WordFrequencies& freq);

// Per-word score used by segment_hashtag (higher is better).
double segment_word_score(std::string_view word, const WordFrequencies& freq);

bool is_emoticon(std::string_view token);

TokenSequence tokenize(std::string_view text);

std::vector<std::string> remove_stopwords(const std::vector<std::string>& tokens, const Stopwords& stopwords);

// Suffix-rule lemmatizer (-s/-es/-ies, -ing, -ed) that only accepts a
// candidate base form found in `vocabulary`, plus a small irregular table.
std::string lemmatize_word(std::string_view token, const WordFrequencies& vocabulary);
std::vector<std::string> lemmatize(const std::vector<std::string>& tokens, const WordFrequencies& vocabulary);

// Stage order: strip_noise, lowercase, emoji_to_text, expand_abbreviations,
// segment_hashtags, tokenize, remove_stopwords, lemmatize.
TokenSequence preprocess(std::string_view text, const PrepProfile& profile, const TextResources& resources);

} // namespace pulsegauge::textprep
