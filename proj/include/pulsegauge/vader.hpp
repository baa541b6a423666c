#pragma once

#include "pulsegauge/textprep.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pulsegauge::vader {

struct VaderConfig {
    double booster = 0.293;
    double negation_scalar = -0.74;
    double caps_bonus = 0.733;
    double exclamation_bonus = 0.292;
    int exclamation_max = 4;
    double normalization_alpha = 15.0;
    double but_before = 0.5;
    double but_after = 1.5;
    double window_scale[3] = {1.0, 0.95, 0.9};
};

struct VaderScores {
    double pos = 0.0;
    double neg = 0.0;
    double neu = 0.0;
    double compound = 0.0;
};

class Lexicon {
public:
    // Later files override earlier entries. Throws Error(LexiconMissing) when
    // a file cannot be opened and Error(ParseError) naming the line when an
    // entry is malformed or |valence| > 4.
    static Lexicon load(const std::vector<std::filesystem::path>& paths);
    // vader_lexicon.tsv, emoji_valence.tsv, slang_valence.tsv from `dir`.
    static Lexicon load_default(const std::filesystem::path& dir);

    void set(std::string token, double valence);
    const double* find(std::string_view token) const;
    bool contains(std::string_view token) const { return find(token) != nullptr; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

private:
    std::unordered_map<std::string, double> entries_;
};

// s / sqrt(s^2 + alpha)
double normalize_sum(double valence_sum, double alpha = 15.0);

// Fully uppercase: at least one letter and no lowercase letter.
bool is_all_caps(std::string_view token);
std::vector<bool> caps_flags(const std::vector<std::string>& shadow);

bool is_booster(std::string_view token);
// Signed booster increment (+ for intensifiers, - for dampeners), 0 otherwise.
double booster_value(std::string_view token, const VaderConfig& config = {});
bool is_negator(std::string_view token);

class Analyzer {
public:
    explicit Analyzer(Lexicon lexicon, VaderConfig config = {});

    const Lexicon& lexicon() const { return lexicon_; }
    const VaderConfig& config() const { return config_; }

    // Valences after booster, negation and caps rules, one per input token.
    // Punctuation-only tokens without a lexicon entry get 0 and do not occupy
    // a slot in the lookback window.
    std::vector<double> token_valences(const std::vector<std::string>& tokens, const std::vector<bool>& caps) const;

    VaderScores score(const std::vector<std::string>& tokens, const std::vector<bool>& caps, int exclamations) const;
    VaderScores score(const textprep::TokenSequence& seq) const;

private:
    struct Kept {
        std::size_t index;
        bool caps;
    };
    std::vector<Kept> kept_tokens(const std::vector<std::string>& tokens, const std::vector<bool>& caps) const;
    std::vector<double> kept_valences(const std::vector<std::string>& tokens, const std::vector<Kept>& kept) const;

    Lexicon lexicon_;
    VaderConfig config_;
};

} // namespace pulsegauge::vader
