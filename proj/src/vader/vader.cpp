#include "pulsegauge/vader.hpp"

#include "pulsegauge/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <unordered_set>

namespace pulsegauge::vader {

namespace {

const std::unordered_set<std::string_view> kIntensifiers = {
    "absolutely", "amazingly", "awfully", "completely", "considerably", "decidedly", "deeply",
    "effing", "enormously", "entirely", "especially", "exceptionally", "extremely", "fabulously",
    "flipping", "flippin", "fricking", "frickin", "frigging", "friggin", "fully", "fucking",
    "greatly", "hella", "highly", "hugely", "incredibly", "intensely", "majorly", "more", "most",
    "particularly", "purely", "quite", "really", "remarkably", "so", "substantially",
    "thoroughly", "totally", "tremendously", "uber", "unbelievably", "unusually", "utterly", "very",
};

const std::unordered_set<std::string_view> kDampeners = {
    "almost", "barely", "hardly", "kinda", "kindof", "less", "little", "marginally",
    "occasionally", "partly", "scarcely", "slightly", "somewhat", "sorta",
};

const std::unordered_set<std::string_view> kNegators = {
    "aint", "arent", "cannot", "cant", "couldnt", "darent", "didnt", "doesnt", "ain't", "aren't",
    "can't", "couldn't", "daren't", "didn't", "doesn't", "dont", "hadnt", "hasnt", "havent",
    "isnt", "mightnt", "mustnt", "neither", "don't", "hadn't", "hasn't", "haven't", "isn't",
    "mightn't", "mustn't", "neednt", "needn't", "never", "none", "nope", "nor", "not", "nothing",
    "nowhere", "oughtnt", "shant", "shouldnt", "uhuh", "wasnt", "werent", "oughtn't", "shan't",
    "shouldn't", "uh-uh", "wasn't", "weren't", "without", "wont", "wouldnt", "won't", "wouldn't",
    "rarely", "seldom", "despite", "no", "n't",
};

bool has_word_char(std::string_view token)
{
    return std::any_of(token.begin(), token.end(), [](char ch) {
        const auto c = static_cast<unsigned char>(ch);
        return c >= 0x80 || std::isalnum(c);
    });
}

void load_file(const std::filesystem::path& path, Lexicon& lex)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::LexiconMissing, "cannot open lexicon file " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line[0] == '#')
            continue;
        const auto where = [&] { return path.string() + ":" + std::to_string(lineno); };
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos || tab == 0)
            throw Error(ErrorCode::ParseError, "expected 'token<TAB>valence' at " + where());
        const std::size_t tab2 = line.find('\t', tab + 1);
        const std::string value = line.substr(tab + 1, tab2 == std::string::npos ? std::string::npos : tab2 - tab - 1);
        double v = 0.0;
        std::size_t used = 0;
        try {
            v = std::stod(value, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != value.size() || !std::isfinite(v))
            throw Error(ErrorCode::ParseError, "bad valence '" + value + "' at " + where());
        if (std::abs(v) > 4.0)
            throw Error(ErrorCode::ParseError, "valence outside [-4, 4] at " + where());
        lex.set(line.substr(0, tab), v);
    }
}

} // namespace

Lexicon Lexicon::load(const std::vector<std::filesystem::path>& paths)
{
    Lexicon lex;
    for (const auto& p : paths)
        load_file(p, lex);
    return lex;
}

Lexicon Lexicon::load_default(const std::filesystem::path& dir)
{
    return load({dir / "vader_lexicon.tsv", dir / "emoji_valence.tsv", dir / "slang_valence.tsv"});
}

void Lexicon::set(std::string token, double valence)
{
    entries_[textprep::lowercase(token)] = valence;
}

const double* Lexicon::find(std::string_view token) const
{
    auto it = entries_.find(std::string(token));
    return it == entries_.end() ? nullptr : &it->second;
}

double normalize_sum(double valence_sum, double alpha)
{
    return valence_sum / std::sqrt(valence_sum * valence_sum + alpha);
}

bool is_all_caps(std::string_view token)
{
    bool letter = false;
    for (const char ch : token) {
        if (ch >= 'a' && ch <= 'z')
            return false;
        if (ch >= 'A' && ch <= 'Z')
            letter = true;
    }
    return letter;
}

std::vector<bool> caps_flags(const std::vector<std::string>& shadow)
{
    std::vector<bool> out;
    out.reserve(shadow.size());
    for (const auto& s : shadow)
        out.push_back(is_all_caps(s));
    return out;
}

bool is_booster(std::string_view token)
{
    return kIntensifiers.contains(token) || kDampeners.contains(token);
}

double booster_value(std::string_view token, const VaderConfig& config)
{
    if (kIntensifiers.contains(token))
        return config.booster;
    if (kDampeners.contains(token))
        return -config.booster;
    return 0.0;
}

bool is_negator(std::string_view token)
{
    return kNegators.contains(token) || token.find("n't") != std::string_view::npos;
}

Analyzer::Analyzer(Lexicon lexicon, VaderConfig config) : lexicon_(std::move(lexicon)), config_(config) {}

std::vector<Analyzer::Kept> Analyzer::kept_tokens(const std::vector<std::string>& tokens,
                                                  const std::vector<bool>& caps) const
{
    if (lexicon_.empty())
        throw Error(ErrorCode::LexiconMissing, "no lexicon loaded");
    if (caps.size() != tokens.size())
        throw Error(ErrorCode::LengthMismatch, "caps flags must align with tokens");
    std::vector<Kept> kept;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const std::string& t = tokens[i];
        if (lexicon_.contains(t) || is_booster(t) || is_negator(t) || t == "but" || has_word_char(t))
            kept.push_back({i, caps[i]});
    }
    return kept;
}

std::vector<double> Analyzer::kept_valences(const std::vector<std::string>& tokens,
                                            const std::vector<Kept>& kept) const
{
    const std::size_t n_caps =
        static_cast<std::size_t>(std::count_if(kept.begin(), kept.end(), [](const Kept& k) { return k.caps; }));
    const bool cap_diff = n_caps > 0 && n_caps < kept.size();

    std::vector<double> vals;
    vals.reserve(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) {
        const std::string& tok = tokens[kept[i].index];
        const double* lex = lexicon_.find(tok);
        if (is_booster(tok) || !lex) {
            vals.push_back(0.0);
            continue;
        }
        if (is_negator(tok) && i + 1 < kept.size() && lexicon_.contains(tokens[kept[i + 1].index])) {
            vals.push_back(0.0);
            continue;
        }
        double v = *lex;
        if (kept[i].caps && cap_diff)
            v = v > 0 ? v + config_.caps_bonus : v - config_.caps_bonus;
        for (std::size_t d = 1; d <= 3 && d <= i; ++d) {
            const Kept& prev = kept[i - d];
            const std::string& ptok = tokens[prev.index];
            if (is_booster(ptok)) {
                double s = booster_value(ptok, config_);
                if (v < 0)
                    s = -s;
                if (prev.caps && cap_diff)
                    s = v > 0 ? s + config_.caps_bonus : s - config_.caps_bonus;
                v += s * config_.window_scale[d - 1];
            }
            if (is_negator(ptok))
                v *= config_.negation_scalar;
        }
        vals.push_back(v);
    }

    for (std::size_t b = 0; b < kept.size(); ++b) {
        if (tokens[kept[b].index] != "but")
            continue;
        for (std::size_t i = 0; i < vals.size(); ++i) {
            if (i < b)
                vals[i] *= config_.but_before;
            else if (i > b)
                vals[i] *= config_.but_after;
        }
        break;
    }
    return vals;
}

std::vector<double> Analyzer::token_valences(const std::vector<std::string>& tokens,
                                             const std::vector<bool>& caps) const
{
    const std::vector<Kept> kept = kept_tokens(tokens, caps);
    const std::vector<double> vals = kept_valences(tokens, kept);
    std::vector<double> out(tokens.size(), 0.0);
    for (std::size_t i = 0; i < kept.size(); ++i)
        out[kept[i].index] = vals[i];
    return out;
}

VaderScores Analyzer::score(const std::vector<std::string>& tokens, const std::vector<bool>& caps,
                            int exclamations) const
{
    const std::vector<Kept> kept = kept_tokens(tokens, caps);
    if (kept.empty())
        return {};
    const std::vector<double> vals = kept_valences(tokens, kept);

    const double amp = config_.exclamation_bonus * std::min(std::max(exclamations, 0), config_.exclamation_max);
    double total = 0.0;
    for (const double v : vals)
        total += v;
    if (total > 0)
        total += amp;
    else if (total < 0)
        total -= amp;

    double pos_sum = 0.0;
    double neg_sum = 0.0;
    double neu = 0.0;
    for (const double v : vals) {
        if (v > 0)
            pos_sum += v + 1.0;
        else if (v < 0)
            neg_sum += v - 1.0;
        else
            neu += 1.0;
    }
    if (pos_sum > std::abs(neg_sum))
        pos_sum += amp;
    else if (pos_sum < std::abs(neg_sum))
        neg_sum -= amp;
    const double denom = pos_sum + std::abs(neg_sum) + neu;

    VaderScores s;
    s.compound = normalize_sum(total, config_.normalization_alpha);
    s.pos = pos_sum / denom;
    s.neg = std::abs(neg_sum) / denom;
    s.neu = neu / denom;
    return s;
}

VaderScores Analyzer::score(const textprep::TokenSequence& seq) const
{
    std::vector<bool> caps = seq.shadow.size() == seq.tokens.size() ? caps_flags(seq.shadow)
                                                                     : std::vector<bool>(seq.tokens.size(), false);
    return score(seq.tokens, caps, seq.exclamations);
}

} // namespace pulsegauge::vader
