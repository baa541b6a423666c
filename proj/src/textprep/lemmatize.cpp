#include "pulsegauge/textprep.hpp"

#include <string>
#include <unordered_map>
#include <unordered_set>

namespace pulsegauge::textprep {

namespace {

const std::unordered_map<std::string, std::string> kIrregular = {
    {"being", "be"}, {"used", "use"}, {"does", "do"}, {"goes", "go"}, {"has", "have"},
    {"had", "have"}, {"did", "do"}, {"went", "go"}, {"made", "make"}, {"said", "say"},
    {"paid", "pay"}, {"bought", "buy"}, {"sold", "sell"}, {"got", "get"}, {"gotten", "get"},
    {"children", "child"}, {"people", "people"}, {"men", "man"}, {"women", "woman"},
    {"lives", "life"}, {"wives", "wife"}, {"knives", "knife"},
};

// Ends in a suffix-like string but is already a base form.
const std::unordered_set<std::string> kKeep = {
    "news", "yes", "was", "this", "his", "its", "always", "perhaps", "morning", "evening",
    "nothing", "something", "anything", "everything", "during", "ceiling", "wedding", "thing",
    "things", "bless", "less", "unless", "series", "species", "physics", "politics", "economics",
    "analytics", "earnings", "savings", "sales", "ceo", "iphone", "ios", "tesla", "bed", "red",
    "need", "speed", "feed", "seed", "indeed", "interesting", "amazing", "boring", "exciting",
    "disappointing", "annoying", "outstanding", "stunning", "charming", "shocking", "disgusting",
    "pleasing", "depressing", "frustrating", "terrifying", "refreshing", "inspiring", "promising",
    "alarming", "embarrassing", "surprising", "convincing", "thrilling", "worrying",
};

bool is_vowel(char c)
{
    return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

bool has_vowel(std::string_view s)
{
    for (const char c : s) {
        if (is_vowel(c) || c == 'y')
            return true;
    }
    return false;
}

bool ends_cvc(std::string_view s)
{
    if (s.size() < 3)
        return false;
    const char a = s[s.size() - 3];
    const char b = s[s.size() - 2];
    const char c = s[s.size() - 1];
    return !is_vowel(a) && is_vowel(b) && !is_vowel(c) && c != 'w' && c != 'x' && c != 'y';
}

bool ends_double(std::string_view s)
{
    return s.size() >= 2 && s[s.size() - 1] == s[s.size() - 2] && !is_vowel(s.back());
}

bool all_lower_alpha(std::string_view s)
{
    for (const char c : s) {
        if (c < 'a' || c > 'z')
            return false;
    }
    return !s.empty();
}

// Base form for a stem left after removing -ing or -ed, or "" when none of
// the candidates is a known word.
std::string restore_stem(std::string_view stem, const WordFrequencies& vocab)
{
    if (stem.size() < 2 || !has_vowel(stem))
        return {};
    const std::string s(stem);
    const std::string with_e = s + "e";
    if (vocab.contains(s)) {
        if (ends_cvc(s) && vocab.contains(with_e))
            return with_e;
        return s;
    }
    if (ends_double(s) && s.size() >= 3 && vocab.contains(s.substr(0, s.size() - 1)))
        return s.substr(0, s.size() - 1);
    if (vocab.contains(with_e))
        return with_e;
    return {};
}

} // namespace

std::string lemmatize_word(std::string_view token, const WordFrequencies& vocabulary)
{
    const std::string w(token);
    if (!all_lower_alpha(w))
        return w;
    if (auto it = kIrregular.find(w); it != kIrregular.end())
        return it->second;
    if (kKeep.contains(w) || w.size() < 4)
        return w;

    auto known = [&](const std::string& cand) { return cand.size() >= 3 && vocabulary.contains(cand); };

    if (w.ends_with("ies") && w.size() > 4) {
        const std::string cand = w.substr(0, w.size() - 3) + "y";
        if (known(cand))
            return cand;
    }
    if (w.ends_with("es")) {
        const std::string stem = w.substr(0, w.size() - 2);
        if ((stem.ends_with("s") || stem.ends_with("x") || stem.ends_with("z") || stem.ends_with("ch") ||
             stem.ends_with("sh")) &&
            known(stem))
            return stem;
    }
    if (w.ends_with("s") && !w.ends_with("ss") && !w.ends_with("us") && !w.ends_with("is")) {
        const std::string stem = w.substr(0, w.size() - 1);
        if (known(stem))
            return stem;
        return w;
    }
    if (w.ends_with("ing") && w.size() > 5) {
        const std::string base = restore_stem(std::string_view(w).substr(0, w.size() - 3), vocabulary);
        if (base.size() >= 2)
            return base;
        return w;
    }
    if (w.ends_with("ied") && w.size() > 4) {
        const std::string cand = w.substr(0, w.size() - 3) + "y";
        if (known(cand))
            return cand;
    }
    if (w.ends_with("ed") && w.size() > 4) {
        const std::string base = restore_stem(std::string_view(w).substr(0, w.size() - 2), vocabulary);
        if (base.size() >= 2)
            return base;
    }
    return w;
}

std::vector<std::string> lemmatize(const std::vector<std::string>& tokens, const WordFrequencies& vocabulary)
{
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens)
        out.push_back(lemmatize_word(t, vocabulary));
    return out;
}

} // namespace pulsegauge::textprep
