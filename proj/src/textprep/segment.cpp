#include "pulsegauge/textprep.hpp"

#include "textprep/internal.hpp"

#include <cctype>
#include <cmath>

namespace pulsegauge::textprep {

namespace {

constexpr double kTieTolerance = 1e-9;

bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_lower(char c) { return c >= 'a' && c <= 'z'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alpha(char c) { return is_upper(c) || is_lower(c); }

// "BigNews" -> Big|News, "COVIDVaccine" -> COVID|Vaccine, "web3dev" -> web|3|dev,
// underscores dropped.
std::vector<std::string_view> camel_parts(std::string_view body)
{
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    auto cut = [&](std::size_t at) {
        if (at > start)
            parts.push_back(body.substr(start, at - start));
        start = at;
    };
    for (std::size_t i = 0; i < body.size(); ++i) {
        const char c = body[i];
        if (c == '_') {
            cut(i);
            start = i + 1;
            continue;
        }
        if (i == start)
            continue;
        const char prev = body[i - 1];
        const bool boundary = (is_lower(prev) && is_upper(c)) || (is_alpha(prev) && is_digit(c)) ||
                              (is_digit(prev) && is_alpha(c)) ||
                              (is_upper(prev) && is_upper(c) && i + 1 < body.size() && is_lower(body[i + 1]));
        if (boundary)
            cut(i);
    }
    cut(body.size());
    return parts;
}

struct Split {
    double score = 0.0;
    std::vector<std::string> words;  // original case
    std::vector<std::string> lower;
};

bool better(const Split& a, const Split& b)
{
    if (std::abs(a.score - b.score) > kTieTolerance)
        return a.score > b.score;
    if (a.words.size() != b.words.size())
        return a.words.size() < b.words.size();
    return a.lower < b.lower;
}

Split best_split(std::string_view part, const WordFrequencies& freq)
{
    const std::string lower = lowercase(part);
    const std::size_t n = part.size();
    std::vector<Split> best(n + 1);
    std::vector<bool> reached(n + 1, false);
    reached[0] = true;
    for (std::size_t j = 1; j <= n; ++j) {
        for (std::size_t i = 0; i < j; ++i) {
            if (!reached[i])
                continue;
            Split cand = best[i];
            const std::string word = lower.substr(i, j - i);
            cand.score += segment_word_score(word, freq);
            cand.words.emplace_back(part.substr(i, j - i));
            cand.lower.push_back(word);
            if (!reached[j] || better(cand, best[j])) {
                best[j] = std::move(cand);
                reached[j] = true;
            }
        }
    }
    return best[n];
}

} // namespace

double segment_word_score(std::string_view word, const WordFrequencies& freq)
{
    const double total = static_cast<double>(std::max<std::uint64_t>(freq.total(), 1));
    const std::uint64_t count = freq.count(word);
    if (count == 0) {
        // every extra character of an unknown chunk costs a factor of 10
        return std::log(0.5 / total) - static_cast<double>(word.size() - 1) * std::log(10.0);
    }
    double score = std::log((static_cast<double>(count) + 1.0) / total);
    if (word.size() == 1 && word != "a" && word != "i")
        score *= 3.0;
    return score;
}

namespace detail {

std::vector<std::string> segment_body(std::string_view body, const WordFrequencies& freq)
{
    std::vector<std::string> words;
    std::vector<std::string> lower;
    for (const std::string_view part : camel_parts(body)) {
        Split s = best_split(part, freq);
        for (std::size_t k = 0; k < s.words.size(); ++k) {
            words.push_back(std::move(s.words[k]));
            lower.push_back(std::move(s.lower[k]));
        }
    }
    if (words.empty())
        return {};
    bool any_known = false;
    for (const auto& w : lower)
        any_known = any_known || freq.contains(w);
    if (!any_known) {
        std::string whole;
        for (const auto& w : words)
            whole += w;
        return {whole};
    }
    return words;
}

} // namespace detail

std::vector<std::string> segment_hashtag(std::string_view tag, const WordFrequencies& freq)
{
    if (!tag.empty() && tag.front() == '#')
        tag.remove_prefix(1);
    std::vector<std::string> words = detail::segment_body(tag, freq);
    for (auto& w : words)
        w = lowercase(w);
    return words;
}

} // namespace pulsegauge::textprep
