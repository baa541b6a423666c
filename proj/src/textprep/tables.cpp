#include "pulsegauge/error.hpp"
#include "pulsegauge/textprep.hpp"

#include "common/utf8.hpp"

#include <algorithm>
#include <fstream>

namespace pulsegauge::textprep {

namespace {

// Yields the tab-separated fields of every non-blank, non-comment line.
template <typename Fn>
void read_table(const std::filesystem::path& path, Fn&& fn)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::LexiconMissing, "cannot open resource table " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line[0] == '#')
            continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        for (std::size_t tab = line.find('\t'); tab != std::string::npos; tab = line.find('\t', start)) {
            fields.push_back(line.substr(start, tab - start));
            start = tab + 1;
        }
        fields.push_back(line.substr(start));
        fn(fields, lineno);
    }
}

[[noreturn]] void bad_line(const std::filesystem::path& path, std::size_t lineno)
{
    throw Error(ErrorCode::LexiconMissing, "malformed line " + std::to_string(lineno) + " in " + path.string());
}

} // namespace

EmojiTable EmojiTable::load(const std::filesystem::path& path)
{
    EmojiTable table;
    read_table(path, [&](const std::vector<std::string>& f, std::size_t lineno) {
        if (f.size() < 2 || f[1].size() < 3)
            bad_line(path, lineno);
        std::u32string cps;
        std::size_t start = 0;
        while (start <= f[0].size()) {
            std::size_t dash = f[0].find('-', start);
            if (dash == std::string::npos)
                dash = f[0].size();
            try {
                cps.push_back(static_cast<char32_t>(std::stoul(f[0].substr(start, dash - start), nullptr, 16)));
            } catch (const std::exception&) {
                bad_line(path, lineno);
            }
            start = dash + 1;
        }
        table.add(std::move(cps), f[1]);
    });
    return table;
}

void EmojiTable::add(std::u32string codepoints, std::string name)
{
    codepoints.erase(std::remove(codepoints.begin(), codepoints.end(), U'\uFE0F'), codepoints.end());
    if (codepoints.empty())
        return;
    first_.insert(codepoints.front());
    max_len_ = std::max(max_len_, codepoints.size());
    names_.emplace(std::move(codepoints), std::move(name));
}

std::size_t EmojiTable::match(std::string_view text, std::size_t pos, std::string& name) const
{
    static constexpr std::string_view kSelector = "\xEF\xB8\x8F";
    std::size_t p = pos;
    const char32_t first = utf8::decode(text, p);
    if (!first_.contains(first))
        return 0;
    std::u32string key(1, first);
    std::size_t best = 0;
    while (true) {
        while (text.substr(p).starts_with(kSelector))
            p += kSelector.size();
        if (auto it = names_.find(key); it != names_.end()) {
            best = p - pos;
            name = it->second;
        }
        if (p >= text.size() || key.size() >= max_len_)
            break;
        key.push_back(utf8::decode(text, p));
    }
    return best;
}

bool EmojiTable::contains(std::u32string_view codepoints) const
{
    return names_.contains(std::u32string(codepoints));
}

std::vector<std::u32string> EmojiTable::keys() const
{
    std::vector<std::u32string> out;
    out.reserve(names_.size());
    for (const auto& [k, v] : names_)
        out.push_back(k);
    std::sort(out.begin(), out.end());
    return out;
}

Abbreviations Abbreviations::load(const std::filesystem::path& path)
{
    Abbreviations dict;
    read_table(path, [&](const std::vector<std::string>& f, std::size_t lineno) {
        if (f.size() < 2 || f[0].empty() || f[1].empty())
            bad_line(path, lineno);
        dict.add(f[0], f[1]);
    });
    return dict;
}

void Abbreviations::add(std::string abbreviation, std::string expansion)
{
    map_[lowercase(abbreviation)] = std::move(expansion);
}

const std::string* Abbreviations::find(std::string_view lowercase_token) const
{
    auto it = map_.find(std::string(lowercase_token));
    return it == map_.end() ? nullptr : &it->second;
}

WordFrequencies WordFrequencies::load(const std::filesystem::path& path)
{
    WordFrequencies freq;
    read_table(path, [&](const std::vector<std::string>& f, std::size_t lineno) {
        if (f.size() < 2 || f[0].empty())
            bad_line(path, lineno);
        try {
            freq.add(f[0], std::stoull(f[1]));
        } catch (const std::exception&) {
            bad_line(path, lineno);
        }
    });
    return freq;
}

void WordFrequencies::add(std::string word, std::uint64_t count)
{
    if (count == 0)
        return;
    auto [it, inserted] = counts_.emplace(std::move(word), count);
    if (!inserted) {
        total_ -= it->second;
        it->second = count;
    }
    total_ += count;
}

std::uint64_t WordFrequencies::count(std::string_view word) const
{
    auto it = counts_.find(std::string(word));
    return it == counts_.end() ? 0 : it->second;
}

Stopwords Stopwords::load(const std::filesystem::path& path)
{
    Stopwords list;
    read_table(path, [&](const std::vector<std::string>& f, std::size_t) {
        if (!f[0].empty())
            list.add(f[0]);
    });
    return list;
}

void Stopwords::add(std::string word)
{
    words_.insert(lowercase(word));
}

bool Stopwords::contains(std::string_view word) const
{
    return words_.contains(std::string(word));
}

bool Stopwords::is_protected(std::string_view word)
{
    return word == "not" || word == "no" || word == "never" || word == "nor" || word == "n't";
}

TextResources TextResources::load(const std::filesystem::path& dir)
{
    TextResources r;
    r.emoji = EmojiTable::load(dir / "emoji.tsv");
    r.abbreviations = Abbreviations::load(dir / "abbreviations.tsv");
    r.word_freq = WordFrequencies::load(dir / "wordfreq.tsv");
    r.stopwords = Stopwords::load(dir / "stopwords.txt");
    return r;
}

} // namespace pulsegauge::textprep
