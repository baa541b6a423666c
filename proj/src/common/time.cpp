#include "pulsegauge/time.hpp"

#include "pulsegauge/error.hpp"

#include <cctype>
#include <cstdio>

namespace pulsegauge {

namespace {

[[noreturn]] void bad(std::string_view what, std::string_view text)
{
    throw Error(ErrorCode::ParseError,
                std::string(what) + ": '" + std::string(text) + "'");
}

int digits(std::string_view s, std::size_t pos, std::size_t n, std::string_view whole)
{
    if (pos + n > s.size())
        bad("truncated timestamp", whole);
    int v = 0;
    for (std::size_t i = pos; i < pos + n; ++i) {
        if (!std::isdigit(static_cast<unsigned char>(s[i])))
            bad("non-digit in timestamp", whole);
        v = v * 10 + (s[i] - '0');
    }
    return v;
}

Date make_date(int y, int m, int d, std::string_view whole)
{
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                    std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok())
        bad("invalid calendar date", whole);
    return Date{ymd};
}

} // namespace

Date parse_date(std::string_view text)
{
    if (text.size() != 10 || text[4] != '-' || text[7] != '-')
        bad("expected YYYY-MM-DD", text);
    return make_date(digits(text, 0, 4, text), digits(text, 5, 2, text), digits(text, 8, 2, text), text);
}

Timestamp parse_timestamp(std::string_view text)
{
    if (text.size() < 10)
        bad("expected ISO-8601 timestamp", text);
    const Date day = parse_date(text.substr(0, 10));
    if (text.size() == 10)
        return Timestamp{day};
    if (text[10] != 'T' && text[10] != ' ')
        bad("expected 'T' separator", text);
    if (text.size() < 19 || text[13] != ':' || text[16] != ':')
        bad("expected HH:MM:SS", text);
    const int hh = digits(text, 11, 2, text);
    const int mm = digits(text, 14, 2, text);
    const int ss = digits(text, 17, 2, text);
    if (hh > 23 || mm > 59 || ss > 60)
        bad("time of day out of range", text);

    std::size_t pos = 19;
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        const std::size_t start = pos;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos])))
            ++pos;
        if (pos == start)
            bad("empty fractional seconds", text);
    }

    std::chrono::seconds offset{0};
    if (pos < text.size()) {
        const char z = text[pos];
        if (z == 'Z' || z == 'z') {
            ++pos;
        } else if (z == '+' || z == '-') {
            if (pos + 6 != text.size() || text[pos + 3] != ':')
                bad("expected +HH:MM offset", text);
            const int oh = digits(text, pos + 1, 2, text);
            const int om = digits(text, pos + 4, 2, text);
            offset = std::chrono::hours{oh} + std::chrono::minutes{om};
            if (z == '-')
                offset = -offset;
            pos += 6;
        }
    }
    if (pos != text.size())
        bad("trailing characters in timestamp", text);

    return Timestamp{day} + std::chrono::hours{hh} + std::chrono::minutes{mm} +
           std::chrono::seconds{ss} - offset;
}

std::string format_date(Date d)
{
    const std::chrono::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

std::string format_timestamp(Timestamp ts)
{
    const Date day = std::chrono::floor<std::chrono::days>(ts);
    const auto secs = (ts - day).count();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%sT%02lld:%02lld:%02lldZ", format_date(day).c_str(),
                  static_cast<long long>(secs / 3600), static_cast<long long>(secs / 60 % 60),
                  static_cast<long long>(secs % 60));
    return buf;
}

std::chrono::seconds parse_duration(std::string_view text)
{
    if (text.empty())
        throw Error(ErrorCode::InvalidInput, "empty duration");
    std::size_t i = 0;
    long long value = 0;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
        value = value * 10 + (text[i] - '0');
        if (value > 10'000'000'000LL)
            throw Error(ErrorCode::InvalidInput, "duration too large: " + std::string(text));
        ++i;
    }
    if (i == 0)
        throw Error(ErrorCode::InvalidInput, "duration must start with digits: " + std::string(text));
    long long unit = 1;
    const std::string_view suffix = text.substr(i);
    if (suffix.empty() || suffix == "s")
        unit = 1;
    else if (suffix == "m")
        unit = 60;
    else if (suffix == "h")
        unit = 3600;
    else if (suffix == "d")
        unit = 86400;
    else if (suffix == "w")
        unit = 7 * 86400;
    else
        throw Error(ErrorCode::InvalidInput, "unknown duration unit: " + std::string(text));
    if (value <= 0)
        throw Error(ErrorCode::InvalidInput, "duration must be positive: " + std::string(text));
    return std::chrono::seconds{value * unit};
}

Timestamp now_utc()
{
    return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
}

} // namespace pulsegauge
