#include "pulsegauge/analytics.hpp"

#include "pulsegauge/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>

namespace pulsegauge::analytics {

namespace {

std::string num(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

bool has_alnum(std::string_view token)
{
    for (const char c : token) {
        const auto u = static_cast<unsigned char>(c);
        if (std::isalnum(u) || u >= 0x80)
            return true;
    }
    return false;
}

} // namespace

double csi(const std::vector<double>& scores)
{
    if (scores.empty())
        throw Error(ErrorCode::EmptyWindow, "no scores in window");
    double sum = 0.0;
    for (const double s : scores) {
        if (!std::isfinite(s) || s < 0.0 || s > 1.0)
            throw Error(ErrorCode::InvalidScore, "sentiment score outside [0,1]: " + num(s));
        sum += s;
    }
    return 100.0 * sum / static_cast<double>(scores.size());
}

Tier tier(double csi)
{
    if (csi >= 40.0)
        return Tier::Excellent;
    if (csi >= 35.0)
        return Tier::Good;
    if (csi >= 27.0)
        return Tier::Average;
    return Tier::Poor;
}

std::string_view tier_name(Tier t)
{
    switch (t) {
    case Tier::Poor:
        return "Poor";
    case Tier::Average:
        return "Average";
    case Tier::Good:
        return "Good";
    case Tier::Excellent:
        return "Excellent";
    }
    return "Poor";
}

bool Window::contains(Timestamp ts) const
{
    return (!from || ts >= *from) && (!to || ts <= *to);
}

nlohmann::ordered_json EntitySummary::to_json() const
{
    nlohmann::ordered_json counts;
    for (const Label l : kAllLabels)
        counts[std::string(label_name(l))] = label_counts[static_cast<int>(l)];
    return {
        {"entity", entity},
        {"n", n},
        {"csi", csi},
        {"tier", std::string(tier_name(tier))},
        {"label_counts", counts},
        {"window", {{"start", format_timestamp(window_start)}, {"end", format_timestamp(window_end)}}},
    };
}

EntitySummary summarize(const std::string& entity, const std::vector<Record>& records, const Window& window)
{
    EntitySummary s;
    s.entity = entity;
    std::vector<double> scores;
    std::optional<Timestamp> lo, hi;
    for (const auto& r : records) {
        if (!window.contains(r.created_at))
            continue;
        scores.push_back(r.s_final);
        ++s.label_counts[static_cast<int>(r.label)];
        lo = lo ? std::min(*lo, r.created_at) : r.created_at;
        hi = hi ? std::max(*hi, r.created_at) : r.created_at;
    }
    if (scores.empty())
        throw Error(ErrorCode::EmptyWindow, "no records for '" + entity + "' in the requested window");
    s.n = scores.size();
    s.csi = csi(scores);
    s.tier = tier(s.csi);
    s.window_start = window.from.value_or(*lo);
    s.window_end = window.to.value_or(*hi);
    return s;
}

std::vector<Record> reweight(const std::vector<Record>& records, double alpha)
{
    if (!std::isfinite(alpha) || alpha < 0.0 || alpha > 1.0)
        throw Error(ErrorCode::InvalidScore, "alpha outside [0,1]: " + num(alpha));
    std::vector<Record> out = records;
    for (auto& r : out) {
        r.alpha = alpha;
        r.s_final = ensemble::combine(r.s_vader, r.s_contextual, alpha);
        r.label = ensemble::label(r.s_final, r.pos_threshold, r.neg_threshold);
    }
    return out;
}

std::string SentimentSeries::to_csv() const
{
    std::string out = "bucket_start,csi,n\n";
    for (const auto& p : points)
        out += format_timestamp(p.bucket_start) + "," + num(p.csi) + "," + std::to_string(p.n) + "\n";
    return out;
}

nlohmann::ordered_json SentimentSeries::to_json() const
{
    nlohmann::ordered_json pts = nlohmann::ordered_json::array();
    for (const auto& p : points)
        pts.push_back({{"bucket_start", format_timestamp(p.bucket_start)}, {"csi", p.csi}, {"n", p.n}});
    return {{"bucket_seconds", bucket_width.count()}, {"points", std::move(pts)}};
}

SentimentSeries series(const std::vector<Record>& records, std::chrono::seconds bucket_width)
{
    if (bucket_width.count() <= 0)
        throw Error(ErrorCode::InvalidRequest, "bucket width must be positive");
    const auto w = bucket_width.count();
    std::map<long long, std::vector<double>> buckets;
    for (const auto& r : records) {
        const long long t = r.created_at.time_since_epoch().count();
        // floor division so pre-epoch timestamps land in the right bucket
        long long b = t / w;
        if (t % w != 0 && t < 0)
            --b;
        buckets[b * w].push_back(r.s_final);
    }
    SentimentSeries s;
    s.bucket_width = bucket_width;
    for (const auto& [start, scores] : buckets)
        s.points.push_back({Timestamp{std::chrono::seconds{start}}, csi(scores), scores.size()});
    return s;
}

double volatility(const SentimentSeries& s)
{
    if (s.points.size() < 2)
        throw Error(ErrorCode::InsufficientData, "volatility needs at least 2 buckets, got " +
                                                     std::to_string(s.points.size()));
    double mean = 0.0;
    for (const auto& p : s.points)
        mean += p.csi;
    mean /= static_cast<double>(s.points.size());
    double var = 0.0;
    for (const auto& p : s.points)
        var += (p.csi - mean) * (p.csi - mean);
    return std::sqrt(var / static_cast<double>(s.points.size()));
}

nlohmann::ordered_json DriverReport::to_json() const
{
    auto list = [](const std::vector<DriverTerm>& terms) {
        nlohmann::ordered_json a = nlohmann::ordered_json::array();
        for (const auto& t : terms)
            a.push_back({{"term", t.term}, {"association", t.association}});
        return a;
    };
    return {{"entity", entity}, {"positive_drivers", list(positive_drivers)},
            {"negative_drivers", list(negative_drivers)}};
}

DriverReport drivers(const std::string& entity, const std::vector<Record>& records, std::size_t k,
                     const textprep::Stopwords& stopwords)
{
    if (k < 1)
        throw Error(ErrorCode::InvalidRequest, "k must be at least 1");
    std::map<std::string, std::array<std::uint64_t, 2>> counts;
    std::array<std::uint64_t, 2> totals{};
    std::array<std::uint64_t, 2> docs{};
    for (const auto& r : records) {
        int cls = -1;
        if (r.label == Label::Positive)
            cls = 0;
        else if (r.label == Label::Negative)
            cls = 1;
        if (cls < 0)
            continue;
        ++docs[cls];
        for (const auto& t : r.tokens) {
            if (!has_alnum(t) || stopwords.contains(t))
                continue;
            ++counts[t][cls];
            ++totals[cls];
        }
    }
    if (docs[0] == 0 || docs[1] == 0)
        throw Error(ErrorCode::InsufficientData,
                    "drivers need at least one positive and one negative record for '" + entity + "'");

    const double v = static_cast<double>(counts.size());
    std::vector<DriverTerm> terms;
    terms.reserve(counts.size());
    for (const auto& [term, c] : counts) {
        const double a = std::log((static_cast<double>(c[0]) + 1.0) / (static_cast<double>(totals[0]) + v)) -
                         std::log((static_cast<double>(c[1]) + 1.0) / (static_cast<double>(totals[1]) + v));
        terms.push_back({term, a});
    }

    DriverReport rep;
    rep.entity = entity;
    std::vector<DriverTerm> by_pos = terms;
    std::stable_sort(by_pos.begin(), by_pos.end(),
                     [](const DriverTerm& a, const DriverTerm& b) { return a.association > b.association; });
    const std::size_t kp = std::min(k, by_pos.size());
    rep.positive_drivers.assign(by_pos.begin(), by_pos.begin() + static_cast<std::ptrdiff_t>(kp));

    std::vector<DriverTerm> rest(by_pos.begin() + static_cast<std::ptrdiff_t>(kp), by_pos.end());
    std::stable_sort(rest.begin(), rest.end(),
                     [](const DriverTerm& a, const DriverTerm& b) { return a.association < b.association; });
    rest.resize(std::min(k, rest.size()));
    rep.negative_drivers = std::move(rest);
    return rep;
}

} // namespace pulsegauge::analytics
