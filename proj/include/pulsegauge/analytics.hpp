#pragma once

#include "pulsegauge/ensemble.hpp"
#include "pulsegauge/label.hpp"
#include "pulsegauge/textprep.hpp"
#include "pulsegauge/time.hpp"

#include <array>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace pulsegauge::analytics {

using Record = ensemble::SentimentRecord;

// 100 * mean(scores). Throws EmptyWindow on an empty list and InvalidScore
// for a score outside [0, 1].
double csi(const std::vector<double>& scores);

enum class Tier { Poor, Average, Good, Excellent };

// Poor [0,27), Average [27,35), Good [35,40), Excellent [40,100].
Tier tier(double csi);
std::string_view tier_name(Tier t);

// Inclusive bounds on created_at; either side may be open.
struct Window {
    std::optional<Timestamp> from;
    std::optional<Timestamp> to;

    bool contains(Timestamp ts) const;
};

struct EntitySummary {
    std::string entity;
    std::uint64_t n = 0;
    double csi = 0.0;
    Tier tier = Tier::Poor;
    std::array<std::uint64_t, 3> label_counts{};  // indexed by Label
    Timestamp window_start{};
    Timestamp window_end{};

    nlohmann::ordered_json to_json() const;
};

// Throws EmptyWindow when no record falls inside the window. The reported
// window is the requested bounds, with open sides filled from the data.
EntitySummary summarize(const std::string& entity, const std::vector<Record>& records, const Window& window = {});

// Copies with s_final and label recomputed under `alpha` from the stored
// component scores and thresholds. Throws InvalidScore for alpha outside [0,1].
std::vector<Record> reweight(const std::vector<Record>& records, double alpha);

struct SeriesPoint {
    Timestamp bucket_start{};
    double csi = 0.0;
    std::uint64_t n = 0;
};

struct SentimentSeries {
    std::chrono::seconds bucket_width{};
    std::vector<SeriesPoint> points;

    std::string to_csv() const;  // header bucket_start,csi,n
    nlohmann::ordered_json to_json() const;
};

// Buckets aligned to multiples of the width since the Unix epoch, keyed by
// created_at; empty buckets are omitted. Throws InvalidRequest for width <= 0.
SentimentSeries series(const std::vector<Record>& records, std::chrono::seconds bucket_width);

// Population standard deviation of bucket CSIs; InsufficientData below 2 points.
double volatility(const SentimentSeries& s);

struct DriverTerm {
    std::string term;
    double association = 0.0;
};

struct DriverReport {
    std::string entity;
    std::vector<DriverTerm> positive_drivers;
    std::vector<DriverTerm> negative_drivers;

    nlohmann::ordered_json to_json() const;
};

// Smoothed unigram log-odds between positive- and negative-labelled records:
// log((c_pos+1)/(N_pos+V)) - log((c_neg+1)/(N_neg+V)), where counts are token
// occurrences, N the class token totals and V the vocabulary of both classes.
// Stopwords and tokens without a letter or digit are skipped. The negative
// list is drawn from terms not already chosen as positive. Ties break by term.
// Throws InsufficientData unless both classes are present, InvalidRequest
// for k < 1.
DriverReport drivers(const std::string& entity, const std::vector<Record>& records, std::size_t k,
                     const textprep::Stopwords& stopwords);

} // namespace pulsegauge::analytics
