#pragma once

#include "pulsegauge/label.hpp"
#include "pulsegauge/time.hpp"

#include <string>
#include <vector>

#include <json.hpp>

namespace pulsegauge::ensemble {

struct EnsembleConfig {
    double alpha = 0.4;
    double pos_threshold = 0.6;
    double neg_threshold = 0.4;

    // Throws Error(InvalidRequest) unless alpha in [0,1] and
    // 0 <= neg_threshold < pos_threshold <= 1.
    void validate() const;
    // Tag stored with every record, e.g. "a=0.4;p=0.6;n=0.4".
    std::string generation() const;

    // Keys alpha, pos_threshold, neg_threshold; missing keys keep defaults.
    static EnsembleConfig from_json(const nlohmann::json& j);
    // Defaults overlaid with PG_ALPHA when set.
    static EnsembleConfig from_env();
    nlohmann::ordered_json to_json() const;
};

// (compound + 1) / 2; throws Error(InvalidScore) outside [-1, 1].
double scale_vader(double compound);

// alpha * s_vader + (1 - alpha) * s_contextual; throws Error(InvalidScore)
// when an operand or alpha lies outside [0, 1].
double combine(double s_vader, double s_contextual, double alpha);
double combine(double s_vader, double s_contextual, const EnsembleConfig& cfg);

Label label(double s_final, const EnsembleConfig& cfg);
Label label(double s_final, double pos_threshold = 0.6, double neg_threshold = 0.4);

struct SentimentRecord {
    std::string post_id;
    std::string entity;
    Timestamp created_at{};
    std::string text;
    std::vector<std::string> tokens;  // lexicon-engine profile, used by the driver report
    double compound = 0.0;
    double s_vader = 0.0;
    double s_contextual = 0.0;
    double s_final = 0.0;
    Label label = Label::Neutral;
    double alpha = 0.4;
    double pos_threshold = 0.6;
    double neg_threshold = 0.4;
    std::string generation;
    Timestamp scored_at{};
    double latency_ms = 0.0;
};

nlohmann::ordered_json to_json(const SentimentRecord& r, bool include_timing = true);
// Throws Error(ParseError).
SentimentRecord record_from_json(const nlohmann::json& j);

struct ValidationExample {
    double s_vader = 0.0;
    double s_contextual = 0.0;
    Label gold = Label::Neutral;
};

struct GridPoint {
    double alpha = 0.0;
    double macro_f1 = 0.0;
};

struct GridSearchResult {
    double alpha = 0.0;
    double macro_f1 = 0.0;
    std::vector<GridPoint> curve;
};

// {0, step, 2*step, ..., 1}; 1 is appended when step does not divide it.
std::vector<double> alpha_grid(double step);

// Picks the grid alpha with the highest macro-F1 of the fused labels; ties go
// to the smaller alpha. Throws EmptyValidation on an empty set and
// InvalidRequest unless 0 < step <= 0.5.
GridSearchResult grid_search_alpha(const std::vector<ValidationExample>& validation, double step = 0.05,
                                   double pos_threshold = 0.6, double neg_threshold = 0.4);

} // namespace pulsegauge::ensemble
