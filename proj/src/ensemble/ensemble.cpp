#include "pulsegauge/ensemble.hpp"

#include "pulsegauge/error.hpp"
#include "pulsegauge/evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace pulsegauge::ensemble {

namespace {

bool unit(double x)
{
    return std::isfinite(x) && x >= 0.0 && x <= 1.0;
}

std::string num(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

} // namespace

void EnsembleConfig::validate() const
{
    if (!unit(alpha))
        throw Error(ErrorCode::InvalidRequest, "alpha must lie in [0,1], got " + num(alpha));
    if (!unit(pos_threshold) || !unit(neg_threshold) || !(neg_threshold < pos_threshold))
        throw Error(ErrorCode::InvalidRequest, "thresholds must satisfy 0 <= neg < pos <= 1 (neg=" +
                                                   num(neg_threshold) + ", pos=" + num(pos_threshold) + ")");
}

std::string EnsembleConfig::generation() const
{
    return "a=" + num(alpha) + ";p=" + num(pos_threshold) + ";n=" + num(neg_threshold);
}

EnsembleConfig EnsembleConfig::from_json(const nlohmann::json& j)
{
    EnsembleConfig c;
    if (!j.is_object())
        throw Error(ErrorCode::InvalidRequest, "ensemble config must be a JSON object");
    try {
        if (j.contains("alpha"))
            c.alpha = j.at("alpha").get<double>();
        if (j.contains("pos_threshold"))
            c.pos_threshold = j.at("pos_threshold").get<double>();
        if (j.contains("neg_threshold"))
            c.neg_threshold = j.at("neg_threshold").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidRequest, std::string("ensemble config: ") + e.what());
    }
    c.validate();
    return c;
}

EnsembleConfig EnsembleConfig::from_env()
{
    EnsembleConfig c;
    if (const char* a = std::getenv("PG_ALPHA"); a && *a) {
        char* end = nullptr;
        c.alpha = std::strtod(a, &end);
        if (end == a || *end != '\0')
            throw Error(ErrorCode::InvalidRequest, std::string("PG_ALPHA is not a number: ") + a);
    }
    c.validate();
    return c;
}

nlohmann::ordered_json EnsembleConfig::to_json() const
{
    return {{"alpha", alpha}, {"pos_threshold", pos_threshold}, {"neg_threshold", neg_threshold}};
}

double scale_vader(double compound)
{
    if (!std::isfinite(compound) || compound < -1.0 || compound > 1.0)
        throw Error(ErrorCode::InvalidScore, "compound score outside [-1,1]: " + num(compound));
    return (compound + 1.0) / 2.0;
}

double combine(double s_vader, double s_contextual, double alpha)
{
    if (!unit(s_vader))
        throw Error(ErrorCode::InvalidScore, "s_vader outside [0,1]: " + num(s_vader));
    if (!unit(s_contextual))
        throw Error(ErrorCode::InvalidScore, "s_contextual outside [0,1]: " + num(s_contextual));
    if (!unit(alpha))
        throw Error(ErrorCode::InvalidScore, "alpha outside [0,1]: " + num(alpha));
    const double s = alpha * s_vader + (1.0 - alpha) * s_contextual;
    // rounding can push a convex combination a hair past either end
    return std::min(1.0, std::max(0.0, s));
}

double combine(double s_vader, double s_contextual, const EnsembleConfig& cfg)
{
    return combine(s_vader, s_contextual, cfg.alpha);
}

Label label(double s_final, double pos_threshold, double neg_threshold)
{
    if (s_final >= pos_threshold)
        return Label::Positive;
    if (s_final <= neg_threshold)
        return Label::Negative;
    return Label::Neutral;
}

Label label(double s_final, const EnsembleConfig& cfg)
{
    return label(s_final, cfg.pos_threshold, cfg.neg_threshold);
}

nlohmann::ordered_json to_json(const SentimentRecord& r, bool include_timing)
{
    nlohmann::ordered_json j;
    j["post_id"] = r.post_id;
    j["entity"] = r.entity;
    j["created_at"] = format_timestamp(r.created_at);
    j["text"] = r.text;
    j["tokens"] = r.tokens;
    j["compound"] = r.compound;
    j["s_vader"] = r.s_vader;
    j["s_contextual"] = r.s_contextual;
    j["s_final"] = r.s_final;
    j["label"] = std::string(label_name(r.label));
    j["alpha"] = r.alpha;
    j["pos_threshold"] = r.pos_threshold;
    j["neg_threshold"] = r.neg_threshold;
    j["generation"] = r.generation;
    if (include_timing) {
        j["scored_at"] = format_timestamp(r.scored_at);
        j["latency_ms"] = r.latency_ms;
    }
    return j;
}

SentimentRecord record_from_json(const nlohmann::json& j)
{
    SentimentRecord r;
    try {
        r.post_id = j.at("post_id").get<std::string>();
        r.entity = j.value("entity", std::string());
        if (j.contains("created_at"))
            r.created_at = parse_timestamp(j.at("created_at").get<std::string>());
        r.text = j.value("text", std::string());
        if (j.contains("tokens"))
            r.tokens = j.at("tokens").get<std::vector<std::string>>();
        r.compound = j.value("compound", 0.0);
        r.s_vader = j.at("s_vader").get<double>();
        r.s_contextual = j.at("s_contextual").get<double>();
        r.s_final = j.at("s_final").get<double>();
        r.label = parse_label(j.at("label").get<std::string>());
        r.alpha = j.at("alpha").get<double>();
        r.pos_threshold = j.value("pos_threshold", 0.6);
        r.neg_threshold = j.value("neg_threshold", 0.4);
        r.generation = j.value("generation", std::string());
        if (j.contains("scored_at"))
            r.scored_at = parse_timestamp(j.at("scored_at").get<std::string>());
        r.latency_ms = j.value("latency_ms", 0.0);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("sentiment record: ") + e.what());
    } catch (const Error& e) {
        throw Error(ErrorCode::ParseError, std::string("sentiment record: ") + e.what());
    }
    return r;
}

std::vector<double> alpha_grid(double step)
{
    if (!std::isfinite(step) || step <= 0.0 || step > 0.5)
        throw Error(ErrorCode::InvalidRequest, "grid step must lie in (0, 0.5], got " + num(step));
    std::vector<double> grid;
    const double n = std::round(1.0 / step);
    if (std::fabs(n * step - 1.0) < 1e-9) {
        const auto count = static_cast<long>(n);
        for (long k = 0; k <= count; ++k)
            grid.push_back(static_cast<double>(k) / n);
        return grid;
    }
    for (long k = 0;; ++k) {
        const double a = static_cast<double>(k) * step;
        if (a > 1.0)
            break;
        grid.push_back(a);
    }
    grid.push_back(1.0);
    return grid;
}

GridSearchResult grid_search_alpha(const std::vector<ValidationExample>& validation, double step,
                                   double pos_threshold, double neg_threshold)
{
    if (validation.empty())
        throw Error(ErrorCode::EmptyValidation, "validation set is empty");
    EnsembleConfig probe{0.4, pos_threshold, neg_threshold};
    probe.validate();
    const std::vector<double> grid = alpha_grid(step);

    std::vector<Label> golds;
    golds.reserve(validation.size());
    for (const auto& v : validation)
        golds.push_back(v.gold);

    GridSearchResult out;
    bool first = true;
    std::vector<Label> preds(validation.size());
    for (const double a : grid) {
        for (std::size_t i = 0; i < validation.size(); ++i)
            preds[i] = label(combine(validation[i].s_vader, validation[i].s_contextual, a), pos_threshold,
                             neg_threshold);
        const double f1 = evaluation::metrics(evaluation::confusion(golds, preds)).macro_f1;
        out.curve.push_back({a, f1});
        // strict improvement only, so equal plateaus keep the smaller alpha
        if (first || f1 > out.macro_f1 + 1e-12) {
            out.alpha = a;
            out.macro_f1 = f1;
            first = false;
        }
    }
    return out;
}

} // namespace pulsegauge::ensemble
