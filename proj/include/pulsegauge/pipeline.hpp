#pragma once

#include "pulsegauge/contextual.hpp"
#include "pulsegauge/ensemble.hpp"
#include "pulsegauge/ingest.hpp"
#include "pulsegauge/label.hpp"
#include "pulsegauge/textprep.hpp"
#include "pulsegauge/vader.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace pulsegauge::pipeline {

// Tables and lexicon shared by every scorer; immutable after load.
struct Resources {
    textprep::TextResources text;
    vader::Analyzer analyzer;

    // Reads <dir>/{emoji,abbreviations,wordfreq,stopwords,...}; throws
    // LexiconMissing for absent files.
    static std::shared_ptr<const Resources> load(const std::filesystem::path& dir);
    static std::shared_ptr<const Resources> load_default();
};

struct ScoreBreakdown {
    textprep::TokenSequence vader_tokens;
    textprep::TokenSequence contextual_tokens;
    vader::VaderScores vader;
    contextual::ClassDistribution distribution;
    double s_vader = 0.0;
    double s_contextual = 0.0;
    double s_final = 0.0;
    Label label = Label::Neutral;
    double latency_ms = 0.0;

    nlohmann::ordered_json to_json(bool include_timing = false) const;
};

// Both preprocessing renderings of one text.
struct Prepared {
    textprep::TokenSequence vader;
    textprep::TokenSequence contextual;

    nlohmann::ordered_json to_json() const;
    // Throws ParseError.
    static Prepared from_json(const nlohmann::json& j);
};

class Scorer {
public:
    Scorer(std::shared_ptr<const Resources> resources, std::shared_ptr<const contextual::Backend> backend,
           ensemble::EnsembleConfig config = {});

    const ensemble::EnsembleConfig& config() const { return config_; }
    const contextual::Backend& backend() const { return *backend_; }
    const Resources& resources() const { return *resources_; }

    Prepared prepare(std::string_view text) const;
    // Lexicon and contextual scoring of already preprocessed texts, with the
    // same threading and batching as score_texts.
    std::vector<ScoreBreakdown> score_prepared(const std::vector<Prepared>& prepared, std::size_t jobs = 1) const;

    // Full hybrid scoring of one text, timed end to end.
    ScoreBreakdown score_text(std::string_view text) const;
    // Order-preserving. Preprocessing and lexicon scoring fan out over `jobs`
    // threads; the contextual backend sees one batch call.
    std::vector<ScoreBreakdown> score_texts(const std::vector<std::string>& texts, std::size_t jobs = 1) const;

    ensemble::SentimentRecord to_record(const ingest::RawPost& post, const std::string& entity,
                                        const ScoreBreakdown& b, Timestamp scored_at) const;
    std::vector<ensemble::SentimentRecord> score_posts(const std::vector<ingest::RawPost>& posts,
                                                       const std::string& entity, Timestamp scored_at,
                                                       std::size_t jobs = 1) const;

    // Single-model classifiers over the same preprocessing, for baselines.
    Label classify_vader(std::string_view text) const;
    Label classify_contextual(std::string_view text) const;
    Label classify_hybrid(std::string_view text) const;

private:
    ScoreBreakdown local_stage(std::string_view text) const;
    void lexicon_stage(ScoreBreakdown& b) const;
    std::vector<ScoreBreakdown> run_stages(std::size_t n, const std::function<void(std::size_t, ScoreBreakdown&)>& local,
                                           std::size_t jobs) const;
    void fuse(ScoreBreakdown& b) const;

    std::shared_ptr<const Resources> resources_;
    std::shared_ptr<const contextual::Backend> backend_;
    ensemble::EnsembleConfig config_;
};

} // namespace pulsegauge::pipeline
