#pragma once

#include "pulsegauge/label.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace pulsegauge::evaluation {

// rows = gold, cols = predicted, both in Label order (positive, neutral, negative)
using Confusion = std::array<std::array<std::uint64_t, 3>, 3>;

// Throws LengthMismatch when sizes differ and EmptyInput when both are empty.
Confusion confusion(const std::vector<Label>& golds, const std::vector<Label>& preds);

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct EvalReport {
    std::string model;
    std::uint64_t n = 0;
    double accuracy = 0.0;
    std::array<ClassMetrics, 3> per_class{};
    double macro_f1 = 0.0;
    Confusion matrix{};
    double mean_latency_ms = 0.0;

    nlohmann::ordered_json to_json() const;
};

// Zero denominators give 0 rather than NaN. Throws EmptyInput when n = 0.
EvalReport metrics(const Confusion& matrix);

struct LabeledExample {
    std::string text;
    Label gold = Label::Neutral;
};

// JSONL {"text": ..., "gold": "positive|neutral|negative"}; throws ParseError
// naming the line.
std::vector<LabeledExample> load_dataset(const std::filesystem::path& path);

using TextClassifier = std::function<Label(const std::string& text)>;

struct NamedModel {
    std::string name;
    TextClassifier predict;
};

// Mean wall-clock milliseconds of single-item calls after `warmup` untimed
// calls. Throws EmptyInput when texts is empty.
double benchmark_latency(const TextClassifier& model, const std::vector<std::string>& texts, std::size_t warmup = 0);

// One report per model over the same example order; per-item latency is
// measured during the evaluation pass. Model errors are rethrown with the
// model name prefixed.
std::vector<EvalReport> compare(const std::vector<NamedModel>& models, const std::vector<LabeledExample>& dataset,
                                std::size_t warmup = 0);

// Aligned-column comparison table.
std::string format_table(const std::vector<EvalReport>& reports);

} // namespace pulsegauge::evaluation
