#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pulsegauge::contextual {

struct ClassDistribution {
    double p_pos = 0.0;
    double p_neg = 0.0;
    double p_neu = 0.0;

    bool valid(double tolerance = 1e-9) const;
    // Clamped to [0,1] and rescaled to sum exactly 1 (up to rounding).
    ClassDistribution normalized() const;
    // 0 = positive, 1 = negative, 2 = neutral; ties go to the lower index.
    int argmax() const;
};

// Expected polarity p_pos + 0.5 * p_neu, in [0, 1].
double polarity_score(const ClassDistribution& dist);

enum class BackendKind { Reference, Remote, Fixture };

struct BackendDescriptor {
    BackendKind kind = BackendKind::Reference;
    std::optional<std::string> endpoint;
    std::optional<std::filesystem::path> model_path;

    // "reference:<model.json>", "remote:<url>" or "fixture:<file.jsonl>".
    static BackendDescriptor parse(std::string_view spec);
    // PG_BACKEND when set, otherwise the bundled reference model.
    static BackendDescriptor from_env();
    std::string to_string() const;
};

// Input text is the contextual-profile rendering of a post (tokens joined by
// single spaces).
class Backend {
public:
    virtual ~Backend() = default;
    virtual ClassDistribution classify(std::string_view text) const = 0;
    // Order-preserving; the default calls classify() per item.
    virtual std::vector<ClassDistribution> classify_batch(const std::vector<std::string>& texts) const;
    virtual std::string describe() const = 0;
};

// Hashed unigram+bigram features into a fixed number of buckets.
std::vector<std::uint32_t> hashed_features(const std::vector<std::string>& tokens, std::uint32_t dim);

struct TrainingExample {
    std::string text;
    int label = 2;  // 0 positive, 1 negative, 2 neutral
};

struct TrainOptions {
    std::uint32_t dim = 1u << 18;
    int epochs = 300;
    double learning_rate = 0.5;
    double l2 = 1e-4;
};

// Multinomial logistic regression over hashed binary features.
class ReferenceModel {
public:
    static constexpr std::string_view kFormat = "pulsegauge-hashed-linear/1";

    // Throws Error(ModelLoadError).
    static ReferenceModel load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    // Full-batch gradient descent; deterministic for a given input order.
    static ReferenceModel train(const std::vector<TrainingExample>& examples, const TrainOptions& options = {});

    ClassDistribution predict(std::string_view text) const;
    std::uint32_t dim() const { return dim_; }
    std::size_t nonzero_buckets() const { return weights_.size(); }

private:
    std::uint32_t dim_ = 1u << 18;
    std::array<double, 3> bias_{};
    std::unordered_map<std::uint32_t, std::array<double, 3>> weights_;
};

class ReferenceBackend : public Backend {
public:
    explicit ReferenceBackend(ReferenceModel model, std::string source = "reference");
    ClassDistribution classify(std::string_view text) const override;
    std::string describe() const override { return source_; }

private:
    ReferenceModel model_;
    std::string source_;
};

// Replays stored distributions from JSONL {"text": ..., "p": [p_pos, p_neg, p_neu]}.
// Texts absent from the file get the uniform distribution.
class FixtureBackend : public Backend {
public:
    static FixtureBackend load(const std::filesystem::path& path);
    void add(std::string text, ClassDistribution dist);
    ClassDistribution classify(std::string_view text) const override;
    std::string describe() const override { return "fixture"; }
    std::size_t size() const { return table_.size(); }

private:
    std::unordered_map<std::string, ClassDistribution> table_;
};

struct RemoteConfig {
    std::string endpoint;  // base URL; requests go to POST <endpoint>/classify
    std::chrono::milliseconds timeout{5000};
    int retries = 2;
    std::size_t max_batch = 32;
    std::size_t max_in_flight = 4;
};

// POST /classify {"texts": [...]} -> {"distributions": [[p_pos, p_neg, p_neu], ...]}
class RemoteBackend : public Backend {
public:
    explicit RemoteBackend(RemoteConfig config);

    ClassDistribution classify(std::string_view text) const override;
    std::vector<ClassDistribution> classify_batch(const std::vector<std::string>& texts) const override;
    std::string describe() const override { return "remote:" + config_.endpoint; }
    const RemoteConfig& config() const { return config_; }

private:
    std::vector<ClassDistribution> post_chunk(const std::vector<std::string>& texts, std::size_t offset) const;
    RemoteConfig config_;
};

std::vector<ClassDistribution> remote_classify(const RemoteBackend& backend, const std::vector<std::string>& texts);

std::unique_ptr<Backend> make_backend(const BackendDescriptor& descriptor);

} // namespace pulsegauge::contextual
