#include "pulsegauge/contextual.hpp"

#include "pulsegauge/error.hpp"
#include "pulsegauge/resources.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>

namespace pulsegauge::contextual {

using nlohmann::json;

namespace {

constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::uint64_t fnv1a(std::string_view a, std::string_view b = {}, std::string_view c = {})
{
    std::uint64_t h = kFnvOffset;
    for (const std::string_view part : {a, b, c}) {
        for (const char ch : part) {
            h ^= static_cast<unsigned char>(ch);
            h *= kFnvPrime;
        }
    }
    return h;
}

std::vector<std::string> split_spaces(std::string_view text)
{
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i])))
            ++i;
        const std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])))
            ++i;
        if (i > start)
            out.emplace_back(text.substr(start, i - start));
    }
    return out;
}

std::string normalize_key(std::string_view text)
{
    std::string out;
    for (const auto& w : split_spaces(text)) {
        if (!out.empty())
            out.push_back(' ');
        out += w;
    }
    return out;
}

ClassDistribution softmax(const std::array<double, 3>& logits)
{
    const double m = std::max({logits[0], logits[1], logits[2]});
    const double e0 = std::exp(logits[0] - m);
    const double e1 = std::exp(logits[1] - m);
    const double e2 = std::exp(logits[2] - m);
    const double z = e0 + e1 + e2;
    return {e0 / z, e1 / z, e2 / z};
}

[[noreturn]] void load_error(const std::filesystem::path& path, const std::string& what)
{
    throw Error(ErrorCode::ModelLoadError, "cannot load model " + path.string() + ": " + what);
}

} // namespace

bool ClassDistribution::valid(double tolerance) const
{
    for (const double p : {p_pos, p_neg, p_neu}) {
        if (!std::isfinite(p) || p < -tolerance || p > 1.0 + tolerance)
            return false;
    }
    return std::abs(p_pos + p_neg + p_neu - 1.0) <= tolerance;
}

ClassDistribution ClassDistribution::normalized() const
{
    const double a = std::clamp(p_pos, 0.0, 1.0);
    const double b = std::clamp(p_neg, 0.0, 1.0);
    const double c = std::clamp(p_neu, 0.0, 1.0);
    const double sum = a + b + c;
    if (sum <= 0.0)
        return {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    return {a / sum, b / sum, c / sum};
}

int ClassDistribution::argmax() const
{
    if (p_pos >= p_neg && p_pos >= p_neu)
        return 0;
    return p_neg >= p_neu ? 1 : 2;
}

double polarity_score(const ClassDistribution& dist)
{
    return dist.p_pos + 0.5 * dist.p_neu;
}

BackendDescriptor BackendDescriptor::parse(std::string_view spec)
{
    BackendDescriptor d;
    const std::size_t colon = spec.find(':');
    const std::string_view kind = spec.substr(0, colon);
    const std::string arg = colon == std::string_view::npos ? std::string() : std::string(spec.substr(colon + 1));
    if (kind == "reference") {
        d.kind = BackendKind::Reference;
        d.model_path = arg.empty() ? default_model_path() : std::filesystem::path(arg);
    } else if (kind == "remote") {
        if (arg.empty())
            throw Error(ErrorCode::InvalidRequest, "remote backend needs an endpoint URL");
        d.kind = BackendKind::Remote;
        d.endpoint = arg;
    } else if (kind == "fixture") {
        if (arg.empty())
            throw Error(ErrorCode::InvalidRequest, "fixture backend needs a file path");
        d.kind = BackendKind::Fixture;
        d.model_path = arg;
    } else {
        throw Error(ErrorCode::InvalidRequest,
                    "backend must be reference[:path], remote:<url> or fixture:<path>, got '" + std::string(spec) + "'");
    }
    return d;
}

BackendDescriptor BackendDescriptor::from_env()
{
    if (const char* env = std::getenv("PG_BACKEND"); env && *env)
        return parse(env);
    return parse("reference");
}

std::string BackendDescriptor::to_string() const
{
    switch (kind) {
    case BackendKind::Reference:
        return "reference:" + model_path.value_or("").string();
    case BackendKind::Remote:
        return "remote:" + endpoint.value_or("");
    case BackendKind::Fixture:
        return "fixture:" + model_path.value_or("").string();
    }
    return "unknown";
}

std::vector<ClassDistribution> Backend::classify_batch(const std::vector<std::string>& texts) const
{
    std::vector<ClassDistribution> out;
    out.reserve(texts.size());
    for (const auto& t : texts)
        out.push_back(classify(t));
    return out;
}

std::vector<std::uint32_t> hashed_features(const std::vector<std::string>& tokens, std::uint32_t dim)
{
    std::vector<std::uint32_t> f;
    f.reserve(tokens.size() * 2);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        f.push_back(static_cast<std::uint32_t>(fnv1a("u\x1f", tokens[i]) % dim));
        if (i + 1 < tokens.size())
            f.push_back(static_cast<std::uint32_t>(fnv1a("b\x1f", tokens[i], " " + tokens[i + 1]) % dim));
    }
    std::sort(f.begin(), f.end());
    f.erase(std::unique(f.begin(), f.end()), f.end());
    return f;
}

ReferenceModel ReferenceModel::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        load_error(path, "file not readable");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        load_error(path, e.what());
    }
    ReferenceModel m;
    try {
        if (j.at("format").get<std::string>() != kFormat)
            load_error(path, "unsupported format '" + j.at("format").get<std::string>() + "'");
        const auto classes = j.at("classes").get<std::vector<std::string>>();
        if (classes != std::vector<std::string>{"positive", "negative", "neutral"})
            load_error(path, "classes must be [positive, negative, neutral]");
        m.dim_ = j.at("dim").get<std::uint32_t>();
        if (m.dim_ == 0)
            load_error(path, "dim must be positive");
        const auto bias = j.at("bias").get<std::vector<double>>();
        if (bias.size() != 3)
            load_error(path, "bias must have 3 entries");
        std::copy(bias.begin(), bias.end(), m.bias_.begin());
        for (const auto& row : j.at("weights")) {
            if (!row.is_array() || row.size() != 4)
                load_error(path, "weight rows are [bucket, w_pos, w_neg, w_neu]");
            const auto idx = row[0].get<std::uint32_t>();
            if (idx >= m.dim_)
                load_error(path, "bucket " + std::to_string(idx) + " out of range");
            m.weights_[idx] = {row[1].get<double>(), row[2].get<double>(), row[3].get<double>()};
        }
    } catch (const json::exception& e) {
        load_error(path, e.what());
    }
    return m;
}

void ReferenceModel::save(const std::filesystem::path& path) const
{
    nlohmann::ordered_json j;
    j["format"] = kFormat;
    j["classes"] = {"positive", "negative", "neutral"};
    j["features"] = "fnv1a64 unigram+bigram presence";
    j["dim"] = dim_;
    j["bias"] = bias_;
    const std::map<std::uint32_t, std::array<double, 3>> sorted(weights_.begin(), weights_.end());
    auto rows = nlohmann::ordered_json::array();
    for (const auto& [idx, w] : sorted)
        rows.push_back({idx, w[0], w[1], w[2]});
    j["weights"] = std::move(rows);
    std::ofstream out(path);
    if (!out)
        throw Error(ErrorCode::InvalidRequest, "cannot write model to " + path.string());
    out << j.dump() << "\n";
}

ReferenceModel ReferenceModel::train(const std::vector<TrainingExample>& examples, const TrainOptions& options)
{
    if (examples.empty())
        throw Error(ErrorCode::EmptyInput, "no training examples");
    // compact feature ids in first-seen order keep the run deterministic
    std::unordered_map<std::uint32_t, std::size_t> slot;
    std::vector<std::uint32_t> bucket_of;
    std::vector<std::vector<std::size_t>> feats;
    std::vector<int> labels;
    for (const auto& ex : examples) {
        if (ex.label < 0 || ex.label > 2)
            throw Error(ErrorCode::InvalidInput, "training label must be 0, 1 or 2");
        std::vector<std::size_t> f;
        for (const std::uint32_t b : hashed_features(split_spaces(ex.text), options.dim)) {
            auto [it, inserted] = slot.emplace(b, bucket_of.size());
            if (inserted)
                bucket_of.push_back(b);
            f.push_back(it->second);
        }
        feats.push_back(std::move(f));
        labels.push_back(ex.label);
    }

    const double n = static_cast<double>(examples.size());
    std::vector<std::array<double, 3>> w(bucket_of.size(), {0.0, 0.0, 0.0});
    std::array<double, 3> b{0.0, 0.0, 0.0};
    std::vector<std::array<double, 3>> gw(w.size());
    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        std::fill(gw.begin(), gw.end(), std::array<double, 3>{0.0, 0.0, 0.0});
        std::array<double, 3> gb{0.0, 0.0, 0.0};
        for (std::size_t i = 0; i < feats.size(); ++i) {
            std::array<double, 3> logits = b;
            for (const std::size_t f : feats[i]) {
                for (int k = 0; k < 3; ++k)
                    logits[k] += w[f][k];
            }
            const ClassDistribution p = softmax(logits);
            const double err[3] = {p.p_pos - (labels[i] == 0), p.p_neg - (labels[i] == 1), p.p_neu - (labels[i] == 2)};
            for (int k = 0; k < 3; ++k) {
                gb[k] += err[k];
                for (const std::size_t f : feats[i])
                    gw[f][k] += err[k];
            }
        }
        for (std::size_t f = 0; f < w.size(); ++f) {
            for (int k = 0; k < 3; ++k)
                w[f][k] -= options.learning_rate * (gw[f][k] / n + options.l2 * w[f][k]);
        }
        for (int k = 0; k < 3; ++k)
            b[k] -= options.learning_rate * gb[k] / n;
    }

    auto round6 = [](double x) { return std::round(x * 1e6) / 1e6; };
    ReferenceModel m;
    m.dim_ = options.dim;
    for (int k = 0; k < 3; ++k)
        m.bias_[k] = round6(b[k]);
    for (std::size_t f = 0; f < w.size(); ++f) {
        const std::array<double, 3> r{round6(w[f][0]), round6(w[f][1]), round6(w[f][2])};
        if (r[0] != 0.0 || r[1] != 0.0 || r[2] != 0.0)
            m.weights_[bucket_of[f]] = r;
    }
    return m;
}

ClassDistribution ReferenceModel::predict(std::string_view text) const
{
    const std::vector<std::string> tokens = split_spaces(text);
    if (tokens.empty())
        return {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    std::array<double, 3> logits = bias_;
    for (const std::uint32_t f : hashed_features(tokens, dim_)) {
        if (auto it = weights_.find(f); it != weights_.end()) {
            for (int k = 0; k < 3; ++k)
                logits[k] += it->second[k];
        }
    }
    return softmax(logits);
}

ReferenceBackend::ReferenceBackend(ReferenceModel model, std::string source)
    : model_(std::move(model)), source_(std::move(source))
{
}

ClassDistribution ReferenceBackend::classify(std::string_view text) const
{
    return model_.predict(text);
}

FixtureBackend FixtureBackend::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        load_error(path, "file not readable");
    FixtureBackend fb;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        try {
            const json j = json::parse(line);
            const auto p = j.at("p").get<std::vector<double>>();
            if (p.size() != 3)
                load_error(path, "line " + std::to_string(lineno) + ": p needs 3 entries");
            const ClassDistribution d{p[0], p[1], p[2]};
            if (!d.valid(1e-6))
                load_error(path, "line " + std::to_string(lineno) + ": p is not a distribution");
            fb.add(j.at("text").get<std::string>(), d.normalized());
        } catch (const json::exception& e) {
            load_error(path, "line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return fb;
}

void FixtureBackend::add(std::string text, ClassDistribution dist)
{
    table_[normalize_key(text)] = dist;
}

ClassDistribution FixtureBackend::classify(std::string_view text) const
{
    if (auto it = table_.find(normalize_key(text)); it != table_.end())
        return it->second;
    return {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
}

std::unique_ptr<Backend> make_backend(const BackendDescriptor& d)
{
    switch (d.kind) {
    case BackendKind::Reference: {
        const auto path = d.model_path.value_or(default_model_path());
        return std::make_unique<ReferenceBackend>(ReferenceModel::load(path), "reference:" + path.filename().string());
    }
    case BackendKind::Fixture:
        if (!d.model_path)
            throw Error(ErrorCode::ModelLoadError, "fixture backend needs a file path");
        return std::make_unique<FixtureBackend>(FixtureBackend::load(*d.model_path));
    case BackendKind::Remote: {
        if (!d.endpoint)
            throw Error(ErrorCode::BackendUnavailable, "remote backend needs an endpoint");
        RemoteConfig cfg;
        cfg.endpoint = *d.endpoint;
        return std::make_unique<RemoteBackend>(cfg);
    }
    }
    throw Error(ErrorCode::ModelLoadError, "unknown backend kind");
}

} // namespace pulsegauge::contextual
