#include "pulsegauge/pipeline.hpp"

#include "pulsegauge/error.hpp"
#include "pulsegauge/resources.hpp"

#include <atomic>
#include <chrono>
#include <thread>

namespace pulsegauge::pipeline {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0)
{
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

} // namespace

std::shared_ptr<const Resources> Resources::load(const std::filesystem::path& dir)
{
    auto text = textprep::TextResources::load(dir);
    auto lexicon = vader::Lexicon::load_default(dir);
    return std::make_shared<const Resources>(Resources{std::move(text), vader::Analyzer(std::move(lexicon))});
}

std::shared_ptr<const Resources> Resources::load_default()
{
    return load(resource_tables_dir());
}

nlohmann::ordered_json ScoreBreakdown::to_json(bool include_timing) const
{
    nlohmann::ordered_json j;
    j["tokens"] = vader_tokens.tokens;
    j["vader"] = {{"pos", vader.pos}, {"neg", vader.neg}, {"neu", vader.neu}, {"compound", vader.compound}};
    j["distribution"] = {{"p_pos", distribution.p_pos}, {"p_neg", distribution.p_neg}, {"p_neu", distribution.p_neu}};
    j["s_vader"] = s_vader;
    j["s_contextual"] = s_contextual;
    j["s_final"] = s_final;
    j["label"] = std::string(label_name(label));
    if (include_timing)
        j["latency_ms"] = latency_ms;
    return j;
}

namespace {

nlohmann::ordered_json seq_to_json(const textprep::TokenSequence& t)
{
    return {{"tokens", t.tokens}, {"shadow", t.shadow}, {"exclamations", t.exclamations}};
}

textprep::TokenSequence seq_from_json(const nlohmann::json& j, const std::string& source)
{
    textprep::TokenSequence t;
    t.tokens = j.at("tokens").get<std::vector<std::string>>();
    t.shadow = j.at("shadow").get<std::vector<std::string>>();
    t.exclamations = j.at("exclamations").get<int>();
    t.source_text = source;
    if (t.shadow.size() != t.tokens.size())
        throw Error(ErrorCode::ParseError, "shadow and tokens differ in length");
    return t;
}

} // namespace

nlohmann::ordered_json Prepared::to_json() const
{
    return {{"vader", seq_to_json(vader)}, {"contextual", seq_to_json(contextual)}};
}

Prepared Prepared::from_json(const nlohmann::json& j)
{
    try {
        const std::string source = j.value("text", std::string());
        return {seq_from_json(j.at("vader"), source), seq_from_json(j.at("contextual"), source)};
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("prepared text: ") + e.what());
    }
}

Scorer::Scorer(std::shared_ptr<const Resources> resources, std::shared_ptr<const contextual::Backend> backend,
               ensemble::EnsembleConfig config)
    : resources_(std::move(resources)), backend_(std::move(backend)), config_(config)
{
    if (!resources_)
        throw Error(ErrorCode::LexiconMissing, "scorer needs loaded resources");
    if (!backend_)
        throw Error(ErrorCode::BackendUnavailable, "scorer needs a contextual backend");
    config_.validate();
}

ScoreBreakdown Scorer::local_stage(std::string_view text) const
{
    const Prepared p = prepare(text);
    ScoreBreakdown b;
    b.vader_tokens = p.vader;
    b.contextual_tokens = p.contextual;
    lexicon_stage(b);
    return b;
}

void Scorer::lexicon_stage(ScoreBreakdown& b) const
{
    b.vader = resources_->analyzer.score(b.vader_tokens);
    b.s_vader = ensemble::scale_vader(b.vader.compound);
}

Prepared Scorer::prepare(std::string_view text) const
{
    return {textprep::preprocess(text, textprep::PrepProfile::vader(), resources_->text),
            textprep::preprocess(text, textprep::PrepProfile::contextual(), resources_->text)};
}

void Scorer::fuse(ScoreBreakdown& b) const
{
    b.s_contextual = contextual::polarity_score(b.distribution);
    b.s_final = ensemble::combine(b.s_vader, b.s_contextual, config_);
    b.label = ensemble::label(b.s_final, config_);
}

ScoreBreakdown Scorer::score_text(std::string_view text) const
{
    const auto t0 = Clock::now();
    ScoreBreakdown b = local_stage(text);
    b.distribution = backend_->classify(b.contextual_tokens.joined());
    fuse(b);
    b.latency_ms = ms_since(t0);
    return b;
}

std::vector<ScoreBreakdown> Scorer::score_texts(const std::vector<std::string>& texts, std::size_t jobs) const
{
    return run_stages(
        texts.size(), [&](std::size_t i, ScoreBreakdown& b) { b = local_stage(texts[i]); }, jobs);
}

std::vector<ScoreBreakdown> Scorer::score_prepared(const std::vector<Prepared>& prepared, std::size_t jobs) const
{
    return run_stages(
        prepared.size(),
        [&](std::size_t i, ScoreBreakdown& b) {
            b.vader_tokens = prepared[i].vader;
            b.contextual_tokens = prepared[i].contextual;
            lexicon_stage(b);
        },
        jobs);
}

std::vector<ScoreBreakdown> Scorer::run_stages(std::size_t n,
                                               const std::function<void(std::size_t, ScoreBreakdown&)>& local,
                                               std::size_t jobs) const
{
    std::vector<ScoreBreakdown> out(n);
    if (n == 0)
        return out;
    std::vector<double> local_ms(n, 0.0);

    const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, n));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    auto work = [&] {
        for (std::size_t i = next++; i < n && !failed; i = next++) {
            try {
                const auto t0 = Clock::now();
                local(i, out[i]);
                local_ms[i] = ms_since(t0);
            } catch (...) {
                if (!failed.exchange(true))
                    failure = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back(work);
        for (auto& t : pool)
            t.join();
    }
    if (failure)
        std::rethrow_exception(failure);

    std::vector<std::string> joined;
    joined.reserve(n);
    for (const auto& b : out)
        joined.push_back(b.contextual_tokens.joined());
    const auto t0 = Clock::now();
    const auto dists = backend_->classify_batch(joined);
    const double share = ms_since(t0) / static_cast<double>(n);
    if (dists.size() != n)
        throw Error(ErrorCode::MalformedResponse, "backend returned " + std::to_string(dists.size()) +
                                                      " distributions for " + std::to_string(n) + " texts");
    for (std::size_t i = 0; i < n; ++i) {
        out[i].distribution = dists[i];
        fuse(out[i]);
        out[i].latency_ms = local_ms[i] + share;
    }
    return out;
}

ensemble::SentimentRecord Scorer::to_record(const ingest::RawPost& post, const std::string& entity,
                                            const ScoreBreakdown& b, Timestamp scored_at) const
{
    ensemble::SentimentRecord r;
    r.post_id = post.id;
    r.entity = entity;
    r.created_at = post.created_at;
    r.text = post.text;
    r.tokens = b.vader_tokens.tokens;
    r.compound = b.vader.compound;
    r.s_vader = b.s_vader;
    r.s_contextual = b.s_contextual;
    r.s_final = b.s_final;
    r.label = b.label;
    r.alpha = config_.alpha;
    r.pos_threshold = config_.pos_threshold;
    r.neg_threshold = config_.neg_threshold;
    r.generation = config_.generation();
    r.scored_at = scored_at;
    r.latency_ms = b.latency_ms;
    return r;
}

std::vector<ensemble::SentimentRecord> Scorer::score_posts(const std::vector<ingest::RawPost>& posts,
                                                           const std::string& entity, Timestamp scored_at,
                                                           std::size_t jobs) const
{
    std::vector<std::string> texts;
    texts.reserve(posts.size());
    for (const auto& p : posts)
        texts.push_back(p.text);
    const auto scored = score_texts(texts, jobs);
    std::vector<ensemble::SentimentRecord> out;
    out.reserve(posts.size());
    for (std::size_t i = 0; i < posts.size(); ++i)
        out.push_back(to_record(posts[i], entity, scored[i], scored_at));
    return out;
}

Label Scorer::classify_vader(std::string_view text) const
{
    const auto tokens = textprep::preprocess(text, textprep::PrepProfile::vader(), resources_->text);
    const double s = ensemble::scale_vader(resources_->analyzer.score(tokens).compound);
    return ensemble::label(s, config_);
}

Label Scorer::classify_contextual(std::string_view text) const
{
    const auto tokens = textprep::preprocess(text, textprep::PrepProfile::contextual(), resources_->text);
    return ensemble::label(contextual::polarity_score(backend_->classify(tokens.joined())), config_);
}

Label Scorer::classify_hybrid(std::string_view text) const
{
    return score_text(text).label;
}

} // namespace pulsegauge::pipeline
