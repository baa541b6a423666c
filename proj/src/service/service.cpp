#include "pulsegauge/error.hpp"
#include "pulsegauge/service.hpp"

#include <cstdlib>

namespace pulsegauge::service {

ServiceConfig ServiceConfig::from_env()
{
    ServiceConfig c;
    if (const char* listen = std::getenv("PG_LISTEN"); listen && *listen) {
        const std::string s(listen);
        const auto colon = s.rfind(':');
        try {
            if (colon == std::string::npos) {
                c.port = std::stoi(s);
            } else {
                if (colon > 0)
                    c.host = s.substr(0, colon);
                c.port = std::stoi(s.substr(colon + 1));
            }
        } catch (const std::exception&) {
            throw Error(ErrorCode::InvalidRequest, "PG_LISTEN must be host:port, got '" + s + "'");
        }
        if (c.port < 0 || c.port > 65535)
            throw Error(ErrorCode::InvalidRequest, "PG_LISTEN port out of range: " + s);
    }
    if (const char* dir = std::getenv("PG_DATA_DIR"); dir && *dir)
        c.data_dir = dir;
    return c;
}

Service::Service(ServiceConfig config, std::shared_ptr<const pipeline::Scorer> scorer)
    : config_(std::move(config)),
      scorer_(std::move(scorer)),
      store_(config_.data_dir),
      hub_(config_.subscriber_buffer),
      jobs_([this](const JobSpec& spec, const JobManager::Progress& p) { run_job(spec, p); },
            config_.queue_capacity, config_.workers)
{
    if (!scorer_)
        throw Error(ErrorCode::InvalidRequest, "service needs a scorer");
    store_.set_listener([this](const StoredRecord& r) { hub_.publish(r); });
}

Service::~Service()
{
    shutdown();
}

void Service::shutdown()
{
    jobs_.shutdown();
    hub_.close();
}

void Service::run_job(const JobSpec& spec, const JobManager::Progress& progress)
{
    constexpr std::size_t kBatch = 32;
    auto source = ingest::make_source(spec.source);
    JobCounts counts;
    std::vector<ingest::RawPost> batch;

    auto flush = [&] {
        std::vector<ingest::RawPost> fresh;
        for (auto& p : batch) {
            if (store_.contains(spec.entity, p.id))
                ++counts.duplicates;
            else
                fresh.push_back(std::move(p));
        }
        batch.clear();
        if (!fresh.empty()) {
            const auto recs = scorer_->score_posts(fresh, spec.entity, now_utc());
            counts.scored += recs.size();
            for (std::size_t i = 0; i < fresh.size(); ++i) {
                if (store_.append(fresh[i], recs[i]))
                    ++counts.persisted;
                else
                    ++counts.duplicates;
            }
        }
        progress(counts);
    };

    const auto result = ingest::collect(*source, spec.request(), spec.policy, [&](const ingest::RawPost& p) {
        ++counts.collected;
        batch.push_back(p);
        if (batch.size() >= kBatch)
            flush();
    });
    flush();
    if (result.truncated)
        throw Error(ErrorCode::SourceUnavailable, result.error);
}

std::vector<ensemble::SentimentRecord> Service::records_of(const std::string& entity) const
{
    return store_.records(entity);
}

analytics::EntitySummary Service::summary(const std::string& entity, const analytics::Window& window) const
{
    return analytics::summarize(entity, records_of(entity), window);
}

analytics::EntitySummary Service::whatif(const std::string& entity, double alpha) const
{
    return analytics::summarize(entity, analytics::reweight(records_of(entity), alpha));
}

analytics::SentimentSeries Service::series(const std::string& entity, std::chrono::seconds bucket) const
{
    return analytics::series(records_of(entity), bucket);
}

analytics::DriverReport Service::drivers(const std::string& entity, std::size_t k) const
{
    return analytics::drivers(entity, records_of(entity), k, scorer_->resources().text.stopwords);
}

int http_status(ErrorCode code)
{
    switch (code) {
    case ErrorCode::InvalidRequest:
    case ErrorCode::InvalidInput:
    case ErrorCode::InvalidScore:
    case ErrorCode::ParseError:
    case ErrorCode::LengthMismatch:
        return 400;
    case ErrorCode::UnknownEntity:
    case ErrorCode::UnknownJob:
        return 404;
    case ErrorCode::EmptyWindow:
    case ErrorCode::InsufficientData:
    case ErrorCode::EmptyValidation:
    case ErrorCode::EmptyInput:
        return 422;
    case ErrorCode::QueueFull:
        return 429;
    case ErrorCode::SourceUnavailable:
    case ErrorCode::BackendUnavailable:
    case ErrorCode::MalformedResponse:
        return 503;
    case ErrorCode::LexiconMissing:
    case ErrorCode::ModelLoadError:
        return 500;
    }
    return 500;
}

} // namespace pulsegauge::service
