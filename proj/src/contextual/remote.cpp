#include "pulsegauge/contextual.hpp"

#include "pulsegauge/error.hpp"

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <condition_variable>
#include <algorithm>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <thread>

namespace pulsegauge::contextual {

using nlohmann::json;

namespace {

// Caps the number of outstanding HTTP requests per endpoint across all
// callers in the process.
class InFlightLimiter {
public:
    explicit InFlightLimiter(std::size_t limit) : free_(limit) {}
    void acquire()
    {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [this] { return free_ > 0; });
        --free_;
    }
    void release()
    {
        {
            std::lock_guard lock(mu_);
            ++free_;
        }
        cv_.notify_one();
    }

private:
    std::mutex mu_;
    std::condition_variable cv_;
    std::size_t free_;
};

InFlightLimiter& limiter_for(const RemoteConfig& cfg)
{
    static std::mutex mu;
    static std::map<std::string, std::unique_ptr<InFlightLimiter>> limiters;
    std::lock_guard lock(mu);
    auto& slot = limiters[cfg.endpoint];
    if (!slot)
        slot = std::make_unique<InFlightLimiter>(std::max<std::size_t>(cfg.max_in_flight, 1));
    return *slot;
}

[[noreturn]] void malformed(const std::string& what)
{
    throw Error(ErrorCode::MalformedResponse, "classifier response: " + what);
}

} // namespace

RemoteBackend::RemoteBackend(RemoteConfig config) : config_(std::move(config))
{
    if (config_.endpoint.empty())
        throw Error(ErrorCode::BackendUnavailable, "remote backend needs an endpoint");
    while (!config_.endpoint.empty() && config_.endpoint.back() == '/')
        config_.endpoint.pop_back();
    config_.max_batch = std::max<std::size_t>(config_.max_batch, 1);
    config_.max_in_flight = std::max<std::size_t>(config_.max_in_flight, 1);
}

std::vector<ClassDistribution> RemoteBackend::post_chunk(const std::vector<std::string>& texts,
                                                         std::size_t offset) const
{
    httplib::Client client(config_.endpoint);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    const std::string body = json{{"texts", texts}}.dump();
    InFlightLimiter& limiter = limiter_for(config_);
    std::string last_error;
    httplib::Result res;
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
        limiter.acquire();
        res = client.Post("/classify", body, "application/json");
        limiter.release();
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500 || res->status == 429) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw Error(ErrorCode::BackendUnavailable, "classifier returned HTTP " + std::to_string(res->status));
        last_error.clear();
        break;
    }
    if (!last_error.empty())
        throw Error(ErrorCode::BackendUnavailable, "classifier at " + config_.endpoint + " failed after " +
                                                       std::to_string(config_.retries + 1) + " attempts: " + last_error);

    json j;
    try {
        j = json::parse(res->body);
    } catch (const json::exception& e) {
        malformed(std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("distributions") || !j.at("distributions").is_array())
        malformed("missing 'distributions' array");
    const json& dists = j.at("distributions");
    if (dists.size() != texts.size())
        malformed("expected " + std::to_string(texts.size()) + " distributions, got " + std::to_string(dists.size()));
    std::vector<ClassDistribution> out;
    out.reserve(texts.size());
    for (std::size_t i = 0; i < dists.size(); ++i) {
        const json& d = dists[i];
        const std::string where = "item " + std::to_string(offset + i);
        if (!d.is_array() || d.size() != 3 || !d[0].is_number() || !d[1].is_number() || !d[2].is_number())
            malformed(where + " is not [p_pos, p_neg, p_neu]");
        const ClassDistribution cd{d[0].get<double>(), d[1].get<double>(), d[2].get<double>()};
        if (!cd.valid(1e-6))
            malformed(where + " is not a probability distribution (sum " +
                      std::to_string(cd.p_pos + cd.p_neg + cd.p_neu) + ")");
        out.push_back(cd.normalized());
    }
    return out;
}

std::vector<ClassDistribution> RemoteBackend::classify_batch(const std::vector<std::string>& texts) const
{
    if (texts.empty())
        return {};
    const std::size_t n_chunks = (texts.size() + config_.max_batch - 1) / config_.max_batch;
    std::vector<std::vector<ClassDistribution>> results(n_chunks);
    std::vector<std::exception_ptr> errors(n_chunks);

    auto run_chunk = [&](std::size_t c) {
        const std::size_t begin = c * config_.max_batch;
        const std::size_t end = std::min(texts.size(), begin + config_.max_batch);
        try {
            results[c] = post_chunk({texts.begin() + static_cast<std::ptrdiff_t>(begin),
                                     texts.begin() + static_cast<std::ptrdiff_t>(end)},
                                    begin);
        } catch (...) {
            errors[c] = std::current_exception();
        }
    };

    if (n_chunks == 1) {
        run_chunk(0);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> workers;
        const std::size_t n_workers = std::min(n_chunks, config_.max_in_flight);
        for (std::size_t w = 0; w < n_workers; ++w) {
            workers.emplace_back([&] {
                for (std::size_t c = next++; c < n_chunks; c = next++)
                    run_chunk(c);
            });
        }
        for (auto& t : workers)
            t.join();
    }
    for (const auto& e : errors) {
        if (e)
            std::rethrow_exception(e);
    }
    std::vector<ClassDistribution> out;
    out.reserve(texts.size());
    for (auto& r : results)
        out.insert(out.end(), r.begin(), r.end());
    return out;
}

ClassDistribution RemoteBackend::classify(std::string_view text) const
{
    return classify_batch({std::string(text)}).front();
}

std::vector<ClassDistribution> remote_classify(const RemoteBackend& backend, const std::vector<std::string>& texts)
{
    return backend.classify_batch(texts);
}

} // namespace pulsegauge::contextual
