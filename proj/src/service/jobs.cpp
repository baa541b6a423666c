#include "pulsegauge/error.hpp"
#include "pulsegauge/service.hpp"

#include <cstdio>

namespace pulsegauge::service {

using nlohmann::json;

std::string_view job_status_name(JobStatus s)
{
    switch (s) {
    case JobStatus::Pending:
        return "pending";
    case JobStatus::Running:
        return "running";
    case JobStatus::Done:
        return "done";
    case JobStatus::Failed:
        return "failed";
    }
    return "pending";
}

void JobSpec::validate() const
{
    if (entity.empty())
        throw Error(ErrorCode::InvalidRequest, "entity must be non-empty");
    if (!valid_entity_name(entity))
        throw Error(ErrorCode::InvalidRequest,
                    "entity must match [A-Za-z0-9][A-Za-z0-9_.-]{0,63}, got '" + entity + "'");
    if (!source.starts_with("file:") && !source.starts_with("live:"))
        throw Error(ErrorCode::InvalidRequest, "source must be file:<path> or live:<url>");
    if (source.size() <= 5)
        throw Error(ErrorCode::InvalidRequest, "source location is empty");
    request();
}

ingest::CollectionRequest JobSpec::request() const
{
    return ingest::CollectionRequest(query, max_items, start_date, end_date);
}

JobSpec JobSpec::from_json(const json& j)
{
    if (!j.is_object())
        throw Error(ErrorCode::InvalidRequest, "job spec must be a JSON object");
    JobSpec s;
    try {
        s.entity = j.value("entity", std::string());
        s.query = j.value("query", s.entity);
        s.source = j.value("source", std::string());
        if (j.contains("max_items")) {
            const auto& m = j.at("max_items");
            if (!m.is_number_integer() || m.get<std::int64_t>() < 1)
                throw Error(ErrorCode::InvalidRequest, "max_items must be a positive integer");
            s.max_items = m.get<std::uint64_t>();
        }
        if (!j.contains("start_date") || !j.contains("end_date"))
            throw Error(ErrorCode::InvalidRequest, "start_date and end_date are required");
        s.start_date = parse_date(j.at("start_date").get<std::string>());
        s.end_date = parse_date(j.at("end_date").get<std::string>());
        s.policy = ingest::FilterPolicy::from_json(j.contains("policy") ? j.at("policy") : json());
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidRequest, std::string("job spec: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::InvalidRequest)
            throw;
        throw Error(ErrorCode::InvalidRequest, std::string("job spec: ") + e.what());
    }
    s.validate();
    return s;
}

nlohmann::ordered_json JobSpec::to_json() const
{
    return {
        {"entity", entity},
        {"query", query},
        {"source", source},
        {"max_items", max_items},
        {"start_date", format_date(start_date)},
        {"end_date", format_date(end_date)},
        {"policy", policy.to_json()},
    };
}

nlohmann::ordered_json JobState::to_json() const
{
    nlohmann::ordered_json j;
    j["id"] = id;
    j["status"] = std::string(job_status_name(status));
    j["entity"] = spec.entity;
    j["counts"] = {{"collected", counts.collected},
                   {"scored", counts.scored},
                   {"persisted", counts.persisted},
                   {"duplicates", counts.duplicates}};
    j["error"] = error.empty() ? json(nullptr) : json(error);
    j["submitted_at"] = format_timestamp(submitted_at);
    j["spec"] = spec.to_json();
    return j;
}

JobManager::JobManager(Runner runner, std::size_t capacity, std::size_t workers)
    : runner_(std::move(runner)), capacity_(std::max<std::size_t>(capacity, 1))
{
    for (std::size_t i = 0; i < std::max<std::size_t>(workers, 1); ++i)
        workers_.emplace_back([this] { worker_loop(); });
}

JobManager::~JobManager()
{
    shutdown();
}

std::string JobManager::submit(const JobSpec& spec)
{
    spec.validate();
    std::lock_guard lock(mu_);
    if (stopping_)
        throw Error(ErrorCode::QueueFull, "job manager is shutting down");
    if (active_ >= capacity_)
        throw Error(ErrorCode::QueueFull,
                    "job queue is full (" + std::to_string(capacity_) + " pending or running)");
    char buf[32];
    std::snprintf(buf, sizeof buf, "job-%06llu", static_cast<unsigned long long>(next_id_++));
    JobState st;
    st.id = buf;
    st.spec = spec;
    st.submitted_at = now_utc();
    jobs_.emplace(st.id, st);
    pending_.push_back(st.id);
    ++active_;
    cv_.notify_all();
    return st.id;
}

JobState JobManager::get(const std::string& id) const
{
    std::lock_guard lock(mu_);
    const auto it = jobs_.find(id);
    if (it == jobs_.end())
        throw Error(ErrorCode::UnknownJob, "unknown job '" + id + "'");
    return it->second;
}

std::vector<JobState> JobManager::list() const
{
    std::lock_guard lock(mu_);
    std::vector<JobState> out;
    for (const auto& [id, st] : jobs_)
        out.push_back(st);
    return out;
}

bool JobManager::wait(const std::string& id, std::chrono::milliseconds timeout) const
{
    std::unique_lock lock(mu_);
    if (!jobs_.count(id))
        throw Error(ErrorCode::UnknownJob, "unknown job '" + id + "'");
    return cv_.wait_for(lock, timeout, [&] {
        const JobStatus s = jobs_.at(id).status;
        return s == JobStatus::Done || s == JobStatus::Failed;
    });
}

std::size_t JobManager::active() const
{
    std::lock_guard lock(mu_);
    return active_;
}

void JobManager::shutdown()
{
    {
        std::lock_guard lock(mu_);
        if (stopping_ && workers_.empty())
            return;
        stopping_ = true;
    }
    cv_.notify_all();
    for (auto& t : workers_) {
        if (t.joinable())
            t.join();
    }
    workers_.clear();
    std::lock_guard lock(mu_);
    for (const auto& id : pending_) {
        JobState& st = jobs_.at(id);
        st.status = JobStatus::Failed;
        st.error = "service shut down before the job started";
    }
    pending_.clear();
    active_ = 0;
    cv_.notify_all();
}

void JobManager::worker_loop()
{
    for (;;) {
        std::string id;
        JobSpec spec;
        {
            std::unique_lock lock(mu_);
            cv_.wait(lock, [this] { return stopping_ || !pending_.empty(); });
            if (stopping_)
                return;
            id = pending_.front();
            pending_.pop_front();
            JobState& st = jobs_.at(id);
            st.status = JobStatus::Running;
            spec = st.spec;
        }
        cv_.notify_all();

        const Progress progress = [this, &id](const JobCounts& c) {
            std::lock_guard lock(mu_);
            jobs_.at(id).counts = c;
        };
        JobStatus final_status = JobStatus::Done;
        std::string error;
        try {
            runner_(spec, progress);
        } catch (const Error& e) {
            final_status = JobStatus::Failed;
            error = std::string(code_name(e.code())) + ": " + e.what();
        } catch (const std::exception& e) {
            final_status = JobStatus::Failed;
            error = e.what();
        }
        {
            std::lock_guard lock(mu_);
            JobState& st = jobs_.at(id);
            st.status = final_status;
            st.error = error;
            --active_;
        }
        cv_.notify_all();
    }
}

} // namespace pulsegauge::service
