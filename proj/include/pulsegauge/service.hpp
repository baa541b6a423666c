#pragma once

#include "pulsegauge/analytics.hpp"
#include "pulsegauge/error.hpp"
#include "pulsegauge/ensemble.hpp"
#include "pulsegauge/ingest.hpp"
#include "pulsegauge/pipeline.hpp"

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include <json.hpp>

namespace pulsegauge::service {

// [A-Za-z0-9][A-Za-z0-9_.-]{0,63}; names double as segment file names.
bool valid_entity_name(std::string_view entity);

// One persisted line: the raw post and its scores, flattened, plus the
// global sequence number that serves as the stream cursor.
struct StoredRecord {
    std::uint64_t seq = 0;
    ingest::RawPost post;
    ensemble::SentimentRecord score;
};

nlohmann::ordered_json to_json(const StoredRecord& r);
// Throws Error(ParseError).
StoredRecord stored_from_json(const nlohmann::json& j);

// Append-only JSON Lines segments, one file per entity under <dir>/segments,
// with an in-memory index rebuilt from the files on construction. A torn
// final line left by a crash is cut off; undecodable interior lines are
// skipped and counted.
class RecordStore {
public:
    explicit RecordStore(std::filesystem::path dir);

    using Listener = std::function<void(const StoredRecord&)>;
    // Invoked after each append while the write lock is held, so listeners
    // observe records in sequence order. Must not block.
    void set_listener(Listener listener);

    // Returns nullopt when (entity, post id) is already stored.
    std::optional<StoredRecord> append(const ingest::RawPost& post, const ensemble::SentimentRecord& score);

    bool contains(const std::string& entity, const std::string& post_id) const;
    bool has_entity(const std::string& entity) const;
    // Persistence order; throws UnknownEntity.
    std::vector<ensemble::SentimentRecord> records(const std::string& entity) const;
    // Entity names with record counts, sorted by name.
    std::vector<std::pair<std::string, std::size_t>> entities() const;
    // Records with seq > cursor, ascending, at most `limit`.
    std::vector<StoredRecord> since(std::uint64_t cursor, std::size_t limit = SIZE_MAX) const;

    std::uint64_t last_seq() const;
    std::size_t size() const;
    std::size_t skipped_lines() const { return skipped_; }
    // FNV-1a over every segment's bytes in name order.
    std::string digest() const;
    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path segment_path(const std::string& entity) const;
    void rebuild();

    std::filesystem::path dir_;
    mutable std::shared_mutex mu_;
    mutable std::mutex write_mu_;
    std::vector<StoredRecord> log_;                              // ascending seq
    std::map<std::string, std::vector<std::size_t>> by_entity_;  // indexes into log_
    std::unordered_set<std::string> keys_;                       // entity + '\n' + post id
    std::uint64_t last_seq_ = 0;
    std::size_t skipped_ = 0;
    Listener listener_;
};

struct StreamEvent {
    std::uint64_t seq = 0;
    std::string data;  // one-line JSON
};

// "id: <seq>\ndata: <json>\n\n"
std::string format_sse(const StreamEvent& e);
std::string format_sse_named(std::string_view event, std::string_view data);

// Fan-out of persisted records to live subscribers. Publishing never blocks:
// each subscriber has a bounded buffer and is marked dropped on overflow.
class EventHub {
public:
    explicit EventHub(std::size_t buffer = 1024);

    class Subscriber {
    public:
        enum class Wait { Event, Timeout, Dropped, Closed };
        Wait pop(StreamEvent& out, std::chrono::milliseconds timeout);

    private:
        friend class EventHub;
        std::mutex mu;
        std::condition_variable cv;
        std::deque<StreamEvent> queue;
        bool dropped = false;
        bool closed = false;
    };

    std::shared_ptr<Subscriber> subscribe();
    void unsubscribe(const std::shared_ptr<Subscriber>& s);
    void publish(const StoredRecord& r);
    // Wakes every subscriber with Closed; later subscriptions start closed.
    void close();
    std::size_t subscribers() const;
    std::size_t dropped_total() const;

private:
    std::size_t buffer_;
    mutable std::mutex mu_;
    std::vector<std::shared_ptr<Subscriber>> subs_;
    bool closed_ = false;
    std::size_t dropped_total_ = 0;
};

// One stream connection. With a cursor, records after it are replayed from
// the store before live events; without one only live events are sent. Each
// record goes out at most once per session and in sequence order.
class StreamSession {
public:
    StreamSession(const RecordStore& store, EventHub& hub, std::optional<std::uint64_t> cursor,
                  std::chrono::milliseconds heartbeat);
    ~StreamSession();

    // Next block of SSE text; a heartbeat when nothing arrives within the
    // heartbeat interval; nullopt once the stream has ended (hub closed, or
    // the subscriber was dropped and the notice has been sent).
    std::optional<std::string> next_chunk();
    std::uint64_t last_sent() const { return last_sent_; }

private:
    const RecordStore& store_;
    EventHub& hub_;
    std::shared_ptr<EventHub::Subscriber> sub_;
    std::chrono::milliseconds heartbeat_;
    std::uint64_t last_sent_ = 0;
    std::uint64_t backlog_cursor_ = 0;
    bool replaying_ = false;
    bool ended_ = false;
};

enum class JobStatus { Pending, Running, Done, Failed };
std::string_view job_status_name(JobStatus s);

struct JobSpec {
    std::string entity;
    std::string query;
    std::string source;  // file:<path> or live:<url>
    std::uint64_t max_items = 500;
    Date start_date{};
    Date end_date{};
    ingest::FilterPolicy policy;

    // Throws InvalidRequest.
    void validate() const;
    ingest::CollectionRequest request() const;
    static JobSpec from_json(const nlohmann::json& j);
    nlohmann::ordered_json to_json() const;
};

struct JobCounts {
    std::uint64_t collected = 0;
    std::uint64_t scored = 0;
    std::uint64_t persisted = 0;
    std::uint64_t duplicates = 0;
};

struct JobState {
    std::string id;
    JobSpec spec;
    JobStatus status = JobStatus::Pending;
    JobCounts counts;
    std::string error;
    Timestamp submitted_at{};

    nlohmann::ordered_json to_json() const;
};

// Bounded job queue served by a fixed worker pool. The bound covers pending
// and running jobs together.
class JobManager {
public:
    using Progress = std::function<void(const JobCounts&)>;
    // Runs one job; throws to mark it failed.
    using Runner = std::function<void(const JobSpec&, const Progress&)>;

    JobManager(Runner runner, std::size_t capacity = 16, std::size_t workers = 4);
    ~JobManager();

    // Throws InvalidRequest or QueueFull.
    std::string submit(const JobSpec& spec);
    JobState get(const std::string& id) const;  // throws UnknownJob
    std::vector<JobState> list() const;
    // True once the job is done or failed.
    bool wait(const std::string& id, std::chrono::milliseconds timeout) const;
    std::size_t active() const;
    void shutdown();

private:
    void worker_loop();

    Runner runner_;
    std::size_t capacity_;
    mutable std::mutex mu_;
    mutable std::condition_variable cv_;
    std::deque<std::string> pending_;
    std::map<std::string, JobState> jobs_;
    std::size_t active_ = 0;
    std::uint64_t next_id_ = 1;
    bool stopping_ = false;
    std::vector<std::thread> workers_;
};

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::filesystem::path data_dir = "pg-data";
    std::size_t queue_capacity = 16;
    std::size_t workers = 4;
    std::chrono::milliseconds heartbeat{15000};
    std::size_t subscriber_buffer = 1024;

    // PG_LISTEN (host:port) and PG_DATA_DIR over the defaults.
    static ServiceConfig from_env();
};

class Service {
public:
    Service(ServiceConfig config, std::shared_ptr<const pipeline::Scorer> scorer);
    ~Service();

    const ServiceConfig& config() const { return config_; }
    const pipeline::Scorer& scorer() const { return *scorer_; }
    RecordStore& store() { return store_; }
    EventHub& hub() { return hub_; }
    JobManager& jobs() { return jobs_; }

    // Ingest -> preprocess -> score -> persist for one job; counts reported
    // through `progress`. Throws SourceUnavailable when the source failed.
    void run_job(const JobSpec& spec, const JobManager::Progress& progress);

    analytics::EntitySummary summary(const std::string& entity, const analytics::Window& window = {}) const;
    analytics::EntitySummary whatif(const std::string& entity, double alpha) const;
    analytics::SentimentSeries series(const std::string& entity, std::chrono::seconds bucket) const;
    analytics::DriverReport drivers(const std::string& entity, std::size_t k) const;

    void shutdown();

private:
    std::vector<ensemble::SentimentRecord> records_of(const std::string& entity) const;

    ServiceConfig config_;
    std::shared_ptr<const pipeline::Scorer> scorer_;
    RecordStore store_;
    EventHub hub_;
    JobManager jobs_;
};

// HTTP status for an error code.
int http_status(ErrorCode code);

class HttpServer {
public:
    explicit HttpServer(Service& service);
    ~HttpServer();

    // Returns the bound port (port 0 picks a free one); throws InvalidRequest.
    int bind(const std::string& host, int port);
    void run();  // blocks until stop()
    void start();  // run() on a background thread
    void stop();
    void wait_until_ready();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace pulsegauge::service
