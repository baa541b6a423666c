#include "pulsegauge/error.hpp"
#include "pulsegauge/service.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <fstream>
#include <random>
#include <sstream>

#include <httplib.h>

using namespace pulsegauge;
using namespace pulsegauge::service;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

ErrorCode code_of(const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no pulsegauge::Error thrown";
    return ErrorCode::InvalidInput;
}

struct TempDir {
    fs::path path;
    TempDir()
    {
        static std::atomic<int> counter{0};
        std::random_device rd;
        path = fs::temp_directory_path() /
               ("pg-svc-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir()
    {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

const fs::path kData = PULSEGAUGE_RESOURCE_DIR;

std::shared_ptr<const pipeline::Scorer> make_scorer()
{
    static const auto scorer = [] {
        auto backend = contextual::make_backend(
            contextual::BackendDescriptor::parse("reference:" + (kData / "models/reference_model.json").string()));
        return std::make_shared<const pipeline::Scorer>(pipeline::Resources::load_default(),
                                                        std::shared_ptr<const contextual::Backend>(std::move(backend)));
    }();
    return scorer;
}

ingest::RawPost post(const std::string& id, const std::string& ts, const std::string& text)
{
    ingest::RawPost p;
    p.id = id;
    p.created_at = parse_timestamp(ts);
    p.text = text;
    p.author_id = "u1";
    p.author_created_at = parse_timestamp("2020-01-01T00:00:00Z");
    p.author_post_count = 100;
    p.like_count = 10;
    p.lang_hint = "en";
    return p;
}

ensemble::SentimentRecord scored(const ingest::RawPost& p, const std::string& entity, double sv, double sc)
{
    ensemble::SentimentRecord r;
    r.post_id = p.id;
    r.entity = entity;
    r.created_at = p.created_at;
    r.text = p.text;
    r.tokens = {"x"};
    r.s_vader = sv;
    r.compound = sv * 2 - 1;
    r.s_contextual = sc;
    r.s_final = ensemble::combine(sv, sc, 0.4);
    r.label = ensemble::label(r.s_final);
    r.generation = ensemble::EnsembleConfig{}.generation();
    r.scored_at = parse_timestamp("2024-02-01T00:00:00Z");
    return r;
}

void fill(RecordStore& store, const std::string& entity, int n, int offset = 0)
{
    for (int i = 0; i < n; ++i) {
        const auto p = post(entity + "-" + std::to_string(offset + i), "2024-01-0" + std::to_string(1 + i % 9) + "T10:00:00Z",
                            "post " + std::to_string(i));
        store.append(p, scored(p, entity, 0.1 * (i % 10), 0.05 * (i % 20)));
    }
}

std::vector<std::uint64_t> ids_in(const std::string& sse)
{
    std::vector<std::uint64_t> out;
    std::istringstream in(sse);
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("id: ", 0) == 0)
            out.push_back(std::stoull(line.substr(4)));
    }
    return out;
}

// First `n` lines of a demo corpus file.
fs::path demo_slice(const fs::path& dir, const std::string& name, int n)
{
    std::ifstream in(kData / "demo" / (name + ".jsonl"));
    const fs::path out_path = dir / (name + "-" + std::to_string(n) + ".jsonl");
    std::ofstream out(out_path);
    std::string line;
    for (int i = 0; i < n && std::getline(in, line); ++i)
        out << line << '\n';
    return out_path;
}

JobSpec file_job(const std::string& entity, const fs::path& file)
{
    JobSpec s;
    s.entity = entity;
    s.query = entity;
    s.source = "file:" + file.string();
    s.start_date = parse_date("2024-01-01");
    s.end_date = parse_date("2024-01-31");
    return s;
}

} // namespace

TEST(EntityName, Rules)
{
    EXPECT_TRUE(valid_entity_name("amazon"));
    EXPECT_TRUE(valid_entity_name("A1_b.c-d"));
    EXPECT_FALSE(valid_entity_name(""));
    EXPECT_FALSE(valid_entity_name("-lead"));
    EXPECT_FALSE(valid_entity_name("../etc"));
    EXPECT_FALSE(valid_entity_name("a b"));
    EXPECT_FALSE(valid_entity_name(std::string(65, 'a')));
}

TEST(RecordStore, AppendDedupAndReopen)
{
    TempDir tmp;
    std::string before;
    {
        RecordStore store(tmp.path);
        fill(store, "acme", 5);
        fill(store, "beta", 3);
        EXPECT_EQ(store.size(), 8u);
        EXPECT_EQ(store.last_seq(), 8u);
        const auto p = post("acme-0", "2024-01-01T10:00:00Z", "again");
        EXPECT_FALSE(store.append(p, scored(p, "acme", 0.5, 0.5)).has_value());
        // same id under another entity is a distinct record
        EXPECT_TRUE(store.append(p, scored(p, "gamma", 0.5, 0.5)).has_value());
        before = analytics::summarize("acme", store.records("acme")).to_json().dump();
    }
    RecordStore reopened(tmp.path);
    EXPECT_EQ(reopened.size(), 9u);
    EXPECT_EQ(reopened.last_seq(), 9u);
    EXPECT_EQ(reopened.skipped_lines(), 0u);
    EXPECT_EQ(analytics::summarize("acme", reopened.records("acme")).to_json().dump(), before);
    const auto ents = reopened.entities();
    ASSERT_EQ(ents.size(), 3u);
    EXPECT_EQ(ents[0], (std::pair<std::string, std::size_t>{"acme", 5}));
    EXPECT_EQ(code_of([&] { reopened.records("nobody"); }), ErrorCode::UnknownEntity);
    fill(reopened, "acme", 1, 100);
    EXPECT_EQ(reopened.last_seq(), 10u);
}

TEST(RecordStore, StoredRecordRoundTrip)
{
    const auto p = post("r1", "2024-01-03T04:05:06Z", "round \"trip\" 😀");
    StoredRecord r{42, p, scored(p, "acme", 0.75, 0.25)};
    const auto back = stored_from_json(json::parse(to_json(r).dump()));
    EXPECT_EQ(back.seq, 42u);
    EXPECT_EQ(back.post.text, p.text);
    EXPECT_EQ(back.post.lang_hint, p.lang_hint);
    EXPECT_EQ(back.score.s_final, r.score.s_final);
    EXPECT_EQ(to_json(back).dump(), to_json(r).dump());
    EXPECT_EQ(code_of([] { stored_from_json(json{{"seq", 1}}); }), ErrorCode::ParseError);
}

TEST(RecordStore, TornTailIsTruncated)
{
    TempDir tmp;
    {
        RecordStore store(tmp.path);
        fill(store, "acme", 4);
    }
    const fs::path seg = tmp.path / "segments" / "acme.jsonl";
    const auto good_size = fs::file_size(seg);
    {
        std::ofstream out(seg, std::ios::app | std::ios::binary);
        out << R"({"seq":5,"entity":"acme","post_id":"torn","crea)";
    }
    RecordStore store(tmp.path);
    EXPECT_EQ(store.size(), 4u);
    EXPECT_EQ(fs::file_size(seg), good_size);
    fill(store, "acme", 1, 50);
    RecordStore again(tmp.path);
    EXPECT_EQ(again.size(), 5u);
    EXPECT_EQ(again.skipped_lines(), 0u);
}

TEST(RecordStore, CorruptInteriorLineIsSkipped)
{
    TempDir tmp;
    {
        RecordStore store(tmp.path);
        fill(store, "acme", 2);
    }
    const fs::path seg = tmp.path / "segments" / "acme.jsonl";
    {
        std::ofstream out(seg, std::ios::app | std::ios::binary);
        out << "not json\n";
    }
    {
        RecordStore store(tmp.path);
        fill(store, "acme", 1, 10);
    }
    RecordStore store(tmp.path);
    EXPECT_EQ(store.size(), 3u);
    EXPECT_EQ(store.skipped_lines(), 1u);
}

TEST(RecordStore, SinceAndDigest)
{
    TempDir tmp;
    RecordStore store(tmp.path);
    fill(store, "acme", 3);
    fill(store, "beta", 3);
    const auto all = store.since(0);
    ASSERT_EQ(all.size(), 6u);
    for (std::size_t i = 0; i < all.size(); ++i)
        EXPECT_EQ(all[i].seq, i + 1);
    const auto tail = store.since(4, 1);
    ASSERT_EQ(tail.size(), 1u);
    EXPECT_EQ(tail[0].seq, 5u);
    EXPECT_TRUE(store.since(6).empty());

    const auto d = store.digest();
    EXPECT_EQ(d.size(), 16u);
    EXPECT_EQ(store.digest(), d);
    fill(store, "acme", 1, 99);
    EXPECT_NE(store.digest(), d);
}

TEST(EventHub, SseFraming)
{
    EXPECT_EQ(format_sse({7, R"({"a":1})"}), "id: 7\ndata: {\"a\":1}\n\n");
    EXPECT_EQ(format_sse_named("heartbeat", "{}"), "event: heartbeat\ndata: {}\n\n");
}

TEST(StreamSession, LiveEventsInOrder)
{
    TempDir tmp;
    RecordStore store(tmp.path);
    EventHub hub;
    store.set_listener([&](const StoredRecord& r) { hub.publish(r); });
    fill(store, "acme", 2);
    StreamSession session(store, hub, std::nullopt, std::chrono::milliseconds(50));
    fill(store, "acme", 5, 10);
    std::string got;
    while (ids_in(got).size() < 5) {
        const auto chunk = session.next_chunk();
        ASSERT_TRUE(chunk);
        got += *chunk;
    }
    EXPECT_EQ(ids_in(got), (std::vector<std::uint64_t>{3, 4, 5, 6, 7}));
    const auto first = got.substr(got.find("data: ") + 6);
    const auto j = json::parse(first.substr(0, first.find('\n')));
    EXPECT_EQ(j.at("seq"), 3);
    EXPECT_EQ(j.at("entity"), "acme");
    EXPECT_TRUE(j.contains("s_final"));
}

TEST(StreamSession, HeartbeatWhenIdle)
{
    TempDir tmp;
    RecordStore store(tmp.path);
    EventHub hub;
    fill(store, "acme", 2);
    StreamSession session(store, hub, std::nullopt, std::chrono::milliseconds(20));
    for (int i = 0; i < 3; ++i) {
        const auto chunk = session.next_chunk();
        ASSERT_TRUE(chunk);
        EXPECT_EQ(*chunk, "event: heartbeat\ndata: {\"cursor\":2}\n\n");
    }
}

TEST(StreamSession, CursorResumesWithoutGapsOrDuplicates)
{
    TempDir tmp;
    RecordStore store(tmp.path);
    EventHub hub;
    store.set_listener([&](const StoredRecord& r) { hub.publish(r); });
    fill(store, "acme", 5);
    StreamSession session(store, hub, std::uint64_t{3}, std::chrono::milliseconds(20));
    std::string got;
    auto chunk = session.next_chunk();
    ASSERT_TRUE(chunk);
    got += *chunk;
    EXPECT_EQ(ids_in(got), (std::vector<std::uint64_t>{4, 5}));
    // records published after subscribing are not repeated by the replay
    fill(store, "acme", 2, 20);
    while (ids_in(got).size() < 4) {
        chunk = session.next_chunk();
        ASSERT_TRUE(chunk);
        got += *chunk;
    }
    EXPECT_EQ(ids_in(got), (std::vector<std::uint64_t>{4, 5, 6, 7}));

    StreamSession from_zero(store, hub, std::uint64_t{0}, std::chrono::milliseconds(20));
    const auto all = from_zero.next_chunk();
    ASSERT_TRUE(all);
    EXPECT_EQ(ids_in(*all), (std::vector<std::uint64_t>{1, 2, 3, 4, 5, 6, 7}));
}

TEST(StreamSession, ReplayRacingWithLiveAppends)
{
    TempDir tmp;
    RecordStore store(tmp.path);
    EventHub hub(100000);
    store.set_listener([&](const StoredRecord& r) { hub.publish(r); });
    fill(store, "acme", 300);
    StreamSession session(store, hub, std::uint64_t{0}, std::chrono::milliseconds(20));
    std::thread writer([&] { fill(store, "beta", 300); });
    std::vector<std::uint64_t> ids;
    while (ids.size() < 600) {
        const auto chunk = session.next_chunk();
        ASSERT_TRUE(chunk);
        for (const auto id : ids_in(*chunk))
            ids.push_back(id);
    }
    writer.join();
    ASSERT_EQ(ids.size(), 600u);
    for (std::size_t i = 0; i < ids.size(); ++i)
        EXPECT_EQ(ids[i], i + 1);
}

TEST(StreamSession, SlowSubscriberIsDropped)
{
    TempDir tmp;
    RecordStore store(tmp.path);
    EventHub hub(2);
    store.set_listener([&](const StoredRecord& r) { hub.publish(r); });
    StreamSession session(store, hub, std::nullopt, std::chrono::milliseconds(20));
    fill(store, "acme", 3);
    EXPECT_EQ(hub.dropped_total(), 1u);
    EXPECT_EQ(hub.subscribers(), 0u);
    const auto chunk = session.next_chunk();
    ASSERT_TRUE(chunk);
    EXPECT_EQ(*chunk, "event: dropped\ndata: {\"reason\":\"slow consumer\",\"resume_cursor\":0}\n\n");
    EXPECT_FALSE(session.next_chunk());
}

TEST(StreamSession, EndsWhenHubCloses)
{
    TempDir tmp;
    RecordStore store(tmp.path);
    EventHub hub;
    StreamSession session(store, hub, std::nullopt, std::chrono::seconds(30));
    std::thread closer([&] {
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
        hub.close();
    });
    const auto t0 = std::chrono::steady_clock::now();
    EXPECT_FALSE(session.next_chunk());
    EXPECT_LT(std::chrono::steady_clock::now() - t0, std::chrono::seconds(5));
    closer.join();
}

TEST(JobSpec, FromJson)
{
    const auto s = JobSpec::from_json(json::parse(
        R"({"entity":"acme","source":"file:/tmp/x.jsonl","start_date":"2024-01-01","end_date":"2024-01-31","max_items":20})"));
    EXPECT_EQ(s.query, "acme");
    EXPECT_EQ(s.max_items, 20u);
    EXPECT_EQ(s.policy.min_engagement, 5u);
    const auto back = JobSpec::from_json(json::parse(s.to_json().dump()));
    EXPECT_EQ(back.to_json(), s.to_json());

    auto bad = [](const char* text) { return code_of([&] { JobSpec::from_json(json::parse(text)); }); };
    EXPECT_EQ(bad(R"({"entity":"","source":"file:x","start_date":"2024-01-01","end_date":"2024-01-02"})"),
              ErrorCode::InvalidRequest);
    EXPECT_EQ(bad(R"({"entity":"a","source":"ftp:x","start_date":"2024-01-01","end_date":"2024-01-02"})"),
              ErrorCode::InvalidRequest);
    EXPECT_EQ(bad(R"({"entity":"a","source":"file:x","start_date":"2024-02-01","end_date":"2024-01-02"})"),
              ErrorCode::InvalidRequest);
    EXPECT_EQ(bad(R"({"entity":"a","source":"file:x","start_date":"jan","end_date":"2024-01-02"})"),
              ErrorCode::InvalidRequest);
    EXPECT_EQ(bad(R"({"entity":"a","source":"file:x"})"), ErrorCode::InvalidRequest);
    EXPECT_EQ(bad(R"({"entity":"a","source":"file:x","start_date":"2024-01-01","end_date":"2024-01-02","max_items":0})"),
              ErrorCode::InvalidRequest);
    EXPECT_EQ(bad("[]"), ErrorCode::InvalidRequest);
}

TEST(JobManager, SeventeenthConcurrentJobIsRejected)
{
    std::mutex mu;
    std::condition_variable cv;
    bool release = false;
    std::atomic<int> ran{0};
    JobManager jobs(
        [&](const JobSpec&, const JobManager::Progress& progress) {
            std::unique_lock lock(mu);
            cv.wait(lock, [&] { return release; });
            progress({3, 3, 3, 0});
            ++ran;
        },
        16, 4);
    const JobSpec spec = file_job("acme", "/nonexistent.jsonl");
    std::vector<std::string> ids;
    for (int i = 0; i < 16; ++i)
        ids.push_back(jobs.submit(spec));
    EXPECT_EQ(ids.front(), "job-000001");
    EXPECT_EQ(ids.back(), "job-000016");
    EXPECT_EQ(code_of([&] { jobs.submit(spec); }), ErrorCode::QueueFull);
    EXPECT_EQ(jobs.active(), 16u);

    JobSpec empty = spec;
    empty.entity = "";
    EXPECT_EQ(code_of([&] { jobs.submit(empty); }), ErrorCode::InvalidRequest);
    EXPECT_EQ(code_of([&] { jobs.get("job-999999"); }), ErrorCode::UnknownJob);

    {
        std::lock_guard lock(mu);
        release = true;
    }
    cv.notify_all();
    for (const auto& id : ids)
        ASSERT_TRUE(jobs.wait(id, std::chrono::seconds(10)));
    EXPECT_EQ(ran.load(), 16);
    const auto st = jobs.get(ids[0]);
    EXPECT_EQ(st.status, JobStatus::Done);
    EXPECT_EQ(st.counts.persisted, 3u);
    EXPECT_EQ(jobs.active(), 0u);
    EXPECT_NO_THROW(jobs.submit(spec));
}

TEST(JobManager, FailureIsRecorded)
{
    JobManager jobs([](const JobSpec&, const JobManager::Progress&) {
        throw Error(ErrorCode::SourceUnavailable, "gone");
    });
    const auto id = jobs.submit(file_job("acme", "/x.jsonl"));
    ASSERT_TRUE(jobs.wait(id, std::chrono::seconds(10)));
    const auto st = jobs.get(id);
    EXPECT_EQ(st.status, JobStatus::Failed);
    EXPECT_EQ(st.error, "SourceUnavailable: gone");
    EXPECT_EQ(st.to_json().at("status"), "failed");
}

TEST(Service, RunJobPersistsAndDedups)
{
    TempDir tmp;
    ServiceConfig cfg;
    cfg.data_dir = tmp.path / "store";
    Service svc(cfg, make_scorer());
    const auto file = demo_slice(tmp.path, "amazon", 50);
    std::vector<JobCounts> seen;
    svc.run_job(file_job("amazon", file), [&](const JobCounts& c) { seen.push_back(c); });
    ASSERT_FALSE(seen.empty());
    EXPECT_EQ(seen.back().collected, 50u);
    EXPECT_EQ(seen.back().scored, 50u);
    EXPECT_EQ(seen.back().persisted, 50u);
    for (std::size_t i = 1; i < seen.size(); ++i)
        EXPECT_GE(seen[i].persisted, seen[i - 1].persisted);
    EXPECT_EQ(svc.store().size(), 50u);

    JobCounts again;
    svc.run_job(file_job("amazon", file), [&](const JobCounts& c) { again = c; });
    EXPECT_EQ(again.collected, 50u);
    EXPECT_EQ(again.persisted, 0u);
    EXPECT_EQ(again.duplicates, 50u);
    EXPECT_EQ(svc.store().size(), 50u);

    EXPECT_EQ(code_of([&] { svc.run_job(file_job("amazon", tmp.path / "missing.jsonl"), [](const JobCounts&) {}); }),
              ErrorCode::SourceUnavailable);
}

TEST(Service, WhatifIsReadOnlyAndRecomputable)
{
    TempDir tmp;
    ServiceConfig cfg;
    cfg.data_dir = tmp.path / "store";
    Service svc(cfg, make_scorer());
    svc.run_job(file_job("tesla", demo_slice(tmp.path, "tesla", 50)), [](const JobCounts&) {});
    const auto digest = svc.store().digest();
    EXPECT_EQ(svc.whatif("tesla", 0.4).to_json().dump(), svc.summary("tesla").to_json().dump());

    const auto records = svc.store().records("tesla");
    for (int k = 0; k <= 20; ++k) {
        const double a = k / 20.0;
        const auto s = svc.whatif("tesla", a);
        double sum = 0.0;
        std::array<std::uint64_t, 3> counts{};
        for (const auto& r : records) {
            const double f = a * r.s_vader + (1 - a) * r.s_contextual;
            sum += f;
            ++counts[static_cast<int>(f >= 0.6 ? Label::Positive : f <= 0.4 ? Label::Negative : Label::Neutral)];
        }
        EXPECT_NEAR(s.csi, 100.0 * sum / records.size(), 1e-9) << a;
        EXPECT_EQ(s.label_counts, counts) << a;
    }
    EXPECT_EQ(svc.store().digest(), digest);
    EXPECT_EQ(code_of([&] { svc.whatif("tesla", 1.5); }), ErrorCode::InvalidScore);
    EXPECT_EQ(code_of([&] { svc.whatif("nobody", 0.5); }), ErrorCode::UnknownEntity);
    EXPECT_EQ(code_of([&] {
                  analytics::Window w;
                  w.from = parse_timestamp("2025-01-01");
                  svc.summary("tesla", w);
              }),
              ErrorCode::EmptyWindow);
}

TEST(Service, HttpStatusMapping)
{
    EXPECT_EQ(http_status(ErrorCode::InvalidRequest), 400);
    EXPECT_EQ(http_status(ErrorCode::InvalidScore), 400);
    EXPECT_EQ(http_status(ErrorCode::UnknownEntity), 404);
    EXPECT_EQ(http_status(ErrorCode::UnknownJob), 404);
    EXPECT_EQ(http_status(ErrorCode::EmptyWindow), 422);
    EXPECT_EQ(http_status(ErrorCode::QueueFull), 429);
    EXPECT_EQ(http_status(ErrorCode::BackendUnavailable), 503);
    EXPECT_EQ(http_status(ErrorCode::LexiconMissing), 500);
}

TEST(ServiceConfig, FromEnv)
{
    ::setenv("PG_LISTEN", "0.0.0.0:9123", 1);
    ::setenv("PG_DATA_DIR", "/tmp/pgx", 1);
    auto c = ServiceConfig::from_env();
    EXPECT_EQ(c.host, "0.0.0.0");
    EXPECT_EQ(c.port, 9123);
    EXPECT_EQ(c.data_dir, fs::path("/tmp/pgx"));
    ::setenv("PG_LISTEN", "nonsense:port", 1);
    EXPECT_EQ(code_of([] { ServiceConfig::from_env(); }), ErrorCode::InvalidRequest);
    ::unsetenv("PG_LISTEN");
    ::unsetenv("PG_DATA_DIR");
    c = ServiceConfig::from_env();
    EXPECT_EQ(c.port, 8080);
}

class HttpApi : public ::testing::Test {
protected:
    void SetUp() override
    {
        ServiceConfig cfg;
        cfg.data_dir = tmp.path / "store";
        cfg.heartbeat = std::chrono::milliseconds(100);
        svc = std::make_unique<Service>(cfg, make_scorer());
        server = std::make_unique<HttpServer>(*svc);
        port = server->bind("127.0.0.1", 0);
        server->start();
        client = std::make_unique<httplib::Client>("127.0.0.1", port);
        client->set_read_timeout(10, 0);
    }

    void TearDown() override
    {
        client.reset();
        server->stop();
        server.reset();
        svc.reset();
    }

    std::string submit(const std::string& entity, const fs::path& file)
    {
        const auto body = file_job(entity, file).to_json().dump();
        auto res = client->Post("/jobs", body, "application/json");
        EXPECT_TRUE(res);
        EXPECT_EQ(res->status, 202);
        return json::parse(res->body).at("id").get<std::string>();
    }

    void wait_done(const std::string& id)
    {
        ASSERT_TRUE(svc->jobs().wait(id, std::chrono::seconds(30)));
    }

    json get_json(const std::string& path, int expect_status = 200)
    {
        auto res = client->Get(path);
        EXPECT_TRUE(res) << path;
        if (!res)
            return {};
        EXPECT_EQ(res->status, expect_status) << path << " " << res->body;
        EXPECT_EQ(res->get_header_value("Access-Control-Allow-Origin"), "*");
        return json::parse(res->body);
    }

    // Reads the stream until `n` record events arrive.
    std::vector<std::uint64_t> read_stream(const std::string& path, std::size_t n)
    {
        httplib::Client c("127.0.0.1", port);
        c.set_read_timeout(10, 0);
        std::string buf;
        std::vector<std::uint64_t> ids;
        c.Get(path, [&](const char* data, std::size_t len) {
            buf.append(data, len);
            ids = ids_in(buf);
            return ids.size() < n;
        });
        return ids;
    }

    TempDir tmp;
    std::unique_ptr<Service> svc;
    std::unique_ptr<HttpServer> server;
    std::unique_ptr<httplib::Client> client;
    int port = 0;
};

TEST_F(HttpApi, JobsEntitiesAndAnalytics)
{
    const auto health = get_json("/healthz");
    EXPECT_EQ(health.at("status"), "ok");
    EXPECT_EQ(health.at("records"), 0);

    const auto id = submit("samsung", demo_slice(tmp.path, "samsung", 50));
    EXPECT_EQ(id, "job-000001");
    wait_done(id);
    const auto job = get_json("/jobs/" + id);
    EXPECT_EQ(job.at("status"), "done");
    EXPECT_EQ(job.at("counts").at("persisted"), 50);
    EXPECT_EQ(get_json("/jobs").at("jobs").size(), 1u);

    const auto ents = get_json("/entities").at("entities");
    ASSERT_EQ(ents.size(), 1u);
    EXPECT_EQ(ents[0].at("entity"), "samsung");
    EXPECT_EQ(ents[0].at("n"), 50);

    const auto summary = get_json("/entities/samsung/summary");
    EXPECT_EQ(summary.dump(), json::parse(svc->summary("samsung").to_json().dump()).dump());
    EXPECT_EQ(get_json("/entities/samsung/whatif?alpha=0.4").dump(), summary.dump());
    const auto windowed = get_json("/entities/samsung/summary?from=2024-01-01&to=2024-01-10");
    EXPECT_LE(windowed.at("n").get<int>(), 50);
    EXPECT_EQ(windowed.at("window").at("end"), "2024-01-10T23:59:59Z");

    const auto series = get_json("/entities/samsung/series?bucket=1d");
    EXPECT_EQ(series.at("bucket_seconds"), 86400);
    EXPECT_FALSE(series.at("points").empty());
    EXPECT_TRUE(series.contains("volatility"));
    auto csv = client->Get("/entities/samsung/series?bucket=1w&format=csv");
    ASSERT_TRUE(csv);
    EXPECT_EQ(csv->body.rfind("bucket_start,csi,n\n", 0), 0u);

    const auto drivers = get_json("/entities/samsung/drivers?k=5");
    EXPECT_LE(drivers.at("positive_drivers").size(), 5u);
    EXPECT_FALSE(drivers.at("positive_drivers").empty());

    auto err = get_json("/entities/nobody/summary", 404);
    EXPECT_EQ(err.at("error"), "UnknownEntity");
    EXPECT_TRUE(err.contains("message"));
    EXPECT_EQ(get_json("/entities/samsung/whatif?alpha=1.5", 400).at("error"), "InvalidScore");
    EXPECT_EQ(get_json("/entities/samsung/whatif?alpha=abc", 400).at("error"), "InvalidRequest");
    EXPECT_EQ(get_json("/entities/samsung/whatif", 400).at("error"), "InvalidRequest");
    EXPECT_EQ(get_json("/entities/samsung/summary?from=2030-01-01", 422).at("error"), "EmptyWindow");
    EXPECT_EQ(get_json("/entities/samsung/drivers?k=0", 400).at("error"), "InvalidRequest");
    EXPECT_EQ(get_json("/jobs/job-999999", 404).at("error"), "UnknownJob");

    auto bad = client->Post("/jobs", R"({"entity":""})", "application/json");
    ASSERT_TRUE(bad);
    EXPECT_EQ(bad->status, 400);
    bad = client->Post("/jobs", "{not json", "application/json");
    ASSERT_TRUE(bad);
    EXPECT_EQ(bad->status, 400);
}

TEST_F(HttpApi, StreamDeliversJobRecordsAndResumes)
{
    std::vector<std::uint64_t> live;
    std::thread reader([&] { live = read_stream("/stream", 5); });
    // the subscription has to exist before the job persists anything
    for (int i = 0; i < 200 && svc->hub().subscribers() == 0; ++i)
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    ASSERT_EQ(svc->hub().subscribers(), 1u);
    wait_done(submit("microsoft", demo_slice(tmp.path, "microsoft", 5)));
    reader.join();
    EXPECT_EQ(live, (std::vector<std::uint64_t>{1, 2, 3, 4, 5}));

    EXPECT_EQ(read_stream("/stream?cursor=3", 2), (std::vector<std::uint64_t>{4, 5}));

    httplib::Client c("127.0.0.1", port);
    std::string buf;
    c.Get("/stream", httplib::Headers{{"Last-Event-ID", "4"}}, [&](const char* d, std::size_t n) {
        buf.append(d, n);
        return ids_in(buf).empty();
    });
    EXPECT_EQ(ids_in(buf), (std::vector<std::uint64_t>{5}));

    EXPECT_EQ(get_json("/stream?cursor=99", 400).at("error"), "InvalidRequest");
    EXPECT_EQ(get_json("/stream?cursor=-1", 400).at("error"), "InvalidRequest");
}

TEST_F(HttpApi, StreamSendsHeartbeatsWhenIdle)
{
    httplib::Client c("127.0.0.1", port);
    std::string buf;
    c.Get("/stream", [&](const char* d, std::size_t n) {
        buf.append(d, n);
        return buf.find("event: heartbeat") == std::string::npos ||
               buf.find("event: heartbeat", buf.find("event: heartbeat") + 1) == std::string::npos;
    });
    EXPECT_EQ(buf.rfind("event: heartbeat\ndata: {\"cursor\":0}\n\n", 0), 0u);
    EXPECT_TRUE(ids_in(buf).empty());
}
