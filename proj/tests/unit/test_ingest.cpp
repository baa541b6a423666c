#include "pulsegauge/error.hpp"
#include "pulsegauge/ingest.hpp"

#include <gtest/gtest.h>
#include <httplib.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include <unistd.h>

using namespace pulsegauge;
using namespace pulsegauge::ingest;

namespace {

RawPost make_post(std::string id, std::string text = "this is a good day for the company", std::uint64_t likes = 10,
                  std::uint64_t replies = 0)
{
    RawPost p;
    p.id = std::move(id);
    p.created_at = parse_timestamp("2024-03-10T12:00:00Z");
    p.text = std::move(text);
    p.author_id = "a1";
    p.author_created_at = parse_timestamp("2020-01-01T00:00:00Z");
    p.author_post_count = 1000;
    p.like_count = likes;
    p.reply_count = replies;
    return p;
}

CollectionRequest march(std::uint64_t max_items = 500)
{
    return CollectionRequest("Amazon OR AMZN", max_items, parse_date("2024-03-01"), parse_date("2024-03-31"));
}

class TempFile {
public:
    explicit TempFile(const std::string& name)
        : path_(std::filesystem::temp_directory_path() / (name + "-" + std::to_string(::getpid())))
    {
    }
    ~TempFile() { std::filesystem::remove(path_); }
    const std::filesystem::path& path() const { return path_; }
    void write_posts(const std::vector<RawPost>& posts, const std::vector<std::string>& extra_lines = {})
    {
        std::ofstream out(path_);
        for (const auto& p : posts)
            out << to_json(p).dump() << "\n";
        for (const auto& l : extra_lines)
            out << l << "\n";
    }

private:
    std::filesystem::path path_;
};

class VectorSource : public PostSource {
public:
    explicit VectorSource(std::vector<RawPost> posts, std::size_t fail_after = SIZE_MAX)
        : posts_(std::move(posts)), fail_after_(fail_after)
    {
    }
    void open(const std::string& q, const CollectionRequest&) override
    {
        query = q;
        pos_ = 0;
    }
    std::optional<RawPost> next() override
    {
        if (pos_ == fail_after_)
            throw Error(ErrorCode::SourceUnavailable, "connection reset");
        if (pos_ >= posts_.size())
            return std::nullopt;
        return posts_[pos_++];
    }
    std::string describe() const override { return "vector"; }

    std::string query;

private:
    std::vector<RawPost> posts_;
    std::size_t pos_ = 0;
    std::size_t fail_after_;
};

} // namespace

TEST(FormatQuery, MatchesCollectionPattern)
{
    EXPECT_EQ(format_query(CollectionRequest("Amazon OR AMZN", 500, parse_date("2024-01-01"), parse_date("2024-06-30"))),
              "Amazon OR AMZN since:2024-01-01 until:2024-06-30");
    EXPECT_EQ(format_query(CollectionRequest("x", 1, parse_date("2024-03-05"), parse_date("2024-03-05"))),
              "x since:2024-03-05 until:2024-03-05");
}

TEST(CollectionRequest, RejectsInvalidFields)
{
    auto code_of = [](auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::EmptyInput;
    };
    EXPECT_EQ(code_of([] { CollectionRequest("", 10, parse_date("2024-01-01"), parse_date("2024-01-02")); }),
              ErrorCode::InvalidRequest);
    EXPECT_EQ(code_of([] { CollectionRequest("x", 0, parse_date("2024-01-01"), parse_date("2024-01-02")); }),
              ErrorCode::InvalidRequest);
    EXPECT_EQ(code_of([] { CollectionRequest("x", 5, parse_date("2024-01-03"), parse_date("2024-01-02")); }),
              ErrorCode::InvalidRequest);
}

TEST(CollectionRequest, WindowIncludesWholeEndDay)
{
    const CollectionRequest req("x", 1, parse_date("2024-03-05"), parse_date("2024-03-05"));
    EXPECT_TRUE(req.in_window(parse_timestamp("2024-03-05T00:00:00Z")));
    EXPECT_TRUE(req.in_window(parse_timestamp("2024-03-05T23:59:59Z")));
    EXPECT_FALSE(req.in_window(parse_timestamp("2024-03-06T00:00:00Z")));
    EXPECT_FALSE(req.in_window(parse_timestamp("2024-03-04T23:59:59Z")));
}

TEST(BotHeuristic, RateRule)
{
    const Timestamp now = parse_timestamp("2024-06-01T00:00:00Z");
    EXPECT_FALSE(is_bot_like(now - std::chrono::days{100}, 200, now));
    EXPECT_TRUE(is_bot_like(now - std::chrono::days{10}, 2000, now));
    EXPECT_FALSE(is_bot_like(now, 0, now));
    // age floored at one day: 50 posts on a brand-new account is exactly the limit
    EXPECT_FALSE(is_bot_like(now - std::chrono::hours{1}, 50, now));
    EXPECT_TRUE(is_bot_like(now - std::chrono::hours{1}, 51, now));
}

TEST(LanguageDetection, HintAndHeuristic)
{
    EXPECT_EQ(detect_language("the quick brown fox", std::nullopt), "en");
    EXPECT_EQ(detect_language("qualquer coisa", std::string("en")), "en");
    EXPECT_EQ(detect_language("la voiture rouge est rapide", std::nullopt), "und");
    try {
        detect_language("", std::nullopt);
        FAIL() << "expected InvalidInput";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidInput);
    }
}

TEST(Filters, EngagementIsSummed)
{
    const FilterPolicy policy;
    const Timestamp now = parse_timestamp("2024-03-10T12:00:00Z");
    RawPost rt = make_post("1", "this is the best", 100, 0);
    rt.is_retweet = true;
    EXPECT_FALSE(passes_filters(rt, policy, now));
    EXPECT_TRUE(passes_filters(make_post("2", "this is the best", 3, 2), policy, now));
    EXPECT_FALSE(passes_filters(make_post("3", "this is the best", 4, 0), policy, now));
}

TEST(Filters, OrderIrrelevantConjunction)
{
    std::mt19937 rng(7);
    const Timestamp now = parse_timestamp("2024-03-10T12:00:00Z");
    const FilterPolicy policy;
    for (int i = 0; i < 500; ++i) {
        RawPost p = make_post(std::to_string(i), rng() % 2 ? "the stock is up and it is great" : "xyz qrs tuv",
                              rng() % 8, rng() % 4);
        p.is_retweet = rng() % 3 == 0;
        p.author_post_count = rng() % 200000;
        const bool a = !p.is_retweet;
        const bool b = detect_language(p.text, p.lang_hint) == "en";
        const bool c = !is_bot_like(p.author_created_at, p.author_post_count, now);
        const bool d = p.like_count + p.reply_count >= 5;
        EXPECT_EQ(passes_filters(p, policy, now), d && c && b && a);
    }
}

TEST(FilterPolicy, EnvironmentOverride)
{
    ::setenv("PG_MIN_ENGAGEMENT", "2", 1);
    EXPECT_EQ(FilterPolicy::from_env().min_engagement, 2u);
    ::setenv("PG_MIN_ENGAGEMENT", "-1", 1);
    EXPECT_THROW(FilterPolicy::from_env(), Error);
    ::unsetenv("PG_MIN_ENGAGEMENT");
    EXPECT_EQ(FilterPolicy::from_env().min_engagement, 5u);
}

TEST(PostJson, RoundTripAndErrors)
{
    RawPost p = make_post("42");
    p.lang_hint = "en";
    const RawPost q = post_from_json(nlohmann::json::parse(to_json(p).dump()));
    EXPECT_EQ(q.id, p.id);
    EXPECT_EQ(q.created_at, p.created_at);
    EXPECT_EQ(q.lang_hint, p.lang_hint);
    EXPECT_EQ(q.like_count, p.like_count);

    auto j = nlohmann::json::parse(to_json(p).dump());
    j["like_count"] = -3;
    EXPECT_THROW(post_from_json(j), Error);
    j = nlohmann::json::parse(to_json(p).dump());
    j.erase("is_retweet");
    EXPECT_THROW(post_from_json(j), Error);
}

TEST(Collect, CountsPassingPostsFromFile)
{
    std::vector<RawPost> posts;
    for (int i = 0; i < 10; ++i)
        posts.push_back(make_post("p" + std::to_string(i), "this is a good day for the company", i < 4 ? 10 : 1));
    TempFile f("pg-ingest-file");
    f.write_posts(posts, {"{not json", "{\"id\": 3}"});
    FileSource src(f.path().string());
    const CollectionResult r = collect(src, march(), FilterPolicy{});
    EXPECT_EQ(r.posts.size(), 4u);
    EXPECT_EQ(r.malformed, 2u);
    EXPECT_FALSE(r.truncated);
    for (std::size_t i = 0; i < r.posts.size(); ++i)
        EXPECT_EQ(r.posts[i].id, "p" + std::to_string(i));
}

TEST(Collect, CapAppliesAfterFilteringInSourceOrder)
{
    std::vector<RawPost> posts;
    for (int i = 0; i < 1000; ++i)
        posts.push_back(make_post("p" + std::to_string(i)));
    VectorSource src(posts);
    const CollectionResult r = collect(src, march(500), FilterPolicy{});
    ASSERT_EQ(r.posts.size(), 500u);
    for (std::size_t i = 0; i < 500; ++i)
        EXPECT_EQ(r.posts[i].id, "p" + std::to_string(i));
    EXPECT_EQ(src.query, "Amazon OR AMZN since:2024-03-01 until:2024-03-31");
}

TEST(Collect, DropsDuplicatesAndOutOfWindow)
{
    std::vector<RawPost> posts = {make_post("a"), make_post("b"), make_post("a"), make_post("c")};
    posts[1].created_at = parse_timestamp("2024-04-01T00:00:00Z");
    VectorSource src(posts);
    const CollectionResult r = collect(src, march(), FilterPolicy{});
    ASSERT_EQ(r.posts.size(), 2u);
    EXPECT_EQ(r.posts[0].id, "a");
    EXPECT_EQ(r.posts[1].id, "c");
    EXPECT_EQ(r.duplicates, 1u);
    EXPECT_EQ(r.out_of_window, 1u);
}

TEST(Collect, SourceFailureReturnsPartialResult)
{
    std::vector<RawPost> posts;
    for (int i = 0; i < 10; ++i)
        posts.push_back(make_post("p" + std::to_string(i)));
    VectorSource src(posts, 6);
    const CollectionResult r = collect(src, march(), FilterPolicy{});
    EXPECT_TRUE(r.truncated);
    EXPECT_EQ(r.posts.size(), 6u);
    EXPECT_NE(r.error.find("connection reset"), std::string::npos);
}

TEST(Collect, MissingFileIsTruncatedEmpty)
{
    FileSource src("/nonexistent/posts.jsonl");
    const CollectionResult r = collect(src, march(), FilterPolicy{});
    EXPECT_TRUE(r.truncated);
    EXPECT_TRUE(r.posts.empty());
}

TEST(MakeSource, ParsesSpecs)
{
    EXPECT_EQ(make_source("file:/tmp/x.jsonl")->describe(), "file:/tmp/x.jsonl");
    EXPECT_EQ(make_source("live:http://127.0.0.1:1")->describe(), "live:http://127.0.0.1:1");
    EXPECT_THROW(make_source("ftp://x"), Error);
}

class LiveServer : public ::testing::Test {
protected:
    void SetUp() override
    {
        server_.Get("/search", [this](const httplib::Request& req, httplib::Response& res) {
            const int n = ++hits_;
            last_query_ = req.get_param_value("q");
            if (n <= failures_) {
                res.status = 503;
                return;
            }
            const std::string cursor = req.get_param_value("cursor");
            nlohmann::json page;
            page["posts"] = nlohmann::json::array();
            const int base = cursor.empty() ? 0 : 3;
            for (int i = 0; i < 3; ++i)
                page["posts"].push_back(nlohmann::json::parse(to_json(make_post("l" + std::to_string(base + i))).dump()));
            page["next"] = cursor.empty() ? "page2" : "";
            res.set_content(page.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    void TearDown() override
    {
        server_.stop();
        thread_.join();
    }

    LiveSourceConfig config()
    {
        LiveSourceConfig cfg;
        cfg.base_url = "http://127.0.0.1:" + std::to_string(port_);
        cfg.sleep = [this](std::chrono::milliseconds d) { sleeps_.push_back(d); };
        return cfg;
    }

    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<int> hits_{0};
    int failures_ = 0;
    std::string last_query_;
    std::vector<std::chrono::milliseconds> sleeps_;
};

TEST_F(LiveServer, PaginatesAndPassesFormattedQuery)
{
    LiveSource src(config());
    const CollectionResult r = collect(src, march(), FilterPolicy{});
    EXPECT_FALSE(r.truncated);
    ASSERT_EQ(r.posts.size(), 6u);
    EXPECT_EQ(r.posts[5].id, "l5");
    EXPECT_EQ(last_query_, "Amazon OR AMZN since:2024-03-01 until:2024-03-31");
}

TEST_F(LiveServer, RetriesWithExponentialBackoff)
{
    failures_ = 3;
    LiveSource src(config());
    const CollectionResult r = collect(src, march(), FilterPolicy{});
    EXPECT_FALSE(r.truncated);
    EXPECT_EQ(r.posts.size(), 6u);
    ASSERT_EQ(sleeps_.size(), 3u);
    EXPECT_EQ(sleeps_[0].count(), 1000);
    EXPECT_EQ(sleeps_[1].count(), 2000);
    EXPECT_EQ(sleeps_[2].count(), 4000);
}

TEST_F(LiveServer, GivesUpAfterFiveAttempts)
{
    failures_ = 100;
    LiveSource src(config());
    const CollectionResult r = collect(src, march(), FilterPolicy{});
    EXPECT_TRUE(r.truncated);
    EXPECT_TRUE(r.posts.empty());
    EXPECT_EQ(src.attempts_made(), 5);
    EXPECT_EQ(hits_.load(), 5);
}
