#pragma once

#include "pulsegauge/time.hpp"

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace pulsegauge::ingest {

struct RawPost {
    std::string id;
    Timestamp created_at;
    std::string text;
    std::string author_id;
    Timestamp author_created_at;
    std::uint64_t author_post_count = 0;
    std::uint64_t like_count = 0;
    std::uint64_t reply_count = 0;
    bool is_retweet = false;
    std::optional<std::string> lang_hint;
};

nlohmann::ordered_json to_json(const RawPost& post);
// Throws Error(ParseError) naming the offending field.
RawPost post_from_json(const nlohmann::json& j);

class CollectionRequest {
public:
    // Throws Error(InvalidRequest) unless query is non-empty, max_items >= 1
    // and start_date <= end_date.
    CollectionRequest(std::string query, std::uint64_t max_items, Date start_date, Date end_date);

    const std::string& query() const { return query_; }
    std::uint64_t max_items() const { return max_items_; }
    Date start_date() const { return start_date_; }
    Date end_date() const { return end_date_; }

    // Inclusive window: start of start_date through the last second of end_date.
    bool in_window(Timestamp ts) const;

private:
    std::string query_;
    std::uint64_t max_items_;
    Date start_date_;
    Date end_date_;
};

struct FilterPolicy {
    std::uint64_t min_engagement = 5;
    bool english_only = true;
    bool exclude_retweets = true;
    double bot_posts_per_day_max = 50.0;

    // Defaults overlaid with PG_MIN_ENGAGEMENT when set.
    static FilterPolicy from_env();
    static FilterPolicy from_json(const nlohmann::json& j);
    nlohmann::ordered_json to_json() const;
};

std::string format_query(const CollectionRequest& req);

bool is_bot_like(Timestamp author_created_at, std::uint64_t author_post_count, Timestamp now,
                 double max_posts_per_day = 50.0);

// Returns the hint when present, otherwise "en" when at least 12% of the
// words are English function words and "und" when not.
std::string detect_language(std::string_view text, const std::optional<std::string>& lang_hint);

bool passes_filters(const RawPost& post, const FilterPolicy& policy, Timestamp now);

class PostSource {
public:
    virtual ~PostSource() = default;

    // Called once before the first next() with the formatted query.
    virtual void open(const std::string& formatted_query, const CollectionRequest& req) = 0;
    // nullopt at exhaustion; throws Error(SourceUnavailable) on I/O failure.
    virtual std::optional<RawPost> next() = 0;
    virtual std::string describe() const = 0;
    // Lines or items that could not be decoded into a RawPost.
    virtual std::size_t malformed() const { return 0; }
};

// JSON Lines replay. Undecodable lines are skipped and counted.
class FileSource : public PostSource {
public:
    explicit FileSource(std::string path);
    ~FileSource() override;

    void open(const std::string& formatted_query, const CollectionRequest& req) override;
    std::optional<RawPost> next() override;
    std::string describe() const override { return "file:" + path_; }
    std::size_t malformed() const override { return malformed_; }

private:
    struct Impl;
    std::string path_;
    std::unique_ptr<Impl> impl_;
    std::size_t malformed_ = 0;
};

struct LiveSourceConfig {
    std::string base_url;  // e.g. http://127.0.0.1:9000
    // Placeholders: {query} {max} {cursor} (URL-encoded on substitution).
    std::string path_template = "/search?q={query}&max={max}&cursor={cursor}";
    int max_attempts = 5;
    std::chrono::milliseconds backoff_base{1000};
    double backoff_factor = 2.0;
    std::chrono::milliseconds timeout{5000};
    std::function<void(std::chrono::milliseconds)> sleep;  // defaults to this_thread::sleep_for
};

// Maps one provider page to posts plus the next-page cursor ("" = last page).
using ResponseAdapter = std::function<std::vector<RawPost>(const nlohmann::json& page, std::string& next_cursor)>;

// Accepts {"posts": [...], "next": "..."} or a bare array of post objects.
std::vector<RawPost> default_response_adapter(const nlohmann::json& page, std::string& next_cursor);

class LiveSource : public PostSource {
public:
    explicit LiveSource(LiveSourceConfig config, ResponseAdapter adapter = default_response_adapter);

    void open(const std::string& formatted_query, const CollectionRequest& req) override;
    std::optional<RawPost> next() override;
    std::string describe() const override { return "live:" + config_.base_url; }
    std::size_t malformed() const override { return malformed_; }

    int attempts_made() const { return attempts_; }

private:
    void fetch_page();

    LiveSourceConfig config_;
    ResponseAdapter adapter_;
    std::string query_;
    std::uint64_t max_items_ = 0;
    std::string cursor_;
    std::vector<RawPost> page_;
    std::size_t page_pos_ = 0;
    bool exhausted_ = false;
    bool opened_ = false;
    int attempts_ = 0;
    std::size_t malformed_ = 0;
};

// "file:<path>" or "live:<url>"; throws InvalidRequest on other forms.
std::unique_ptr<PostSource> make_source(std::string_view spec);

struct CollectionResult {
    std::vector<RawPost> posts;
    bool truncated = false;  // the source failed before exhaustion or max_items
    std::string error;       // set when truncated
    std::size_t scanned = 0;
    std::size_t duplicates = 0;
    std::size_t out_of_window = 0;
    std::size_t filtered = 0;
    std::size_t malformed = 0;
};

using PostCallback = std::function<void(const RawPost&)>;

// Pulls from the source in order, keeps posts that are inside the request
// window, not duplicates of an earlier id, and pass the filters (the bot rule
// is evaluated as of the post's own creation time), and stops at max_items.
CollectionResult collect(PostSource& source, const CollectionRequest& req, const FilterPolicy& policy,
                         const PostCallback& on_post = {});

} // namespace pulsegauge::ingest
