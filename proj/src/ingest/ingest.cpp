#include "pulsegauge/ingest.hpp"

#include "pulsegauge/error.hpp"

#include <algorithm>
#include <iterator>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <unordered_set>

namespace pulsegauge::ingest {

using nlohmann::json;

namespace {

constexpr std::string_view kFunctionWords[] = {
    "the", "a", "an", "and", "or", "but", "of", "to", "in", "on", "at", "for", "with", "from",
    "by", "about", "as", "is", "are", "was", "were", "be", "been", "being", "am", "it", "its",
    "this", "that", "these", "those", "i", "you", "he", "she", "we", "they", "me", "him", "her",
    "us", "them", "my", "your", "his", "our", "their", "not", "no", "do", "does", "did", "have",
    "has", "had", "will", "would", "can", "could", "should", "so", "very", "just", "what",
    "which", "who", "when", "where", "why", "how", "if", "than", "then", "there", "here", "all",
    "some", "any", "up", "out", "more", "most", "too", "only", "also", "like",
};

constexpr double kEnglishFunctionWordRatio = 0.12;

std::uint64_t count_field(const json& j, const char* name)
{
    if (!j.contains(name))
        throw Error(ErrorCode::ParseError, std::string("missing field '") + name + "'");
    const json& v = j.at(name);
    if (v.is_number_unsigned())
        return v.get<std::uint64_t>();
    if (v.is_number_integer()) {
        const auto x = v.get<std::int64_t>();
        if (x < 0)
            throw Error(ErrorCode::ParseError, std::string("negative count in '") + name + "'");
        return static_cast<std::uint64_t>(x);
    }
    throw Error(ErrorCode::ParseError, std::string("field '") + name + "' must be a non-negative integer");
}

std::string string_field(const json& j, const char* name)
{
    if (!j.contains(name) || !j.at(name).is_string())
        throw Error(ErrorCode::ParseError, std::string("field '") + name + "' must be a string");
    return j.at(name).get<std::string>();
}

} // namespace

nlohmann::ordered_json to_json(const RawPost& post)
{
    nlohmann::ordered_json j;
    j["id"] = post.id;
    j["created_at"] = format_timestamp(post.created_at);
    j["text"] = post.text;
    j["author_id"] = post.author_id;
    j["author_created_at"] = format_timestamp(post.author_created_at);
    j["author_post_count"] = post.author_post_count;
    j["like_count"] = post.like_count;
    j["reply_count"] = post.reply_count;
    j["is_retweet"] = post.is_retweet;
    if (post.lang_hint)
        j["lang"] = *post.lang_hint;
    return j;
}

RawPost post_from_json(const json& j)
{
    if (!j.is_object())
        throw Error(ErrorCode::ParseError, "post must be a JSON object");
    RawPost p;
    p.id = string_field(j, "id");
    if (p.id.empty())
        throw Error(ErrorCode::ParseError, "field 'id' must be non-empty");
    p.created_at = parse_timestamp(string_field(j, "created_at"));
    p.text = string_field(j, "text");
    p.author_id = string_field(j, "author_id");
    p.author_created_at = parse_timestamp(string_field(j, "author_created_at"));
    p.author_post_count = count_field(j, "author_post_count");
    p.like_count = count_field(j, "like_count");
    p.reply_count = count_field(j, "reply_count");
    if (!j.contains("is_retweet") || !j.at("is_retweet").is_boolean())
        throw Error(ErrorCode::ParseError, "field 'is_retweet' must be a boolean");
    p.is_retweet = j.at("is_retweet").get<bool>();
    if (j.contains("lang") && !j.at("lang").is_null()) {
        if (!j.at("lang").is_string())
            throw Error(ErrorCode::ParseError, "field 'lang' must be a string");
        p.lang_hint = j.at("lang").get<std::string>();
    }
    return p;
}

CollectionRequest::CollectionRequest(std::string query, std::uint64_t max_items, Date start_date, Date end_date)
    : query_(std::move(query)), max_items_(max_items), start_date_(start_date), end_date_(end_date)
{
    if (query_.empty())
        throw Error(ErrorCode::InvalidRequest, "query must be non-empty");
    if (max_items_ < 1)
        throw Error(ErrorCode::InvalidRequest, "max_items must be at least 1");
    if (start_date_ > end_date_)
        throw Error(ErrorCode::InvalidRequest, "start_date is after end_date");
}

bool CollectionRequest::in_window(Timestamp ts) const
{
    return ts >= Timestamp{start_date_} && ts < Timestamp{end_date_ + std::chrono::days{1}};
}

FilterPolicy FilterPolicy::from_env()
{
    FilterPolicy p;
    if (const char* v = std::getenv("PG_MIN_ENGAGEMENT"); v && *v) {
        char* end = nullptr;
        const long long x = std::strtoll(v, &end, 10);
        if (*end != '\0' || x < 0)
            throw Error(ErrorCode::InvalidRequest, std::string("PG_MIN_ENGAGEMENT must be a non-negative integer: ") + v);
        p.min_engagement = static_cast<std::uint64_t>(x);
    }
    return p;
}

FilterPolicy FilterPolicy::from_json(const json& j)
{
    FilterPolicy p = from_env();
    if (j.is_null())
        return p;
    if (!j.is_object())
        throw Error(ErrorCode::InvalidRequest, "policy must be an object");
    if (j.contains("min_engagement")) {
        const auto& v = j.at("min_engagement");
        if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
            throw Error(ErrorCode::InvalidRequest, "min_engagement must be a non-negative integer");
        p.min_engagement = v.get<std::uint64_t>();
    }
    if (j.contains("english_only"))
        p.english_only = j.at("english_only").get<bool>();
    if (j.contains("exclude_retweets"))
        p.exclude_retweets = j.at("exclude_retweets").get<bool>();
    if (j.contains("bot_posts_per_day_max")) {
        const double rate = j.at("bot_posts_per_day_max").get<double>();
        if (!(rate > 0.0))
            throw Error(ErrorCode::InvalidRequest, "bot_posts_per_day_max must be positive");
        p.bot_posts_per_day_max = rate;
    }
    return p;
}

nlohmann::ordered_json FilterPolicy::to_json() const
{
    nlohmann::ordered_json j;
    j["min_engagement"] = min_engagement;
    j["english_only"] = english_only;
    j["exclude_retweets"] = exclude_retweets;
    j["bot_posts_per_day_max"] = bot_posts_per_day_max;
    return j;
}

std::string format_query(const CollectionRequest& req)
{
    return req.query() + " since:" + format_date(req.start_date()) + " until:" + format_date(req.end_date());
}

bool is_bot_like(Timestamp author_created_at, std::uint64_t author_post_count, Timestamp now,
                 double max_posts_per_day)
{
    const double age_days =
        std::max(1.0, std::chrono::duration<double>(now - author_created_at).count() / 86400.0);
    return static_cast<double>(author_post_count) / age_days > max_posts_per_day;
}

std::string detect_language(std::string_view text, const std::optional<std::string>& lang_hint)
{
    if (text.empty())
        throw Error(ErrorCode::InvalidInput, "cannot detect the language of empty text");
    if (lang_hint && !lang_hint->empty())
        return *lang_hint;

    std::size_t words = 0;
    std::size_t function_words = 0;
    std::string word;
    auto flush = [&] {
        if (word.empty())
            return;
        ++words;
        if (std::find(std::begin(kFunctionWords), std::end(kFunctionWords), word) != std::end(kFunctionWords))
            ++function_words;
        word.clear();
    };
    for (const char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            flush();
        } else if (std::isalpha(c) || c == '\'' || c >= 0x80) {
            word.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    flush();
    if (words == 0)
        return "und";
    const double ratio = static_cast<double>(function_words) / static_cast<double>(words);
    return ratio >= kEnglishFunctionWordRatio ? "en" : "und";
}

bool passes_filters(const RawPost& post, const FilterPolicy& policy, Timestamp now)
{
    if (policy.exclude_retweets && post.is_retweet)
        return false;
    if (policy.english_only) {
        if (post.text.empty() || detect_language(post.text, post.lang_hint) != "en")
            return false;
    }
    if (is_bot_like(post.author_created_at, post.author_post_count, now, policy.bot_posts_per_day_max))
        return false;
    return post.like_count + post.reply_count >= policy.min_engagement;
}

struct FileSource::Impl {
    std::ifstream in;
};

FileSource::FileSource(std::string path) : path_(std::move(path)) {}

FileSource::~FileSource() = default;

void FileSource::open(const std::string& /*formatted_query*/, const CollectionRequest& /*req*/)
{
    impl_ = std::make_unique<Impl>();
    impl_->in.open(path_);
    if (!impl_->in)
        throw Error(ErrorCode::SourceUnavailable, "cannot open replay file " + path_);
    malformed_ = 0;
}

std::optional<RawPost> FileSource::next()
{
    if (!impl_)
        throw Error(ErrorCode::SourceUnavailable, "file source used before open()");
    std::string line;
    while (std::getline(impl_->in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        try {
            return post_from_json(json::parse(line));
        } catch (const json::exception&) {
            ++malformed_;
        } catch (const Error&) {
            ++malformed_;
        }
    }
    if (impl_->in.bad())
        throw Error(ErrorCode::SourceUnavailable, "read error on " + path_);
    return std::nullopt;
}

std::unique_ptr<PostSource> make_source(std::string_view spec)
{
    if (spec.starts_with("file:"))
        return std::make_unique<FileSource>(std::string(spec.substr(5)));
    if (spec.starts_with("live:")) {
        LiveSourceConfig cfg;
        cfg.base_url = std::string(spec.substr(5));
        return std::make_unique<LiveSource>(std::move(cfg));
    }
    throw Error(ErrorCode::InvalidRequest, "source must be file:<path> or live:<url>, got '" + std::string(spec) + "'");
}

CollectionResult collect(PostSource& source, const CollectionRequest& req, const FilterPolicy& policy,
                         const PostCallback& on_post)
{
    CollectionResult result;
    std::unordered_set<std::string> seen;
    try {
        source.open(format_query(req), req);
        while (result.posts.size() < req.max_items()) {
            std::optional<RawPost> post = source.next();
            if (!post)
                break;
            ++result.scanned;
            if (!seen.insert(post->id).second) {
                ++result.duplicates;
                continue;
            }
            if (!req.in_window(post->created_at)) {
                ++result.out_of_window;
                continue;
            }
            if (!passes_filters(*post, policy, post->created_at)) {
                ++result.filtered;
                continue;
            }
            result.posts.push_back(std::move(*post));
            if (on_post)
                on_post(result.posts.back());
        }
    } catch (const Error& e) {
        if (e.code() != ErrorCode::SourceUnavailable)
            throw;
        result.truncated = true;
        result.error = e.what();
    }
    result.malformed = source.malformed();
    return result;
}

} // namespace pulsegauge::ingest
