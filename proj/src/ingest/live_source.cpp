#include "pulsegauge/error.hpp"
#include "pulsegauge/ingest.hpp"

#include <httplib.h>

#include <cmath>
#include <thread>

namespace pulsegauge::ingest {

namespace {

std::string url_encode(std::string_view s)
{
    static constexpr char hex[] = "0123456789ABCDEF";
    std::string out;
    for (const char ch : s) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out.push_back(ch);
        } else {
            out.push_back('%');
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 0xF]);
        }
    }
    return out;
}

void replace_all(std::string& s, std::string_view from, const std::string& to)
{
    for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
        s.replace(pos, from.size(), to);
}

} // namespace

std::vector<RawPost> default_response_adapter(const nlohmann::json& page, std::string& next_cursor)
{
    next_cursor.clear();
    const nlohmann::json* items = &page;
    if (page.is_object()) {
        if (!page.contains("posts"))
            throw Error(ErrorCode::ParseError, "provider page has no 'posts' array");
        items = &page.at("posts");
        if (page.contains("next") && page.at("next").is_string())
            next_cursor = page.at("next").get<std::string>();
    }
    if (!items->is_array())
        throw Error(ErrorCode::ParseError, "provider posts must be an array");
    std::vector<RawPost> posts;
    posts.reserve(items->size());
    for (const auto& item : *items)
        posts.push_back(post_from_json(item));
    return posts;
}

LiveSource::LiveSource(LiveSourceConfig config, ResponseAdapter adapter)
    : config_(std::move(config)), adapter_(std::move(adapter))
{
    if (!config_.sleep)
        config_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    if (config_.max_attempts < 1)
        config_.max_attempts = 1;
}

void LiveSource::open(const std::string& formatted_query, const CollectionRequest& req)
{
    query_ = formatted_query;
    max_items_ = req.max_items();
    cursor_.clear();
    page_.clear();
    page_pos_ = 0;
    exhausted_ = false;
    opened_ = true;
    attempts_ = 0;
    malformed_ = 0;
}

void LiveSource::fetch_page()
{
    std::string path = config_.path_template;
    replace_all(path, "{query}", url_encode(query_));
    replace_all(path, "{max}", std::to_string(max_items_));
    replace_all(path, "{cursor}", url_encode(cursor_));

    httplib::Client client(config_.base_url);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());

    std::string last_error;
    for (int attempt = 0; attempt < config_.max_attempts; ++attempt) {
        if (attempt > 0) {
            const double factor = std::pow(config_.backoff_factor, attempt - 1);
            config_.sleep(std::chrono::milliseconds(
                static_cast<long long>(static_cast<double>(config_.backoff_base.count()) * factor)));
        }
        ++attempts_;
        auto res = client.Get(path);
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw Error(ErrorCode::SourceUnavailable, "live source returned HTTP " + std::to_string(res->status));

        nlohmann::json body;
        try {
            body = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::SourceUnavailable, std::string("live source sent invalid JSON: ") + e.what());
        }
        std::string next;
        try {
            page_ = adapter_(body, next);
        } catch (const Error&) {
            ++malformed_;
            page_.clear();
            next.clear();
        }
        page_pos_ = 0;
        if (next.empty() || next == cursor_)
            exhausted_ = true;
        cursor_ = next;
        return;
    }
    throw Error(ErrorCode::SourceUnavailable,
                "live source failed after " + std::to_string(config_.max_attempts) + " attempts: " + last_error);
}

std::optional<RawPost> LiveSource::next()
{
    if (!opened_)
        throw Error(ErrorCode::SourceUnavailable, "live source used before open()");
    while (page_pos_ >= page_.size()) {
        if (exhausted_)
            return std::nullopt;
        fetch_page();
        if (page_.empty() && exhausted_)
            return std::nullopt;
    }
    return page_[page_pos_++];
}

} // namespace pulsegauge::ingest
