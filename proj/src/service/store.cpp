#include "pulsegauge/error.hpp"
#include "pulsegauge/service.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fcntl.h>
#include <unistd.h>

namespace pulsegauge::service {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string key_of(const std::string& entity, const std::string& post_id)
{
    return entity + '\n' + post_id;
}

std::string read_file(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_all(int fd, const std::string& data, const fs::path& path)
{
    std::size_t off = 0;
    while (off < data.size()) {
        const ssize_t n = ::write(fd, data.data() + off, data.size() - off);
        if (n < 0) {
            if (errno == EINTR)
                continue;
            throw Error(ErrorCode::SourceUnavailable, "write " + path.string() + ": " + std::strerror(errno));
        }
        off += static_cast<std::size_t>(n);
    }
}

} // namespace

bool valid_entity_name(std::string_view e)
{
    if (e.empty() || e.size() > 64)
        return false;
    for (std::size_t i = 0; i < e.size(); ++i) {
        const auto c = static_cast<unsigned char>(e[i]);
        const bool alnum = std::isalnum(c) != 0;
        if (i == 0 ? !alnum : !(alnum || c == '_' || c == '.' || c == '-'))
            return false;
    }
    return true;
}

nlohmann::ordered_json to_json(const StoredRecord& r)
{
    const auto score = ensemble::to_json(r.score, true);
    nlohmann::ordered_json j;
    j["seq"] = r.seq;
    j["entity"] = r.score.entity;
    j["post_id"] = r.post.id;
    j["created_at"] = format_timestamp(r.post.created_at);
    j["text"] = r.post.text;
    j["author_id"] = r.post.author_id;
    j["author_created_at"] = format_timestamp(r.post.author_created_at);
    j["author_post_count"] = r.post.author_post_count;
    j["like_count"] = r.post.like_count;
    j["reply_count"] = r.post.reply_count;
    j["is_retweet"] = r.post.is_retweet;
    if (r.post.lang_hint)
        j["lang"] = *r.post.lang_hint;
    for (const auto& [k, v] : score.items()) {
        if (!j.contains(k))
            j[k] = v;
    }
    return j;
}

StoredRecord stored_from_json(const json& j)
{
    StoredRecord r;
    try {
        r.seq = j.at("seq").get<std::uint64_t>();
        r.score = ensemble::record_from_json(j);
        json raw = {
            {"id", j.at("post_id")},
            {"created_at", j.at("created_at")},
            {"text", j.at("text")},
            {"author_id", j.at("author_id")},
            {"author_created_at", j.at("author_created_at")},
            {"author_post_count", j.at("author_post_count")},
            {"like_count", j.at("like_count")},
            {"reply_count", j.at("reply_count")},
            {"is_retweet", j.at("is_retweet")},
        };
        if (j.contains("lang"))
            raw["lang"] = j.at("lang");
        r.post = ingest::post_from_json(raw);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("stored record: ") + e.what());
    }
    return r;
}

RecordStore::RecordStore(fs::path dir) : dir_(std::move(dir))
{
    std::error_code ec;
    fs::create_directories(dir_ / "segments", ec);
    if (ec)
        throw Error(ErrorCode::InvalidRequest, "cannot create data dir " + dir_.string() + ": " + ec.message());
    rebuild();
}

fs::path RecordStore::segment_path(const std::string& entity) const
{
    return dir_ / "segments" / (entity + ".jsonl");
}

void RecordStore::rebuild()
{
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir_ / "segments")) {
        if (e.is_regular_file() && e.path().extension() == ".jsonl")
            files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());

    for (const auto& path : files) {
        const std::string entity = path.stem().string();
        const std::string data = read_file(path);
        std::size_t pos = 0;
        std::size_t good_end = 0;
        while (pos < data.size()) {
            const std::size_t nl = data.find('\n', pos);
            const bool complete = nl != std::string::npos;
            const std::string line = data.substr(pos, (complete ? nl : data.size()) - pos);
            const std::size_t next = complete ? nl + 1 : data.size();
            bool ok = false;
            if (!line.empty()) {
                try {
                    StoredRecord r = stored_from_json(json::parse(line));
                    if (r.score.entity == entity && complete && !keys_.count(key_of(entity, r.post.id))) {
                        keys_.insert(key_of(entity, r.post.id));
                        last_seq_ = std::max(last_seq_, r.seq);
                        log_.push_back(std::move(r));
                        ok = true;
                    }
                } catch (const std::exception&) {
                }
            }
            if (ok || line.empty()) {
                good_end = next;
            } else if (!complete) {
                // torn tail from an interrupted append: cut it off so the
                // next append starts on a fresh line
                break;
            } else {
                ++skipped_;
                good_end = next;
            }
            pos = next;
        }
        if (good_end < data.size())
            fs::resize_file(path, good_end);
    }

    std::sort(log_.begin(), log_.end(), [](const StoredRecord& a, const StoredRecord& b) { return a.seq < b.seq; });
    for (std::size_t i = 0; i < log_.size(); ++i)
        by_entity_[log_[i].score.entity].push_back(i);
}

void RecordStore::set_listener(Listener listener)
{
    std::lock_guard w(write_mu_);
    listener_ = std::move(listener);
}

std::optional<StoredRecord> RecordStore::append(const ingest::RawPost& post, const ensemble::SentimentRecord& score)
{
    if (!valid_entity_name(score.entity))
        throw Error(ErrorCode::InvalidRequest, "invalid entity name '" + score.entity + "'");
    std::lock_guard w(write_mu_);
    const std::string key = key_of(score.entity, post.id);
    {
        std::shared_lock r(mu_);
        if (keys_.count(key))
            return std::nullopt;
    }
    StoredRecord rec{last_seq_ + 1, post, score};
    rec.score.post_id = post.id;
    const std::string line = to_json(rec).dump() + "\n";
    const fs::path path = segment_path(score.entity);
    const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd < 0)
        throw Error(ErrorCode::SourceUnavailable, "open " + path.string() + ": " + std::strerror(errno));
    try {
        write_all(fd, line, path);
    } catch (...) {
        ::close(fd);
        throw;
    }
    ::close(fd);

    {
        std::unique_lock x(mu_);
        keys_.insert(key);
        last_seq_ = rec.seq;
        log_.push_back(rec);
        by_entity_[score.entity].push_back(log_.size() - 1);
    }
    if (listener_)
        listener_(rec);
    return rec;
}

bool RecordStore::contains(const std::string& entity, const std::string& post_id) const
{
    std::shared_lock r(mu_);
    return keys_.count(key_of(entity, post_id)) > 0;
}

bool RecordStore::has_entity(const std::string& entity) const
{
    std::shared_lock r(mu_);
    return by_entity_.count(entity) > 0;
}

std::vector<ensemble::SentimentRecord> RecordStore::records(const std::string& entity) const
{
    std::shared_lock r(mu_);
    const auto it = by_entity_.find(entity);
    if (it == by_entity_.end())
        throw Error(ErrorCode::UnknownEntity, "unknown entity '" + entity + "'");
    std::vector<ensemble::SentimentRecord> out;
    out.reserve(it->second.size());
    for (const std::size_t i : it->second)
        out.push_back(log_[i].score);
    return out;
}

std::vector<std::pair<std::string, std::size_t>> RecordStore::entities() const
{
    std::shared_lock r(mu_);
    std::vector<std::pair<std::string, std::size_t>> out;
    for (const auto& [name, idx] : by_entity_)
        out.emplace_back(name, idx.size());
    return out;
}

std::vector<StoredRecord> RecordStore::since(std::uint64_t cursor, std::size_t limit) const
{
    std::shared_lock r(mu_);
    auto it = std::upper_bound(log_.begin(), log_.end(), cursor,
                               [](std::uint64_t c, const StoredRecord& rec) { return c < rec.seq; });
    std::vector<StoredRecord> out;
    for (; it != log_.end() && out.size() < limit; ++it)
        out.push_back(*it);
    return out;
}

std::uint64_t RecordStore::last_seq() const
{
    std::shared_lock r(mu_);
    return last_seq_;
}

std::size_t RecordStore::size() const
{
    std::shared_lock r(mu_);
    return log_.size();
}

std::string RecordStore::digest() const
{
    std::lock_guard w(write_mu_);
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir_ / "segments"))
        files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const std::string& s) {
        for (const unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ULL;
        }
    };
    for (const auto& f : files) {
        mix(f.filename().string());
        mix(read_file(f));
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace pulsegauge::service
