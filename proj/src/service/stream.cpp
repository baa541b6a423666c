#include "pulsegauge/service.hpp"

#include <algorithm>

namespace pulsegauge::service {

namespace {

constexpr std::size_t kReplayBatch = 256;

} // namespace

std::string format_sse(const StreamEvent& e)
{
    return "id: " + std::to_string(e.seq) + "\ndata: " + e.data + "\n\n";
}

std::string format_sse_named(std::string_view event, std::string_view data)
{
    std::string out = "event: ";
    out += event;
    out += "\ndata: ";
    out += data;
    out += "\n\n";
    return out;
}

EventHub::EventHub(std::size_t buffer) : buffer_(std::max<std::size_t>(buffer, 1)) {}

EventHub::Subscriber::Wait EventHub::Subscriber::pop(StreamEvent& out, std::chrono::milliseconds timeout)
{
    std::unique_lock lock(mu);
    cv.wait_for(lock, timeout, [this] { return !queue.empty() || dropped || closed; });
    if (!queue.empty()) {
        out = std::move(queue.front());
        queue.pop_front();
        return Wait::Event;
    }
    if (dropped)
        return Wait::Dropped;
    if (closed)
        return Wait::Closed;
    return Wait::Timeout;
}

std::shared_ptr<EventHub::Subscriber> EventHub::subscribe()
{
    auto s = std::make_shared<Subscriber>();
    std::lock_guard lock(mu_);
    if (closed_)
        s->closed = true;
    else
        subs_.push_back(s);
    return s;
}

void EventHub::unsubscribe(const std::shared_ptr<Subscriber>& s)
{
    std::lock_guard lock(mu_);
    subs_.erase(std::remove(subs_.begin(), subs_.end(), s), subs_.end());
}

void EventHub::publish(const StoredRecord& r)
{
    StreamEvent e{r.seq, to_json(r).dump()};
    std::lock_guard lock(mu_);
    for (auto it = subs_.begin(); it != subs_.end();) {
        Subscriber& s = **it;
        bool drop = false;
        {
            std::lock_guard sl(s.mu);
            if (s.queue.size() >= buffer_) {
                // slow consumer: discard its backlog and let it resume by cursor
                s.queue.clear();
                s.dropped = true;
                drop = true;
            } else {
                s.queue.push_back(e);
            }
        }
        s.cv.notify_one();
        if (drop) {
            ++dropped_total_;
            it = subs_.erase(it);
        } else {
            ++it;
        }
    }
}

void EventHub::close()
{
    std::lock_guard lock(mu_);
    closed_ = true;
    for (auto& s : subs_) {
        {
            std::lock_guard sl(s->mu);
            s->closed = true;
        }
        s->cv.notify_all();
    }
    subs_.clear();
}

std::size_t EventHub::subscribers() const
{
    std::lock_guard lock(mu_);
    return subs_.size();
}

std::size_t EventHub::dropped_total() const
{
    std::lock_guard lock(mu_);
    return dropped_total_;
}

StreamSession::StreamSession(const RecordStore& store, EventHub& hub, std::optional<std::uint64_t> cursor,
                             std::chrono::milliseconds heartbeat)
    : store_(store), hub_(hub), heartbeat_(heartbeat)
{
    // live tail starts after whatever is stored now
    if (!cursor)
        last_sent_ = store_.last_seq();
    // subscribe before reading the store so nothing falls between replay and live
    sub_ = hub_.subscribe();
    if (cursor) {
        replaying_ = true;
        backlog_cursor_ = *cursor;
        last_sent_ = *cursor;
    }
}

StreamSession::~StreamSession()
{
    hub_.unsubscribe(sub_);
}

std::optional<std::string> StreamSession::next_chunk()
{
    if (ended_)
        return std::nullopt;

    if (replaying_) {
        const auto batch = store_.since(backlog_cursor_, kReplayBatch);
        if (batch.size() < kReplayBatch)
            replaying_ = false;
        if (!batch.empty()) {
            std::string out;
            for (const auto& r : batch) {
                out += format_sse({r.seq, to_json(r).dump()});
                last_sent_ = r.seq;
            }
            backlog_cursor_ = last_sent_;
            return out;
        }
    }

    std::string out;
    StreamEvent e;
    auto wait = sub_->pop(e, heartbeat_);
    while (wait == EventHub::Subscriber::Wait::Event) {
        // live events already covered by the replay are skipped
        if (e.seq > last_sent_) {
            out += format_sse(e);
            last_sent_ = e.seq;
        }
        wait = sub_->pop(e, std::chrono::milliseconds(0));
    }
    if (wait == EventHub::Subscriber::Wait::Dropped) {
        ended_ = true;
        out += format_sse_named("dropped", "{\"reason\":\"slow consumer\",\"resume_cursor\":" +
                                               std::to_string(last_sent_) + "}");
        return out;
    }
    if (wait == EventHub::Subscriber::Wait::Closed) {
        ended_ = true;
        if (out.empty())
            return std::nullopt;
        return out;
    }
    if (out.empty())
        out = format_sse_named("heartbeat", "{\"cursor\":" + std::to_string(last_sent_) + "}");
    return out;
}

} // namespace pulsegauge::service
