#include "pulsegauge/error.hpp"
#include "pulsegauge/service.hpp"

#include <cerrno>
#include <cstdlib>
#include <thread>

#include <httplib.h>

namespace pulsegauge::service {

using nlohmann::json;

namespace {

constexpr std::size_t kServerThreads = 32;

void send_json(httplib::Response& res, int status, const nlohmann::ordered_json& body)
{
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message)
{
    nlohmann::ordered_json body;
    body["error"] = std::string(code_name(code));
    body["message"] = message;
    send_json(res, http_status(code), body);
}

// Runs a handler, turning thrown errors into the JSON error shape.
template <typename F>
httplib::Server::Handler guarded(F f)
{
    return [f = std::move(f)](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const Error& e) {
            send_error(res, e.code(), e.what());
        } catch (const std::exception& e) {
            send_error(res, ErrorCode::InvalidRequest, e.what());
        }
    };
}

std::optional<std::string> param(const httplib::Request& req, const char* name)
{
    if (!req.has_param(name))
        return std::nullopt;
    return req.get_param_value(name);
}

double parse_double(const std::string& s, const char* name)
{
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE)
        throw Error(ErrorCode::InvalidRequest, std::string(name) + " must be a number, got '" + s + "'");
    return v;
}

std::uint64_t parse_uint(const std::string& s, const char* name)
{
    if (s.empty() || s.size() > 19 || s.find_first_not_of("0123456789") != std::string::npos)
        throw Error(ErrorCode::InvalidRequest,
                    std::string(name) + " must be a non-negative integer, got '" + s + "'");
    return std::stoull(s);
}

// A bare date as the upper bound covers that whole day.
Timestamp parse_bound(const std::string& s, bool upper)
{
    try {
        const Timestamp ts = parse_timestamp(s);
        if (upper && s.size() == 10)
            return ts + std::chrono::seconds(86399);
        return ts;
    } catch (const Error& e) {
        throw Error(ErrorCode::InvalidRequest, std::string("window bound: ") + e.what());
    }
}

std::string entity_of(const httplib::Request& req)
{
    const std::string e = req.matches[1];
    if (!valid_entity_name(e))
        throw Error(ErrorCode::UnknownEntity, "unknown entity '" + e + "'");
    return e;
}

void install_routes(httplib::Server& srv, Service& svc)
{
    srv.Get("/healthz", guarded([&svc](const httplib::Request&, httplib::Response& res) {
                nlohmann::ordered_json j;
                j["status"] = "ok";
                j["records"] = svc.store().size();
                j["last_seq"] = svc.store().last_seq();
                j["generation"] = svc.scorer().config().generation();
                j["backend"] = svc.scorer().backend().describe();
                j["subscribers"] = svc.hub().subscribers();
                j["active_jobs"] = svc.jobs().active();
                send_json(res, 200, j);
            }));

    srv.Post("/jobs", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
                 json body;
                 try {
                     body = json::parse(req.body);
                 } catch (const json::exception& e) {
                     throw Error(ErrorCode::InvalidRequest, std::string("request body: ") + e.what());
                 }
                 const std::string id = svc.jobs().submit(JobSpec::from_json(body));
                 res.set_header("Location", "/jobs/" + id);
                 send_json(res, 202, {{"id", id}, {"status", "pending"}});
             }));

    srv.Get("/jobs", guarded([&svc](const httplib::Request&, httplib::Response& res) {
                auto arr = nlohmann::ordered_json::array();
                for (const auto& st : svc.jobs().list())
                    arr.push_back(st.to_json());
                send_json(res, 200, {{"jobs", arr}});
            }));

    srv.Get(R"(/jobs/([^/]+))", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
                send_json(res, 200, svc.jobs().get(req.matches[1]).to_json());
            }));

    srv.Get("/entities", guarded([&svc](const httplib::Request&, httplib::Response& res) {
                auto arr = nlohmann::ordered_json::array();
                for (const auto& [name, n] : svc.store().entities()) {
                    const auto s = svc.summary(name);
                    arr.push_back({{"entity", name},
                                   {"n", s.n},
                                   {"csi", s.csi},
                                   {"tier", std::string(analytics::tier_name(s.tier))}});
                }
                send_json(res, 200, {{"entities", arr}});
            }));

    srv.Get(R"(/entities/([^/]+)/summary)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
                analytics::Window w;
                if (const auto from = param(req, "from"))
                    w.from = parse_bound(*from, false);
                if (const auto to = param(req, "to"))
                    w.to = parse_bound(*to, true);
                if (w.from && w.to && *w.from > *w.to)
                    throw Error(ErrorCode::InvalidRequest, "from must not be after to");
                send_json(res, 200, svc.summary(entity_of(req), w).to_json());
            }));

    srv.Get(R"(/entities/([^/]+)/series)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
                const std::string entity = entity_of(req);
                std::chrono::seconds width{86400};
                if (const auto b = param(req, "bucket")) {
                    try {
                        width = parse_duration(*b);
                    } catch (const Error& e) {
                        throw Error(ErrorCode::InvalidRequest, std::string("bucket: ") + e.what());
                    }
                }
                const auto s = svc.series(entity, width);
                if (param(req, "format").value_or("json") == "csv") {
                    res.status = 200;
                    res.set_content(s.to_csv(), "text/csv");
                    return;
                }
                auto j = s.to_json();
                j["entity"] = entity;
                try {
                    j["volatility"] = analytics::volatility(s);
                } catch (const Error&) {
                    j["volatility"] = nullptr;
                }
                send_json(res, 200, j);
            }));

    srv.Get(R"(/entities/([^/]+)/drivers)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
                std::uint64_t k = 10;
                if (const auto v = param(req, "k"))
                    k = parse_uint(*v, "k");
                send_json(res, 200, svc.drivers(entity_of(req), k).to_json());
            }));

    srv.Get(R"(/entities/([^/]+)/whatif)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
                const auto a = param(req, "alpha");
                if (!a)
                    throw Error(ErrorCode::InvalidRequest, "alpha is required");
                send_json(res, 200, svc.whatif(entity_of(req), parse_double(*a, "alpha")).to_json());
            }));

    srv.Get("/stream", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
                std::optional<std::uint64_t> cursor;
                if (const auto c = param(req, "cursor"))
                    cursor = parse_uint(*c, "cursor");
                else if (req.has_header("Last-Event-ID"))
                    cursor = parse_uint(req.get_header_value("Last-Event-ID"), "Last-Event-ID");
                if (cursor && *cursor > svc.store().last_seq())
                    throw Error(ErrorCode::InvalidRequest, "cursor " + std::to_string(*cursor) +
                                                               " is ahead of the store (last seq " +
                                                               std::to_string(svc.store().last_seq()) + ")");
                auto session = std::make_shared<StreamSession>(svc.store(), svc.hub(), cursor,
                                                               svc.config().heartbeat);
                res.status = 200;
                res.set_header("Cache-Control", "no-cache");
                res.set_header("X-Accel-Buffering", "no");
                res.set_chunked_content_provider(
                    "text/event-stream", [session](std::size_t, httplib::DataSink& sink) {
                        if (!sink.is_writable())
                            return false;
                        const auto chunk = session->next_chunk();
                        if (!chunk) {
                            sink.done();
                            return true;
                        }
                        return sink.write(chunk->data(), chunk->size());
                    });
            }));
}

} // namespace

struct HttpServer::Impl {
    Service& svc;
    httplib::Server srv;
    std::thread thread;
    bool bound = false;

    explicit Impl(Service& s) : svc(s) {}
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service))
{
    auto& srv = impl_->srv;
    srv.new_task_queue = [] { return new httplib::ThreadPool(kServerThreads); };
    srv.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    srv.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type, Last-Event-ID");
        res.status = 204;
    });
    srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.body.empty() && res.status == 404)
            send_json(res, 404, {{"error", "NotFound"}, {"message", "no such route"}});
    });
    install_routes(srv, service);
}

HttpServer::~HttpServer()
{
    stop();
}

int HttpServer::bind(const std::string& host, int port)
{
    auto& srv = impl_->srv;
    int bound_port = port;
    if (port == 0) {
        bound_port = srv.bind_to_any_port(host);
        if (bound_port < 0)
            throw Error(ErrorCode::InvalidRequest, "cannot bind " + host);
    } else if (!srv.bind_to_port(host, port)) {
        throw Error(ErrorCode::InvalidRequest, "cannot bind " + host + ":" + std::to_string(port));
    }
    impl_->bound = true;
    return bound_port;
}

void HttpServer::run()
{
    if (!impl_->bound)
        throw Error(ErrorCode::InvalidRequest, "server is not bound");
    impl_->srv.listen_after_bind();
}

void HttpServer::start()
{
    if (!impl_->bound)
        throw Error(ErrorCode::InvalidRequest, "server is not bound");
    impl_->thread = std::thread([this] { impl_->srv.listen_after_bind(); });
    impl_->srv.wait_until_ready();
}

void HttpServer::stop()
{
    // open streams block in the hub until it closes
    impl_->svc.hub().close();
    impl_->srv.stop();
    if (impl_->thread.joinable())
        impl_->thread.join();
}

void HttpServer::wait_until_ready()
{
    impl_->srv.wait_until_ready();
}

} // namespace pulsegauge::service
