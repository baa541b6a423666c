#include "pulsegauge/cli.hpp"

#include "pulsegauge/analytics.hpp"
#include "pulsegauge/error.hpp"
#include "pulsegauge/evaluation.hpp"
#include "pulsegauge/pipeline.hpp"
#include "pulsegauge/resources.hpp"
#include "pulsegauge/service.hpp"

#include <algorithm>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <pthread.h>

namespace pulsegauge::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr std::size_t kChunk = 1024;

// A usage problem found after parsing (e.g. no input given).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Io {
    std::istream& in;
    std::ostream& out;
    std::ostream& err;
};

// Reads JSONL from a file or, for "-", from the supplied stream. Blank lines
// are skipped; the callback gets the 1-based line number.
void for_each_json_line(const std::string& path, std::istream& stdin_stream,
                        const std::function<void(std::size_t, const json&)>& fn)
{
    std::ifstream file;
    std::istream* in = &stdin_stream;
    if (path != "-") {
        file.open(path);
        if (!file)
            throw Error(ErrorCode::InvalidInput, "cannot open " + path);
        in = &file;
    }
    const std::string name = path == "-" ? "<stdin>" : path;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(*in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw Error(ErrorCode::ParseError, name + ":" + std::to_string(lineno) + ": " + e.what());
        }
        try {
            fn(lineno, j);
        } catch (const Error& e) {
            throw Error(e.code(), name + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

struct ModelOptions {
    std::string backend;
    std::optional<double> alpha;
    std::size_t jobs = 1;

    void add_to(CLI::App* app, bool with_jobs = true)
    {
        app->add_option("--backend", backend,
                        "reference[:<model.json>], remote:<url> or fixture:<file.jsonl> (default PG_BACKEND, "
                        "else the bundled reference model)");
        app->add_option("--alpha", alpha, "ensemble weight on the lexicon score (default PG_ALPHA, else 0.4)")
            ->check(CLI::Range(0.0, 1.0));
        if (with_jobs)
            app->add_option("--jobs", jobs, "worker threads for preprocessing and lexicon scoring")
                ->check(CLI::PositiveNumber);
    }

    ensemble::EnsembleConfig config() const
    {
        auto cfg = ensemble::EnsembleConfig::from_env();
        if (alpha)
            cfg.alpha = *alpha;
        cfg.validate();
        return cfg;
    }

    std::shared_ptr<const pipeline::Scorer> scorer() const
    {
        const auto desc = backend.empty() ? contextual::BackendDescriptor::from_env()
                                          : contextual::BackendDescriptor::parse(backend);
        std::shared_ptr<const contextual::Backend> be = contextual::make_backend(desc);
        return std::make_shared<const pipeline::Scorer>(pipeline::Resources::load_default(), std::move(be), config());
    }
};

struct CollectOptions {
    std::string source;
    std::string query;
    std::string start;
    std::string end;
    std::uint64_t max_items = 500;
    std::optional<std::uint64_t> min_engagement;
    std::optional<double> bot_rate;
    bool allow_retweets = false;
    bool any_language = false;

    void add_policy_to(CLI::App* app)
    {
        app->add_option("--max-items", max_items, "stop after this many accepted posts")->check(CLI::PositiveNumber);
        app->add_option("--min-engagement", min_engagement, "minimum likes + replies (default PG_MIN_ENGAGEMENT, else 5)");
        app->add_option("--bot-max-rate", bot_rate, "posts per day above which an author counts as a bot (default 50)")
            ->check(CLI::PositiveNumber);
        app->add_flag("--allow-retweets", allow_retweets, "keep retweets");
        app->add_flag("--any-language", any_language, "keep non-English posts");
    }

    ingest::FilterPolicy policy() const
    {
        auto p = ingest::FilterPolicy::from_env();
        if (min_engagement)
            p.min_engagement = *min_engagement;
        if (bot_rate)
            p.bot_posts_per_day_max = *bot_rate;
        if (allow_retweets)
            p.exclude_retweets = false;
        if (any_language)
            p.english_only = false;
        return p;
    }
};

ordered_json vader_json(const vader::VaderScores& v)
{
    return {{"pos", v.pos}, {"neg", v.neg}, {"neu", v.neu}, {"compound", v.compound}};
}

ordered_json distribution_json(const contextual::ClassDistribution& d)
{
    return {{"p_pos", d.p_pos}, {"p_neg", d.p_neg}, {"p_neu", d.p_neu}};
}

ordered_json text_result(const std::string& text, const pipeline::ScoreBreakdown& b, bool timing)
{
    ordered_json j;
    j["text"] = text;
    const auto body = b.to_json(timing);
    for (const auto& [k, v] : body.items())
        j[k] = v;
    return j;
}

ordered_json post_result(const ensemble::SentimentRecord& r, const pipeline::ScoreBreakdown& b, bool timing)
{
    ordered_json j = ensemble::to_json(r, timing);
    j["vader"] = vader_json(b.vader);
    j["distribution"] = distribution_json(b.distribution);
    return j;
}

// Everything `analyze` reports for one entity.
ordered_json analysis(const std::string& entity, const std::vector<ensemble::SentimentRecord>& records,
                      const analytics::Window& window, std::chrono::seconds bucket, std::size_t k,
                      const textprep::Stopwords& stopwords)
{
    std::vector<ensemble::SentimentRecord> in_window;
    for (const auto& r : records) {
        if (window.contains(r.created_at))
            in_window.push_back(r);
    }
    ordered_json j;
    j["entity"] = entity;
    j["summary"] = analytics::summarize(entity, records, window).to_json();
    const auto s = analytics::series(in_window, bucket);
    j["series"] = s.to_json();
    try {
        j["volatility"] = analytics::volatility(s);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::InsufficientData)
            throw;
        j["volatility"] = nullptr;
    }
    try {
        j["drivers"] = analytics::drivers(entity, in_window, k, stopwords).to_json();
    } catch (const Error& e) {
        if (e.code() != ErrorCode::InsufficientData)
            throw;
        j["drivers"] = nullptr;
    }
    return j;
}

std::string analysis_table(const std::vector<ordered_json>& rows)
{
    std::vector<const ordered_json*> sorted;
    for (const auto& r : rows)
        sorted.push_back(&r);
    std::stable_sort(sorted.begin(), sorted.end(), [](const ordered_json* a, const ordered_json* b) {
        return a->at("summary").at("csi").get<double>() > b->at("summary").at("csi").get<double>();
    });
    std::ostringstream os;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-20s %8s %8s %-10s %10s\n", "entity", "n", "csi", "tier", "volatility");
    os << buf;
    for (const auto* r : sorted) {
        const auto& s = r->at("summary");
        const std::string vol = r->at("volatility").is_null()
                                    ? std::string("-")
                                    : std::to_string(r->at("volatility").get<double>()).substr(0, 8);
        std::snprintf(buf, sizeof buf, "%-20s %8llu %8.2f %-10s %10s\n", r->at("entity").get<std::string>().c_str(),
                      static_cast<unsigned long long>(s.at("n").get<std::uint64_t>()), s.at("csi").get<double>(),
                      s.at("tier").get<std::string>().c_str(), vol.c_str());
        os << buf;
    }
    return os.str();
}

struct AnalyzeOptions {
    std::string bucket = "1d";
    std::size_t k = 10;
    std::string from;
    std::string to;
    bool pretty = false;

    void add_to(CLI::App* app)
    {
        app->add_option("--bucket", bucket, "series bucket width: seconds or 90s/15m/1h/1d/1w");
        app->add_option("--k", k, "driver terms per class")->check(CLI::PositiveNumber);
        app->add_option("--from", from, "window start (date or timestamp, inclusive)");
        app->add_option("--to", to, "window end (a bare date covers the whole day)");
        app->add_flag("--pretty", pretty, "print a tier table instead of JSON lines");
    }

    analytics::Window window() const
    {
        analytics::Window w;
        if (!from.empty())
            w.from = parse_timestamp(from);
        if (!to.empty())
            w.to = parse_timestamp(to) + (to.size() == 10 ? std::chrono::seconds(86399) : std::chrono::seconds(0));
        if (w.from && w.to && *w.from > *w.to)
            throw UsageError("--from is after --to");
        return w;
    }

    std::chrono::seconds width() const
    {
        try {
            return parse_duration(bucket);
        } catch (const Error& e) {
            throw UsageError(std::string("--bucket: ") + e.what());
        }
    }
};

// Entity name -> records in input order; std::map keeps output sorted.
using Grouped = std::map<std::string, std::vector<ensemble::SentimentRecord>>;

void emit_analysis(const Grouped& groups, const AnalyzeOptions& opt, const textprep::Stopwords& stopwords,
                   std::ostream& out)
{
    if (groups.empty())
        throw Error(ErrorCode::EmptyInput, "no scored records to analyze");
    const auto w = opt.window();
    const auto width = opt.width();
    std::vector<ordered_json> rows;
    for (const auto& [entity, records] : groups)
        rows.push_back(analysis(entity, records, w, width, opt.k, stopwords));
    if (opt.pretty) {
        out << analysis_table(rows);
        return;
    }
    for (const auto& r : rows)
        out << r.dump() << '\n';
}

Date parse_date_option(const std::string& s, const char* name)
{
    try {
        return parse_date(s);
    } catch (const Error& e) {
        throw UsageError(std::string(name) + ": " + e.what());
    }
}

// ---- commands ----

int cmd_collect(const CollectOptions& opt, Io io)
{
    const ingest::CollectionRequest req(opt.query, opt.max_items, parse_date_option(opt.start, "--start"),
                                        parse_date_option(opt.end, "--end"));
    auto source = ingest::make_source(opt.source);
    const auto result = ingest::collect(*source, req, opt.policy(), [&](const ingest::RawPost& p) {
        io.out << ingest::to_json(p).dump() << '\n';
    });
    io.out.flush();
    if (result.truncated)
        throw Error(ErrorCode::SourceUnavailable, result.error);
    ordered_json stats = {{"collected", result.posts.size()}, {"scanned", result.scanned},
                          {"filtered", result.filtered},      {"duplicates", result.duplicates},
                          {"out_of_window", result.out_of_window}, {"malformed", result.malformed}};
    io.err << stats.dump() << '\n';
    return 0;
}

int cmd_preprocess(const std::string& in_path, const std::optional<std::string>& text, Io io)
{
    const auto resources = pipeline::Resources::load_default();
    auto prepare = [&](const std::string& t) {
        return pipeline::Prepared{
            textprep::preprocess(t, textprep::PrepProfile::vader(), resources->text),
            textprep::preprocess(t, textprep::PrepProfile::contextual(), resources->text)};
    };
    auto emit = [&](ordered_json head, const std::string& t) {
        const auto tokens = prepare(t).to_json();
        for (const auto& [k, v] : tokens.items())
            head[k] = v;
        io.out << head.dump() << '\n';
    };
    if (text) {
        emit({{"text", *text}}, *text);
        return 0;
    }
    for_each_json_line(in_path, io.in, [&](std::size_t, const json& j) {
        if (j.contains("id")) {
            const auto post = ingest::post_from_json(j);
            emit(ingest::to_json(post), post.text);
        } else if (j.contains("text") && j.at("text").is_string()) {
            emit({{"text", j.at("text")}}, j.at("text").get<std::string>());
        } else {
            throw Error(ErrorCode::ParseError, "expected a post object or {\"text\": ...}");
        }
    });
    return 0;
}

struct ScoreLine {
    std::optional<ingest::RawPost> post;
    std::string text;
    std::optional<pipeline::Prepared> prepared;
};

void score_chunk(const pipeline::Scorer& scorer, std::vector<ScoreLine>& chunk, const std::string& entity,
                 std::size_t jobs, bool timing, std::ostream& out)
{
    std::vector<std::size_t> prep_idx, text_idx;
    std::vector<pipeline::Prepared> prepared;
    std::vector<std::string> texts;
    for (std::size_t i = 0; i < chunk.size(); ++i) {
        if (chunk[i].prepared) {
            prep_idx.push_back(i);
            prepared.push_back(std::move(*chunk[i].prepared));
        } else {
            text_idx.push_back(i);
            texts.push_back(chunk[i].text);
        }
    }
    std::vector<pipeline::ScoreBreakdown> results(chunk.size());
    auto a = scorer.score_prepared(prepared, jobs);
    for (std::size_t i = 0; i < a.size(); ++i)
        results[prep_idx[i]] = std::move(a[i]);
    auto b = scorer.score_texts(texts, jobs);
    for (std::size_t i = 0; i < b.size(); ++i)
        results[text_idx[i]] = std::move(b[i]);

    const Timestamp now = now_utc();
    for (std::size_t i = 0; i < chunk.size(); ++i) {
        if (chunk[i].post)
            out << post_result(scorer.to_record(*chunk[i].post, entity, results[i], now), results[i], timing).dump()
                << '\n';
        else
            out << text_result(chunk[i].text, results[i], timing).dump() << '\n';
    }
    chunk.clear();
}

int cmd_score(const ModelOptions& model, const std::optional<std::string>& text, const std::string& in_path,
              const std::string& entity, bool timing, Io io)
{
    const auto scorer = model.scorer();
    if (text) {
        io.out << text_result(*text, scorer->score_text(*text), timing).dump() << '\n';
        return 0;
    }
    std::vector<ScoreLine> chunk;
    for_each_json_line(in_path, io.in, [&](std::size_t, const json& j) {
        ScoreLine line;
        if (j.contains("id")) {
            if (entity.empty())
                throw Error(ErrorCode::InvalidRequest, "post input needs --entity");
            if (!service::valid_entity_name(entity))
                throw Error(ErrorCode::InvalidRequest, "invalid --entity '" + entity + "'");
            line.post = ingest::post_from_json(j);
            line.text = line.post->text;
        } else if (j.contains("text") && j.at("text").is_string()) {
            line.text = j.at("text").get<std::string>();
        } else {
            throw Error(ErrorCode::ParseError, "expected a post object or {\"text\": ...}");
        }
        if (j.contains("vader") && j.contains("contextual"))
            line.prepared = pipeline::Prepared::from_json(j);
        chunk.push_back(std::move(line));
        if (chunk.size() >= kChunk)
            score_chunk(*scorer, chunk, entity, model.jobs, timing, io.out);
    });
    score_chunk(*scorer, chunk, entity, model.jobs, timing, io.out);
    return 0;
}

int cmd_analyze(const std::string& in_path, const std::optional<double>& alpha, const AnalyzeOptions& opt, Io io)
{
    opt.window();
    opt.width();
    Grouped groups;
    for_each_json_line(in_path, io.in, [&](std::size_t, const json& j) {
        auto r = ensemble::record_from_json(j);
        groups[r.entity].push_back(std::move(r));
    });
    if (alpha) {
        for (auto& [entity, records] : groups)
            records = analytics::reweight(records, *alpha);
    }
    const auto text = textprep::TextResources::load(resource_tables_dir());
    emit_analysis(groups, opt, text.stopwords, io.out);
    return 0;
}

int cmd_eval(const ModelOptions& model, const std::string& data, const std::string& models_csv, std::size_t warmup,
             bool pretty, bool timing, Io io)
{
    const auto scorer = model.scorer();
    std::vector<evaluation::NamedModel> models;
    std::stringstream ss(models_csv);
    std::string name;
    while (std::getline(ss, name, ',')) {
        if (name == "vader")
            models.push_back({name, [&](const std::string& t) { return scorer->classify_vader(t); }});
        else if (name == "contextual")
            models.push_back({name, [&](const std::string& t) { return scorer->classify_contextual(t); }});
        else if (name == "hybrid")
            models.push_back({name, [&](const std::string& t) { return scorer->classify_hybrid(t); }});
        else
            throw UsageError("unknown model '" + name + "' (expected vader, contextual or hybrid)");
    }
    if (models.empty())
        throw UsageError("--models is empty");
    const auto reports = evaluation::compare(models, evaluation::load_dataset(data), warmup);
    if (pretty) {
        io.out << evaluation::format_table(reports);
        return 0;
    }
    for (const auto& r : reports) {
        auto j = r.to_json();
        if (!timing)
            j.erase("mean_latency_ms");
        io.out << j.dump() << '\n';
    }
    return 0;
}

int cmd_gridsearch(const ModelOptions& model, const std::string& val, double step, Io io)
{
    const auto scorer = model.scorer();
    const auto data = evaluation::load_dataset(val);
    std::vector<std::string> texts;
    for (const auto& ex : data)
        texts.push_back(ex.text);
    const auto scored = scorer->score_texts(texts, model.jobs);
    std::vector<ensemble::ValidationExample> examples;
    for (std::size_t i = 0; i < data.size(); ++i)
        examples.push_back({scored[i].s_vader, scored[i].s_contextual, data[i].gold});
    const auto& cfg = scorer->config();
    const auto res = ensemble::grid_search_alpha(examples, step, cfg.pos_threshold, cfg.neg_threshold);
    ordered_json j;
    j["alpha"] = res.alpha;
    j["macro_f1"] = res.macro_f1;
    j["n"] = examples.size();
    j["step"] = step;
    auto curve = ordered_json::array();
    for (const auto& p : res.curve)
        curve.push_back({{"alpha", p.alpha}, {"macro_f1", p.macro_f1}});
    j["curve"] = std::move(curve);
    io.out << j.dump() << '\n';
    return 0;
}

struct DemoOptions {
    std::string corpus;
    std::string store;
    std::string start = "2024-01-01";
    std::string end = "2024-01-31";
};

int cmd_demo(const ModelOptions& model, const CollectOptions& collect, const DemoOptions& demo,
             const AnalyzeOptions& opt, Io io)
{
    opt.window();
    opt.width();
    const fs::path corpus = demo.corpus.empty() ? data_dir() / "demo" : fs::path(demo.corpus);
    std::vector<fs::path> files;
    std::error_code ec;
    for (const auto& e : fs::directory_iterator(corpus, ec)) {
        if (e.is_regular_file() && e.path().extension() == ".jsonl")
            files.push_back(e.path());
    }
    if (ec)
        throw Error(ErrorCode::InvalidInput, "cannot read corpus directory " + corpus.string() + ": " + ec.message());
    std::sort(files.begin(), files.end());
    if (files.empty())
        throw Error(ErrorCode::EmptyInput, "no .jsonl files in " + corpus.string());

    const auto scorer = model.scorer();
    const Date start = parse_date_option(demo.start, "--start");
    const Date end = parse_date_option(demo.end, "--end");
    Grouped groups;
    if (!demo.store.empty()) {
        service::ServiceConfig cfg;
        cfg.data_dir = demo.store;
        cfg.workers = 1;
        service::Service svc(cfg, scorer);
        for (const auto& f : files) {
            service::JobSpec spec;
            spec.entity = f.stem().string();
            spec.query = spec.entity;
            spec.source = "file:" + f.string();
            spec.max_items = collect.max_items;
            spec.start_date = start;
            spec.end_date = end;
            spec.policy = collect.policy();
            spec.validate();
            svc.run_job(spec, [](const service::JobCounts&) {});
            groups[spec.entity] = svc.store().records(spec.entity);
        }
    } else {
        for (const auto& f : files) {
            const std::string entity = f.stem().string();
            if (!service::valid_entity_name(entity))
                throw Error(ErrorCode::InvalidInput, "corpus file name is not a valid entity: " + f.string());
            auto source = ingest::make_source("file:" + f.string());
            const ingest::CollectionRequest req(entity, collect.max_items, start, end);
            const auto result = ingest::collect(*source, req, collect.policy());
            if (result.truncated)
                throw Error(ErrorCode::SourceUnavailable, result.error);
            std::vector<pipeline::Prepared> prepared;
            for (const auto& p : result.posts)
                prepared.push_back(scorer->prepare(p.text));
            const auto scored = scorer->score_prepared(prepared, model.jobs);
            auto& records = groups[entity];
            const Timestamp now = now_utc();
            for (std::size_t i = 0; i < scored.size(); ++i)
                records.push_back(scorer->to_record(result.posts[i], entity, scored[i], now));
        }
    }
    emit_analysis(groups, opt, scorer->resources().text.stopwords, io.out);
    return 0;
}

int cmd_serve(const ModelOptions& model, const std::string& listen, const std::string& data_dir_opt,
              std::optional<std::uint64_t> heartbeat_ms, Io io)
{
    auto cfg = service::ServiceConfig::from_env();
    if (!listen.empty()) {
        const auto colon = listen.rfind(':');
        try {
            if (colon == std::string::npos)
                throw UsageError("--listen must be host:port");
            cfg.host = listen.substr(0, colon);
            cfg.port = std::stoi(listen.substr(colon + 1));
        } catch (const std::logic_error&) {
            throw UsageError("--listen must be host:port, got '" + listen + "'");
        }
    }
    if (!data_dir_opt.empty())
        cfg.data_dir = data_dir_opt;
    if (heartbeat_ms)
        cfg.heartbeat = std::chrono::milliseconds(*heartbeat_ms);

    // Block the stop signals before any thread starts so only sigwait sees them.
    sigset_t sigs;
    sigemptyset(&sigs);
    sigaddset(&sigs, SIGINT);
    sigaddset(&sigs, SIGTERM);
    sigset_t old;
    pthread_sigmask(SIG_BLOCK, &sigs, &old);

    int rc = 0;
    try {
        service::Service svc(cfg, model.scorer());
        service::HttpServer server(svc);
        const int port = server.bind(cfg.host, cfg.port);
        server.start();
        ordered_json ready = {{"listening", cfg.host + ":" + std::to_string(port)},
                              {"data_dir", cfg.data_dir.string()},
                              {"records", svc.store().size()},
                              {"skipped_lines", svc.store().skipped_lines()},
                              {"generation", svc.scorer().config().generation()}};
        io.out << ready.dump() << '\n';
        io.out.flush();
        int sig = 0;
        sigwait(&sigs, &sig);
        server.stop();
        svc.shutdown();
    } catch (...) {
        pthread_sigmask(SIG_SETMASK, &old, nullptr);
        throw;
    }
    pthread_sigmask(SIG_SETMASK, &old, nullptr);
    return rc;
}

void print_error(std::ostream& err, std::string_view code, const std::string& message)
{
    ordered_json j;
    j["error"] = std::string(code);
    j["message"] = message;
    err << j.dump() << '\n';
}

} // namespace

int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Social media sentiment pipeline: collect, preprocess, score, analyze, evaluate and serve",
                 "pulsegauge"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "help for every command");
    Io io{in, out, err};
    std::function<int()> action;

    // collect
    CollectOptions collect;
    auto* c_collect = app.add_subcommand("collect", "collect posts from a source and write RawPost JSONL");
    c_collect->add_option("--source", collect.source, "file:<path.jsonl> or live:<url>")->required();
    c_collect->add_option("--query", collect.query, "entity query, e.g. a company name")->required();
    c_collect->add_option("--start", collect.start, "first day, YYYY-MM-DD")->required();
    c_collect->add_option("--end", collect.end, "last day, YYYY-MM-DD")->required();
    collect.add_policy_to(c_collect);
    c_collect->callback([&] { action = [&] { return cmd_collect(collect, io); }; });

    // preprocess
    std::string pre_in;
    std::optional<std::string> pre_text;
    auto* c_pre = app.add_subcommand("preprocess", "add lexicon and contextual token streams to each post");
    c_pre->add_option("--in", pre_in, "post or {\"text\"} JSONL; - for stdin");
    c_pre->add_option("--text", pre_text, "preprocess one text");
    c_pre->callback([&] {
        if (pre_in.empty() == !pre_text.has_value())
            throw UsageError("preprocess needs exactly one of --in or --text");
        action = [&] { return cmd_preprocess(pre_in, pre_text, io); };
    });

    // score
    ModelOptions score_model;
    std::string score_in, score_entity;
    std::optional<std::string> score_text;
    bool score_timing = false;
    auto* c_score = app.add_subcommand("score", "hybrid sentiment scores for one text or a JSONL stream");
    c_score->add_option("--text", score_text, "score one text");
    c_score->add_option("--in", score_in, "posts, preprocess output or {\"text\"} JSONL; - for stdin");
    c_score->add_option("--entity", score_entity, "entity recorded on scored posts");
    c_score->add_flag("--timing", score_timing, "include latency and scored_at (output is then not reproducible)");
    score_model.add_to(c_score);
    c_score->callback([&] {
        if (score_in.empty() == !score_text.has_value())
            throw UsageError("score needs exactly one of --in or --text");
        action = [&] { return cmd_score(score_model, score_text, score_in, score_entity, score_timing, io); };
    });

    // analyze
    std::string an_in;
    std::optional<double> an_alpha;
    AnalyzeOptions an_opt;
    auto* c_an = app.add_subcommand("analyze", "CSI, tier, series and drivers per entity from scored JSONL");
    c_an->add_option("--in", an_in, "scored JSONL; - for stdin")->required();
    c_an->add_option("--alpha", an_alpha, "relabel under this ensemble weight first")->check(CLI::Range(0.0, 1.0));
    an_opt.add_to(c_an);
    c_an->callback([&] { action = [&] { return cmd_analyze(an_in, an_alpha, an_opt, io); }; });

    // eval
    ModelOptions eval_model;
    std::string eval_data = (data_dir() / "eval" / "labeled.jsonl").string();
    std::string eval_models = "vader,contextual,hybrid";
    std::size_t eval_warmup = 0;
    bool eval_pretty = false, eval_timing = false;
    auto* c_eval = app.add_subcommand("eval", "accuracy, per-class P/R/F1, confusion and latency per model");
    c_eval->add_option("--data", eval_data, "labeled JSONL {\"text\", \"gold\"}");
    c_eval->add_option("--models", eval_models, "comma-separated: vader, contextual, hybrid");
    c_eval->add_option("--warmup", eval_warmup, "untimed warmup calls per model");
    c_eval->add_flag("--pretty", eval_pretty, "print a comparison table");
    c_eval->add_flag("--timing", eval_timing, "include mean latency in JSON output");
    eval_model.add_to(c_eval, false);
    c_eval->callback([&] {
        action = [&] {
            return cmd_eval(eval_model, eval_data, eval_models, eval_warmup, eval_pretty, eval_timing, io);
        };
    });

    // gridsearch
    ModelOptions gs_model;
    std::string gs_val;
    double gs_step = 0.05;
    auto* c_gs = app.add_subcommand("gridsearch", "choose the ensemble weight by macro-F1 on a validation set");
    c_gs->add_option("--val", gs_val, "labeled JSONL {\"text\", \"gold\"}")->required();
    c_gs->add_option("--step", gs_step, "grid step in (0, 0.5]");
    gs_model.add_to(c_gs);
    c_gs->callback([&] { action = [&] { return cmd_gridsearch(gs_model, gs_val, gs_step, io); }; });

    // serve
    ModelOptions serve_model;
    std::string serve_listen, serve_dir;
    std::optional<std::uint64_t> serve_heartbeat;
    auto* c_serve = app.add_subcommand("serve", "run the HTTP API and event stream until SIGINT/SIGTERM");
    c_serve->add_option("--listen", serve_listen, "host:port (default PG_LISTEN, else 127.0.0.1:8080; port 0 picks one)");
    c_serve->add_option("--data-dir", serve_dir, "record store directory (default PG_DATA_DIR, else pg-data)");
    c_serve->add_option("--heartbeat-ms", serve_heartbeat, "stream heartbeat interval")->check(CLI::PositiveNumber);
    serve_model.add_to(c_serve, false);
    c_serve->callback([&] {
        action = [&] { return cmd_serve(serve_model, serve_listen, serve_dir, serve_heartbeat, io); };
    });

    // demo
    ModelOptions demo_model;
    CollectOptions demo_collect;
    DemoOptions demo;
    AnalyzeOptions demo_an;
    auto* c_demo = app.add_subcommand("demo", "collect, score and analyze every file of a corpus directory");
    c_demo->add_option("--corpus", demo.corpus, "directory of <entity>.jsonl files (default: bundled corpus)");
    c_demo->add_option("--store", demo.store, "persist into this record store and analyze from it");
    c_demo->add_option("--start", demo.start, "first day, YYYY-MM-DD");
    c_demo->add_option("--end", demo.end, "last day, YYYY-MM-DD");
    demo_collect.add_policy_to(c_demo);
    demo_an.add_to(c_demo);
    demo_model.add_to(c_demo);
    c_demo->callback([&] { action = [&] { return cmd_demo(demo_model, demo_collect, demo, demo_an, io); }; });

    auto usage_of = [&]() -> std::string {
        for (auto* sub : app.get_subcommands())
            return sub->help();
        return app.help();
    };

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << usage_of();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << usage_of();
        return 2;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n\n" << usage_of();
        return 2;
    }

    try {
        return action();
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n\n" << usage_of();
        return 2;
    } catch (const Error& e) {
        out.flush();
        print_error(err, code_name(e.code()), e.what());
        return 1;
    } catch (const std::exception& e) {
        out.flush();
        print_error(err, "InternalError", e.what());
        return 1;
    }
}

} // namespace pulsegauge::cli
