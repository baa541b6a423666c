#include "pulsegauge/cli.hpp"
#include "pulsegauge/ensemble.hpp"
#include "pulsegauge/error.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

using namespace pulsegauge;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args, const std::string& input = "")
{
    args.insert(args.begin(), "pulsegauge");
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    std::istringstream in(input);
    std::ostringstream out, err;
    Result r;
    r.code = cli::run(static_cast<int>(argv.size()), argv.data(), in, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::vector<json> lines_of(const std::string& text)
{
    std::vector<json> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty())
            out.push_back(json::parse(line));
    }
    return out;
}

struct TempDir {
    fs::path path;
    TempDir()
    {
        static std::atomic<int> counter{0};
        std::random_device rd;
        path = fs::temp_directory_path() / ("pg-cli-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir()
    {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

const fs::path kDemo = fs::path(PULSEGAUGE_RESOURCE_DIR) / "demo";
const std::vector<std::string> kEntities = {"amazon", "microsoft", "samsung", "tesla"};

} // namespace

TEST(Cli, ScoreSingleText)
{
    const auto r = run({"score", "--text", "good"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = json::parse(r.out);
    EXPECT_NEAR(j.at("vader").at("compound").get<double>(), 0.4404, 5e-5);
    EXPECT_NEAR(j.at("s_vader").get<double>(), 0.7202, 5e-5);
    const double s_final = ensemble::combine(j.at("s_vader").get<double>(), j.at("s_contextual").get<double>(), 0.4);
    EXPECT_DOUBLE_EQ(j.at("s_final").get<double>(), s_final);
    EXPECT_EQ(j.at("label"), std::string(label_name(ensemble::label(s_final))));
    const auto& d = j.at("distribution");
    EXPECT_NEAR(d.at("p_pos").get<double>() + d.at("p_neg").get<double>() + d.at("p_neu").get<double>(), 1.0, 1e-9);
    EXPECT_FALSE(j.contains("latency_ms"));
    EXPECT_TRUE(json::parse(run({"score", "--text", "good", "--timing"}).out).contains("latency_ms"));
}

TEST(Cli, AlphaOptionChangesFusion)
{
    const auto j = json::parse(run({"score", "--text", "great product", "--alpha", "1"}).out);
    EXPECT_DOUBLE_EQ(j.at("s_final").get<double>(), j.at("s_vader").get<double>());
}

TEST(Cli, UsageErrorsExitTwo)
{
    auto r = run({"score"});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("Usage:"), std::string::npos);
    EXPECT_TRUE(r.out.empty());

    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"frobnicate"}).code, 2);
    EXPECT_EQ(run({"score", "--text", "a", "--in", "-"}).code, 2);
    EXPECT_EQ(run({"score", "--text", "a", "--alpha", "2"}).code, 2);
    EXPECT_EQ(run({"collect", "--source", "file:x"}).code, 2);
    EXPECT_EQ(run({"analyze"}).code, 2);
    EXPECT_EQ(run({"eval", "--models", "vader,bogus"}).code, 2);
    EXPECT_EQ(run({"analyze", "--in", "-", "--bucket", "soon"}).code, 2);

    r = run({"score", "--help"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("--text"), std::string::npos);
}

TEST(Cli, RuntimeErrorsExitOneWithJson)
{
    auto r = run({"score", "--in", "/definitely/not/here.jsonl", "--entity", "x"});
    EXPECT_EQ(r.code, 1);
    auto e = json::parse(r.err);
    EXPECT_EQ(e.at("error"), "InvalidInput");
    EXPECT_TRUE(e.contains("message"));

    r = run({"analyze", "--in", "-"}, "{\"post_id\": 1}\n");
    EXPECT_EQ(r.code, 1);
    e = json::parse(r.err);
    EXPECT_EQ(e.at("error"), "ParseError");
    EXPECT_NE(e.at("message").get<std::string>().find("<stdin>:1:"), std::string::npos);

    // posts need an entity
    r = run({"score", "--in", "-"},
            R"({"id":"a","created_at":"2024-01-01T00:00:00Z","text":"t","author_id":"u",)"
            R"("author_created_at":"2020-01-01T00:00:00Z","author_post_count":1,"like_count":9,)"
            R"("reply_count":0,"is_retweet":false})");
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(json::parse(r.err).at("error"), "InvalidRequest");

    r = run({"collect", "--source", "file:/nope.jsonl", "--query", "q", "--start", "2024-01-01", "--end", "2024-01-02"});
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(json::parse(r.err).at("error"), "SourceUnavailable");
}

TEST(Cli, AnalyzeConstantScores)
{
    std::string input;
    for (int i = 0; i < 10; ++i) {
        ensemble::SentimentRecord rec;
        rec.post_id = "p" + std::to_string(i);
        rec.entity = "flat";
        rec.created_at = parse_timestamp("2024-01-0" + std::to_string(1 + i % 3) + "T00:00:00Z");
        rec.s_vader = 0.5;
        rec.s_contextual = 0.5;
        rec.s_final = 0.5;
        rec.label = Label::Neutral;
        input += ensemble::to_json(rec, false).dump() + "\n";
    }
    const auto r = run({"analyze", "--in", "-"}, input);
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = lines_of(r.out);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_DOUBLE_EQ(rows[0].at("summary").at("csi").get<double>(), 50.0);
    EXPECT_EQ(rows[0].at("summary").at("tier"), "Excellent");
    EXPECT_DOUBLE_EQ(rows[0].at("volatility").get<double>(), 0.0);
    EXPECT_TRUE(rows[0].at("drivers").is_null());
    EXPECT_EQ(rows[0].at("series").at("points").size(), 3u);
}

TEST(Cli, PipeCompositionEqualsDemo)
{
    std::string scored;
    for (const auto& e : kEntities) {
        const auto collected = run({"collect", "--source", "file:" + (kDemo / (e + ".jsonl")).string(), "--query", e,
                                    "--start", "2024-01-01", "--end", "2024-01-31"});
        ASSERT_EQ(collected.code, 0) << collected.err;
        EXPECT_EQ(json::parse(collected.err).at("collected"), 50);
        const auto prepared = run({"preprocess", "--in", "-"}, collected.out);
        ASSERT_EQ(prepared.code, 0) << prepared.err;
        const auto s = run({"score", "--in", "-", "--entity", e}, prepared.out);
        ASSERT_EQ(s.code, 0) << s.err;
        // scoring raw posts directly gives the same lines
        EXPECT_EQ(run({"score", "--in", "-", "--entity", e}, collected.out).out, s.out);
        scored += s.out;
    }
    const auto analyzed = run({"analyze", "--in", "-"}, scored);
    ASSERT_EQ(analyzed.code, 0) << analyzed.err;
    const auto demo = run({"demo"});
    ASSERT_EQ(demo.code, 0) << demo.err;
    EXPECT_EQ(analyzed.out, demo.out);
    EXPECT_EQ(lines_of(demo.out).size(), 4u);
    EXPECT_EQ(run({"demo"}).out, demo.out);

    TempDir tmp;
    const auto stored = run({"demo", "--store", (tmp.path / "store").string()});
    ASSERT_EQ(stored.code, 0) << stored.err;
    EXPECT_EQ(stored.out, demo.out);
}

TEST(Cli, ScoreJobsPreserveOrder)
{
    const auto collected = run({"collect", "--source", "file:" + (kDemo / "tesla.jsonl").string(), "--query", "tesla",
                                "--start", "2024-01-01", "--end", "2024-01-31"});
    const auto one = run({"score", "--in", "-", "--entity", "tesla"}, collected.out);
    const auto four = run({"score", "--in", "-", "--entity", "tesla", "--jobs", "4"}, collected.out);
    ASSERT_EQ(one.code, 0);
    EXPECT_EQ(one.out, four.out);
    const auto rows = lines_of(one.out);
    ASSERT_EQ(rows.size(), 50u);
    EXPECT_EQ(rows.front().at("post_id"), "tesla-0001");
    for (const auto& r : rows) {
        EXPECT_FALSE(r.contains("scored_at"));
        EXPECT_NEAR(r.at("s_final").get<double>(),
                    0.4 * r.at("s_vader").get<double>() + 0.6 * r.at("s_contextual").get<double>(), 1e-12);
    }
}

TEST(Cli, AnalyzeReweightAndPretty)
{
    const auto demo = run({"demo", "--alpha", "1"});
    std::string scored;
    for (const auto& e : kEntities) {
        const auto c = run({"collect", "--source", "file:" + (kDemo / (e + ".jsonl")).string(), "--query", e, "--start",
                            "2024-01-01", "--end", "2024-01-31"});
        scored += run({"score", "--in", "-", "--entity", e}, c.out).out;
    }
    EXPECT_EQ(run({"analyze", "--in", "-", "--alpha", "1"}, scored).out, demo.out);

    const auto pretty = run({"analyze", "--in", "-", "--pretty"}, scored);
    ASSERT_EQ(pretty.code, 0);
    EXPECT_EQ(pretty.out.rfind("entity", 0), 0u);
    EXPECT_NE(pretty.out.find("amazon"), std::string::npos);
}

TEST(Cli, EvalAndGridsearch)
{
    const auto r = run({"eval"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto reports = lines_of(r.out);
    ASSERT_EQ(reports.size(), 3u);
    EXPECT_EQ(reports[0].at("model"), "vader");
    EXPECT_EQ(reports[2].at("model"), "hybrid");
    EXPECT_EQ(reports[0].at("n"), 500);
    EXPECT_FALSE(reports[0].contains("mean_latency_ms"));
    EXPECT_EQ(run({"eval"}).out, r.out);

    const auto g = run({"gridsearch", "--val", (fs::path(PULSEGAUGE_RESOURCE_DIR) / "eval" / "labeled.jsonl").string(),
                        "--step", "0.25"});
    ASSERT_EQ(g.code, 0) << g.err;
    const auto j = json::parse(g.out);
    EXPECT_EQ(j.at("curve").size(), 5u);
    double best = 0.0;
    for (const auto& p : j.at("curve"))
        best = std::max(best, p.at("macro_f1").get<double>());
    EXPECT_DOUBLE_EQ(j.at("macro_f1").get<double>(), best);
    const auto bad = run({"gridsearch", "--val", (fs::path(PULSEGAUGE_RESOURCE_DIR) / "eval" / "labeled.jsonl").string(),
                          "--step", "0.7"});
    EXPECT_EQ(bad.code, 1);
    EXPECT_EQ(json::parse(bad.err).at("error"), "InvalidRequest");
}

TEST(Cli, PreprocessText)
{
    const auto r = run({"preprocess", "--text", "Check https://x.co LOVED it 😍 #BigNews"});
    ASSERT_EQ(r.code, 0);
    const auto j = json::parse(r.out);
    EXPECT_EQ(j.at("vader").at("tokens"),
              json::parse(R"(["check","love",":smiling_face_with_heart_eyes:","big","news"])"));
    EXPECT_EQ(j.at("vader").at("shadow").at(1), "LOVED");
}
