#include "pulsegauge/error.hpp"
#include "pulsegauge/evaluation.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include <unistd.h>

using namespace pulsegauge;
using namespace pulsegauge::evaluation;

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

Label L(int i)
{
    return kAllLabels[i];
}

// Brute-force tally oracle written from the definitions, sharing no code with
// the library.
struct Oracle {
    long m[3][3] = {};
    double acc = 0, p[3] = {}, r[3] = {}, f[3] = {}, macro = 0;
};

Oracle oracle(const std::vector<int>& g, const std::vector<int>& pr)
{
    Oracle o;
    for (std::size_t i = 0; i < g.size(); ++i)
        o.m[g[i]][pr[i]]++;
    long correct = 0;
    for (std::size_t i = 0; i < g.size(); ++i)
        correct += g[i] == pr[i];
    o.acc = static_cast<double>(correct) / static_cast<double>(g.size());
    for (int c = 0; c < 3; ++c) {
        long tp = 0, predicted = 0, actual = 0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            tp += g[i] == c && pr[i] == c;
            predicted += pr[i] == c;
            actual += g[i] == c;
        }
        o.p[c] = predicted ? static_cast<double>(tp) / predicted : 0.0;
        o.r[c] = actual ? static_cast<double>(tp) / actual : 0.0;
        o.f[c] = (o.p[c] + o.r[c]) > 0 ? 2 * o.p[c] * o.r[c] / (o.p[c] + o.r[c]) : 0.0;
        o.macro += o.f[c] / 3;
    }
    return o;
}

} // namespace

TEST(Confusion, PerfectPredictions)
{
    std::vector<Label> g;
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < 3; ++i)
            g.push_back(L(c));
    const auto m = confusion(g, g);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            EXPECT_EQ(m[a][b], a == b ? 3u : 0u);
    const auto r = metrics(m);
    EXPECT_EQ(r.accuracy, 1.0);
    EXPECT_EQ(r.macro_f1, 1.0);
}

TEST(Confusion, AllPredictedPositiveFillsFirstColumn)
{
    std::vector<Label> g, p(9, Label::Positive);
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < 3; ++i)
            g.push_back(L(c));
    const auto m = confusion(g, p);
    for (int a = 0; a < 3; ++a) {
        EXPECT_EQ(m[a][0], 3u);
        EXPECT_EQ(m[a][1], 0u);
        EXPECT_EQ(m[a][2], 0u);
    }
    const auto r = metrics(m);
    EXPECT_EQ(r.per_class[1].precision, 0.0);  // empty predicted class, no NaN
    EXPECT_EQ(r.per_class[1].f1, 0.0);
    EXPECT_NEAR(r.per_class[0].precision, 1.0 / 3.0, 1e-15);
}

TEST(Confusion, Errors)
{
    EXPECT_EQ(code_of([] { confusion({Label::Positive}, {}); }), ErrorCode::LengthMismatch);
    EXPECT_EQ(code_of([] { confusion({}, {}); }), ErrorCode::EmptyInput);
    EXPECT_EQ(code_of([] { metrics(Confusion{}); }), ErrorCode::EmptyInput);
}

TEST(Metrics, HandComputedMatrix)
{
    const Confusion m = {{{2, 1, 0}, {0, 3, 0}, {0, 0, 4}}};
    const auto r = metrics(m);
    EXPECT_EQ(r.n, 10u);
    EXPECT_DOUBLE_EQ(r.accuracy, 0.9);
    EXPECT_DOUBLE_EQ(r.per_class[0].precision, 1.0);
    EXPECT_DOUBLE_EQ(r.per_class[0].recall, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(r.per_class[0].f1, 0.8);
    EXPECT_DOUBLE_EQ(r.per_class[1].precision, 0.75);
    EXPECT_DOUBLE_EQ(r.per_class[1].recall, 1.0);
    EXPECT_NEAR(r.per_class[1].f1, 6.0 / 7.0, 1e-15);
    EXPECT_DOUBLE_EQ(r.per_class[2].f1, 1.0);
    EXPECT_NEAR(r.macro_f1, (0.8 + 6.0 / 7.0 + 1.0) / 3.0, 1e-15);
}

TEST(Metrics, MatchesBruteForceOracleOnRandomLabelings)
{
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> cls(0, 2);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<int> g(50), p(50);
        std::vector<Label> gl, pl;
        for (int i = 0; i < 50; ++i) {
            g[i] = cls(rng);
            p[i] = trial % 10 == 0 ? std::min(g[i], 1) : cls(rng);  // some trials leave a class unpredicted
            gl.push_back(L(g[i]));
            pl.push_back(L(p[i]));
        }
        const auto o = oracle(g, p);
        const auto r = metrics(confusion(gl, pl));
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                ASSERT_EQ(static_cast<long>(r.matrix[a][b]), o.m[a][b]);
        ASSERT_EQ(r.accuracy, o.acc);
        for (int c = 0; c < 3; ++c) {
            ASSERT_EQ(r.per_class[c].precision, o.p[c]) << trial << " class " << c;
            ASSERT_EQ(r.per_class[c].recall, o.r[c]);
            ASSERT_EQ(r.per_class[c].f1, o.f[c]);
        }
        ASSERT_NEAR(r.macro_f1, o.macro, 1e-15);
    }
}

TEST(Metrics, OrderInvarianceAndPrevalenceIdentity)
{
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> cls(0, 2);
    std::vector<std::pair<Label, Label>> pairs;
    for (int i = 0; i < 80; ++i)
        pairs.push_back({L(cls(rng)), L(cls(rng))});
    auto split = [](const auto& ps) {
        std::vector<Label> g, p;
        for (const auto& [a, b] : ps) {
            g.push_back(a);
            p.push_back(b);
        }
        return metrics(confusion(g, p));
    };
    const auto base = split(pairs);
    std::shuffle(pairs.begin(), pairs.end(), rng);
    const auto shuffled = split(pairs);
    EXPECT_EQ(base.matrix, shuffled.matrix);
    EXPECT_EQ(base.macro_f1, shuffled.macro_f1);

    double weighted = 0;
    for (int c = 0; c < 3; ++c) {
        std::uint64_t row = 0;
        for (int p = 0; p < 3; ++p)
            row += base.matrix[c][p];
        weighted += base.per_class[c].recall * static_cast<double>(row) / static_cast<double>(base.n);
    }
    EXPECT_NEAR(weighted, base.accuracy, 1e-12);
}

TEST(Dataset, LoadAndErrors)
{
    const auto dir = std::filesystem::temp_directory_path();
    const auto ok = dir / ("pg_ds_" + std::to_string(::getpid()));
    std::ofstream(ok) << "{\"text\":\"a\",\"gold\":\"positive\"}\n\n{\"text\":\"b\",\"gold\":\"Negative\"}\n";
    const auto ds = load_dataset(ok);
    ASSERT_EQ(ds.size(), 2u);
    EXPECT_EQ(ds[1].gold, Label::Negative);

    std::ofstream(ok) << "{\"text\":\"a\",\"gold\":\"positive\"}\n{\"text\":\"b\",\"gold\":\"mixed\"}\n";
    try {
        load_dataset(ok);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ParseError);
        EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
    }
    std::filesystem::remove(ok);
    EXPECT_EQ(code_of([] { load_dataset("/nonexistent.jsonl"); }), ErrorCode::ParseError);

    const auto bundled = load_dataset(std::string(PULSEGAUGE_RESOURCE_DIR) + "/eval/labeled.jsonl");
    EXPECT_EQ(bundled.size(), 500u);
}

TEST(Latency, SingleTextOneTimedCall)
{
    int calls = 0;
    const double ms = benchmark_latency([&](const std::string&) { ++calls; return Label::Neutral; }, {"x"}, 0);
    EXPECT_EQ(calls, 1);
    EXPECT_GE(ms, 0.0);
    calls = 0;
    benchmark_latency([&](const std::string&) { ++calls; return Label::Neutral; }, {"x", "y"}, 3);
    EXPECT_EQ(calls, 5);
    EXPECT_EQ(code_of([] { benchmark_latency([](const std::string&) { return Label::Neutral; }, {}, 0); }),
              ErrorCode::EmptyInput);
}

TEST(Latency, ConstantDelayStubWithinTwentyPercent)
{
    const auto stub = [](const std::string&) {
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
        return Label::Neutral;
    };
    const double ms = benchmark_latency(stub, std::vector<std::string>(10, "t"), 1);
    EXPECT_GE(ms, 10.0 * 0.8);
    EXPECT_LE(ms, 10.0 * 1.2);
}

TEST(Compare, PlantedAccuracyOrdering)
{
    std::vector<LabeledExample> ds;
    for (int i = 0; i < 30; ++i)
        ds.push_back({std::to_string(i), L(i % 3)});
    auto gold_of = [](const std::string& t) { return L(std::stoi(t) % 3); };
    auto wrong = [](Label l) { return L((static_cast<int>(l) + 1) % 3); };
    const std::vector<NamedModel> models = {
        {"perfect", [&](const std::string& t) { return gold_of(t); }},
        {"half", [&](const std::string& t) { return std::stoi(t) % 2 ? gold_of(t) : wrong(gold_of(t)); }},
        {"never", [&](const std::string& t) { return wrong(gold_of(t)); }},
    };
    const auto reports = compare(models, ds);
    ASSERT_EQ(reports.size(), 3u);
    EXPECT_EQ(reports[0].accuracy, 1.0);
    EXPECT_EQ(reports[1].accuracy, 0.5);
    EXPECT_EQ(reports[2].accuracy, 0.0);
    EXPECT_EQ(reports[1].model, "half");

    const auto table = format_table(reports);
    EXPECT_NE(table.find("perfect"), std::string::npos);
    EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 4);
}

TEST(Compare, SingleModelEqualsDirectEvaluationAndDuplicatesMatch)
{
    std::vector<LabeledExample> ds;
    std::vector<Label> g, p;
    for (int i = 0; i < 40; ++i) {
        ds.push_back({std::to_string(i), L(i % 3)});
        g.push_back(L(i % 3));
        p.push_back(L((i * 7) % 3));
    }
    const TextClassifier f = [](const std::string& t) { return L((std::stoi(t) * 7) % 3); };
    const auto one = compare({{"m", f}}, ds);
    ASSERT_EQ(one.size(), 1u);
    const auto direct = metrics(confusion(g, p));
    EXPECT_EQ(one[0].matrix, direct.matrix);
    EXPECT_EQ(one[0].macro_f1, direct.macro_f1);

    const auto dup = compare({{"a", f}, {"b", f}}, ds);
    EXPECT_EQ(dup[0].matrix, dup[1].matrix);
    EXPECT_EQ(dup[0].accuracy, dup[1].accuracy);
}

TEST(Compare, ErrorsNameTheModel)
{
    std::vector<LabeledExample> ds = {{"x", Label::Neutral}};
    const TextClassifier boom = [](const std::string&) -> Label {
        throw Error(ErrorCode::BackendUnavailable, "down");
    };
    try {
        compare({{"hybrid", boom}}, ds);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::BackendUnavailable);
        EXPECT_EQ(std::string(e.what()), "hybrid: down");
    }
    EXPECT_EQ(code_of([] { compare({}, {{"x", Label::Neutral}}); }), ErrorCode::InvalidRequest);
    EXPECT_EQ(code_of([&] { compare({{"m", boom}}, {}); }), ErrorCode::EmptyInput);
}

TEST(Report, JsonShape)
{
    const Confusion m = {{{2, 1, 0}, {0, 3, 0}, {0, 0, 4}}};
    auto r = metrics(m);
    r.model = "vader";
    const auto j = r.to_json();
    EXPECT_EQ(j["model"], "vader");
    EXPECT_EQ(j["n"], 10);
    EXPECT_EQ(j["confusion"]["rows_gold_cols_pred"][0][1], 1);
    EXPECT_DOUBLE_EQ(j["per_class"]["neutral"]["precision"].get<double>(), 0.75);
}
