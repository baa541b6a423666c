#include "pulsegauge/evaluation.hpp"

#include "pulsegauge/error.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

namespace pulsegauge::evaluation {

namespace {

double ratio(std::uint64_t num, std::uint64_t den)
{
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double timed_ms(const TextClassifier& model, const std::string& text, Label* out)
{
    const auto t0 = std::chrono::steady_clock::now();
    const Label l = model(text);
    const auto t1 = std::chrono::steady_clock::now();
    if (out)
        *out = l;
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

} // namespace

Confusion confusion(const std::vector<Label>& golds, const std::vector<Label>& preds)
{
    if (golds.size() != preds.size())
        throw Error(ErrorCode::LengthMismatch, "gold and predicted label lists differ in length (" +
                                                   std::to_string(golds.size()) + " vs " +
                                                   std::to_string(preds.size()) + ")");
    if (golds.empty())
        throw Error(ErrorCode::EmptyInput, "no labels to compare");
    Confusion m{};
    for (std::size_t i = 0; i < golds.size(); ++i)
        ++m[static_cast<int>(golds[i])][static_cast<int>(preds[i])];
    return m;
}

EvalReport metrics(const Confusion& m)
{
    EvalReport r;
    std::uint64_t trace = 0;
    std::array<std::uint64_t, 3> rows{};
    std::array<std::uint64_t, 3> cols{};
    for (int g = 0; g < 3; ++g) {
        for (int p = 0; p < 3; ++p) {
            r.n += m[g][p];
            rows[g] += m[g][p];
            cols[p] += m[g][p];
        }
        trace += m[g][g];
    }
    if (r.n == 0)
        throw Error(ErrorCode::EmptyInput, "confusion matrix is empty");
    r.matrix = m;
    r.accuracy = ratio(trace, r.n);
    double f1_sum = 0.0;
    for (int c = 0; c < 3; ++c) {
        ClassMetrics& cm = r.per_class[c];
        cm.precision = ratio(m[c][c], cols[c]);
        cm.recall = ratio(m[c][c], rows[c]);
        cm.f1 = (cm.precision + cm.recall) == 0.0 ? 0.0
                                                  : 2.0 * cm.precision * cm.recall / (cm.precision + cm.recall);
        f1_sum += cm.f1;
    }
    r.macro_f1 = f1_sum / 3.0;
    return r;
}

nlohmann::ordered_json EvalReport::to_json() const
{
    nlohmann::ordered_json j;
    j["model"] = model;
    j["n"] = n;
    j["accuracy"] = accuracy;
    j["macro_f1"] = macro_f1;
    j["mean_latency_ms"] = mean_latency_ms;
    nlohmann::ordered_json per = nlohmann::ordered_json::object();
    for (const Label l : kAllLabels) {
        const ClassMetrics& cm = per_class[static_cast<int>(l)];
        per[std::string(label_name(l))] = {{"precision", cm.precision}, {"recall", cm.recall}, {"f1", cm.f1}};
    }
    j["per_class"] = std::move(per);
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : matrix)
        rows.push_back(row);
    j["confusion"] = {{"order", {"positive", "neutral", "negative"}}, {"rows_gold_cols_pred", std::move(rows)}};
    return j;
}

std::vector<LabeledExample> load_dataset(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::ParseError, "cannot open dataset " + path.string());
    std::vector<LabeledExample> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        const std::string where = path.string() + ":" + std::to_string(lineno);
        try {
            const auto j = nlohmann::json::parse(line);
            LabeledExample ex;
            ex.text = j.at("text").get<std::string>();
            ex.gold = parse_label(j.at("gold").get<std::string>());
            out.push_back(std::move(ex));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::ParseError, where + ": " + e.what());
        } catch (const Error& e) {
            throw Error(ErrorCode::ParseError, where + ": " + e.what());
        }
    }
    return out;
}

double benchmark_latency(const TextClassifier& model, const std::vector<std::string>& texts, std::size_t warmup)
{
    if (texts.empty())
        throw Error(ErrorCode::EmptyInput, "no texts to time");
    for (std::size_t i = 0; i < warmup; ++i)
        model(texts[i % texts.size()]);
    double total = 0.0;
    for (const auto& t : texts)
        total += timed_ms(model, t, nullptr);
    return total / static_cast<double>(texts.size());
}

std::vector<EvalReport> compare(const std::vector<NamedModel>& models, const std::vector<LabeledExample>& dataset,
                                std::size_t warmup)
{
    if (dataset.empty())
        throw Error(ErrorCode::EmptyInput, "evaluation dataset is empty");
    if (models.empty())
        throw Error(ErrorCode::InvalidRequest, "no models to compare");
    std::vector<Label> golds;
    golds.reserve(dataset.size());
    for (const auto& ex : dataset)
        golds.push_back(ex.gold);

    std::vector<EvalReport> reports;
    for (const auto& model : models) {
        std::vector<Label> preds(dataset.size());
        double total_ms = 0.0;
        try {
            for (std::size_t i = 0; i < warmup; ++i)
                model.predict(dataset[i % dataset.size()].text);
            for (std::size_t i = 0; i < dataset.size(); ++i)
                total_ms += timed_ms(model.predict, dataset[i].text, &preds[i]);
        } catch (const Error& e) {
            throw Error(e.code(), model.name + ": " + e.what());
        }
        EvalReport r = metrics(confusion(golds, preds));
        r.model = model.name;
        r.mean_latency_ms = total_ms / static_cast<double>(dataset.size());
        reports.push_back(std::move(r));
    }
    return reports;
}

std::string format_table(const std::vector<EvalReport>& reports)
{
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-12s %6s %9s %9s %9s %9s %12s\n", "model", "n", "accuracy", "macro_f1", "prec_pos",
                  "rec_neg", "latency_ms");
    out += buf;
    for (const auto& r : reports) {
        std::snprintf(buf, sizeof buf, "%-12s %6llu %9.4f %9.4f %9.4f %9.4f %12.4f\n", r.model.c_str(),
                      static_cast<unsigned long long>(r.n), r.accuracy, r.macro_f1,
                      r.per_class[static_cast<int>(Label::Positive)].precision,
                      r.per_class[static_cast<int>(Label::Negative)].recall, r.mean_latency_ms);
        out += buf;
    }
    return out;
}

} // namespace pulsegauge::evaluation
