// Trains the bundled hashed linear model from a JSONL {"text", "label"} file.
// Texts go through the contextual preprocessing profile first so training
// and inference see the same token stream.

#include "pulsegauge/contextual.hpp"
#include "pulsegauge/error.hpp"
#include "pulsegauge/resources.hpp"
#include "pulsegauge/textprep.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

int main(int argc, char** argv)
{
    namespace pg = pulsegauge;
    CLI::App app{"Train the reference contextual model"};
    std::string in_path = (pg::data_dir() / "models" / "reference_train.jsonl").string();
    std::string out_path = pg::default_model_path().string();
    pg::contextual::TrainOptions opts;
    app.add_option("--in", in_path, "training JSONL");
    app.add_option("--out", out_path, "model JSON to write");
    app.add_option("--epochs", opts.epochs);
    app.add_option("--lr", opts.learning_rate);
    app.add_option("--l2", opts.l2);
    CLI11_PARSE(app, argc, argv);

    try {
        const auto res = pg::textprep::TextResources::load(pg::resource_tables_dir());
        std::ifstream in(in_path);
        if (!in)
            throw pg::Error(pg::ErrorCode::InvalidInput, "cannot open " + in_path);
        std::vector<pg::contextual::TrainingExample> examples;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty())
                continue;
            const auto j = nlohmann::json::parse(line);
            const auto tokens = pg::textprep::preprocess(j.at("text").get<std::string>(),
                                                         pg::textprep::PrepProfile::contextual(), res);
            examples.push_back({tokens.joined(), j.at("label").get<int>()});
        }
        const auto model = pg::contextual::ReferenceModel::train(examples, opts);
        model.save(out_path);
        std::cerr << "trained on " << examples.size() << " examples, " << model.nonzero_buckets()
                  << " buckets -> " << out_path << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
