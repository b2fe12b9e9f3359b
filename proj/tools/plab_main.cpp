#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "plab/errors.hpp"
#include "plab/report.hpp"

namespace {

nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw plab::ConfigError("cannot open " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw plab::ConfigError(std::string("invalid JSON in ") + path + ": " + e.what());
    }
    return doc;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Poincare-type difference equation analyzer"};
    app.require_subcommand(1);

    auto* analyze = app.add_subcommand("analyze", "run the analysis pipeline on an equation");
    std::string config_path;
    std::vector<std::string> stages;
    long horizon = -1;
    std::uint64_t seed = 0;
    bool seed_set = false;
    double epsilon = 0;
    bool epsilon_set = false;
    std::string out_dir;
    analyze->add_option("--config", config_path, "JSON config file")->required();
    analyze->add_option("--stage", stages, "stage to run (repeatable); default profile+envelope+filtration");
    analyze->add_option("--horizon", horizon, "iteration horizon (>= 64)");
    analyze->add_option("--seed", seed, "sampling seed")->each([&](const std::string&) { seed_set = true; });
    analyze->add_option("--epsilon", epsilon, "epsilon for the section-5 checks")
        ->each([&](const std::string&) { epsilon_set = true; });
    analyze->add_option("--out", out_dir, "output directory for report.json and CSV series");

    CLI11_PARSE(app, argc, argv);

    try {
        nlohmann::json doc = load_json(config_path);
        if (doc.contains("equation_file"))
            doc["equation"] = load_json(doc["equation_file"].get<std::string>());
        if (!stages.empty()) doc["stages"] = stages;
        if (horizon >= 0) doc["horizon"] = horizon;
        if (seed_set) doc["seed"] = seed;
        if (epsilon_set) doc["epsilon"] = epsilon;
        if (!out_dir.empty()) {
            doc["output"]["csv_dir"] = out_dir;
            if (!doc.contains("output") || !doc["output"].contains("report"))
                doc["output"]["report"] = out_dir + "/report.json";
        }

        plab::RunConfig config = plab::parse_config(doc);
        plab::AnalysisReport report = plab::run(config);

        if (config.report_path.empty()) std::cout << report.document.dump(2) << std::endl;
        for (const auto& o : report.outcomes) {
            std::cerr << "[stage] " << o.name << ": "
                      << (o.error.empty() ? "ok" : ("error: " + o.error)) << " ("
                      << o.wall_ms << " ms)\n";
        }
        if (report.any_stage_error()) return 3;
        if (!report.violations.empty()) return 2;
        return 0;
    } catch (const plab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
