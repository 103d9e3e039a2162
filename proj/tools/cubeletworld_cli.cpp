#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cubeletworld/cubeletworld.hpp"

namespace cw = cubeletworld;

int main(int argc, char** argv) {
    CLI::App app{"CubeletWorld occupancy pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> resolutions;
    std::vector<std::string> models;
    std::optional<std::string> out;
    std::optional<std::size_t> folds;

    app.add_option("--config", config_path, "pipeline config file (key = value)")->required();
    app.add_option("--seed", seed, "override the simulation seed");
    app.add_option("--resolution", resolutions, "cubelet size cx,cy,cz (repeatable; replaces the config list)")
        ->take_all()
        ->allow_extra_args(false);
    app.add_option("--model", models, "predictor (repeatable; replaces the config list)")->allow_extra_args(false);
    app.add_option("--out", out, "output directory");
    app.add_option("--folds", folds, "cross-validation fold count");

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"simulate", "run the boids simulation and write traj/"},
        {"discretize", "voxelize trajectories into frames/<resolution>/"},
        {"graph", "build cubelet graphs into graphs/<resolution>/"},
        {"predict", "cross-validated forecasts into preds/<model>/<resolution>/"},
        {"evaluate", "score predictions and write report.json"},
        {"all", "run every stage over all configured resolutions"},
        {"validate", "check the config and print it with defaults filled in"},
    };
    for (const auto& [name, help] : commands) app.add_subcommand(name, help);
    app.fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        auto cfg = cw::load_config(config_path);
        if (seed) cfg.seed = *seed;
        if (out) cfg.out_dir = *out;
        if (folds) cfg.folds = *folds;
        if (!resolutions.empty()) {
            cfg.resolutions.clear();
            for (const auto& r : resolutions) cfg.resolutions.push_back(cw::parse_resolution(r));
        }
        if (!models.empty()) cfg.models = models;
        cfg = cw::validate(std::move(cfg));

        const std::string name = app.get_subcommands().front()->get_name();
        if (name == "validate") {
            std::cout << cw::config_to_text(cfg);
            return 0;
        }
        cw::run(cw::parse_command(name), cfg, std::cout);
    } catch (const cw::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
