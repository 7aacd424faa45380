// Command-line front end for the pipeline verbs.

#include <actfeat/pipeline.hpp>

#include <CLI11.hpp>

#include <iostream>

namespace {

int run_verb(const std::string& verb, const actfeat::RunConfig& config, const actfeat::RunOptions& opt) {
    if (verb == "features")
        actfeat::cmd_features(config, opt);
    else if (verb == "activations")
        actfeat::cmd_activations(config, opt);
    else if (verb == "compare-embeddings")
        actfeat::cmd_compare_embeddings(config, opt);
    else if (verb == "compare-maps")
        actfeat::cmd_compare_maps(config, opt);
    else if (verb == "run") {
        actfeat::cmd_features(config, opt);
        if (config.network)
            actfeat::cmd_activations(config, opt);
        actfeat::cmd_compare_embeddings(config, opt);
        actfeat::cmd_compare_maps(config, opt);
    }
    return actfeat::exit_code::ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Explain audio network activations against hand-crafted audio features"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::size_t jobs = 1;
    bool plots = false;
    app.add_option("--config", config_path, "Run configuration (JSON)");
    app.add_option("--out", out_dir, "Output directory; overrides output_dir from the config");
    app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--plots", plots, "Also write SVG plots");

    const std::vector<std::pair<std::string, std::string>> verbs{
        {"features", "HPSS, HPCP, onset rate and loudness per clip"},
        {"activations", "Run the configured network and store layer activations"},
        {"compare-embeddings", "Correlate vector activations with clip-level features"},
        {"compare-maps", "SIFT-match activation maps against feature maps"},
        {"run", "features, activations (when a network is configured), then both comparisons"}};
    for (const auto& [name, help] : verbs)
        app.add_subcommand(name, help)->fallthrough();

    auto* init = app.add_subcommand("init-weights", "Write deterministic random weights for a network config");
    std::string network_path, dest;
    std::uint64_t seed = 1;
    init->add_option("--network", network_path, "Network config (JSON)")->required()->check(CLI::ExistingFile);
    init->add_option("--dest", dest, "Directory for the .npy files and manifest.json")->required();
    init->add_option("--seed", seed, "Generator seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : actfeat::exit_code::config;
    }

    try {
        if (init->parsed()) {
            const auto manifest = actfeat::cmd_init_weights(network_path, dest, seed);
            std::cout << "wrote " << manifest.string() << "\n";
            return actfeat::exit_code::ok;
        }
        if (config_path.empty())
            throw actfeat::ConfigError("--config is required");
        auto config = actfeat::load_run_config(config_path);
        if (!out_dir.empty())
            config.output_dir = std::filesystem::absolute(out_dir).lexically_normal();
        actfeat::RunOptions opt;
        opt.jobs = jobs;
        opt.plots = plots;
        return run_verb(app.get_subcommands().front()->get_name(), config, opt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return actfeat::exit_code_for(e);
    }
}
