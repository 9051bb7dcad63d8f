// weylscat: sample scattering matrices, run the inverse pipeline or the
// invariant suite from a JSON config.

#include <iostream>

#include <CLI11.hpp>

#include "weylscat/cli.hpp"
#include "weylscat/errors.hpp"

int main(int argc, char** argv) {
    namespace wc = weylscat::cli;

    CLI::App app{"Weyl function scattering toolkit"};
    std::string config_path, output, format;
    int threads = 0;
    std::optional<std::uint64_t> seed;
    app.add_option("--config", config_path, "RunConfig JSON file")->required();
    app.add_option("--output", output, "output path (overrides the config)");
    app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--threads", threads, "worker threads for grid rows")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "seed for random models and probes");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    wc::RunConfig cfg;
    try {
        const std::filesystem::path path(config_path);
        cfg = wc::config_from_json(weylscat::load_json(path), path.parent_path());
        if (!output.empty()) cfg.output = output;
        if (!format.empty()) cfg.format = weylscat::output_format_from_string(format);
        if (threads > 0) cfg.threads = threads;
        if (seed) cfg.seed = *seed;
    } catch (const weylscat::NumericError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }

    const wc::RunResult r = wc::run(cfg, std::cerr);
    if (r.exit_code != 0) std::cerr << "exit " << r.exit_code << ": " << r.summary << '\n';
    return r.exit_code;
}
