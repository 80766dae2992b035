// Batch front-end: parse an experiment config, run it, emit CSV/JSON
// artifacts plus a manifest.
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "macroq/experiments.hpp"
#include "macroq/version.hpp"

int main(int argc, char** argv) {
    CLI::App app{"macroqsim: coarse-grained macroscopic qubit-ensemble experiments"};
    app.set_version_flag("--version", macroq::version);

    std::string experiment;
    app.add_option("experiment", experiment,
                   "experiment to run: convergence | identities | lg-chsh | bell-chsh | density")
        ->required();
    std::string config_path;
    app.add_option("--config", config_path, "path to the experiment config file");
    std::string out_dir = ".";
    app.add_option("--out", out_dir, "output directory (created if missing)");
    int threads = 1;
    app.add_option("--threads", threads, "worker threads for parameter sweeps")
        ->check(CLI::PositiveNumber);
    std::vector<long> seeds;
    app.add_option("--seed", seeds, "override the optimizer seed list");
    bool reproduce_paper = false;
    app.add_flag("--reproduce-paper", reproduce_paper,
                 "lg-chsh: reproduce the reference violation via the sigma scan");

    CLI11_PARSE(app, argc, argv);

    try {
        macroq::ExperimentConfig cfg;
        if (!config_path.empty())
            cfg = macroq::ExperimentConfig::from_ini(macroq::IniFile::parse_file(config_path));

        // the positional experiment name wins over (and must agree with) the config
        macroq::ExperimentKind kind;
        if (experiment == "convergence")
            kind = macroq::ExperimentKind::convergence;
        else if (experiment == "identities")
            kind = macroq::ExperimentKind::identities;
        else if (experiment == "lg-chsh")
            kind = macroq::ExperimentKind::lg_chsh;
        else if (experiment == "bell-chsh")
            kind = macroq::ExperimentKind::bell_chsh;
        else if (experiment == "density")
            kind = macroq::ExperimentKind::density;
        else
            throw macroq::ConfigError("unknown experiment: " + experiment);
        if (!config_path.empty() && kind != cfg.kind)
            throw macroq::ConfigError("experiment argument '" + experiment +
                                      "' disagrees with config type '" +
                                      macroq::to_string(cfg.kind) + "'");
        cfg.kind = kind;
        if (reproduce_paper) cfg.reproduce_paper = true;
        if (!seeds.empty()) {
            cfg.seeds.clear();
            for (long s : seeds) cfg.seeds.push_back(std::uint64_t(s));
        }

        macroq::ExperimentRunner runner(cfg, out_dir, threads);
        macroq::RunResult result = runner.run();
        for (const std::string& f : result.files) std::printf("wrote %s\n", f.c_str());
        return 0;
    } catch (const macroq::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    }
}
