// Command-line front end for the registered experiments.
//
// Exit codes: 0 all checks pass, 1 a threshold check failed, 2 configuration
// rejected (nothing written), 3 numeric failure during the run.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <malloc.h>

#include <CLI11.hpp>

#include "experiments.hpp"
#include "ltsi/ltsi.hpp"

int main(int argc, char** argv) {
    using namespace ltsi::cli;
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
    CLI::App app{"Local time-space integrals and SDELT experiments"};
    std::string experiment, config_path, out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> paths;
    std::optional<int> dt_exp;
    std::optional<unsigned> workers;
    bool list = false;
    app.add_option("-e,--experiment", experiment, "experiment name (see --list)");
    app.add_option("-c,--config", config_path, "JSON config or manifest file");
    app.add_option("--seed", seed, "base seed");
    app.add_option("--paths", paths, "number of Monte Carlo paths");
    app.add_option("--dt-exp", dt_exp, "time step is 2^-k");
    app.add_option("-o,--out", out, "output directory");
    app.add_option("-w,--workers", workers, "worker threads");
    app.add_flag("--list", list, "list experiments and exit");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (list) {
        for (const auto& e : registry()) {
            std::printf("%-24s %2d  %s\n%29s[%s]\n", e.name.c_str(), e.criterion, e.description.c_str(), "", e.anchor.c_str());
        }
        return 0;
    }

    ExperimentConfig cfg;
    try {
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw ConfigError("cannot open config " + config_path);
            nlohmann::json j;
            try {
                in >> j;
            } catch (const nlohmann::json::exception& e) {
                throw ConfigError(std::string("config is not valid JSON: ") + e.what());
            }
            cfg = config_from_json(j);
        }
        if (!experiment.empty()) cfg.experiment = experiment;
        if (seed) cfg.seed = *seed;
        if (paths) {
            if (*paths < 1) throw ConfigError("--paths must be >= 1");
            cfg.n_paths = *paths;
        }
        if (dt_exp) cfg.dt_exponent = *dt_exp;
        if (!out.empty()) cfg.output_dir = out;
        if (workers) cfg.workers = *workers;
        if (cfg.experiment.empty()) throw ConfigError("no experiment given");
        validate_config(cfg);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    }

    ExperimentResult res;
    try {
        res = find_experiment(cfg.experiment).run(cfg);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const ltsi::Error& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 3;
    }
    write_artifacts(cfg, res);
    std::cout << cfg.experiment << (res.passed() ? ": PASS\n" : ": FAIL\n") << describe_checks(res);
    return res.passed() ? 0 : 1;
}
