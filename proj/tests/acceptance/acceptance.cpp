// Runs every registered experiment at its reference configuration and prints
// one PASS/FAIL line per acceptance criterion.

#include <chrono>
#include <cstdio>
#include <malloc.h>

#include "experiments.hpp"
#include "ltsi/ltsi.hpp"

int main(int argc, char** argv) {
    using namespace ltsi::cli;
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
    const std::string out_root = argc > 1 ? argv[1] : "acceptance_out";
    int failed = 0;
    for (const auto& info : registry()) {
        ExperimentConfig cfg;
        cfg.experiment = info.name;
        cfg.output_dir = out_root + "/" + info.name;
        cfg.workers = ltsi::default_workers();
        const auto t0 = std::chrono::steady_clock::now();
        bool pass = false;
        std::string detail;
        try {
            validate_config(cfg);
            const auto res = info.run(cfg);
            write_artifacts(cfg, res);
            pass = res.passed();
            detail = describe_checks(res);
        } catch (const std::exception& e) {
            detail = std::string("  error: ") + e.what() + "\n";
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("criterion %2d %-22s %s (%.1fs)\n%s", info.criterion, info.name.c_str(), pass ? "PASS" : "FAIL", secs,
                    detail.c_str());
        std::fflush(stdout);
        failed += pass ? 0 : 1;
    }
    std::printf("%d of %zu criteria passed\n", int(registry().size()) - failed, registry().size());
    return failed == 0 ? 0 : 1;
}
