#pragma once

// Registered experiments: one per acceptance criterion, shared by the CLI
// and the acceptance runner.

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace ltsi::cli {

inline constexpr int kSchemaVersion = 1;

/// Rejected configuration; maps to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    std::string experiment;
    int dt_exponent = 16;
    int level_spacing_exponent = 8;
    /// 0 selects the experiment's default.
    std::size_t n_paths = 0;
    std::uint64_t seed = 1;
    std::optional<nlohmann::json> spec;
    std::string output_dir = "out";
    unsigned workers = 1;
};

struct Check {
    std::string name;
    double value;
    std::string relation;
    double threshold;
    bool pass;
};

struct ExperimentResult {
    nlohmann::json summary = nlohmann::json::object();
    std::vector<Check> checks;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    [[nodiscard]] bool passed() const;
};

struct ExperimentInfo {
    std::string name;
    std::string description;
    std::string anchor;
    int criterion;
    std::size_t default_paths;
    std::function<ExperimentResult(const ExperimentConfig&)> run;
};

const std::vector<ExperimentInfo>& registry();
const ExperimentInfo& find_experiment(const std::string& name);

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& c);
void validate_config(const ExperimentConfig& c);

nlohmann::json result_json(const ExperimentConfig& c, const ExperimentResult& r);
nlohmann::json manifest_json(const ExperimentConfig& c);
void write_table_csv(std::ostream& os, const ExperimentResult& r);

/// Writes result.json, table.csv and manifest.json into c.output_dir.
void write_artifacts(const ExperimentConfig& c, const ExperimentResult& r);

/// One line per check, "name value relation threshold PASS|FAIL".
std::string describe_checks(const ExperimentResult& r);

}  // namespace ltsi::cli
