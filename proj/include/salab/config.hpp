#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "salab/problems.hpp"

namespace salab {

using Json = nlohmann::json;

// Fully resolved experiment configuration. Schema-validated: unknown keys are
// errors, overrides apply after validation.
struct ExperimentConfig {
    std::string experiment;
    std::string problem_kind;     // lsa | logcosh
    int dim = 1;
    double mu = 0.0;              // logcosh only
    double c_nonlin = 0.0;        // logcosh only
    std::optional<Vector> x_star; // logcosh requires, lsa derives

    MarkovChainSpec chain;
    MdsSpec mds;
    double gamma1 = 1.0;
    double a = 0.8;

    std::int64_t horizon = 0;
    std::vector<std::int64_t> checkpoints;
    int ensemble = 10000;
    double partition_c = 1.0;
    Vector x1;
    std::vector<std::string> metrics;
    std::uint64_t seed = 0;
    std::optional<std::int64_t> burn_in;  // auto when absent
    bool retain_paths = false;
    std::string output_dir = "out";
    int threads = 1;
    Json extra;  // experiment-specific section, validated by the experiment

    Json raw;          // the resolved document
    std::string hash;  // hex digest of the canonical dump

    static ExperimentConfig load(const std::filesystem::path& path,
                                 const std::vector<std::string>& overrides = {});
    static ExperimentConfig from_json(Json doc);

    Instance build_instance() const;
    StepSchedule schedule() const { return StepSchedule(gamma1, a); }
};

std::string config_hash(const Json& doc);

// temp-then-rename file write
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

Matrix json_to_matrix(const Json& j, const char* what);
Vector json_to_vector(const Json& j, const char* what);

}  // namespace salab
