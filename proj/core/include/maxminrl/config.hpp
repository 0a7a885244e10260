#pragma once

// Run configuration: a strict JSON schema with unknown-key rejection, plus
// environment construction from the parsed config.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "maxminrl/environments.hpp"
#include "maxminrl/train.hpp"

#include <nlohmann/json.hpp>

namespace maxminrl {

/// Evaluation-protocol knobs (all optional in the config).
struct EvalConfig {
    double r_min = -10.0;
    std::vector<double> r_grid = {0.1, 0.2, 0.3, 0.4, 0.5,
                                  0.6, 0.7, 0.8, 0.9};
    int n_theta_samples = 1000;
    double theta_tol = 0.02;
    long n_theorem_rewards = 1000;
};

/// Randomized-oracle suite sizes and tolerances.
struct OracleConfig {
    int duality_instances = 200;
    int fd_instances = 20;
    int inequality_triples = 10000;
    long theorem_rewards = 1000;
    long sphere_samples = 2000;
    double duality_tol = 1e-8;
    double feasibility_tol = 1e-6;
    double grad_tol = 1e-4;
};

/// Which environment to build, with its parameters. Exactly one of the
/// optionals is set.
struct EnvironmentConfig {
    std::string name;
    std::optional<TomatoConfig> tomato;
    struct ChainParams {
        int n_states = 10;
        int n_actions = 2;
        double discount = 0.9;
        std::uint64_t seed = 0;
        double true_corr = 0.7;
    };
    std::optional<ChainParams> chain;
};

/// Top-level run configuration. `algorithm` is only meaningful when the
/// config carried an algorithm section (has_algorithm).
struct RunConfig {
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    EnvironmentConfig environment;
    bool has_algorithm = false;
    TrainConfig algorithm;
    EvalConfig evaluation;
    OracleConfig oracle;
    /// Raw config bytes, kept for hashing into the manifest.
    std::string raw_text;
};

/// Parses a config document. Throws ConfigError on malformed JSON (with the
/// parser's position diagnostics), on unknown keys at any level (naming the
/// key and section), on a missing environment section, and on out-of-domain
/// values.
RunConfig parse_run_config(const std::string& text);

/// Reads and parses a config file; file errors and parse errors both raise
/// ConfigError naming the path.
RunConfig load_run_config(const std::string& path);

/// Builds the configured environment.
EnvBundle make_environment(const RunConfig& config);

}  // namespace maxminrl
