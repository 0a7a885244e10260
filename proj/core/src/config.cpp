// config.cpp — strict JSON run configuration.

#include "maxminrl/config.hpp"

#include <fstream>
#include <sstream>

#include "maxminrl/errors.hpp"

namespace maxminrl {

namespace {

using nlohmann::json;

void require_object(const json& value, const std::string& where) {
    if (!value.is_object()) {
        throw ConfigError("section '" + where + "' must be an object");
    }
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& where) {
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* key : allowed) {
            if (item.key() == key) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw ConfigError("unknown key '" + item.key() + "' in section '" +
                              where + "'");
        }
    }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback,
         const std::string& where) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& err) {
        throw ConfigError("bad value for key '" + std::string(key) +
                          "' in section '" + where + "': " + err.what());
    }
}

TomatoConfig parse_tomato(const json& obj) {
    check_keys(obj,
               {"name", "width", "height", "tomato_cells", "sprinkler_cell",
                "dry_prob", "sprinkler_bonus", "exploration_rate",
                "sprinkler_replaces", "discount", "vi_temperature",
                "max_pairs"},
               "environment");
    TomatoConfig cfg;
    cfg.width = get_or(obj, "width", cfg.width, "environment");
    cfg.height = get_or(obj, "height", cfg.height, "environment");
    cfg.tomato_cells =
        get_or(obj, "tomato_cells", cfg.tomato_cells, "environment");
    cfg.sprinkler_cell =
        get_or(obj, "sprinkler_cell", cfg.sprinkler_cell, "environment");
    cfg.dry_prob = get_or(obj, "dry_prob", cfg.dry_prob, "environment");
    cfg.sprinkler_bonus =
        get_or(obj, "sprinkler_bonus", cfg.sprinkler_bonus, "environment");
    cfg.exploration_rate =
        get_or(obj, "exploration_rate", cfg.exploration_rate, "environment");
    cfg.sprinkler_replaces = get_or(obj, "sprinkler_replaces",
                                    cfg.sprinkler_replaces, "environment");
    cfg.discount = get_or(obj, "discount", cfg.discount, "environment");
    cfg.vi_temperature =
        get_or(obj, "vi_temperature", cfg.vi_temperature, "environment");
    cfg.max_pairs = get_or(obj, "max_pairs", cfg.max_pairs, "environment");
    return cfg;
}

EnvironmentConfig::ChainParams parse_chain(const json& obj) {
    check_keys(obj,
               {"name", "n_states", "n_actions", "discount", "seed",
                "true_corr"},
               "environment");
    EnvironmentConfig::ChainParams params;
    params.n_states = get_or(obj, "n_states", params.n_states, "environment");
    params.n_actions =
        get_or(obj, "n_actions", params.n_actions, "environment");
    params.discount = get_or(obj, "discount", params.discount, "environment");
    params.seed = get_or(obj, "seed", params.seed, "environment");
    params.true_corr =
        get_or(obj, "true_corr", params.true_corr, "environment");
    return params;
}

EnvironmentConfig parse_environment(const json& obj) {
    require_object(obj, "environment");
    if (!obj.contains("name")) {
        throw ConfigError("missing key 'name' in section 'environment'");
    }
    EnvironmentConfig env;
    env.name = get_or<std::string>(obj, "name", "", "environment");
    if (env.name == "tomato") {
        env.tomato = parse_tomato(obj);
    } else if (env.name == "chain") {
        env.chain = parse_chain(obj);
    } else {
        throw ConfigError("unknown environment '" + env.name +
                          "' (expected tomato or chain)");
    }
    return env;
}

RatioTrainConfig parse_ratio_train(const json& obj) {
    require_object(obj, "algorithm.ratio_train");
    check_keys(obj, {"epochs", "step_size", "minibatch", "hidden_units",
                     "clip"},
               "algorithm.ratio_train");
    RatioTrainConfig cfg;
    const std::string where = "algorithm.ratio_train";
    cfg.epochs = get_or(obj, "epochs", cfg.epochs, where);
    cfg.step_size = get_or(obj, "step_size", cfg.step_size, where);
    cfg.minibatch = get_or(obj, "minibatch", cfg.minibatch, where);
    cfg.hidden_units = get_or(obj, "hidden_units", cfg.hidden_units, where);
    cfg.clip = get_or(obj, "clip", cfg.clip, where);
    return cfg;
}

TrainConfig parse_algorithm(const json& obj) {
    require_object(obj, "algorithm");
    check_keys(obj,
               {"name", "r", "iterations", "mode", "step_size", "clip_ratio",
                "init_noise", "batch_trajectories", "horizon",
                "surrogate_epochs", "line_search_max", "eps_h", "ratio_train"},
               "algorithm");
    TrainConfig cfg;
    const std::string where = "algorithm";
    if (!obj.contains("name")) {
        throw ConfigError("missing key 'name' in section 'algorithm'");
    }
    cfg.algorithm =
        algorithm_from_string(get_or<std::string>(obj, "name", "", where));
    cfg.r = get_or(obj, "r", cfg.r, where);
    cfg.iterations = get_or(obj, "iterations", cfg.iterations, where);
    cfg.mode = batch_mode_from_string(
        get_or<std::string>(obj, "mode", to_string(cfg.mode), where));
    cfg.step_size = get_or(obj, "step_size", cfg.step_size, where);
    cfg.clip_ratio = get_or(obj, "clip_ratio", cfg.clip_ratio, where);
    cfg.init_noise = get_or(obj, "init_noise", cfg.init_noise, where);
    cfg.batch_trajectories =
        get_or(obj, "batch_trajectories", cfg.batch_trajectories, where);
    cfg.horizon = get_or(obj, "horizon", cfg.horizon, where);
    cfg.surrogate_epochs =
        get_or(obj, "surrogate_epochs", cfg.surrogate_epochs, where);
    cfg.line_search_max =
        get_or(obj, "line_search_max", cfg.line_search_max, where);
    cfg.eps_h = get_or(obj, "eps_h", cfg.eps_h, where);
    if (obj.contains("ratio_train")) {
        cfg.ratio_train = parse_ratio_train(obj.at("ratio_train"));
    }
    return cfg;
}

EvalConfig parse_evaluation(const json& obj) {
    require_object(obj, "evaluation");
    check_keys(obj,
               {"r_min", "r_grid", "n_theta_samples", "theta_tol",
                "n_theorem_rewards"},
               "evaluation");
    EvalConfig cfg;
    const std::string where = "evaluation";
    cfg.r_min = get_or(obj, "r_min", cfg.r_min, where);
    cfg.r_grid = get_or(obj, "r_grid", cfg.r_grid, where);
    cfg.n_theta_samples =
        get_or(obj, "n_theta_samples", cfg.n_theta_samples, where);
    cfg.theta_tol = get_or(obj, "theta_tol", cfg.theta_tol, where);
    cfg.n_theorem_rewards =
        get_or(obj, "n_theorem_rewards", cfg.n_theorem_rewards, where);
    if (cfg.r_grid.empty()) {
        throw ConfigError("evaluation.r_grid must be non-empty");
    }
    for (double r : cfg.r_grid) {
        if (!(r > 0.0) || !(r <= 1.0)) {
            throw ConfigError("evaluation.r_grid entries must lie in (0, 1]");
        }
    }
    return cfg;
}

OracleConfig parse_oracle(const json& obj) {
    require_object(obj, "oracle");
    check_keys(obj,
               {"duality_instances", "fd_instances", "inequality_triples",
                "theorem_rewards", "sphere_samples", "duality_tol",
                "feasibility_tol", "grad_tol"},
               "oracle");
    OracleConfig cfg;
    const std::string where = "oracle";
    cfg.duality_instances =
        get_or(obj, "duality_instances", cfg.duality_instances, where);
    cfg.fd_instances = get_or(obj, "fd_instances", cfg.fd_instances, where);
    cfg.inequality_triples =
        get_or(obj, "inequality_triples", cfg.inequality_triples, where);
    cfg.theorem_rewards =
        get_or(obj, "theorem_rewards", cfg.theorem_rewards, where);
    cfg.sphere_samples =
        get_or(obj, "sphere_samples", cfg.sphere_samples, where);
    cfg.duality_tol = get_or(obj, "duality_tol", cfg.duality_tol, where);
    cfg.feasibility_tol =
        get_or(obj, "feasibility_tol", cfg.feasibility_tol, where);
    cfg.grad_tol = get_or(obj, "grad_tol", cfg.grad_tol, where);
    return cfg;
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& err) {
        throw ConfigError(std::string("config parse error: ") + err.what());
    }
    require_object(root, "<root>");
    check_keys(root,
               {"seed", "output_dir", "environment", "algorithm", "evaluation",
                "oracle"},
               "<root>");
    RunConfig config;
    config.raw_text = text;
    config.seed = get_or<std::uint64_t>(root, "seed", config.seed, "<root>");
    config.output_dir =
        get_or<std::string>(root, "output_dir", config.output_dir, "<root>");
    if (!root.contains("environment")) {
        throw ConfigError("missing section 'environment'");
    }
    config.environment = parse_environment(root.at("environment"));
    if (root.contains("algorithm")) {
        config.has_algorithm = true;
        config.algorithm = parse_algorithm(root.at("algorithm"));
        try {
            config.algorithm.validate();
        } catch (const Error& err) {
            throw ConfigError(std::string("invalid algorithm section: ") +
                              err.what());
        }
    }
    if (root.contains("evaluation")) {
        config.evaluation = parse_evaluation(root.at("evaluation"));
    }
    if (root.contains("oracle")) {
        config.oracle = parse_oracle(root.at("oracle"));
    }
    return config;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot read config file '" + path + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    try {
        return parse_run_config(buffer.str());
    } catch (const ConfigError& err) {
        throw ConfigError(std::string(err.what()) + " (file '" + path + "')");
    }
}

EnvBundle make_environment(const RunConfig& config) {
    const EnvironmentConfig& env = config.environment;
    if (env.tomato.has_value()) {
        return make_tomato(*env.tomato);
    }
    if (env.chain.has_value()) {
        const auto& p = *env.chain;
        return make_chain(p.n_states, p.discount, p.seed, p.n_actions,
                          p.true_corr);
    }
    throw ConfigError("environment section resolved to no environment");
}

}  // namespace maxminrl
