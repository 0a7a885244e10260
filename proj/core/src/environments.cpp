// environments.cpp — Tomato-watering gridworld and the random chain MDP.

#include "maxminrl/environments.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

#include "maxminrl/errors.hpp"
#include "maxminrl/estimators.hpp"
#include "maxminrl/mdp.hpp"
#include "maxminrl/rng.hpp"

namespace maxminrl {

namespace {

constexpr int kTomatoActions = 5;  // up, down, left, right, stay
constexpr int kStayAction = 4;

std::vector<double> to_std(const Vec& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

nlohmann::json matrix_to_json(const Mat& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < m.rows(); ++i) {
        rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
    }
    return rows;
}

int moved_cell(int cell, int action, int width, int height) {
    int x = cell % width;
    int y = cell / width;
    switch (action) {
        case 0: y = std::max(y - 1, 0); break;
        case 1: y = std::min(y + 1, height - 1); break;
        case 2: x = std::max(x - 1, 0); break;
        case 3: x = std::min(x + 1, width - 1); break;
        default: break;  // stay
    }
    return y * width + x;
}

int wet_count(int mask) { return std::popcount(static_cast<unsigned>(mask)); }

}  // namespace

void TomatoConfig::validate() const {
    if (width < 1 || height < 1) {
        throw InvalidModelError("tomato grid must be at least 1x1");
    }
    const int cells = width * height;
    if (tomato_cells.empty() || tomato_cells.size() > 4) {
        throw InvalidModelError(
            "tomato count must be between 1 and 4 to keep the state space "
            "tabular, got " +
            std::to_string(tomato_cells.size()));
    }
    std::vector<int> sorted = tomato_cells;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw InvalidModelError("tomato cells must be distinct");
    }
    for (const int c : tomato_cells) {
        if (c < 0 || c >= cells) {
            throw InvalidModelError("tomato cell " + std::to_string(c) +
                                    " outside the grid");
        }
        if (c == sprinkler_cell) {
            throw InvalidModelError(
                "sprinkler cell must be distinct from every tomato cell");
        }
    }
    if (sprinkler_cell < 0 || sprinkler_cell >= cells) {
        throw InvalidModelError("sprinkler cell outside the grid");
    }
    if (!(dry_prob > 0.0) || !(dry_prob < 1.0)) {
        throw InvalidModelError("dry probability must lie in (0, 1)");
    }
    if (!(exploration_rate > 0.0) || !(exploration_rate < 1.0)) {
        throw InvalidModelError("exploration rate must lie in (0, 1)");
    }
    if (!(sprinkler_bonus >= 0.0) || !std::isfinite(sprinkler_bonus)) {
        throw InvalidModelError("sprinkler bonus must be finite and >= 0");
    }
    if (!(discount > 0.0) || !(discount < 1.0)) {
        throw InvalidModelError("discount must lie in (0, 1)");
    }
    if (!(vi_temperature > 0.0)) {
        throw InvalidModelError("value-iteration temperature must be positive");
    }
    const long pairs = static_cast<long>(cells) *
                       (1L << tomato_cells.size()) * kTomatoActions;
    if (pairs > max_pairs) {
        std::ostringstream msg;
        msg << "tomato configuration needs " << pairs
            << " state-action pairs, above the cap of " << max_pairs;
        throw InvalidModelError(msg.str());
    }
}

EnvBundle make_tomato(const TomatoConfig& config) {
    config.validate();
    const int cells = config.width * config.height;
    const int n_tomatoes = static_cast<int>(config.tomato_cells.size());
    const int n_masks = 1 << n_tomatoes;
    const int n_states = cells * n_masks;

    EnvBundle bundle;
    bundle.name = "tomato";
    bundle.mdp.n_states = n_states;
    bundle.mdp.n_actions = kTomatoActions;
    bundle.mdp.gamma = config.discount;
    bundle.mdp.transition = Mat::Zero(n_states * kTomatoActions, n_states);
    bundle.mdp.initial = Vec::Zero(n_states);

    // Start anywhere on the grid with every tomato dry.
    for (int c = 0; c < cells; ++c) {
        bundle.mdp.initial[c * n_masks + 0] = 1.0 / cells;
    }

    for (int pos = 0; pos < cells; ++pos) {
        for (int mask = 0; mask < n_masks; ++mask) {
            const int state = pos * n_masks + mask;
            for (int action = 0; action < kTomatoActions; ++action) {
                const int row = bundle.mdp.pair_index(state, action);
                const int next_pos =
                    moved_cell(pos, action, config.width, config.height);
                // Stepping onto a tomato waters it; that tomato cannot dry on
                // the same step.
                int watered = -1;
                for (int j = 0; j < n_tomatoes; ++j) {
                    if (config.tomato_cells[j] == next_pos) watered = j;
                }
                for (int next_mask = 0; next_mask < n_masks; ++next_mask) {
                    double prob = 1.0;
                    for (int j = 0; j < n_tomatoes && prob > 0.0; ++j) {
                        const bool was_wet = (mask >> j) & 1;
                        const bool now_wet = (next_mask >> j) & 1;
                        if (j == watered) {
                            if (!now_wet) prob = 0.0;
                        } else if (was_wet) {
                            prob *= now_wet ? 1.0 - config.dry_prob
                                            : config.dry_prob;
                        } else if (now_wet) {
                            prob = 0.0;
                        }
                    }
                    if (prob > 0.0) {
                        bundle.mdp.transition(row, next_pos * n_masks + next_mask) =
                            prob;
                    }
                }
            }
        }
    }
    bundle.mdp.validate();

    const int pairs = bundle.mdp.pair_count();
    bundle.true_raw = Vec::Zero(pairs);
    bundle.proxy_raw = Vec::Zero(pairs);
    for (int state = 0; state < n_states; ++state) {
        const int pos = state / n_masks;
        const int mask = state % n_masks;
        const double wet = wet_count(mask);
        const bool at_sprinkler = pos == config.sprinkler_cell;
        double proxy = wet;
        if (at_sprinkler) {
            proxy = config.sprinkler_replaces
                        ? config.sprinkler_bonus
                        : wet + config.sprinkler_bonus;
        }
        for (int action = 0; action < kTomatoActions; ++action) {
            const int row = bundle.mdp.pair_index(state, action);
            bundle.true_raw[row] = wet;
            bundle.proxy_raw[row] = proxy;
        }
    }

    // Reference: softened optimal behavior on the *true* reward, mixed with
    // uniform exploration so every action keeps positive probability.
    const Vec q_star = value_iteration(bundle.mdp, bundle.true_raw);
    Mat logits(n_states, kTomatoActions);
    for (int state = 0; state < n_states; ++state) {
        for (int action = 0; action < kTomatoActions; ++action) {
            logits(state, action) =
                q_star[bundle.mdp.pair_index(state, action)] /
                config.vi_temperature;
        }
    }
    SoftmaxPolicy sharp{logits};
    Mat probs = sharp.probabilities();
    probs = (1.0 - config.exploration_rate) * probs;
    probs.array() += config.exploration_rate / kTomatoActions;
    bundle.reference = SoftmaxPolicy::from_probabilities(probs);

    bundle.metadata = nlohmann::json{
        {"width", config.width},
        {"height", config.height},
        {"tomato_cells", config.tomato_cells},
        {"sprinkler_cell", config.sprinkler_cell},
        {"dry_prob", config.dry_prob},
        {"sprinkler_bonus", config.sprinkler_bonus},
        {"exploration_rate", config.exploration_rate},
        {"sprinkler_replaces", config.sprinkler_replaces},
        {"discount", config.discount},
        {"vi_temperature", config.vi_temperature}};

    if (!config.sprinkler_replaces) {
        bundle.features = tomato_features(bundle);
    }
    return bundle;
}

FeatureMap tomato_features(const EnvBundle& bundle) {
    if (!bundle.metadata.contains("tomato_cells")) {
        throw InvalidModelError(
            "tomato_features requires a tomato environment bundle");
    }
    const int n_tomatoes =
        static_cast<int>(bundle.metadata.at("tomato_cells").size());
    const int n_masks = 1 << n_tomatoes;
    const int sprinkler = bundle.metadata.at("sprinkler_cell").get<int>();
    const double bonus = bundle.metadata.at("sprinkler_bonus").get<double>();

    const int pairs = bundle.mdp.pair_count();
    FeatureMap features;
    features.dim = 3;
    features.values = Mat::Zero(pairs, 3);
    double residual = 0.0;
    for (int state = 0; state < bundle.mdp.n_states; ++state) {
        const int pos = state / n_masks;
        const int mask = state % n_masks;
        for (int action = 0; action < bundle.mdp.n_actions; ++action) {
            const int row = bundle.mdp.pair_index(state, action);
            features.values(row, 0) = wet_count(mask);
            features.values(row, 1) = pos == sprinkler ? 1.0 : 0.0;
            features.values(row, 2) = action != kStayAction ? 1.0 : 0.0;
            const double rebuilt =
                features.values(row, 0) + bonus * features.values(row, 1);
            residual =
                std::max(residual, std::abs(bundle.proxy_raw[row] - rebuilt));
        }
    }
    if (residual > 1e-10) {
        std::ostringstream msg;
        msg << "proxy reward is not wetcount + bonus * sprinkler-indicator "
            << "(max residual " << residual << "); the feature map cannot "
            << "represent it";
        throw FeatureMismatchError(msg.str(), residual);
    }
    return features;
}

EnvBundle make_chain(int n_states, double discount, std::uint64_t seed,
                     int n_actions, double true_corr) {
    if (n_states < 2) {
        throw InvalidModelError("chain MDP needs at least 2 states");
    }
    if (n_actions < 1) {
        throw InvalidModelError("chain MDP needs at least 1 action");
    }
    if (!(discount > 0.0) || !(discount < 1.0)) {
        throw InvalidModelError("discount must lie in (0, 1)");
    }
    if (!(true_corr > 0.0) || !(true_corr <= 1.0)) {
        throw InvalidModelError("true_corr must lie in (0, 1]");
    }

    RandomStream rng(seed);
    EnvBundle bundle;
    bundle.name = "chain";
    bundle.mdp.n_states = n_states;
    bundle.mdp.n_actions = n_actions;
    bundle.mdp.gamma = discount;
    bundle.mdp.initial = Vec::Constant(n_states, 1.0 / n_states);
    bundle.mdp.transition = Mat::Zero(n_states * n_actions, n_states);
    for (int row = 0; row < n_states * n_actions; ++row) {
        double total = 0.0;
        for (int s = 0; s < n_states; ++s) {
            // Exponential draws normalize to a uniform point on the simplex,
            // keeping every transition strictly positive.
            const double e = -std::log(1.0 - rng.uniform01());
            bundle.mdp.transition(row, s) = e;
            total += e;
        }
        bundle.mdp.transition.row(row) /= total;
    }
    bundle.mdp.validate();
    bundle.reference = SoftmaxPolicy::uniform(n_states, n_actions);

    const int pairs = bundle.mdp.pair_count();
    bundle.proxy_raw = Vec(pairs);
    for (int i = 0; i < pairs; ++i) bundle.proxy_raw[i] = rng.normal();

    const OccupancyMeasure occ_ref = exact_occupancy(bundle.mdp, bundle.reference);
    const ProxyMoments moments = proxy_moments_exact(occ_ref, bundle.proxy_raw);
    const RewardTable proxy_norm = normalize_proxy(bundle.proxy_raw, moments);

    // Gram-Schmidt a noise direction against {constant, proxy} under the
    // reference occupancy so the true reward hits the target correlation
    // exactly.
    const auto ref_dot = [&](const Vec& a, const Vec& b) {
        return (occ_ref.weights.array() * a.array() * b.array()).sum();
    };
    Vec unit = Vec::Zero(pairs);
    for (int attempt = 0; attempt < 100; ++attempt) {
        Vec noise(pairs);
        for (int i = 0; i < pairs; ++i) noise[i] = rng.normal();
        noise.array() -= ref_dot(noise, Vec::Ones(pairs));
        noise -= ref_dot(noise, proxy_norm) * proxy_norm;
        const double norm = std::sqrt(std::max(ref_dot(noise, noise), 0.0));
        if (norm > 1e-12) {
            unit = noise / norm;
            break;
        }
        if (attempt == 99) {
            throw DegenerateProxyError(
                "could not draw a noise direction independent of the proxy");
        }
    }
    bundle.true_raw = true_corr * proxy_norm +
                      std::sqrt(1.0 - true_corr * true_corr) * unit;

    bundle.metadata = nlohmann::json{{"n_states", n_states},
                                     {"n_actions", n_actions},
                                     {"discount", discount},
                                     {"seed", seed},
                                     {"true_corr", true_corr}};
    return bundle;
}

nlohmann::json EnvBundle::debug_dump() const {
    nlohmann::json dump{{"name", name},
                        {"metadata", metadata},
                        {"n_states", mdp.n_states},
                        {"n_actions", mdp.n_actions},
                        {"gamma", mdp.gamma},
                        {"initial", to_std(mdp.initial)},
                        {"proxy_raw", to_std(proxy_raw)},
                        {"true_raw", to_std(true_raw)},
                        {"reference_probabilities",
                         matrix_to_json(reference.probabilities())}};
    if (features.has_value()) {
        dump["features"] = matrix_to_json(features->values);
        dump["feature_dim"] = features->dim;
    }
    return dump;
}

}  // namespace maxminrl
