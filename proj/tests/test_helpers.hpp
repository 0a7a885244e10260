// Shared instance builders for the test suites.

#pragma once

#include <vector>

#include <maxminrl/mdp.hpp>
#include <maxminrl/rng.hpp>
#include <maxminrl/types.hpp>

namespace testutil {

using namespace maxminrl;

/// Random dense MDP with strictly positive rows.
inline TabularMdp random_mdp(int n_states, int n_actions, double gamma,
                             RandomStream& rng) {
    TabularMdp mdp;
    mdp.n_states = n_states;
    mdp.n_actions = n_actions;
    mdp.gamma = gamma;
    mdp.transition = Mat(n_states * n_actions, n_states);
    for (int row = 0; row < mdp.transition.rows(); ++row) {
        double total = 0.0;
        for (int s = 0; s < n_states; ++s) {
            const double w = 0.05 + rng.uniform01();
            mdp.transition(row, s) = w;
            total += w;
        }
        mdp.transition.row(row) /= total;
    }
    mdp.initial = Vec(n_states);
    double total = 0.0;
    for (int s = 0; s < n_states; ++s) {
        const double w = 0.05 + rng.uniform01();
        mdp.initial(s) = w;
        total += w;
    }
    mdp.initial /= total;
    return mdp;
}

inline SoftmaxPolicy random_policy(int n_states, int n_actions, double scale,
                                   RandomStream& rng) {
    SoftmaxPolicy policy;
    policy.logits = Mat(n_states, n_actions);
    for (int s = 0; s < n_states; ++s)
        for (int a = 0; a < n_actions; ++a)
            policy.logits(s, a) = scale * rng.normal();
    return policy;
}

/// Occupancy with explicit weights (for handcrafted instances).
inline OccupancyMeasure occupancy(std::vector<double> weights,
                                  bool exact = true) {
    OccupancyMeasure occ;
    occ.weights = Eigen::Map<Vec>(weights.data(),
                                  static_cast<long>(weights.size()));
    occ.exact = exact;
    return occ;
}

inline Vec vec(std::vector<double> values) {
    return Eigen::Map<Vec>(values.data(), static_cast<long>(values.size()));
}

/// A proxy table normalized (mean 0, variance 1) under the given reference
/// occupancy, built by standardizing Gaussian draws.
inline Vec random_normalized_proxy(const OccupancyMeasure& occ_ref,
                                   RandomStream& rng) {
    const long n = occ_ref.weights.size();
    Vec raw(n);
    for (long i = 0; i < n; ++i) raw(i) = rng.normal();
    const double mean = occ_ref.weights.dot(raw) / occ_ref.weights.sum();
    raw.array() -= mean;
    double var = 0.0;
    for (long i = 0; i < n; ++i)
        var += occ_ref.weights(i) * raw(i) * raw(i);
    var /= occ_ref.weights.sum();
    return raw / std::sqrt(var);
}

}  // namespace testutil
