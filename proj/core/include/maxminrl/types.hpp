// types.hpp — tabular MDP, softmax policy, occupancy measure, trajectories.
//
// Conventions used throughout maxminrl:
//   * State-action pairs are flattened as pair = state * n_actions + action.
//   * Reward tables are Eigen vectors of length n_states * n_actions.
//   * The discounted occupancy measure is normalized: an exact occupancy sums
//     to 1; an empirical occupancy from finite-horizon trajectories sums to
//     1 - gamma^horizon (truncation deficit).

#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "maxminrl/errors.hpp"

namespace maxminrl {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// A reward table indexed by flattened state-action pair.
using RewardTable = Vec;

/// Finite MDP with dense transitions.
struct TabularMdp {
    int n_states = 0;
    int n_actions = 0;
    /// Row (s * n_actions + a) holds P(. | s, a); each row sums to 1.
    Mat transition;
    /// Initial state distribution, length n_states.
    Vec initial;
    /// Discount factor in (0, 1).
    double gamma = 0.0;

    int pair_count() const { return n_states * n_actions; }
    int pair_index(int state, int action) const {
        return state * n_actions + action;
    }

    /// Throws InvalidModelError unless rows are stochastic within row_tol,
    /// the initial distribution is a distribution, and gamma is in (0, 1).
    void validate(double row_tol = 1e-10) const;
};

/// A policy stored as logits; action probabilities are the row-wise softmax,
/// so every action has strictly positive probability (full support).
struct SoftmaxPolicy {
    /// n_states x n_actions.
    Mat logits;

    /// Row-stochastic n_states x n_actions probability matrix.
    Mat probabilities() const;

    /// Uniform policy (zero logits).
    static SoftmaxPolicy uniform(int n_states, int n_actions);

    /// Policy matching the given strictly positive probability rows.
    /// Throws InvalidModelError if any probability is <= 0 or rows do not
    /// normalize within tol.
    static SoftmaxPolicy from_probabilities(const Mat& probs, double tol = 1e-8);

    void validate() const;
};

/// Discounted state-action occupancy measure.
struct OccupancyMeasure {
    /// Length n_states * n_actions; nonnegative.
    Vec weights;
    /// True when produced by the exact linear solve (then total() == 1 within
    /// 1e-8); false for empirical estimates (total() <= 1).
    bool exact = true;

    double total() const { return weights.sum(); }

    /// Structural checks: nonnegative weights; exact measures sum to 1 within
    /// tol, empirical measures sum to <= 1 + tol.
    void validate(double tol = 1e-8) const;
};

/// A batch of trajectories sampled from one policy, with the seed that
/// produced it recorded so independence requirements can be checked.
struct TrajectoryBatch {
    /// states[i][t], actions[i][t] for trajectory i, step t.
    std::vector<std::vector<int>> states;
    std::vector<std::vector<int>> actions;
    double gamma = 0.0;
    int horizon = 0;
    std::uint64_t seed = 0;

    int size() const { return static_cast<int>(states.size()); }
};

}  // namespace maxminrl
