// mdp.cpp — exact occupancy/value solves and trajectory sampling.

#include "maxminrl/mdp.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Dense>

namespace maxminrl {

void TabularMdp::validate(double row_tol) const {
    if (n_states <= 0 || n_actions <= 0) {
        throw InvalidModelError("TabularMdp: state and action counts must be positive");
    }
    if (!(gamma > 0.0 && gamma < 1.0)) {
        throw InvalidModelError("TabularMdp: gamma must lie in (0, 1)");
    }
    if (transition.rows() != pair_count() || transition.cols() != n_states) {
        throw InvalidModelError("TabularMdp: transition must be (n_states*n_actions) x n_states");
    }
    if (initial.size() != n_states) {
        throw InvalidModelError("TabularMdp: initial distribution length mismatch");
    }
    if (!transition.allFinite() || !initial.allFinite()) {
        throw InvalidModelError("TabularMdp: non-finite entries");
    }
    if (transition.minCoeff() < 0.0 || initial.minCoeff() < 0.0) {
        throw InvalidModelError("TabularMdp: negative probabilities");
    }
    for (int row = 0; row < transition.rows(); ++row) {
        const double sum = transition.row(row).sum();
        if (std::abs(sum - 1.0) > row_tol) {
            std::ostringstream msg;
            msg << "TabularMdp: transition row " << row << " sums to " << sum
                << " (tolerance " << row_tol << ")";
            throw InvalidModelError(msg.str());
        }
    }
    if (std::abs(initial.sum() - 1.0) > row_tol) {
        throw InvalidModelError("TabularMdp: initial distribution does not sum to 1");
    }
}

Mat SoftmaxPolicy::probabilities() const {
    Mat probs(logits.rows(), logits.cols());
    for (int s = 0; s < logits.rows(); ++s) {
        const double row_max = logits.row(s).maxCoeff();
        Eigen::RowVectorXd shifted =
            (logits.row(s).array() - row_max).exp().matrix();
        probs.row(s) = shifted / shifted.sum();
    }
    return probs;
}

SoftmaxPolicy SoftmaxPolicy::uniform(int n_states, int n_actions) {
    SoftmaxPolicy policy;
    policy.logits = Mat::Zero(n_states, n_actions);
    return policy;
}

SoftmaxPolicy SoftmaxPolicy::from_probabilities(const Mat& probs, double tol) {
    if (probs.size() == 0 || !probs.allFinite()) {
        throw InvalidModelError("SoftmaxPolicy: probability matrix empty or non-finite");
    }
    if (probs.minCoeff() <= 0.0) {
        throw InvalidModelError(
            "SoftmaxPolicy: probabilities must be strictly positive (full support)");
    }
    for (int s = 0; s < probs.rows(); ++s) {
        if (std::abs(probs.row(s).sum() - 1.0) > tol) {
            throw InvalidModelError("SoftmaxPolicy: probability rows must sum to 1");
        }
    }
    SoftmaxPolicy policy;
    policy.logits = probs.array().log().matrix();
    return policy;
}

void SoftmaxPolicy::validate() const {
    if (logits.size() == 0 || !logits.allFinite()) {
        throw InvalidModelError("SoftmaxPolicy: logits empty or non-finite");
    }
}

void OccupancyMeasure::validate(double tol) const {
    if (weights.size() == 0 || !weights.allFinite()) {
        throw InvalidModelError("OccupancyMeasure: empty or non-finite weights");
    }
    if (weights.minCoeff() < -tol) {
        throw InvalidModelError("OccupancyMeasure: negative weight");
    }
    const double sum = weights.sum();
    if (exact) {
        if (std::abs(sum - 1.0) > tol) {
            throw InvalidModelError("OccupancyMeasure: exact measure must sum to 1");
        }
    } else if (sum > 1.0 + tol) {
        throw InvalidModelError("OccupancyMeasure: empirical measure sums above 1");
    }
}

int default_horizon(double gamma, double tail) {
    if (!(gamma > 0.0 && gamma < 1.0)) {
        throw InvalidModelError("default_horizon: gamma must lie in (0, 1)");
    }
    return static_cast<int>(std::ceil(std::log(tail) / std::log(gamma)));
}

Mat policy_transition(const TabularMdp& mdp, const SoftmaxPolicy& policy) {
    const Mat probs = policy.probabilities();
    Mat p_pi = Mat::Zero(mdp.n_states, mdp.n_states);
    for (int s = 0; s < mdp.n_states; ++s) {
        for (int a = 0; a < mdp.n_actions; ++a) {
            p_pi.row(s) += probs(s, a) * mdp.transition.row(mdp.pair_index(s, a));
        }
    }
    return p_pi;
}

Vec state_distribution(const TabularMdp& mdp, const SoftmaxPolicy& policy) {
    const Mat p_pi = policy_transition(mdp, policy);
    // (I - gamma P_pi^T) d = (1 - gamma) mu0
    const Mat system =
        Mat::Identity(mdp.n_states, mdp.n_states) - mdp.gamma * p_pi.transpose();
    Vec d = system.partialPivLu().solve((1.0 - mdp.gamma) * mdp.initial);
    // The solve is exact up to roundoff; clip tiny negative noise.
    d = d.cwiseMax(0.0);
    return d / d.sum();
}

OccupancyMeasure exact_occupancy(const TabularMdp& mdp,
                                 const SoftmaxPolicy& policy) {
    const Vec d = state_distribution(mdp, policy);
    const Mat probs = policy.probabilities();
    OccupancyMeasure occ;
    occ.exact = true;
    occ.weights = Vec(mdp.pair_count());
    for (int s = 0; s < mdp.n_states; ++s) {
        for (int a = 0; a < mdp.n_actions; ++a) {
            occ.weights[mdp.pair_index(s, a)] = d[s] * probs(s, a);
        }
    }
    return occ;
}

double return_value(const OccupancyMeasure& occupancy,
                    const RewardTable& reward) {
    if (occupancy.weights.size() != reward.size()) {
        throw InvalidModelError("return_value: occupancy/reward length mismatch");
    }
    return occupancy.weights.dot(reward);
}

Vec state_values(const TabularMdp& mdp, const SoftmaxPolicy& policy,
                 const RewardTable& reward) {
    if (reward.size() != mdp.pair_count()) {
        throw InvalidModelError("state_values: reward length mismatch");
    }
    const Mat probs = policy.probabilities();
    Vec c_bar = Vec::Zero(mdp.n_states);
    for (int s = 0; s < mdp.n_states; ++s) {
        for (int a = 0; a < mdp.n_actions; ++a) {
            c_bar[s] += probs(s, a) * reward[mdp.pair_index(s, a)];
        }
    }
    const Mat system = Mat::Identity(mdp.n_states, mdp.n_states) -
                       mdp.gamma * policy_transition(mdp, policy);
    return system.partialPivLu().solve(c_bar);
}

Vec value_iteration(const TabularMdp& mdp, const RewardTable& reward,
                    double tol, int max_iters) {
    if (reward.size() != mdp.pair_count()) {
        throw InvalidModelError("value_iteration: reward length mismatch");
    }
    Vec values = Vec::Zero(mdp.n_states);
    Vec q(mdp.pair_count());
    for (int iter = 0; iter < max_iters; ++iter) {
        Vec next(mdp.n_states);
        for (int s = 0; s < mdp.n_states; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < mdp.n_actions; ++a) {
                const int pair = mdp.pair_index(s, a);
                const double value =
                    reward[pair] + mdp.gamma * mdp.transition.row(pair).dot(values);
                q[pair] = value;
                best = std::max(best, value);
            }
            next[s] = best;
        }
        const double delta = (next - values).cwiseAbs().maxCoeff();
        values = next;
        if (delta < tol) break;
    }
    return q;
}

TrajectoryBatch sample_trajectories(const TabularMdp& mdp,
                                    const SoftmaxPolicy& policy, int n,
                                    int horizon, RandomStream& rng) {
    if (n <= 0 || horizon <= 0) {
        throw InvalidModelError("sample_trajectories: n and horizon must be positive");
    }
    const Mat probs = policy.probabilities();
    TrajectoryBatch batch;
    batch.gamma = mdp.gamma;
    batch.horizon = horizon;
    batch.seed = rng.seed();
    batch.states.resize(n);
    batch.actions.resize(n);
    for (int i = 0; i < n; ++i) {
        batch.states[i].reserve(horizon);
        batch.actions[i].reserve(horizon);
        int state = rng.categorical(mdp.initial);
        for (int t = 0; t < horizon; ++t) {
            const int action = rng.categorical(probs.row(state).transpose());
            batch.states[i].push_back(state);
            batch.actions[i].push_back(action);
            state = rng.categorical(
                mdp.transition.row(mdp.pair_index(state, action)).transpose());
        }
    }
    return batch;
}

}  // namespace maxminrl
