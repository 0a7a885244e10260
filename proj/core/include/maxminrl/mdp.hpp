// mdp.hpp — exact occupancy measures, returns, value solves, trajectory
// sampling for tabular MDPs.

#pragma once

#include "maxminrl/rng.hpp"
#include "maxminrl/types.hpp"

namespace maxminrl {

/// Smallest horizon T with gamma^T < tail (default 1e-6).
int default_horizon(double gamma, double tail = 1e-6);

/// State-to-state transition matrix under the policy:
/// P_pi(s, s') = sum_a pi(a|s) P(s'|s, a).
Mat policy_transition(const TabularMdp& mdp, const SoftmaxPolicy& policy);

/// Discounted state distribution d with d = (1-gamma) mu0 + gamma P_pi^T d,
/// solved exactly (dense LU). Sums to 1.
Vec state_distribution(const TabularMdp& mdp, const SoftmaxPolicy& policy);

/// Exact discounted state-action occupancy mu(s,a) = d(s) pi(a|s).
OccupancyMeasure exact_occupancy(const TabularMdp& mdp,
                                 const SoftmaxPolicy& policy);

/// Normalized return J = <mu, R> = E_mu[R].
double return_value(const OccupancyMeasure& occupancy,
                    const RewardTable& reward);

/// State values V of the policy for per-pair reward c:
/// V = (I - gamma P_pi)^{-1} c_bar with c_bar(s) = sum_a pi(a|s) c(s,a).
/// Note V is the unnormalized discounted value (no 1-gamma factor).
Vec state_values(const TabularMdp& mdp, const SoftmaxPolicy& policy,
                 const RewardTable& reward);

/// Greedy state-action values from value iteration on the given reward,
/// returned as a reward-table-shaped vector Q(s,a). Iterates until the value
/// function moves less than tol in max norm.
Vec value_iteration(const TabularMdp& mdp, const RewardTable& reward,
                    double tol = 1e-10, int max_iters = 100000);

/// Sample n finite-horizon trajectories. Fully determined by the stream's
/// seed, which is recorded on the returned batch.
TrajectoryBatch sample_trajectories(const TabularMdp& mdp,
                                    const SoftmaxPolicy& policy, int n,
                                    int horizon, RandomStream& rng);

}  // namespace maxminrl
