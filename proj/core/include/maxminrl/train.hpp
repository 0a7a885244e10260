// train.hpp — outer-loop policy optimization.
//
// Three algorithms share one skeleton: estimate the occupancy/ratio state,
// build a per-pair pseudo-reward whose policy gradient equals the analytic
// gradient of the algorithm's scalar objective, then take a line-searched
// ascent step. Exact mode computes occupancies by linear solves and is fully
// deterministic given the config seed (used only for the initialization
// jitter); sampled mode estimates everything from trajectory batches and a
// learned discriminator, and updates via a clipped surrogate.

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "maxminrl/adversary.hpp"
#include "maxminrl/environments.hpp"
#include "maxminrl/estimators.hpp"
#include "maxminrl/linear_adversary.hpp"
#include "maxminrl/types.hpp"

namespace maxminrl {

enum class Algorithm { maxmin, linear_maxmin, orpo };
enum class BatchMode { exact, sampled };

Algorithm algorithm_from_string(const std::string& name);
std::string to_string(Algorithm algorithm);
BatchMode batch_mode_from_string(const std::string& name);
std::string to_string(BatchMode mode);

struct TrainConfig {
    Algorithm algorithm = Algorithm::maxmin;
    double r = 0.5;
    int iterations = 200;
    BatchMode mode = BatchMode::exact;
    double step_size = 2.0;  ///< initial logit step; backtracking halves it
    double clip_ratio = 0.2;  ///< sampled-mode surrogate clip
    std::uint64_t seed = 0;
    /// Stddev of the seeded Gaussian jitter added to the reference logits at
    /// initialization. Makes exact-mode seeds meaningful and moves the start
    /// off the reference policy, where the robust objective has a square-root
    /// kink.
    double init_noise = 0.01;
    int batch_trajectories = 200;  ///< sampled mode: trajectories per batch
    int horizon = 0;               ///< sampled mode: 0 = default_horizon
    int surrogate_epochs = 10;     ///< sampled mode: ascent epochs/iteration
    RatioTrainConfig ratio_train{};  ///< sampled mode: discriminator schedule
    int line_search_max = 30;  ///< max backtracking halvings per iteration
    double eps_h = 1e-12;      ///< degenerate threshold for h and chi2

    void validate() const;
};

/// One row of the training log, describing the policy after the iteration's
/// update (exact mode) or the iteration's working estimates (sampled mode).
struct TrainRecord {
    int iteration = 0;
    double objective = 0.0;     ///< robust value / frozen-theta value / ORPO value
    double proxy_return = 0.0;  ///< normalized proxy return E
    double chi2 = 0.0;
    double h = 0.0;
    double lambda1 = 0.0;  ///< ORPO stores its penalty coefficient here
    double lambda2 = 0.0;
    double lambda3 = 0.0;
    Vec theta;  ///< linear algorithm only: whitened theta*
    bool degenerate = false;
    bool dual_converged = true;  ///< linear algorithm only
};

struct TrainLog {
    Algorithm algorithm = Algorithm::maxmin;
    std::vector<TrainRecord> records;

    /// CSV with 17-significant-digit numbers. Columns: iteration, objective,
    /// proxy_return, chi2, h, then lambda1..3 (maxmin/orpo) or theta_0..k
    /// plus dual_converged (linear), then degenerate.
    std::string to_csv() const;
};

/// ORPO penalty coefficient lambda = sigma * sqrt(1 - r^2), with sigma the
/// raw proxy standard deviation under the reference occupancy.
double orpo_lambda(double sigma_raw, double r);

/// Ascent objective of the robust algorithm in normalized units:
///   E - (sqrt(1 - r^2) / r) * sqrt(h).
/// This is robust_value / r at M = 0, V = 1; both rank policies identically.
double maxmin_objective(const RobustStats& stats, double r);

/// ORPO objective E - lambda * sqrt(chi2).
double orpo_objective(const RobustStats& stats, double lambda);

/// Per-pair pseudo-reward whose policy gradient equals the gradient of
/// maxmin_objective:
///   proxy - (sqrt(1-r^2)/r) (1/sqrt(h)) (L - E * proxy).
/// At r = 1 or h < eps_h this degenerates to the bare proxy (the correction
/// coefficient vanishes / the square root is singular).
RewardTable maxmin_pseudo_reward(const LogRatioModel& ratio,
                                 const RewardTable& proxy_norm,
                                 const RobustStats& stats, double r,
                                 double eps_h = 1e-12);

/// Per-pair pseudo-reward for ORPO: proxy - (lambda / sqrt(chi2)) * L, with
/// the bare-proxy fallback at lambda = 0 or chi2 < eps.
RewardTable orpo_pseudo_reward(const LogRatioModel& ratio,
                               const RewardTable& proxy_norm, double chi2,
                               double lambda, double eps = 1e-12);

/// Exact gradient of <mu_pi, pseudo> with respect to the policy logits,
/// via two linear solves: grad(s,b) = mu(s,b) * (Q(s,b) - V(s)).
Mat policy_gradient_exact(const TabularMdp& mdp, const SoftmaxPolicy& policy,
                          const RewardTable& pseudo);

/// One plain ascent step of the exact policy gradient. Throws
/// DivergenceError on a non-finite gradient.
SoftmaxPolicy policy_gradient_step(const TabularMdp& mdp,
                                   const SoftmaxPolicy& policy,
                                   const RewardTable& pseudo,
                                   double step_size);

std::pair<SoftmaxPolicy, TrainLog> train_maxmin(const EnvBundle& bundle,
                                                const TrainConfig& config);
std::pair<SoftmaxPolicy, TrainLog> train_linear_maxmin(const EnvBundle& bundle,
                                                       const TrainConfig& config);
std::pair<SoftmaxPolicy, TrainLog> train_orpo(const EnvBundle& bundle,
                                              const TrainConfig& config);

/// Dispatches on config.algorithm.
std::pair<SoftmaxPolicy, TrainLog> train(const EnvBundle& bundle,
                                         const TrainConfig& config);

}  // namespace maxminrl
