// estimators.hpp — empirical occupancies, proxy-reward moments, double
// sampling, chi-squared divergence, and occupancy-ratio models (exact table or
// learned logistic discriminator).

#pragma once

#include <cstdint>
#include <vector>

#include "maxminrl/rng.hpp"
#include "maxminrl/types.hpp"

namespace maxminrl {

/// First and second moments of a raw proxy reward under the reference policy.
struct ProxyMoments {
    double mean = 0.0;
    double variance = 0.0;
    /// sqrt(variance), floored at 1e-8; always > 0 for a valid instance.
    double std_dev = 0.0;
};

/// Which density ratio a model represents.
enum class RatioDirection {
    /// d(s,a) = log( mu_pi / mu_ref )
    policy_over_ref,
    /// d(s,a) = log( mu_ref / mu_pi )
    ref_over_policy,
};

/// One entry of a discriminator training log.
struct EpochLoss {
    int epoch = 0;
    double loss = 0.0;
};

/// Schedule for the learned ratio estimator.
struct RatioTrainConfig {
    int epochs = 400;
    double step_size = 2.0;
    /// 0 = full batch; otherwise pairs per gradient step.
    int minibatch = 0;
    int hidden_units = 32;
    /// Log-ratio outputs are clipped to [-clip, clip] before exponentiation.
    double clip = 30.0;
    std::uint64_t seed = 0;
};

/// Log-density-ratio model: either an exact table on the reference support or
/// a small one-hidden-layer tanh network over one-hot state-action inputs.
struct LogRatioModel {
    enum class Mode { exact_table, learned };

    Mode mode = Mode::exact_table;
    RatioDirection direction = RatioDirection::policy_over_ref;
    double clip = 30.0;

    // exact_table mode: log-ratio values with a support mask. Entries with
    // seen[pair] == 0 have no defined ratio (the reference never visits them).
    Vec table;
    std::vector<std::uint8_t> seen;

    // learned mode: d(pair) = w2 . tanh(W1[:, pair] + b1) + b2.
    Mat w1;
    Vec b1;
    Vec w2;
    double b2 = 0.0;

    std::vector<EpochLoss> training_log;

    /// True when the model defines a ratio at this pair (always true for
    /// learned mode).
    bool defined_at(int pair) const;
    /// Log ratio, clipped to [-clip, clip]. Throws SupportViolationError for
    /// undefined table entries.
    double log_ratio(int pair) const;
    /// exp(log_ratio(pair)).
    double ratio(int pair) const;
};

/// Empirical discounted occupancy:
/// mu(s,a) = (1-gamma) (1/N) sum_i sum_t gamma^t 1{s_t=s, a_t=a}.
OccupancyMeasure empirical_occupancy(const TrajectoryBatch& batch,
                                     double discount, int n_states,
                                     int n_actions);

/// Mean discounted return (1-gamma) (1/N) sum_i sum_t gamma^t R(s_t,a_t).
double empirical_return(const TrajectoryBatch& batch, double discount,
                        const RewardTable& reward, int n_actions);

/// Unbiased estimate of (E_mu[R])^2 as the product of two return estimates
/// from independent batches. Throws IndependenceViolationError when the
/// batches share a seed.
double double_sample_square(const TrajectoryBatch& batch_a,
                            const TrajectoryBatch& batch_b, double discount,
                            const RewardTable& reward, int n_actions);

/// Exact population moments under a known occupancy.
ProxyMoments proxy_moments_exact(const OccupancyMeasure& occ_ref,
                                 const RewardTable& raw_proxy);

/// Sampled moments under the reference policy: mean and E[R^2] from
/// batch_ref, squared mean double-sampled across batch_ref x batch_ref_star.
/// Throws DegenerateProxyError when the variance estimate is <= 0.
ProxyMoments proxy_moments_ref(const TrajectoryBatch& batch_ref,
                               const TrajectoryBatch& batch_ref_star,
                               double discount, const RewardTable& raw_proxy,
                               int n_actions);

/// (raw - mean) / std.
RewardTable normalize_proxy(const RewardTable& raw_proxy,
                            const ProxyMoments& moments);

/// chi^2(mu_pi || mu_ref) = sum mu_pi^2 / mu_ref - 1 over the reference
/// support. Throws SupportViolationError on absolute-continuity violations.
double chi_squared(const OccupancyMeasure& occ_pi,
                   const OccupancyMeasure& occ_ref);

/// Sampled chi^2 via the identity chi^2 = E_{mu_pi}[L - 1]: the empirical
/// policy occupancy weights the model's ratio values (e^d - 1), clamped at 0.
/// The model must carry the policy_over_ref direction.
double chi_squared_sampled(const OccupancyMeasure& occ_pi_empirical,
                           const LogRatioModel& ratio);

/// Exact log-ratio table log(mu_pi/mu_ref) (or its reverse) on the reference
/// support, with unseen pairs masked.
LogRatioModel ratio_exact(const OccupancyMeasure& occ_pi,
                          const OccupancyMeasure& occ_ref,
                          RatioDirection direction = RatioDirection::policy_over_ref);

/// Logistic-discriminator loss of a model against discount-weighted empirical
/// pair distributions. With direction policy_over_ref this is
/// E_ref[log(1+e^d)] + E_pi[log(1+e^{-d})]; the reverse direction swaps the
/// signs of d. At d == 0 the loss equals 2 log 2.
double discriminator_loss(const LogRatioModel& model,
                          const TrajectoryBatch& batch_ref,
                          const TrajectoryBatch& batch_pi, int n_states,
                          int n_actions);

/// Train a learned-mode log-ratio model by plain gradient descent on the
/// logistic loss. Throws DivergenceError if the loss becomes non-finite.
LogRatioModel train_ratio_estimator(const TrajectoryBatch& batch_ref,
                                    const TrajectoryBatch& batch_pi,
                                    int n_states, int n_actions,
                                    RatioDirection direction,
                                    const RatioTrainConfig& config);

/// Write a training log as CSV with header "epoch,loss".
std::string training_log_csv(const std::vector<EpochLoss>& log);

}  // namespace maxminrl
