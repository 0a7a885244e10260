#pragma once

// Worst-case evaluation protocol: Worst / Worst* / unseen-occupancy metrics,
// feasible-theta rejection sampling for robustness sweeps over correlation
// levels, improvement-bound verification against sphere-sampled rewards, and
// the r grid search.

#include <string>
#include <utility>
#include <vector>

#include "maxminrl/adversary.hpp"
#include "maxminrl/environments.hpp"
#include "maxminrl/linear_adversary.hpp"
#include "maxminrl/rng.hpp"
#include "maxminrl/train.hpp"
#include "maxminrl/types.hpp"

namespace maxminrl {

/// One evaluated policy. `worst` is the expected worst-case reward over the
/// pairs the reference visits; mass on unseen pairs (occ_unseen) is priced at
/// r_min, giving worst_star = worst + occ_unseen * r_min exactly. Returns are
/// in raw reward units; worst/worst_star are in the CorrelationSpec's
/// (M, V) units.
struct MetricsRow {
    std::string policy_id;
    double r_used = 0.0;
    double true_return = 0.0;
    double proxy_return = 0.0;
    double worst = 0.0;
    double worst_star = 0.0;
    double occ_unseen = 0.0;
    double r_min = -10.0;
    /// Worst case restricted to the linear reward family; present only when
    /// the environment carries a feature map.
    bool has_linear = false;
    double linear_worst = 0.0;
    bool linear_dual_converged = true;
    Vec theta_whitened;  ///< adversarial weights in whitened coordinates
    Vec theta_raw;       ///< the same weights pulled back to raw features
};

/// Accepted adversarial weight vectors from hypercube rejection sampling.
struct ThetaSamples {
    std::vector<Vec> thetas;
    long long n_proposed = 0;
    /// Set when the acceptance rate fell below 1e-4 before n were accepted.
    bool infeasible = false;
    std::string diagnostics;
};

/// One (r, policy) cell of a robustness sweep: moments of <mu_pi, theta^T phi>
/// over the cell's accepted thetas.
struct SweepCell {
    double r = 0.0;
    std::string policy_id;
    double mean = 0.0;
    double std_dev = 0.0;
    int n_accepted = 0;
    long long n_proposed = 0;
    /// Fewer than two accepted samples: std_dev is reported as 0.
    bool std_degenerate = false;
    bool infeasible = false;
};

struct SweepResult {
    std::vector<SweepCell> cells;
};

/// Margin distribution of J(pi, R) - J(pi_ref, R) against the guaranteed
/// improvement bound over sampled feasible rewards.
struct Theorem1Report {
    long n_samples = 0;
    long n_violations = 0;
    double bound = 0.0;
    double min_margin = 0.0;
    double max_margin = 0.0;
    double mean_margin = 0.0;
};

struct GridSearchRow {
    double r = 0.0;
    MetricsRow metrics;
    SoftmaxPolicy policy;
};

struct GridSearchResult {
    double best_r = 0.0;
    std::vector<GridSearchRow> rows;
};

/// Worst-case reward restricted to the reference support, allowing the policy
/// to carry mass off-support (that mass is priced separately). On the seen
/// pairs, with restricted mass m = sum mu_pi, restricted proxy mean E and
/// ratio L = mu_pi / mu_ref:
///   R*(x) = M + r V proxy(x) - V sqrt(1-r^2) (L(x) - m - E proxy(x)) / sqrt(t2),
/// t2 = ||L||^2_ref - m^2 - E^2 >= 0. At full support this is exactly the
/// dual-form adversarial reward; at t2 < eps (or r = 1) the correction drops.
MaskedReward restricted_worst_reward(const OccupancyMeasure& occ_pi,
                                     const OccupancyMeasure& occ_ref,
                                     const RewardTable& proxy_norm,
                                     const CorrelationSpec& spec,
                                     double eps = 1e-12);

/// Evaluates one policy with exact occupancies: raw true/proxy returns, the
/// seen/unseen partition, Worst = sum_seen mu_pi R*, Worst* = Worst +
/// occ_unseen * r_min, and (when features exist) the linear-family worst case
/// with its theta report. The caller assigns policy_id.
MetricsRow evaluate_policy(const EnvBundle& bundle, const SoftmaxPolicy& policy,
                           const CorrelationSpec& spec, double r_min = -10.0);

/// Rejection-samples weight vectors componentwise uniform on [0,1]^dim,
/// accepting theta when |corr_{mu_ref}(theta^T phi, proxy_norm) - r| <= tol.
/// Proposals are capped at 10000 * n, which encodes the 1e-4 acceptance-rate
/// threshold: hitting the cap with fewer than n accepted sets the
/// infeasibility warning. Weights are in raw feature coordinates and no scale
/// normalization is applied.
ThetaSamples sample_feasible_thetas(const OccupancyMeasure& occ_ref,
                                    const FeatureMap& features,
                                    const RewardTable& proxy_norm, double r,
                                    int n, double tol, RandomStream& rng);

/// Mean/std of <mu_pi, theta^T phi> per (r, policy) cell over that cell's
/// accepted thetas. Cells are independent with RNG streams child(cell_index)
/// of the master stream, so results do not depend on jobs. policy_ids may be
/// empty (ids default to policy_<index>). Cells that accept nothing report
/// zero moments with the infeasibility flag set.
SweepResult robustness_sweep(const EnvBundle& bundle,
                             const std::vector<SoftmaxPolicy>& policies,
                             const std::vector<std::string>& policy_ids,
                             const std::vector<double>& r_grid, int n_samples,
                             double tol, const RandomStream& master, int jobs = 1);

/// Samples n_rewards feasible rewards from the constraint sphere and checks
/// J(pi, R) - J(pi_ref, R) >= improvement_lower_bound - 1e-8 for each.
/// Any violation throws TheoremViolationError; otherwise the margin
/// distribution is returned.
Theorem1Report verify_theorem1(const EnvBundle& bundle,
                               const SoftmaxPolicy& policy,
                               const CorrelationSpec& spec, long n_rewards,
                               RandomStream& rng);

/// Trains one policy per grid value (config.r overridden), evaluates each at
/// its own training r, and returns the argmax of Worst with the full table
/// (rows in ascending r). Ties break toward the smaller r.
GridSearchResult r_grid_search(const EnvBundle& bundle, Algorithm algorithm,
                               const std::vector<double>& r_grid,
                               const TrainConfig& config, double r_min = -10.0);

/// CSV writers (17 significant digits). Metrics columns: policy_id, r,
/// true_return, proxy_return, worst, occ_unseen, r_min, worst_star,
/// linear_worst, theta_0..k, theta_raw_0..k, linear_dual_converged — the
/// optional linear fields are empty for rows without features. Sweep
/// columns: r, policy_id, mean, std, n_accepted, n_proposed.
std::string metrics_csv(const std::vector<MetricsRow>& rows);
std::string sweep_csv(const SweepResult& result);

}  // namespace maxminrl
