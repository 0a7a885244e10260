// adversary.hpp — inner minimization over the correlation-constrained reward
// uncertainty set.
//
// Given a policy occupancy, a reference occupancy, and a normalized proxy
// reward, the worst-case true reward has a closed form driven by three dual
// variables. This module computes those duals, the adversarial reward, the
// robust objective value, the improvement lower bound, and feasibility
// residuals. It also carries an independent geometric oracle: the feasible
// set is an affine sphere (constant direction + proxy direction + a sphere in
// their orthogonal complement), so the inner minimum can be recomputed by
// direct projection and by sphere sampling without touching the dual algebra.

#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "maxminrl/estimators.hpp"
#include "maxminrl/rng.hpp"
#include "maxminrl/types.hpp"

namespace maxminrl {

/// Parameters of the reward uncertainty set: every candidate true reward has
/// mean mean_m and standard deviation std_v under the reference occupancy,
/// and Pearson correlation exactly r with the normalized proxy there.
struct CorrelationSpec {
    double r = 0.5;
    double mean_m = 0.0;
    double std_v = 1.0;

    /// Throws InvalidModelError unless 0 < r <= 1 and std_v > 0.
    void validate() const;
};

/// Multipliers of the three equality constraints (correlation, mean, second
/// moment). lambda3 is always negative: of the two stationary roots, the
/// negative one maximizes the dual.
struct DualVariables {
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double lambda3 = -1.0;
    /// True when h = chi2 - E^2 fell below the eps_h floor. lambda3 is then
    /// clamped to a tiny negative value and the adversarial reward is no
    /// longer exactly feasible; training falls back to the pure proxy term.
    bool degenerate = false;
    /// True when r == 1. The uncertainty set collapses to the single reward
    /// mean_m + std_v * proxy and the multipliers are immaterial.
    bool penalty_free = false;
};

/// Sufficient statistics of a policy for the robust objective.
struct RobustStats {
    double chi2 = 0.0;           ///< chi-square divergence of mu_pi from mu_ref
    double proxy_mean_pi = 0.0;  ///< E under mu_pi of the normalized proxy
    double h = 0.0;              ///< chi2 - proxy_mean_pi^2, clamped at 0
};

/// Residuals of a candidate reward against the three uncertainty-set
/// constraints, all measured under the reference occupancy.
struct FeasibilityReport {
    double mean_residual = 0.0;
    double second_moment_residual = 0.0;
    double correlation_residual = 0.0;
    double tolerance = 0.0;
    bool pass = false;

    nlohmann::json to_json() const;
};

/// A reward defined only on the reference support. Pairs the reference never
/// visits carry no value (seen[pair] == 0); the evaluation layer prices them
/// explicitly instead of this module inventing a number.
struct MaskedReward {
    Vec values;                      ///< zero where seen[pair] == 0
    std::vector<std::uint8_t> seen;  ///< 1 iff the pair has a defined value

    int seen_count() const;
};

/// Assembles chi2, the policy's proxy mean, and h from exact or empirical
/// occupancies. Throws SupportViolationError when occ_pi has mass outside the
/// reference support, InvalidModelError when the proxy is not normalized
/// under occ_ref (mean or variance off by more than 1e-6) or when chi2 - E^2
/// is negative beyond numerical tolerance.
RobustStats robust_stats(const OccupancyMeasure& occ_pi,
                         const OccupancyMeasure& occ_ref,
                         const RewardTable& proxy_norm);

/// Closed-form dual variables:
///   lambda3 = -sqrt(h) / (2 V sqrt(1 - r^2))
///   lambda2 = 1 - 2 lambda3 M
///   lambda1 = V E - 2 r lambda3 V^2
/// h < eps_h raises the degenerate flag and clamps lambda3; r == 1 raises the
/// penalty_free flag instead of dividing by zero.
DualVariables dual_solution(const RobustStats& stats, const CorrelationSpec& spec,
                            double eps_h = 1e-12);

/// Adversarial reward on the reference support:
///   R*(s,a) = (L(s,a) - lambda1 proxy(s,a)/V - lambda2) / (2 lambda3),
/// where L is the density ratio mu_pi/mu_ref. With penalty_free duals the
/// single feasible reward mean_m + std_v * proxy is returned instead. Throws
/// InvalidModelError when lambda3 >= 0.
MaskedReward worst_case_reward(const LogRatioModel& ratio,
                               const RewardTable& proxy_norm,
                               const DualVariables& duals,
                               const CorrelationSpec& spec);

/// Value of the inner minimization:
///   r V E - V sqrt(1 - r^2) sqrt(h) + M.
/// Equals the pairing of mu_pi with worst_case_reward for matching duals.
double robust_value(const RobustStats& stats, const CorrelationSpec& spec);

/// Guaranteed improvement over the reference policy under every feasible true
/// reward: r E - sqrt(1 - r^2) sqrt(h). This is the robust value at M = 0,
/// V = 1, i.e. in normalized reward units.
double improvement_lower_bound(const RobustStats& stats,
                               const CorrelationSpec& spec);

/// Checks a candidate reward against the three constraints at tolerance tol.
/// Off-support entries of the candidate are ignored.
FeasibilityReport feasibility_check(const RewardTable& candidate,
                                    const OccupancyMeasure& occ_ref,
                                    const RewardTable& proxy_norm,
                                    const CorrelationSpec& spec,
                                    double tol = 1e-6);

/// Orthonormal decomposition of reward space under the reference inner
/// product <u, v> = sum mu_ref u v: the constant direction e0, the proxy
/// direction e1, and an orthonormal basis of their orthogonal complement on
/// the support. Every feasible reward is exactly
///   mean_m * e0 + r * std_v * e1 + rho * u,  rho = std_v * sqrt(1 - r^2),
/// with u a unit vector in the complement.
struct SphereBasis {
    std::vector<int> support;  ///< pair indices with reference mass
    Vec e0;                    ///< constant direction (zero off support)
    Vec e1;                    ///< proxy direction (zero off support)
    Mat complement;            ///< pair_count x (support size - 2)

    int dim() const { return static_cast<int>(complement.cols()); }
};

/// Builds the decomposition. Throws InvalidModelError when the support has
/// fewer than three pairs (the complement sphere is empty or a point) and
/// DegenerateProxyError when the proxy is constant on the support.
SphereBasis sphere_basis(const OccupancyMeasure& occ_ref,
                         const RewardTable& proxy_norm);

/// Draws one reward uniformly from the feasible set (Gaussian-normalized
/// direction on the complement sphere). Off-support entries are zero.
RewardTable sample_feasible_reward(const SphereBasis& basis,
                                   const CorrelationSpec& spec,
                                   RandomStream& rng);

/// Output of the independent inner-minimization oracle.
struct OracleResult {
    /// Exact minimum: project the policy occupancy onto the complement and
    /// walk the sphere radius against it.
    double analytic_min = 0.0;
    /// Minimum of <mu_pi, R> over n_samples sphere draws. Sampling can only
    /// overestimate the true minimum. With n_samples == 0 (or a collapsed
    /// sphere) this holds just the fixed part of the pairing.
    double sampled_min = 0.0;
    long n_samples = 0;
};

/// Recomputes the inner minimum without the dual algebra. Both fields must
/// agree with robust_value: analytic_min to near machine precision, and
/// sampled_min from above with a gap shrinking in n_samples.
OracleResult brute_force_inner_min(const OccupancyMeasure& occ_pi,
                                   const OccupancyMeasure& occ_ref,
                                   const RewardTable& proxy_norm,
                                   const CorrelationSpec& spec,
                                   long n_samples, RandomStream& rng);

}  // namespace maxminrl
