// linear_adversary.hpp — inner minimization restricted to nonnegative linear
// combinations of whitened features.
//
// The adversarial reward is theta^T phi~ with phi~ = W phi, W = Q^{-1/2} and
// Q the feature second-moment matrix under the reference occupancy. Whitening
// turns the second-moment constraint into a plain sphere constraint, after
// which theta has an elementwise closed form in the three dual variables. The
// duals themselves solve a 3-dimensional piecewise-smooth system, handled by
// a damped least-squares (Levenberg-Marquardt-style) iteration.

#pragma once

#include <Eigen/Dense>

#include "maxminrl/adversary.hpp"
#include "maxminrl/estimators.hpp"
#include "maxminrl/types.hpp"

namespace maxminrl {

/// Hand-specified tabular feature map phi(s,a), one row per state-action
/// pair. On the reference support the features must span the full feature
/// space (equivalently: Q is nonsingular), checked at whitening time.
struct FeatureMap {
    int dim = 0;
    Mat values;  ///< pair_count x dim

    /// Throws InvalidModelError on shape mismatch or non-finite entries.
    void validate() const;
};

/// Features after the whitening transform W = Q^{-1/2}: the transformed
/// second-moment matrix sum mu_ref phi~ phi~^T is the identity within 1e-8.
struct WhitenedFeatures {
    Mat transform;  ///< dim x dim symmetric W
    Mat values;     ///< pair_count x dim, row (s,a) = W * phi(s,a)
};

/// Per-feature coefficients of the three dual-system equations.
struct LinearDualStats {
    Vec c_phi;  ///< mean-constraint coefficients: sum mu_ref * phi~_j
    Vec d_phi;  ///< correlation coefficients: sum mu_ref * proxy * phi~_j
    Vec v_phi;  ///< policy feature expectation: sum mu_pi * phi~_j
};

/// Closed-form adversarial weights, nonnegative in whitened coordinates.
struct ThetaWeights {
    Vec weights;     ///< elementwise max(0, q_j / (2|lambda3|))
    Vec unwhitened;  ///< W^T * weights: coefficients on the raw features
};

/// Damped least-squares settings for the dual solve.
struct LinearSolveConfig {
    int max_iters = 500;
    double tol = 1e-6;               ///< gradient residual (Euclidean norm)
    double lambda3_ceiling = -1e-8;  ///< iterates are projected below this
    double init_damping = 1e-3;
};

/// Exact feature second-moment matrix Q = sum mu_ref(s,a) phi phi^T.
Mat compute_Q(const OccupancyMeasure& occ_ref, const FeatureMap& features);

/// Sampled Q from a policy's empirical occupancy, reweighted by the reversed
/// density ratio mu_ref/mu_pi. The ratio model must carry the ref_over_policy
/// direction (throws InvalidModelError otherwise).
Mat compute_Q_sampled(const OccupancyMeasure& occ_pi_empirical,
                      const LogRatioModel& ratio, const FeatureMap& features);

/// Symmetric inverse square root of Q applied to the features. Eigenvalues
/// below eigen_floor raise SpanError naming the deficient eigendirections.
WhitenedFeatures whiten(const Mat& q, const FeatureMap& features,
                        double eigen_floor = 1e-10);

/// Assembles the per-feature dual-system coefficients. occ_pi may be exact or
/// empirical; the same support and normalization checks as robust_stats
/// apply.
LinearDualStats linear_dual_stats(const OccupancyMeasure& occ_pi,
                                  const OccupancyMeasure& occ_ref,
                                  const RewardTable& proxy_norm,
                                  const WhitenedFeatures& whitened);

/// The three components of the dual gradient system at the given multipliers:
///   g1 = r V - sum d_phi_j theta*_j
///   g2 = M   - sum c_phi_j theta*_j
///   g3 = M^2 + V^2 - sum theta*_j^2
/// with theta*_j = max(0, q_j / (2|lambda3|)), q_j = v_phi_j - lambda1
/// d_phi_j - lambda2 c_phi_j. Throws InvalidModelError when lambda3 >= 0.
Vec linear_dual_gradients(const DualVariables& duals,
                          const LinearDualStats& stats,
                          const CorrelationSpec& spec);

/// Solves the dual system by damped least squares from the given start
/// (default lambda1 = 0, lambda2 = 0, lambda3 = -1), projecting lambda3
/// below the ceiling whenever an iterate crosses it. Throws
/// NonConvergenceError with the best iterate and residual when the residual
/// tolerance is not met within max_iters.
DualVariables solve_linear_duals(const LinearDualStats& stats,
                                 const CorrelationSpec& spec,
                                 const DualVariables& init = DualVariables{},
                                 const LinearSolveConfig& config = {});

/// Elementwise closed form theta*_j = max(0, q_j / (2|lambda3|)) plus the
/// unwhitened report coordinates. Throws InvalidModelError when lambda3 >= 0.
ThetaWeights theta_star(const DualVariables& duals, const LinearDualStats& stats,
                        const WhitenedFeatures& whitened);

/// The adversarial reward table theta^T phi~(s,a).
RewardTable linear_worst_reward(const ThetaWeights& theta,
                                const WhitenedFeatures& whitened);

}  // namespace maxminrl
