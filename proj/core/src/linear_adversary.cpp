// linear_adversary.cpp — whitening, the 3-dimensional dual system, and the
// closed-form nonnegative weights of the linear inner problem.

#include "maxminrl/linear_adversary.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "maxminrl/errors.hpp"

namespace maxminrl {

namespace {

// theta*_j = max(0, q_j) / (2 |lambda3|) with
// q_j = v_phi_j - lambda1 d_phi_j - lambda2 c_phi_j.
Vec clipped_theta(const DualVariables& duals, const LinearDualStats& stats) {
    const Vec q = stats.v_phi - duals.lambda1 * stats.d_phi -
                  duals.lambda2 * stats.c_phi;
    return q.cwiseMax(0.0) / (2.0 * std::abs(duals.lambda3));
}

void require_negative_lambda3(const DualVariables& duals) {
    if (!(duals.lambda3 < 0.0)) {
        throw InvalidModelError(
            "second-moment multiplier must be negative, got " +
            std::to_string(duals.lambda3));
    }
}

// Jacobian of the gradient system w.r.t. (lambda1, lambda2, lambda3) on the
// current active set {j : q_j > 0}. Piecewise linear in (lambda1, lambda2);
// the lambda3 column comes from the 1/(2|lambda3|) scale.
Eigen::Matrix3d dual_jacobian(const Eigen::Vector3d& lam,
                              const LinearDualStats& stats) {
    const double scale = -1.0 / (2.0 * lam[2]);  // positive for lambda3 < 0
    const Vec q =
        stats.v_phi - lam[0] * stats.d_phi - lam[1] * stats.c_phi;
    double s_dd = 0.0, s_dc = 0.0, s_cc = 0.0;
    double s_dp = 0.0, s_cp = 0.0, s_pp = 0.0;
    for (int j = 0; j < q.size(); ++j) {
        if (q[j] <= 0.0) continue;
        const double d = stats.d_phi[j];
        const double c = stats.c_phi[j];
        s_dd += d * d;
        s_dc += d * c;
        s_cc += c * c;
        s_dp += d * q[j];
        s_cp += c * q[j];
        s_pp += q[j] * q[j];
    }
    const double sc2 = scale * scale;
    Eigen::Matrix3d jac;
    jac << scale * s_dd, scale * s_dc, -2.0 * sc2 * s_dp,
           scale * s_dc, scale * s_cc, -2.0 * sc2 * s_cp,
           2.0 * sc2 * s_dp, 2.0 * sc2 * s_cp, -4.0 * sc2 * scale * s_pp;
    return jac;
}

}  // namespace

void FeatureMap::validate() const {
    if (dim <= 0 || values.cols() != dim) {
        std::ostringstream msg;
        msg << "feature map declares dim " << dim << " but the value matrix "
            << "has " << values.cols() << " column(s)";
        throw InvalidModelError(msg.str());
    }
    if (!values.allFinite()) {
        throw InvalidModelError("feature map contains non-finite entries");
    }
}

Mat compute_Q(const OccupancyMeasure& occ_ref, const FeatureMap& features) {
    features.validate();
    if (features.values.rows() != occ_ref.weights.size()) {
        throw InvalidModelError(
            "feature map and reference occupancy disagree on pair count");
    }
    return features.values.transpose() * occ_ref.weights.asDiagonal() *
           features.values;
}

Mat compute_Q_sampled(const OccupancyMeasure& occ_pi_empirical,
                      const LogRatioModel& ratio, const FeatureMap& features) {
    features.validate();
    if (features.values.rows() != occ_pi_empirical.weights.size()) {
        throw InvalidModelError(
            "feature map and policy occupancy disagree on pair count");
    }
    if (ratio.direction != RatioDirection::ref_over_policy) {
        throw InvalidModelError(
            "sampled Q requires the reversed (mu_ref / mu_pi) ratio direction");
    }
    Mat q = Mat::Zero(features.dim, features.dim);
    for (int i = 0; i < static_cast<int>(occ_pi_empirical.weights.size()); ++i) {
        const double w = occ_pi_empirical.weights[i];
        if (w <= 0.0) continue;
        const double reweight = w * ratio.ratio(i);
        q.noalias() += reweight * (features.values.row(i).transpose() *
                                   features.values.row(i));
    }
    return q;
}

WhitenedFeatures whiten(const Mat& q, const FeatureMap& features,
                        double eigen_floor) {
    features.validate();
    if (q.rows() != features.dim || q.cols() != features.dim) {
        throw InvalidModelError("Q matrix shape does not match the feature dim");
    }
    const Eigen::SelfAdjointEigenSolver<Mat> eig(q);
    if (eig.info() != Eigen::Success) {
        throw InvalidModelError("eigendecomposition of Q failed");
    }
    std::vector<int> deficient;
    for (int i = 0; i < features.dim; ++i) {
        if (eig.eigenvalues()[i] < eigen_floor) deficient.push_back(i);
    }
    if (!deficient.empty()) {
        std::ostringstream msg;
        msg << "features do not span the feature space on the reference "
            << "support: " << deficient.size() << " eigenvalue(s) of Q below "
            << eigen_floor;
        throw SpanError(msg.str(), deficient);
    }

    WhitenedFeatures out;
    const Vec inv_sqrt = eig.eigenvalues().cwiseSqrt().cwiseInverse();
    out.transform = eig.eigenvectors() * inv_sqrt.asDiagonal() *
                    eig.eigenvectors().transpose();
    // W is symmetric, so row (s,a) of values is phi(s,a)^T W = (W phi)^T.
    out.values = features.values * out.transform;
    return out;
}

LinearDualStats linear_dual_stats(const OccupancyMeasure& occ_pi,
                                  const OccupancyMeasure& occ_ref,
                                  const RewardTable& proxy_norm,
                                  const WhitenedFeatures& whitened) {
    if (whitened.values.rows() != occ_ref.weights.size()) {
        throw InvalidModelError(
            "whitened features and reference occupancy disagree on pair count");
    }
    // Shares the support / normalization / consistency preconditions with the
    // unstructured inner problem.
    (void)robust_stats(occ_pi, occ_ref, proxy_norm);

    LinearDualStats stats;
    stats.c_phi = whitened.values.transpose() * occ_ref.weights;
    stats.d_phi = whitened.values.transpose() *
                  occ_ref.weights.cwiseProduct(proxy_norm);
    stats.v_phi = whitened.values.transpose() * occ_pi.weights;
    return stats;
}

Vec linear_dual_gradients(const DualVariables& duals,
                          const LinearDualStats& stats,
                          const CorrelationSpec& spec) {
    spec.validate();
    require_negative_lambda3(duals);
    const Vec theta = clipped_theta(duals, stats);
    Vec g(3);
    g[0] = spec.r * spec.std_v - stats.d_phi.dot(theta);
    g[1] = spec.mean_m - stats.c_phi.dot(theta);
    g[2] = spec.mean_m * spec.mean_m + spec.std_v * spec.std_v -
           theta.squaredNorm();
    return g;
}

DualVariables solve_linear_duals(const LinearDualStats& stats,
                                 const CorrelationSpec& spec,
                                 const DualVariables& init,
                                 const LinearSolveConfig& config) {
    spec.validate();
    Eigen::Vector3d lam(init.lambda1, init.lambda2,
                        std::min(init.lambda3, config.lambda3_ceiling));

    const auto residual_at = [&](const Eigen::Vector3d& point) {
        DualVariables d;
        d.lambda1 = point[0];
        d.lambda2 = point[1];
        d.lambda3 = point[2];
        return Eigen::Vector3d(linear_dual_gradients(d, stats, spec));
    };

    Eigen::Vector3d g = residual_at(lam);
    double norm = g.norm();
    Eigen::Vector3d best_lam = lam;
    double best_norm = norm;
    double damping = config.init_damping;

    for (int iter = 0; iter < config.max_iters && best_norm >= config.tol;
         ++iter) {
        const Eigen::Matrix3d jac = dual_jacobian(lam, stats);
        const Eigen::Matrix3d normal = jac.transpose() * jac;

        Eigen::Vector3d trial;
        if (normal.norm() < 1e-30) {
            // Every coordinate is clipped to zero, so the least-squares model
            // is flat. Probe toward activating the coordinate closest to
            // switching on; without it the iteration cannot move.
            const Vec q = stats.v_phi - lam[0] * stats.d_phi -
                          lam[1] * stats.c_phi;
            int j_best = 0;
            for (int j = 1; j < q.size(); ++j) {
                if (q[j] > q[j_best]) j_best = j;
            }
            const double d = stats.d_phi[j_best];
            const double c = stats.c_phi[j_best];
            const double dir_norm = std::hypot(d, c);
            if (dir_norm <= 0.0) break;  // no handle on any coordinate
            const double step = (-q[j_best] + 0.1) / dir_norm;
            trial = lam;
            trial[0] -= step * d / dir_norm;
            trial[1] -= step * c / dir_norm;
            trial[2] = std::min(trial[2], config.lambda3_ceiling);
            lam = trial;
            g = residual_at(lam);
            norm = g.norm();
            if (norm < best_norm) {
                best_norm = norm;
                best_lam = lam;
            }
            continue;
        }

        const Eigen::Matrix3d lhs =
            normal + damping * Eigen::Matrix3d::Identity();
        const Eigen::Vector3d delta = lhs.ldlt().solve(-(jac.transpose() * g));
        if (!delta.allFinite()) {
            damping = std::min(damping * 10.0, 1e12);
            continue;
        }
        trial = lam + delta;
        trial[2] = std::min(trial[2], config.lambda3_ceiling);
        const Eigen::Vector3d g_trial = residual_at(trial);
        const double trial_norm = g_trial.norm();
        if (trial_norm < norm) {
            lam = trial;
            g = g_trial;
            norm = trial_norm;
            damping = std::max(damping / 3.0, 1e-14);
            if (norm < best_norm) {
                best_norm = norm;
                best_lam = lam;
            }
        } else {
            damping = std::min(damping * 10.0, 1e12);
        }
    }

    if (best_norm >= config.tol) {
        std::ostringstream msg;
        msg << "dual solve stalled at residual " << best_norm << " (tolerance "
            << config.tol << ") after " << config.max_iters << " iterations";
        throw NonConvergenceError(msg.str(),
                                  {best_lam[0], best_lam[1], best_lam[2]},
                                  best_norm);
    }

    DualVariables out;
    out.lambda1 = best_lam[0];
    out.lambda2 = best_lam[1];
    out.lambda3 = best_lam[2];
    return out;
}

ThetaWeights theta_star(const DualVariables& duals, const LinearDualStats& stats,
                        const WhitenedFeatures& whitened) {
    require_negative_lambda3(duals);
    ThetaWeights out;
    out.weights = clipped_theta(duals, stats);
    if (whitened.transform.rows() != out.weights.size()) {
        throw InvalidModelError(
            "whitening transform and dual stats disagree on feature dim");
    }
    out.unwhitened = whitened.transform.transpose() * out.weights;
    return out;
}

RewardTable linear_worst_reward(const ThetaWeights& theta,
                                const WhitenedFeatures& whitened) {
    if (whitened.values.cols() != theta.weights.size()) {
        throw InvalidModelError(
            "whitened features and theta weights disagree on feature dim");
    }
    return whitened.values * theta.weights;
}

}  // namespace maxminrl
