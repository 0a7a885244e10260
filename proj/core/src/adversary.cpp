// adversary.cpp — closed-form inner minimization and its geometric oracle.

#include "maxminrl/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "maxminrl/errors.hpp"

namespace maxminrl {

namespace {

constexpr double kNormalizationTol = 1e-6;
constexpr double kNegativeHTol = 1e-10;

std::vector<int> support_of(const OccupancyMeasure& occ) {
    std::vector<int> idx;
    for (int i = 0; i < static_cast<int>(occ.weights.size()); ++i) {
        if (occ.weights[i] > 0.0) idx.push_back(i);
    }
    return idx;
}

void check_sizes(const OccupancyMeasure& occ_ref, const RewardTable& proxy_norm) {
    if (proxy_norm.size() != occ_ref.weights.size()) {
        std::ostringstream msg;
        msg << "proxy table has " << proxy_norm.size() << " entries but the "
            << "reference occupancy has " << occ_ref.weights.size();
        throw InvalidModelError(msg.str());
    }
}

void check_absolute_continuity(const OccupancyMeasure& occ_pi,
                               const OccupancyMeasure& occ_ref) {
    if (occ_pi.weights.size() != occ_ref.weights.size()) {
        throw InvalidModelError(
            "policy and reference occupancies have different pair counts");
    }
    std::vector<int> bad;
    for (int i = 0; i < static_cast<int>(occ_ref.weights.size()); ++i) {
        if (occ_pi.weights[i] > 0.0 && occ_ref.weights[i] <= 0.0) bad.push_back(i);
    }
    if (!bad.empty()) {
        std::ostringstream msg;
        msg << "policy occupancy has mass on " << bad.size()
            << " pair(s) outside the reference support";
        throw SupportViolationError(msg.str(), bad);
    }
}

void check_proxy_normalized(const OccupancyMeasure& occ_ref,
                            const RewardTable& proxy_norm) {
    double mean = 0.0;
    double second = 0.0;
    for (int i = 0; i < static_cast<int>(occ_ref.weights.size()); ++i) {
        const double w = occ_ref.weights[i];
        if (w <= 0.0) continue;
        mean += w * proxy_norm[i];
        second += w * proxy_norm[i] * proxy_norm[i];
    }
    const double variance = second - mean * mean;
    if (std::abs(mean) > kNormalizationTol ||
        std::abs(variance - 1.0) > kNormalizationTol) {
        std::ostringstream msg;
        msg << "proxy reward is not normalized under the reference occupancy "
            << "(mean " << mean << ", variance " << variance << ")";
        throw InvalidModelError(msg.str());
    }
}

}  // namespace

void CorrelationSpec::validate() const {
    if (!(r > 0.0) || !(r <= 1.0)) {
        throw InvalidModelError("correlation r must lie in (0, 1], got " +
                                std::to_string(r));
    }
    if (!(std_v > 0.0)) {
        throw InvalidModelError("reward std_v must be positive, got " +
                                std::to_string(std_v));
    }
    if (!std::isfinite(mean_m)) {
        throw InvalidModelError("reward mean_m must be finite");
    }
}

nlohmann::json FeasibilityReport::to_json() const {
    return nlohmann::json{{"mean_residual", mean_residual},
                          {"second_moment_residual", second_moment_residual},
                          {"correlation_residual", correlation_residual},
                          {"tolerance", tolerance},
                          {"pass", pass}};
}

int MaskedReward::seen_count() const {
    int count = 0;
    for (const std::uint8_t flag : seen) count += flag != 0 ? 1 : 0;
    return count;
}

RobustStats robust_stats(const OccupancyMeasure& occ_pi,
                         const OccupancyMeasure& occ_ref,
                         const RewardTable& proxy_norm) {
    check_sizes(occ_ref, proxy_norm);
    check_absolute_continuity(occ_pi, occ_ref);
    check_proxy_normalized(occ_ref, proxy_norm);

    double sum_sq = 0.0;
    double mean_pi = 0.0;
    for (int i = 0; i < static_cast<int>(occ_ref.weights.size()); ++i) {
        const double ref = occ_ref.weights[i];
        if (ref <= 0.0) continue;
        const double pi = occ_pi.weights[i];
        sum_sq += pi * pi / ref;
        mean_pi += pi * proxy_norm[i];
    }

    RobustStats stats;
    stats.chi2 = std::max(sum_sq - 1.0, 0.0);
    stats.proxy_mean_pi = mean_pi;
    const double raw_h = stats.chi2 - mean_pi * mean_pi;
    if (raw_h < -kNegativeHTol) {
        std::ostringstream msg;
        msg << "chi2 - E^2 = " << raw_h << " is negative beyond tolerance; "
            << "the occupancies or proxy normalization are inconsistent";
        throw InvalidModelError(msg.str());
    }
    stats.h = std::max(raw_h, 0.0);
    return stats;
}

DualVariables dual_solution(const RobustStats& stats, const CorrelationSpec& spec,
                            double eps_h) {
    spec.validate();
    const double v = spec.std_v;
    const double m = spec.mean_m;
    const double e = stats.proxy_mean_pi;

    DualVariables duals;
    if (spec.r >= 1.0) {
        // The correlation constraint pins the reward to mean_m + std_v*proxy;
        // lambda3 is immaterial because the penalty term vanishes.
        duals.penalty_free = true;
        duals.lambda3 = -1.0;
    } else {
        const double slack = std::sqrt(1.0 - spec.r * spec.r);
        if (stats.h < eps_h) {
            duals.degenerate = true;
            duals.lambda3 = -eps_h / (2.0 * v * slack);
        } else {
            duals.lambda3 = -std::sqrt(stats.h) / (2.0 * v * slack);
        }
    }
    duals.lambda2 = 1.0 - 2.0 * duals.lambda3 * m;
    duals.lambda1 = v * e - 2.0 * spec.r * duals.lambda3 * v * v;
    return duals;
}

MaskedReward worst_case_reward(const LogRatioModel& ratio,
                               const RewardTable& proxy_norm,
                               const DualVariables& duals,
                               const CorrelationSpec& spec) {
    spec.validate();
    const int n = static_cast<int>(proxy_norm.size());
    MaskedReward out;
    out.values = Vec::Zero(n);
    out.seen.assign(static_cast<std::size_t>(n), 0);

    if (duals.penalty_free) {
        for (int i = 0; i < n; ++i) {
            if (!ratio.defined_at(i)) continue;
            out.seen[static_cast<std::size_t>(i)] = 1;
            out.values[i] = spec.mean_m + spec.std_v * proxy_norm[i];
        }
        return out;
    }

    if (!(duals.lambda3 < 0.0)) {
        throw InvalidModelError(
            "second-moment multiplier must be negative, got " +
            std::to_string(duals.lambda3));
    }
    const double denom = 2.0 * duals.lambda3;
    for (int i = 0; i < n; ++i) {
        if (!ratio.defined_at(i)) continue;
        out.seen[static_cast<std::size_t>(i)] = 1;
        out.values[i] = (ratio.ratio(i) -
                         duals.lambda1 * proxy_norm[i] / spec.std_v -
                         duals.lambda2) /
                        denom;
    }
    return out;
}

double robust_value(const RobustStats& stats, const CorrelationSpec& spec) {
    spec.validate();
    const double penalty =
        std::sqrt(1.0 - spec.r * spec.r) * std::sqrt(std::max(stats.h, 0.0));
    return spec.r * spec.std_v * stats.proxy_mean_pi - spec.std_v * penalty +
           spec.mean_m;
}

double improvement_lower_bound(const RobustStats& stats,
                               const CorrelationSpec& spec) {
    spec.validate();
    return spec.r * stats.proxy_mean_pi -
           std::sqrt(1.0 - spec.r * spec.r) * std::sqrt(std::max(stats.h, 0.0));
}

FeasibilityReport feasibility_check(const RewardTable& candidate,
                                    const OccupancyMeasure& occ_ref,
                                    const RewardTable& proxy_norm,
                                    const CorrelationSpec& spec, double tol) {
    spec.validate();
    check_sizes(occ_ref, proxy_norm);
    if (candidate.size() != occ_ref.weights.size()) {
        throw InvalidModelError("candidate reward table size mismatch");
    }
    check_proxy_normalized(occ_ref, proxy_norm);

    double mean = 0.0;
    double second = 0.0;
    double corr = 0.0;
    for (int i = 0; i < static_cast<int>(occ_ref.weights.size()); ++i) {
        const double w = occ_ref.weights[i];
        if (w <= 0.0) continue;
        mean += w * candidate[i];
        second += w * candidate[i] * candidate[i];
        corr += w * (candidate[i] - spec.mean_m) / spec.std_v * proxy_norm[i];
    }

    FeasibilityReport report;
    report.mean_residual = std::abs(mean - spec.mean_m);
    report.second_moment_residual =
        std::abs(second - (spec.mean_m * spec.mean_m + spec.std_v * spec.std_v));
    report.correlation_residual = std::abs(corr - spec.r);
    report.tolerance = tol;
    report.pass = report.mean_residual < tol &&
                  report.second_moment_residual < tol &&
                  report.correlation_residual < tol;
    return report;
}

SphereBasis sphere_basis(const OccupancyMeasure& occ_ref,
                         const RewardTable& proxy_norm) {
    check_sizes(occ_ref, proxy_norm);
    check_proxy_normalized(occ_ref, proxy_norm);

    SphereBasis basis;
    basis.support = support_of(occ_ref);
    const int k = static_cast<int>(basis.support.size());
    if (k < 3) {
        throw InvalidModelError(
            "the sphere decomposition needs a reference support of at least 3 "
            "state-action pairs, got " +
            std::to_string(k));
    }
    const int n = static_cast<int>(occ_ref.weights.size());

    // With x~ = sqrt(mu_ref) .* x the reference inner product is Euclidean on
    // the support coordinates, so standard QR machinery applies.
    Vec sqrtw(k);
    for (int j = 0; j < k; ++j) {
        sqrtw[j] = std::sqrt(occ_ref.weights[basis.support[j]]);
    }

    // Re-orthonormalize {constant, proxy} exactly; callers may hand a proxy
    // with up to 1e-6 normalization slop but the basis must be tight.
    Vec c0 = sqrtw / sqrtw.norm();
    Vec c1(k);
    for (int j = 0; j < k; ++j) {
        c1[j] = sqrtw[j] * proxy_norm[basis.support[j]];
    }
    c1 -= c0.dot(c1) * c0;
    const double c1_norm = c1.norm();
    if (c1_norm < 1e-8) {
        throw DegenerateProxyError(
            "proxy reward is constant on the reference support");
    }
    c1 /= c1_norm;

    // Complete {c0, c1} to an orthonormal basis of the whitened coordinates;
    // the trailing k-2 columns of Q span the orthogonal complement.
    Mat head = Mat::Zero(k, 2);
    head.col(0) = c0;
    head.col(1) = c1;
    const Eigen::HouseholderQR<Mat> qr(head);
    const Mat q = qr.householderQ();

    basis.e0 = Vec::Zero(n);
    basis.e1 = Vec::Zero(n);
    basis.complement = Mat::Zero(n, k - 2);
    for (int j = 0; j < k; ++j) {
        const int pair = basis.support[j];
        basis.e0[pair] = c0[j] / sqrtw[j];
        basis.e1[pair] = c1[j] / sqrtw[j];
        for (int c = 0; c + 2 < k; ++c) {
            basis.complement(pair, c) = q(j, c + 2) / sqrtw[j];
        }
    }
    return basis;
}

RewardTable sample_feasible_reward(const SphereBasis& basis,
                                   const CorrelationSpec& spec,
                                   RandomStream& rng) {
    spec.validate();
    const double rho = spec.std_v * std::sqrt(1.0 - spec.r * spec.r);
    RewardTable out = spec.mean_m * basis.e0 + spec.r * spec.std_v * basis.e1;
    if (rho > 0.0 && basis.dim() > 0) {
        Vec coords(basis.dim());
        for (int c = 0; c < basis.dim(); ++c) coords[c] = rng.normal();
        const double norm = coords.norm();
        if (norm > 0.0) {
            coords /= norm;
        } else {
            coords.setZero();
            coords[0] = 1.0;
        }
        out += rho * (basis.complement * coords);
    }
    return out;
}

OracleResult brute_force_inner_min(const OccupancyMeasure& occ_pi,
                                   const OccupancyMeasure& occ_ref,
                                   const RewardTable& proxy_norm,
                                   const CorrelationSpec& spec, long n_samples,
                                   RandomStream& rng) {
    spec.validate();
    check_absolute_continuity(occ_pi, occ_ref);
    const SphereBasis basis = sphere_basis(occ_ref, proxy_norm);

    // <mu_pi, R> over the feasible set splits into a fixed part (constant and
    // proxy directions) plus rho * <t, u> with t the complement coordinates
    // of mu_pi; the minimum over unit u is -rho * |t|.
    const double fixed = spec.mean_m * occ_pi.weights.dot(basis.e0) +
                         spec.r * spec.std_v * occ_pi.weights.dot(basis.e1);
    const Vec t = basis.complement.transpose() * occ_pi.weights;
    const double rho = spec.std_v * std::sqrt(1.0 - spec.r * spec.r);

    OracleResult result;
    result.n_samples = n_samples;
    result.analytic_min = fixed - rho * t.norm();
    result.sampled_min = fixed;
    if (rho > 0.0 && basis.dim() > 0 && n_samples > 0) {
        double best = std::numeric_limits<double>::infinity();
        Vec z(basis.dim());
        for (long s = 0; s < n_samples; ++s) {
            for (int c = 0; c < basis.dim(); ++c) z[c] = rng.normal();
            const double norm = z.norm();
            if (norm <= 0.0) continue;
            best = std::min(best, t.dot(z) / norm);
        }
        if (std::isfinite(best)) result.sampled_min = fixed + rho * best;
    }
    return result;
}

}  // namespace maxminrl
