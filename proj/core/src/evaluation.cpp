// evaluation.cpp — Worst/Worst*/Occ metrics, robustness sweeps, improvement
// bound verification, r grid search.

#include "maxminrl/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <thread>

#include "maxminrl/errors.hpp"
#include "maxminrl/estimators.hpp"
#include "maxminrl/mdp.hpp"

namespace maxminrl {

namespace {

void append_num(std::ostringstream& out, double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    out << buf;
}

struct RestrictedStats {
    double mass = 0.0;        // sum of mu_pi over the reference support
    double proxy_mean = 0.0;  // sum_seen mu_pi * proxy_norm
    double t2 = 0.0;          // ||L||^2_ref - mass^2 - proxy_mean^2, >= 0
    double occ_unseen = 0.0;
};

RestrictedStats restricted_stats(const OccupancyMeasure& occ_pi,
                                 const OccupancyMeasure& occ_ref,
                                 const RewardTable& proxy_norm) {
    if (occ_pi.weights.size() != occ_ref.weights.size() ||
        proxy_norm.size() != occ_ref.weights.size()) {
        throw InvalidModelError(
            "occupancy and proxy tables must share one pair dimension");
    }
    RestrictedStats out;
    double ratio_sq = 0.0;
    for (int i = 0; i < occ_ref.weights.size(); ++i) {
        const double w_pi = occ_pi.weights[i];
        const double w_ref = occ_ref.weights[i];
        if (w_ref > 0.0) {
            out.mass += w_pi;
            out.proxy_mean += w_pi * proxy_norm[i];
            ratio_sq += w_pi * w_pi / w_ref;
        } else {
            out.occ_unseen += w_pi;
        }
    }
    out.t2 = std::max(
        ratio_sq - out.mass * out.mass - out.proxy_mean * out.proxy_mean, 0.0);
    return out;
}

}  // namespace

MaskedReward restricted_worst_reward(const OccupancyMeasure& occ_pi,
                                     const OccupancyMeasure& occ_ref,
                                     const RewardTable& proxy_norm,
                                     const CorrelationSpec& spec,
                                     double eps) {
    spec.validate();
    const RestrictedStats stats =
        restricted_stats(occ_pi, occ_ref, proxy_norm);
    const int pairs = static_cast<int>(occ_ref.weights.size());
    MaskedReward out;
    out.values = Vec::Zero(pairs);
    out.seen.assign(static_cast<std::size_t>(pairs), 0);
    const bool corrected = spec.r < 1.0 && stats.t2 > eps;
    const double coeff =
        corrected
            ? spec.std_v * std::sqrt(1.0 - spec.r * spec.r) / std::sqrt(stats.t2)
            : 0.0;
    for (int i = 0; i < pairs; ++i) {
        if (occ_ref.weights[i] <= 0.0) continue;
        out.seen[static_cast<std::size_t>(i)] = 1;
        double value =
            spec.mean_m + spec.r * spec.std_v * proxy_norm[i];
        if (corrected) {
            const double ratio = occ_pi.weights[i] / occ_ref.weights[i];
            value -= coeff * (ratio - stats.mass -
                              stats.proxy_mean * proxy_norm[i]);
        }
        out.values[i] = value;
    }
    return out;
}

MetricsRow evaluate_policy(const EnvBundle& bundle,
                           const SoftmaxPolicy& policy,
                           const CorrelationSpec& spec, double r_min) {
    spec.validate();
    const OccupancyMeasure occ_ref =
        exact_occupancy(bundle.mdp, bundle.reference);
    const OccupancyMeasure occ_pi = exact_occupancy(bundle.mdp, policy);
    const ProxyMoments moments = proxy_moments_exact(occ_ref, bundle.proxy_raw);
    const RewardTable proxy_norm = normalize_proxy(bundle.proxy_raw, moments);

    MetricsRow row;
    row.r_used = spec.r;
    row.r_min = r_min;
    row.true_return = occ_pi.weights.dot(bundle.true_raw);
    row.proxy_return = occ_pi.weights.dot(bundle.proxy_raw);

    const MaskedReward adversarial =
        restricted_worst_reward(occ_pi, occ_ref, proxy_norm, spec);
    double worst = 0.0;
    double occ_unseen = 0.0;
    for (int i = 0; i < occ_ref.weights.size(); ++i) {
        if (adversarial.seen[static_cast<std::size_t>(i)]) {
            worst += occ_pi.weights[i] * adversarial.values[i];
        } else {
            occ_unseen += occ_pi.weights[i];
        }
    }
    row.worst = worst;
    row.occ_unseen = occ_unseen;
    row.worst_star = worst + occ_unseen * r_min;

    if (bundle.features.has_value()) {
        const FeatureMap& features = *bundle.features;
        const WhitenedFeatures whitened =
            whiten(compute_Q(occ_ref, features), features);
        // The policy may carry mass off the reference support, so the stats
        // are assembled from the restricted occupancy directly.
        Vec restricted = occ_pi.weights;
        for (int i = 0; i < occ_ref.weights.size(); ++i) {
            if (occ_ref.weights[i] <= 0.0) restricted[i] = 0.0;
        }
        LinearDualStats lstats;
        lstats.c_phi = whitened.values.transpose() * occ_ref.weights;
        lstats.d_phi = whitened.values.transpose() *
                       occ_ref.weights.cwiseProduct(proxy_norm);
        lstats.v_phi = whitened.values.transpose() * restricted;
        DualVariables duals;
        try {
            duals = solve_linear_duals(lstats, spec);
            row.linear_dual_converged = true;
        } catch (const NonConvergenceError& err) {
            duals.lambda1 = err.best_iterate[0];
            duals.lambda2 = err.best_iterate[1];
            duals.lambda3 = err.best_iterate[2];
            row.linear_dual_converged = false;
        }
        const ThetaWeights theta = theta_star(duals, lstats, whitened);
        row.has_linear = true;
        row.linear_worst = lstats.v_phi.dot(theta.weights);
        row.theta_whitened = theta.weights;
        row.theta_raw = theta.unwhitened;
    }
    return row;
}

ThetaSamples sample_feasible_thetas(const OccupancyMeasure& occ_ref,
                                    const FeatureMap& features,
                                    const RewardTable& proxy_norm, double r,
                                    int n, double tol, RandomStream& rng) {
    if (n < 1) throw InvalidModelError("theta sample count must be >= 1");
    if (!(tol > 0.0)) throw InvalidModelError("theta tolerance must be > 0");
    if (!(r > 0.0) || !(r <= 1.0)) {
        throw InvalidModelError("correlation r must lie in (0, 1]");
    }
    features.validate();
    const int pairs = static_cast<int>(occ_ref.weights.size());
    if (features.values.rows() != pairs || proxy_norm.size() != pairs) {
        throw InvalidModelError(
            "feature map and proxy must match the occupancy pair dimension");
    }
    const int dim = features.dim;
    const Vec& w = occ_ref.weights;

    // Sufficient statistics: correlation of theta^T phi with the proxy under
    // mu_ref needs only first/second feature moments, making each proposal
    // O(dim^2) instead of a pass over all pairs.
    const Vec mean_phi = features.values.transpose() * w;
    const Mat second_phi =
        features.values.transpose() * w.asDiagonal() * features.values;
    const Vec cross_phi =
        features.values.transpose() * w.cwiseProduct(proxy_norm);
    const double mean_p = w.dot(proxy_norm);
    const double var_p =
        w.dot(proxy_norm.cwiseProduct(proxy_norm)) - mean_p * mean_p;
    if (!(var_p > 1e-14)) {
        throw DegenerateProxyError(
            "proxy is constant under the reference occupancy");
    }
    const double sd_p = std::sqrt(var_p);

    ThetaSamples out;
    const long long cap = 10000LL * static_cast<long long>(n);
    double corr_lo = std::numeric_limits<double>::infinity();
    double corr_hi = -std::numeric_limits<double>::infinity();
    Vec theta(dim);
    while (static_cast<int>(out.thetas.size()) < n && out.n_proposed < cap) {
        for (int j = 0; j < dim; ++j) theta[j] = rng.uniform01();
        ++out.n_proposed;
        const double mean_g = mean_phi.dot(theta);
        const double var_g =
            theta.dot(second_phi * theta) - mean_g * mean_g;
        if (!(var_g > 1e-300)) continue;
        const double cov = cross_phi.dot(theta) - mean_g * mean_p;
        const double corr = cov / (std::sqrt(var_g) * sd_p);
        corr_lo = std::min(corr_lo, corr);
        corr_hi = std::max(corr_hi, corr);
        if (std::abs(corr - r) <= tol) out.thetas.push_back(theta);
    }
    out.infeasible = static_cast<int>(out.thetas.size()) < n;
    std::ostringstream diag;
    diag << "accepted " << out.thetas.size() << " of " << out.n_proposed
         << " proposals for target corr " << r << " +- " << tol;
    if (std::isfinite(corr_lo)) {
        diag << "; observed corr range [" << corr_lo << ", " << corr_hi << "]";
    }
    out.diagnostics = diag.str();
    return out;
}

SweepResult robustness_sweep(const EnvBundle& bundle,
                             const std::vector<SoftmaxPolicy>& policies,
                             const std::vector<std::string>& policy_ids,
                             const std::vector<double>& r_grid, int n_samples,
                             double tol, const RandomStream& master,
                             int jobs) {
    if (!bundle.features.has_value()) {
        throw InvalidModelError(
            "robustness sweeps need an environment with a feature map");
    }
    if (policies.empty() || r_grid.empty()) {
        throw InvalidModelError("sweep needs at least one policy and one r");
    }
    if (!policy_ids.empty() && policy_ids.size() != policies.size()) {
        throw InvalidModelError("policy_ids must be empty or match policies");
    }
    const FeatureMap& features = *bundle.features;
    const OccupancyMeasure occ_ref =
        exact_occupancy(bundle.mdp, bundle.reference);
    const ProxyMoments moments = proxy_moments_exact(occ_ref, bundle.proxy_raw);
    const RewardTable proxy_norm = normalize_proxy(bundle.proxy_raw, moments);

    // <mu_pi, theta^T phi> = (phi^T mu_pi) . theta, precomputed per policy.
    std::vector<Vec> pairing(policies.size());
    for (std::size_t p = 0; p < policies.size(); ++p) {
        pairing[p] = features.values.transpose() *
                     exact_occupancy(bundle.mdp, policies[p]).weights;
    }

    const int n_cells =
        static_cast<int>(r_grid.size() * policies.size());
    SweepResult result;
    result.cells.resize(static_cast<std::size_t>(n_cells));

    auto run_cell = [&](int cell) {
        const int ri = cell / static_cast<int>(policies.size());
        const int pi = cell % static_cast<int>(policies.size());
        RandomStream cell_rng =
            master.child(static_cast<std::uint64_t>(cell));
        const ThetaSamples samples = sample_feasible_thetas(
            occ_ref, features, proxy_norm, r_grid[static_cast<std::size_t>(ri)],
            n_samples, tol, cell_rng);
        SweepCell out;
        out.r = r_grid[static_cast<std::size_t>(ri)];
        out.policy_id = policy_ids.empty()
                            ? "policy_" + std::to_string(pi)
                            : policy_ids[static_cast<std::size_t>(pi)];
        out.n_accepted = static_cast<int>(samples.thetas.size());
        out.n_proposed = samples.n_proposed;
        out.infeasible = samples.infeasible;
        if (out.n_accepted > 0) {
            double sum = 0.0;
            double sum_sq = 0.0;
            for (const Vec& theta : samples.thetas) {
                const double value =
                    pairing[static_cast<std::size_t>(pi)].dot(theta);
                sum += value;
                sum_sq += value * value;
            }
            const double n = static_cast<double>(out.n_accepted);
            out.mean = sum / n;
            if (out.n_accepted >= 2) {
                out.std_dev = std::sqrt(
                    std::max(sum_sq - n * out.mean * out.mean, 0.0) /
                    (n - 1.0));
            } else {
                out.std_degenerate = true;
            }
        } else {
            out.std_degenerate = true;
        }
        result.cells[static_cast<std::size_t>(cell)] = std::move(out);
    };

    const int n_workers = std::max(1, std::min(jobs, n_cells));
    if (n_workers == 1) {
        for (int cell = 0; cell < n_cells; ++cell) run_cell(cell);
    } else {
        std::vector<std::thread> workers;
        workers.reserve(static_cast<std::size_t>(n_workers));
        for (int t = 0; t < n_workers; ++t) {
            workers.emplace_back([&, t] {
                for (int cell = t; cell < n_cells; cell += n_workers) {
                    run_cell(cell);
                }
            });
        }
        for (std::thread& worker : workers) worker.join();
    }
    return result;
}

Theorem1Report verify_theorem1(const EnvBundle& bundle,
                               const SoftmaxPolicy& policy,
                               const CorrelationSpec& spec, long n_rewards,
                               RandomStream& rng) {
    if (n_rewards < 1) throw InvalidModelError("n_rewards must be >= 1");
    const OccupancyMeasure occ_ref =
        exact_occupancy(bundle.mdp, bundle.reference);
    const OccupancyMeasure occ_pi = exact_occupancy(bundle.mdp, policy);
    const ProxyMoments moments = proxy_moments_exact(occ_ref, bundle.proxy_raw);
    const RewardTable proxy_norm = normalize_proxy(bundle.proxy_raw, moments);

    const RobustStats stats = robust_stats(occ_pi, occ_ref, proxy_norm);
    const double bound = improvement_lower_bound(stats, spec);
    const SphereBasis basis = sphere_basis(occ_ref, proxy_norm);
    const Vec delta = occ_pi.weights - occ_ref.weights;

    Theorem1Report report;
    report.bound = bound;
    report.min_margin = std::numeric_limits<double>::infinity();
    report.max_margin = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (long k = 0; k < n_rewards; ++k) {
        const RewardTable reward = sample_feasible_reward(basis, spec, rng);
        const double margin = delta.dot(reward) - bound;
        report.min_margin = std::min(report.min_margin, margin);
        report.max_margin = std::max(report.max_margin, margin);
        sum += margin;
        if (margin < -1e-8) ++report.n_violations;
    }
    report.n_samples = n_rewards;
    report.mean_margin = sum / static_cast<double>(n_rewards);
    if (report.n_violations > 0) {
        throw TheoremViolationError(
            "improvement bound violated on " +
            std::to_string(report.n_violations) + " of " +
            std::to_string(n_rewards) + " sampled feasible rewards (minimum "
            "margin " + std::to_string(report.min_margin) + ")");
    }
    return report;
}

GridSearchResult r_grid_search(const EnvBundle& bundle, Algorithm algorithm,
                               const std::vector<double>& r_grid,
                               const TrainConfig& config, double r_min) {
    if (r_grid.empty()) throw InvalidModelError("r grid must be non-empty");
    std::vector<double> grid = r_grid;
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    GridSearchResult result;
    bool have_best = false;
    double best_worst = 0.0;
    for (double r : grid) {
        TrainConfig cell_config = config;
        cell_config.algorithm = algorithm;
        cell_config.r = r;
        auto trained = train(bundle, cell_config);
        GridSearchRow row;
        row.r = r;
        row.policy = std::move(trained.first);
        row.metrics = evaluate_policy(bundle, row.policy,
                                      CorrelationSpec{r, 0.0, 1.0}, r_min);
        std::ostringstream id;
        id << to_string(algorithm) << "_r" << r;
        row.metrics.policy_id = id.str();
        // Ascending scan with a strict improvement test keeps the smaller r
        // on ties.
        if (!have_best || row.metrics.worst > best_worst) {
            have_best = true;
            best_worst = row.metrics.worst;
            result.best_r = r;
        }
        result.rows.push_back(std::move(row));
    }
    return result;
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
    int theta_dim = 0;
    for (const MetricsRow& row : rows) {
        theta_dim = std::max(theta_dim,
                             static_cast<int>(row.theta_whitened.size()));
    }
    std::ostringstream out;
    out << "policy_id,r,true_return,proxy_return,worst,occ_unseen,r_min,"
           "worst_star,linear_worst";
    for (int j = 0; j < theta_dim; ++j) out << ",theta_" << j;
    for (int j = 0; j < theta_dim; ++j) out << ",theta_raw_" << j;
    out << ",linear_dual_converged\n";
    for (const MetricsRow& row : rows) {
        out << row.policy_id << ',';
        append_num(out, row.r_used);
        out << ',';
        append_num(out, row.true_return);
        out << ',';
        append_num(out, row.proxy_return);
        out << ',';
        append_num(out, row.worst);
        out << ',';
        append_num(out, row.occ_unseen);
        out << ',';
        append_num(out, row.r_min);
        out << ',';
        append_num(out, row.worst_star);
        out << ',';
        if (row.has_linear) append_num(out, row.linear_worst);
        for (int j = 0; j < theta_dim; ++j) {
            out << ',';
            if (row.has_linear && j < row.theta_whitened.size()) {
                append_num(out, row.theta_whitened[j]);
            }
        }
        for (int j = 0; j < theta_dim; ++j) {
            out << ',';
            if (row.has_linear && j < row.theta_raw.size()) {
                append_num(out, row.theta_raw[j]);
            }
        }
        out << ',';
        if (row.has_linear) out << (row.linear_dual_converged ? 1 : 0);
        out << '\n';
    }
    return out.str();
}

std::string sweep_csv(const SweepResult& result) {
    std::ostringstream out;
    out << "r,policy_id,mean,std,n_accepted,n_proposed\n";
    for (const SweepCell& cell : result.cells) {
        append_num(out, cell.r);
        out << ',' << cell.policy_id << ',';
        append_num(out, cell.mean);
        out << ',';
        append_num(out, cell.std_dev);
        out << ',' << cell.n_accepted << ',' << cell.n_proposed << '\n';
    }
    return out.str();
}

}  // namespace maxminrl
