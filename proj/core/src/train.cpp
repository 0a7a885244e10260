// train.cpp — the three training algorithms over exact and sampled modes.

#include "maxminrl/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "maxminrl/errors.hpp"
#include "maxminrl/mdp.hpp"
#include "maxminrl/rng.hpp"

namespace maxminrl {

namespace {

void require_r(double r) {
    if (!(r > 0.0) || !(r <= 1.0)) {
        throw InvalidModelError("correlation r must lie in (0, 1], got " +
                                std::to_string(r));
    }
}

SoftmaxPolicy initial_policy(const EnvBundle& bundle, const TrainConfig& config,
                             RandomStream& init_stream) {
    SoftmaxPolicy policy = bundle.reference;
    if (config.init_noise > 0.0) {
        for (int s = 0; s < policy.logits.rows(); ++s) {
            for (int a = 0; a < policy.logits.cols(); ++a) {
                policy.logits(s, a) += config.init_noise * init_stream.normal();
            }
        }
    }
    return policy;
}

void append_num(std::ostringstream& out, double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    out << buf;
}

// Exact-mode state of the current iterate, refreshed after each update.
struct IterateState {
    SoftmaxPolicy policy;
    OccupancyMeasure occ;
    RobustStats stats;
};

IterateState make_state(const TabularMdp& mdp, const SoftmaxPolicy& policy,
                        const OccupancyMeasure& occ_ref,
                        const RewardTable& proxy_norm) {
    IterateState state;
    state.policy = policy;
    state.occ = exact_occupancy(mdp, policy);
    state.stats = robust_stats(state.occ, occ_ref, proxy_norm);
    return state;
}

// Backtracking line search: ascend `grad` from `state`, scoring trial
// iterates with `objective_of`. Keeps the current iterate on a full failure
// (plateau). Returns whether a step was accepted.
template <typename ObjectiveFn>
bool line_search_step(const TabularMdp& mdp, const OccupancyMeasure& occ_ref,
                      const RewardTable& proxy_norm, const Mat& grad,
                      const TrainConfig& config, IterateState& state,
                      const ObjectiveFn& objective_of) {
    if (!grad.allFinite()) {
        throw DivergenceError("policy gradient is not finite");
    }
    const double obj_old = objective_of(state.stats);
    double step = config.step_size;
    for (int attempt = 0; attempt < config.line_search_max; ++attempt) {
        IterateState trial =
            make_state(mdp, SoftmaxPolicy{state.policy.logits + step * grad},
                       occ_ref, proxy_norm);
        if (objective_of(trial.stats) >= obj_old) {
            state = std::move(trial);
            return true;
        }
        step *= 0.5;
    }
    return false;
}

// Discounted returns-to-go of `pseudo` along the batch, averaged per pair
// into Q estimates; advantage = Q - policy-weighted state baseline.
Vec sampled_advantages(const TrajectoryBatch& batch, const RewardTable& pseudo,
                       const SoftmaxPolicy& policy, int n_states,
                       int n_actions) {
    const int pairs = n_states * n_actions;
    Vec q_sum = Vec::Zero(pairs);
    Vec visits = Vec::Zero(pairs);
    for (std::size_t i = 0; i < batch.states.size(); ++i) {
        const auto& states = batch.states[i];
        const auto& actions = batch.actions[i];
        std::vector<double> suffix(states.size(), 0.0);
        double acc = 0.0;
        for (int t = static_cast<int>(states.size()) - 1; t >= 0; --t) {
            const int pair = states[t] * n_actions + actions[t];
            acc = pseudo[pair] + batch.gamma * acc;
            suffix[t] = acc;
        }
        for (std::size_t t = 0; t < states.size(); ++t) {
            const int pair = states[t] * n_actions + actions[t];
            q_sum[pair] += suffix[t];
            visits[pair] += 1.0;
        }
    }
    Vec q_hat = Vec::Zero(pairs);
    for (int p = 0; p < pairs; ++p) {
        if (visits[p] > 0.0) q_hat[p] = q_sum[p] / visits[p];
    }
    const Mat probs = policy.probabilities();
    Vec advantage = Vec::Zero(pairs);
    for (int s = 0; s < n_states; ++s) {
        double baseline = 0.0;
        for (int a = 0; a < n_actions; ++a) {
            baseline += probs(s, a) * q_hat[s * n_actions + a];
        }
        for (int a = 0; a < n_actions; ++a) {
            advantage[s * n_actions + a] = q_hat[s * n_actions + a] - baseline;
        }
    }
    return advantage;
}

// A few plain gradient-ascent epochs on the clipped surrogate
//   sum_x D(x) min(rho A, clip(rho, 1 +- eps) A),
// rho = pi(a|s) / pi_old(a|s). The clipped branch contributes no gradient.
void clipped_surrogate_ascent(SoftmaxPolicy& policy,
                              const SoftmaxPolicy& policy_old,
                              const OccupancyMeasure& weights,
                              const Vec& advantage, const TrainConfig& config) {
    const int n_states = static_cast<int>(policy.logits.rows());
    const int n_actions = static_cast<int>(policy.logits.cols());
    const Mat probs_old = policy_old.probabilities();
    for (int epoch = 0; epoch < config.surrogate_epochs; ++epoch) {
        const Mat probs = policy.probabilities();
        Mat grad = Mat::Zero(n_states, n_actions);
        for (int s = 0; s < n_states; ++s) {
            for (int a = 0; a < n_actions; ++a) {
                const int pair = s * n_actions + a;
                const double w = weights.weights[pair];
                if (w <= 0.0) continue;
                const double adv = advantage[pair];
                const double ratio = probs(s, a) / probs_old(s, a);
                const bool clipped = adv >= 0.0
                                         ? ratio > 1.0 + config.clip_ratio
                                         : ratio < 1.0 - config.clip_ratio;
                if (clipped) continue;
                const double coeff = w * adv / probs_old(s, a) * probs(s, a);
                grad(s, a) += coeff;
                grad.row(s) -= coeff * probs.row(s);
            }
        }
        if (!grad.allFinite()) {
            throw DivergenceError("surrogate gradient is not finite");
        }
        policy.logits += config.step_size * grad;
    }
}

// Exact-table view of a learned policy/ref model with the ratio flipped to
// mu_ref / mu_pi, defined on the pairs the batch visited.
LogRatioModel reversed_ratio_view(const LogRatioModel& model,
                                  const OccupancyMeasure& occ_hat) {
    LogRatioModel rev;
    rev.mode = LogRatioModel::Mode::exact_table;
    rev.direction = RatioDirection::ref_over_policy;
    rev.clip = model.clip;
    const int pairs = static_cast<int>(occ_hat.weights.size());
    rev.table = Vec::Zero(pairs);
    rev.seen.assign(static_cast<std::size_t>(pairs), 0);
    for (int p = 0; p < pairs; ++p) {
        if (occ_hat.weights[p] <= 0.0) continue;
        rev.table[p] = -model.log_ratio(p);
        rev.seen[static_cast<std::size_t>(p)] = 1;
    }
    return rev;
}

}  // namespace

Algorithm algorithm_from_string(const std::string& name) {
    if (name == "maxmin") return Algorithm::maxmin;
    if (name == "linear-maxmin") return Algorithm::linear_maxmin;
    if (name == "orpo") return Algorithm::orpo;
    throw ConfigError("unknown algorithm '" + name +
                      "' (expected maxmin, linear-maxmin, or orpo)");
}

std::string to_string(Algorithm algorithm) {
    switch (algorithm) {
        case Algorithm::maxmin: return "maxmin";
        case Algorithm::linear_maxmin: return "linear-maxmin";
        case Algorithm::orpo: return "orpo";
    }
    return "unknown";
}

BatchMode batch_mode_from_string(const std::string& name) {
    if (name == "exact") return BatchMode::exact;
    if (name == "sampled") return BatchMode::sampled;
    throw ConfigError("unknown batch mode '" + name +
                      "' (expected exact or sampled)");
}

std::string to_string(BatchMode mode) {
    return mode == BatchMode::exact ? "exact" : "sampled";
}

void TrainConfig::validate() const {
    require_r(r);
    if (iterations < 0) {
        throw InvalidModelError("iterations must be >= 0");
    }
    if (!(step_size > 0.0)) {
        throw InvalidModelError("step size must be positive");
    }
    if (!(clip_ratio > 0.0)) {
        throw InvalidModelError("clip ratio must be positive");
    }
    if (init_noise < 0.0) {
        throw InvalidModelError("init noise must be >= 0");
    }
    if (batch_trajectories < 1) {
        throw InvalidModelError("batch size must be >= 1");
    }
    if (surrogate_epochs < 1) {
        throw InvalidModelError("surrogate epochs must be >= 1");
    }
    if (line_search_max < 1) {
        throw InvalidModelError("line search budget must be >= 1");
    }
    if (!(eps_h > 0.0)) {
        throw InvalidModelError("eps_h must be positive");
    }
}

std::string TrainLog::to_csv() const {
    std::ostringstream out;
    const int theta_dim =
        records.empty() ? 0 : static_cast<int>(records.front().theta.size());
    out << "iteration,objective,proxy_return,chi2,h";
    if (algorithm == Algorithm::linear_maxmin) {
        for (int j = 0; j < theta_dim; ++j) out << ",theta_" << j;
        out << ",dual_converged";
    } else {
        out << ",lambda1,lambda2,lambda3";
    }
    out << ",degenerate\n";
    for (const TrainRecord& rec : records) {
        out << rec.iteration << ',';
        append_num(out, rec.objective);
        out << ',';
        append_num(out, rec.proxy_return);
        out << ',';
        append_num(out, rec.chi2);
        out << ',';
        append_num(out, rec.h);
        if (algorithm == Algorithm::linear_maxmin) {
            for (int j = 0; j < theta_dim; ++j) {
                out << ',';
                append_num(out, j < rec.theta.size() ? rec.theta[j] : 0.0);
            }
            out << ',' << (rec.dual_converged ? 1 : 0);
        } else {
            out << ',';
            append_num(out, rec.lambda1);
            out << ',';
            append_num(out, rec.lambda2);
            out << ',';
            append_num(out, rec.lambda3);
        }
        out << ',' << (rec.degenerate ? 1 : 0) << '\n';
    }
    return out.str();
}

double orpo_lambda(double sigma_raw, double r) {
    require_r(r);
    if (!(sigma_raw >= 0.0)) {
        throw InvalidModelError("proxy standard deviation must be >= 0");
    }
    return sigma_raw * std::sqrt(1.0 - r * r);
}

double maxmin_objective(const RobustStats& stats, double r) {
    require_r(r);
    if (r >= 1.0) return stats.proxy_mean_pi;
    return stats.proxy_mean_pi -
           std::sqrt(1.0 - r * r) / r * std::sqrt(std::max(stats.h, 0.0));
}

double orpo_objective(const RobustStats& stats, double lambda) {
    return stats.proxy_mean_pi - lambda * std::sqrt(std::max(stats.chi2, 0.0));
}

RewardTable maxmin_pseudo_reward(const LogRatioModel& ratio,
                                 const RewardTable& proxy_norm,
                                 const RobustStats& stats, double r,
                                 double eps_h) {
    require_r(r);
    if (r >= 1.0 || stats.h < eps_h) return proxy_norm;
    const double coeff =
        std::sqrt(1.0 - r * r) / r / std::sqrt(stats.h);
    RewardTable out = Vec::Zero(proxy_norm.size());
    for (int i = 0; i < proxy_norm.size(); ++i) {
        if (!ratio.defined_at(i)) continue;
        out[i] = proxy_norm[i] -
                 coeff * (ratio.ratio(i) - stats.proxy_mean_pi * proxy_norm[i]);
    }
    return out;
}

RewardTable orpo_pseudo_reward(const LogRatioModel& ratio,
                               const RewardTable& proxy_norm, double chi2,
                               double lambda, double eps) {
    if (lambda == 0.0 || chi2 < eps) return proxy_norm;
    const double coeff = lambda / std::sqrt(chi2);
    RewardTable out = Vec::Zero(proxy_norm.size());
    for (int i = 0; i < proxy_norm.size(); ++i) {
        if (!ratio.defined_at(i)) continue;
        out[i] = proxy_norm[i] - coeff * ratio.ratio(i);
    }
    return out;
}

Mat policy_gradient_exact(const TabularMdp& mdp, const SoftmaxPolicy& policy,
                          const RewardTable& pseudo) {
    const Vec d = state_distribution(mdp, policy);
    const Vec v = state_values(mdp, policy, pseudo);
    const Mat probs = policy.probabilities();
    Mat grad(mdp.n_states, mdp.n_actions);
    for (int s = 0; s < mdp.n_states; ++s) {
        for (int a = 0; a < mdp.n_actions; ++a) {
            const int pair = mdp.pair_index(s, a);
            const double q =
                pseudo[pair] + mdp.gamma * mdp.transition.row(pair).dot(v);
            grad(s, a) = d[s] * probs(s, a) * (q - v[s]);
        }
    }
    return grad;
}

SoftmaxPolicy policy_gradient_step(const TabularMdp& mdp,
                                   const SoftmaxPolicy& policy,
                                   const RewardTable& pseudo,
                                   double step_size) {
    const Mat grad = policy_gradient_exact(mdp, policy, pseudo);
    if (!grad.allFinite()) {
        throw DivergenceError("policy gradient is not finite");
    }
    return SoftmaxPolicy{policy.logits + step_size * grad};
}

namespace {

std::pair<SoftmaxPolicy, TrainLog> train_exact(const EnvBundle& bundle,
                                               const TrainConfig& config) {
    const TabularMdp& mdp = bundle.mdp;
    const OccupancyMeasure occ_ref = exact_occupancy(mdp, bundle.reference);
    const ProxyMoments moments = proxy_moments_exact(occ_ref, bundle.proxy_raw);
    const RewardTable proxy_norm = normalize_proxy(bundle.proxy_raw, moments);
    const CorrelationSpec spec{config.r, 0.0, 1.0};

    TrainLog log;
    log.algorithm = config.algorithm;

    const bool linear = config.algorithm == Algorithm::linear_maxmin;
    const double lambda = config.algorithm == Algorithm::orpo
                              ? orpo_lambda(moments.std_dev, config.r)
                              : 0.0;

    // Linear algorithm: the whitening is fixed by mu_ref, computed once.
    WhitenedFeatures whitened;
    if (linear) {
        if (!bundle.features.has_value()) {
            throw InvalidModelError(
                "linear-maxmin requires an environment with a feature map");
        }
        whitened = whiten(compute_Q(occ_ref, *bundle.features), *bundle.features);
    }

    RandomStream master(config.seed);
    RandomStream init_stream = master.child(0);
    IterateState state = make_state(
        mdp, initial_policy(bundle, config, init_stream), occ_ref, proxy_norm);

    // Linear duals are warm-started across iterations; a stalled solve is
    // flagged and the previous iteration's duals are reused, so the weight
    // vector still tracks the current policy through its feature expectations.
    DualVariables prev_duals;
    auto solve_duals_at = [&](const IterateState& at, bool& converged) {
        const LinearDualStats lstats =
            linear_dual_stats(at.occ, occ_ref, proxy_norm, whitened);
        try {
            prev_duals = solve_linear_duals(lstats, spec, prev_duals);
            converged = true;
        } catch (const NonConvergenceError&) {
            converged = false;
        }
        return std::make_pair(prev_duals, lstats);
    };

    bool cached_converged = true;
    DualVariables cached_duals;
    LinearDualStats cached_lstats;
    if (linear) {
        std::tie(cached_duals, cached_lstats) =
            solve_duals_at(state, cached_converged);
    }

    for (int iter = 0; iter < config.iterations; ++iter) {
        const LogRatioModel ratio =
            ratio_exact(state.occ, occ_ref, RatioDirection::policy_over_ref);

        RewardTable pseudo;
        bool degenerate = false;
        if (config.algorithm == Algorithm::maxmin) {
            degenerate = config.r < 1.0 && state.stats.h < config.eps_h;
            pseudo = maxmin_pseudo_reward(ratio, proxy_norm, state.stats,
                                          config.r, config.eps_h);
        } else if (config.algorithm == Algorithm::orpo) {
            degenerate = lambda > 0.0 && state.stats.chi2 < config.eps_h;
            pseudo = orpo_pseudo_reward(ratio, proxy_norm, state.stats.chi2,
                                        lambda, config.eps_h);
        } else {
            const ThetaWeights theta =
                theta_star(cached_duals, cached_lstats, whitened);
            pseudo = linear_worst_reward(theta, whitened);
        }

        const Mat grad = policy_gradient_exact(mdp, state.policy, pseudo);
        // At a degenerate iterate the penalty term has a square-root kink
        // that rejects every candidate step, so the search scores the
        // fallback objective (the bare proxy return) instead.
        const auto objective_of = [&](const RobustStats& s) {
            if (config.algorithm == Algorithm::maxmin) {
                return degenerate ? s.proxy_mean_pi
                                  : maxmin_objective(s, config.r);
            }
            if (config.algorithm == Algorithm::orpo) {
                return degenerate ? s.proxy_mean_pi : orpo_objective(s, lambda);
            }
            (void)s;
            return 0.0;  // linear scores the frozen-theta pairing below
        };
        if (linear) {
            // Frozen-theta objective <mu_trial, pseudo>: evaluated directly
            // from trial occupancies inside a dedicated search.
            const double obj_old = state.occ.weights.dot(pseudo);
            double step = config.step_size;
            for (int attempt = 0; attempt < config.line_search_max; ++attempt) {
                IterateState trial = make_state(
                    mdp, SoftmaxPolicy{state.policy.logits + step * grad},
                    occ_ref, proxy_norm);
                if (trial.occ.weights.dot(pseudo) >= obj_old) {
                    state = std::move(trial);
                    break;
                }
                step *= 0.5;
            }
        } else {
            line_search_step(mdp, occ_ref, proxy_norm, grad, config, state,
                             objective_of);
        }

        TrainRecord rec;
        rec.iteration = iter;
        rec.proxy_return = state.stats.proxy_mean_pi;
        rec.chi2 = state.stats.chi2;
        rec.h = state.stats.h;
        rec.degenerate = degenerate;
        if (linear) {
            std::tie(cached_duals, cached_lstats) =
                solve_duals_at(state, cached_converged);
            const ThetaWeights theta =
                theta_star(cached_duals, cached_lstats, whitened);
            rec.theta = theta.weights;
            rec.dual_converged = cached_converged;
            rec.lambda1 = cached_duals.lambda1;
            rec.lambda2 = cached_duals.lambda2;
            rec.lambda3 = cached_duals.lambda3;
            rec.objective =
                state.occ.weights.dot(linear_worst_reward(theta, whitened));
        } else if (config.algorithm == Algorithm::orpo) {
            rec.objective = orpo_objective(state.stats, lambda);
            rec.lambda1 = lambda;
        } else {
            const DualVariables duals =
                dual_solution(state.stats, spec, config.eps_h);
            rec.objective = robust_value(state.stats, spec);
            rec.lambda1 = duals.lambda1;
            rec.lambda2 = duals.lambda2;
            rec.lambda3 = duals.lambda3;
            rec.degenerate = duals.degenerate || degenerate;
        }
        log.records.push_back(std::move(rec));
    }
    return {state.policy, log};
}

std::pair<SoftmaxPolicy, TrainLog> train_sampled(const EnvBundle& bundle,
                                                 const TrainConfig& config) {
    const TabularMdp& mdp = bundle.mdp;
    const int n_states = mdp.n_states;
    const int n_actions = mdp.n_actions;
    const int horizon =
        config.horizon > 0 ? config.horizon : default_horizon(mdp.gamma);
    const CorrelationSpec spec{config.r, 0.0, 1.0};
    const bool linear = config.algorithm == Algorithm::linear_maxmin;
    if (linear && !bundle.features.has_value()) {
        throw InvalidModelError(
            "linear-maxmin requires an environment with a feature map");
    }

    TrainLog log;
    log.algorithm = config.algorithm;

    RandomStream master(config.seed);
    RandomStream init_stream = master.child(0);
    RandomStream sample_root = master.child(1);
    SoftmaxPolicy policy = initial_policy(bundle, config, init_stream);

    DualVariables prev_duals;
    for (int iter = 0; iter < config.iterations; ++iter) {
        RandomStream iter_stream = sample_root.child(iter);
        RandomStream s_pi = iter_stream.child(0);
        RandomStream s_ref = iter_stream.child(1);
        RandomStream s_ref_star = iter_stream.child(2);
        RandomStream s_disc = iter_stream.child(3);

        const TrajectoryBatch batch_pi = sample_trajectories(
            mdp, policy, config.batch_trajectories, horizon, s_pi);
        const TrajectoryBatch batch_ref = sample_trajectories(
            mdp, bundle.reference, config.batch_trajectories, horizon, s_ref);
        const TrajectoryBatch batch_ref_star =
            sample_trajectories(mdp, bundle.reference,
                                config.batch_trajectories, horizon, s_ref_star);

        RatioTrainConfig ratio_config = config.ratio_train;
        ratio_config.seed = s_disc.seed();
        const LogRatioModel model =
            train_ratio_estimator(batch_ref, batch_pi, n_states, n_actions,
                                  RatioDirection::policy_over_ref, ratio_config);

        const OccupancyMeasure occ_hat =
            empirical_occupancy(batch_pi, mdp.gamma, n_states, n_actions);
        const ProxyMoments moments = proxy_moments_ref(
            batch_ref, batch_ref_star, mdp.gamma, bundle.proxy_raw, n_actions);
        const RewardTable proxy_norm =
            normalize_proxy(bundle.proxy_raw, moments);

        RobustStats stats;
        stats.proxy_mean_pi =
            empirical_return(batch_pi, mdp.gamma, proxy_norm, n_actions);
        stats.chi2 = chi_squared_sampled(occ_hat, model);
        stats.h = std::max(
            stats.chi2 - stats.proxy_mean_pi * stats.proxy_mean_pi, 0.0);

        TrainRecord rec;
        rec.iteration = iter;
        rec.proxy_return = stats.proxy_mean_pi;
        rec.chi2 = stats.chi2;
        rec.h = stats.h;

        RewardTable pseudo;
        if (config.algorithm == Algorithm::maxmin) {
            rec.degenerate = config.r < 1.0 && stats.h < config.eps_h;
            pseudo = maxmin_pseudo_reward(model, proxy_norm, stats, config.r,
                                          config.eps_h);
            rec.objective = robust_value(stats, spec);
            const DualVariables duals = dual_solution(stats, spec, config.eps_h);
            rec.lambda1 = duals.lambda1;
            rec.lambda2 = duals.lambda2;
            rec.lambda3 = duals.lambda3;
        } else if (config.algorithm == Algorithm::orpo) {
            const double lambda = orpo_lambda(moments.std_dev, config.r);
            rec.degenerate = lambda > 0.0 && stats.chi2 < config.eps_h;
            pseudo = orpo_pseudo_reward(model, proxy_norm, stats.chi2, lambda,
                                        config.eps_h);
            rec.objective = orpo_objective(stats, lambda);
            rec.lambda1 = lambda;
        } else {
            const OccupancyMeasure occ_ref_hat = empirical_occupancy(
                batch_ref, mdp.gamma, n_states, n_actions);
            const LogRatioModel reversed = reversed_ratio_view(model, occ_hat);
            const Mat q_hat =
                compute_Q_sampled(occ_hat, reversed, *bundle.features);
            const WhitenedFeatures whitened =
                whiten(q_hat, *bundle.features);
            // Monte-Carlo versions of the dual-system coefficients; the exact
            // builder's support checks do not apply to finite batches.
            LinearDualStats lstats;
            lstats.c_phi = whitened.values.transpose() * occ_ref_hat.weights;
            lstats.d_phi = whitened.values.transpose() *
                           occ_ref_hat.weights.cwiseProduct(proxy_norm);
            lstats.v_phi = whitened.values.transpose() * occ_hat.weights;
            try {
                prev_duals = solve_linear_duals(lstats, spec, prev_duals);
                rec.dual_converged = true;
            } catch (const NonConvergenceError&) {
                rec.dual_converged = false;
            }
            const DualVariables duals = prev_duals;
            const ThetaWeights theta = theta_star(duals, lstats, whitened);
            pseudo = linear_worst_reward(theta, whitened);
            rec.theta = theta.weights;
            rec.lambda1 = duals.lambda1;
            rec.lambda2 = duals.lambda2;
            rec.lambda3 = duals.lambda3;
            rec.objective = occ_hat.weights.dot(pseudo);
        }

        const Vec advantage =
            sampled_advantages(batch_pi, pseudo, policy, n_states, n_actions);
        const SoftmaxPolicy policy_old = policy;
        clipped_surrogate_ascent(policy, policy_old, occ_hat, advantage,
                                 config);
        log.records.push_back(std::move(rec));
    }
    return {policy, log};
}

std::pair<SoftmaxPolicy, TrainLog> train_dispatch(const EnvBundle& bundle,
                                                  const TrainConfig& config) {
    config.validate();
    return config.mode == BatchMode::exact ? train_exact(bundle, config)
                                           : train_sampled(bundle, config);
}

}  // namespace

std::pair<SoftmaxPolicy, TrainLog> train_maxmin(const EnvBundle& bundle,
                                                const TrainConfig& config) {
    TrainConfig fixed = config;
    fixed.algorithm = Algorithm::maxmin;
    return train_dispatch(bundle, fixed);
}

std::pair<SoftmaxPolicy, TrainLog> train_linear_maxmin(
    const EnvBundle& bundle, const TrainConfig& config) {
    TrainConfig fixed = config;
    fixed.algorithm = Algorithm::linear_maxmin;
    return train_dispatch(bundle, fixed);
}

std::pair<SoftmaxPolicy, TrainLog> train_orpo(const EnvBundle& bundle,
                                              const TrainConfig& config) {
    TrainConfig fixed = config;
    fixed.algorithm = Algorithm::orpo;
    return train_dispatch(bundle, fixed);
}

std::pair<SoftmaxPolicy, TrainLog> train(const EnvBundle& bundle,
                                         const TrainConfig& config) {
    return train_dispatch(bundle, config);
}

}  // namespace maxminrl
