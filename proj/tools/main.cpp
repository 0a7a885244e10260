// maxminrl command-line interface: train / evaluate / sweep / grid-search /
// oracle subcommands over JSON run configs, with deterministic, manifested
// outputs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "maxminrl/artifact.hpp"
#include "maxminrl/config.hpp"
#include "maxminrl/errors.hpp"
#include "maxminrl/estimators.hpp"
#include "maxminrl/evaluation.hpp"
#include "maxminrl/mdp.hpp"
#include "maxminrl/train.hpp"

namespace {

using namespace maxminrl;

struct CommonOpts {
    std::string config_path;
    std::string out_flag;
    std::string mode_flag;
    std::uint64_t seed_flag = 0;
    bool seed_set = false;
    int jobs = 1;
    std::vector<std::string> artifacts;
};

RunConfig load_with_overrides(const CommonOpts& opts) {
    RunConfig config = load_run_config(opts.config_path);
    if (opts.seed_set) config.seed = opts.seed_flag;
    if (!opts.mode_flag.empty()) {
        config.algorithm.mode = batch_mode_from_string(opts.mode_flag);
    }
    return config;
}

std::filesystem::path ensure_outdir(const CommonOpts& opts,
                                    const RunConfig& config) {
    const std::filesystem::path dir =
        resolve_output_dir(opts.out_flag, config.output_dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string path_stem(const std::string& path) {
    return std::filesystem::path(path).stem().string();
}

void write_output(const std::filesystem::path& dir, const std::string& name,
                  const std::string& content,
                  std::vector<std::pair<std::string, std::string>>& outputs) {
    write_text_file((dir / name).string(), content);
    outputs.emplace_back(name, content);
    std::cout << "wrote " << (dir / name).string() << "\n";
}

void finish_manifest(
    const std::filesystem::path& dir, const std::string& manifest_name,
    const RunConfig& config,
    const std::vector<std::pair<std::string, std::string>>& outputs) {
    const std::string text =
        build_manifest(config.raw_text, config.seed, outputs).dump(2) + "\n";
    write_text_file((dir / manifest_name).string(), text);
    std::cout << "wrote " << (dir / manifest_name).string() << "\n";
}

void require_algorithm(const RunConfig& config) {
    if (!config.has_algorithm) {
        throw ConfigError("missing section 'algorithm'");
    }
}

/// Resolves artifact arguments into policies. The literal name "ref" selects
/// the environment's reference policy; with no arguments, only the reference
/// is evaluated.
std::pair<std::vector<SoftmaxPolicy>, std::vector<std::string>>
resolve_policies(const EnvBundle& bundle,
                 const std::vector<std::string>& artifacts) {
    std::vector<SoftmaxPolicy> policies;
    std::vector<std::string> ids;
    if (artifacts.empty()) {
        policies.push_back(bundle.reference);
        ids.emplace_back("reference");
        return {policies, ids};
    }
    for (const std::string& artifact : artifacts) {
        if (artifact == "ref") {
            policies.push_back(bundle.reference);
            ids.emplace_back("reference");
            continue;
        }
        SoftmaxPolicy policy = load_policy(artifact);
        if (policy.logits.rows() != bundle.mdp.n_states ||
            policy.logits.cols() != bundle.mdp.n_actions) {
            throw ConfigError(
                "artifact '" + artifact + "' shape (" +
                std::to_string(policy.logits.rows()) + " x " +
                std::to_string(policy.logits.cols()) +
                ") does not match environment '" + bundle.name + "' (" +
                std::to_string(bundle.mdp.n_states) + " x " +
                std::to_string(bundle.mdp.n_actions) + ")");
        }
        policies.push_back(std::move(policy));
        ids.push_back(path_stem(artifact));
    }
    return {policies, ids};
}

int cmd_train(const CommonOpts& opts) {
    RunConfig config = load_with_overrides(opts);
    require_algorithm(config);
    const std::filesystem::path dir = ensure_outdir(opts, config);
    const EnvBundle bundle = make_environment(config);

    TrainConfig train_config = config.algorithm;
    train_config.seed = config.seed;
    auto [policy, log] = train(bundle, train_config);

    std::vector<std::pair<std::string, std::string>> outputs;
    write_output(dir, "policy.txt", policy_to_text(policy), outputs);
    write_output(dir, "train_log.csv", log.to_csv(), outputs);
    finish_manifest(dir, "manifest_train.json", config, outputs);
    if (!log.records.empty()) {
        std::cout << "final objective " << log.records.back().objective
                  << " after " << log.records.size() << " iterations\n";
    }
    return 0;
}

int cmd_evaluate(const CommonOpts& opts) {
    RunConfig config = load_with_overrides(opts);
    require_algorithm(config);  // supplies the evaluation correlation r
    const std::filesystem::path dir = ensure_outdir(opts, config);
    const EnvBundle bundle = make_environment(config);
    auto [policies, ids] = resolve_policies(bundle, opts.artifacts);

    const CorrelationSpec spec{config.algorithm.r, 0.0, 1.0};
    std::vector<MetricsRow> rows;
    for (std::size_t i = 0; i < policies.size(); ++i) {
        MetricsRow row = evaluate_policy(bundle, policies[i], spec,
                                         config.evaluation.r_min);
        row.policy_id = ids[i];
        rows.push_back(std::move(row));
    }

    std::vector<std::pair<std::string, std::string>> outputs;
    write_output(dir, "metrics.csv", metrics_csv(rows), outputs);
    finish_manifest(dir, "manifest_evaluate.json", config, outputs);
    return 0;
}

int cmd_sweep(const CommonOpts& opts) {
    RunConfig config = load_with_overrides(opts);
    const std::filesystem::path dir = ensure_outdir(opts, config);
    const EnvBundle bundle = make_environment(config);
    auto [policies, ids] = resolve_policies(bundle, opts.artifacts);

    const RandomStream master(config.seed);
    const SweepResult result = robustness_sweep(
        bundle, policies, ids, config.evaluation.r_grid,
        config.evaluation.n_theta_samples, config.evaluation.theta_tol,
        master, opts.jobs);
    for (const SweepCell& cell : result.cells) {
        if (cell.infeasible) {
            std::cerr << "warning: cell (r=" << cell.r << ", "
                      << cell.policy_id << ") accepted only "
                      << cell.n_accepted << " of " << cell.n_proposed
                      << " proposals\n";
        }
    }

    std::vector<std::pair<std::string, std::string>> outputs;
    write_output(dir, "sweep.csv", sweep_csv(result), outputs);
    finish_manifest(dir, "manifest_sweep.json", config, outputs);
    return 0;
}

int cmd_grid_search(const CommonOpts& opts) {
    RunConfig config = load_with_overrides(opts);
    require_algorithm(config);
    const std::filesystem::path dir = ensure_outdir(opts, config);
    const EnvBundle bundle = make_environment(config);

    TrainConfig train_config = config.algorithm;
    train_config.seed = config.seed;
    const GridSearchResult result =
        r_grid_search(bundle, train_config.algorithm,
                      config.evaluation.r_grid, train_config,
                      config.evaluation.r_min);

    std::vector<MetricsRow> rows;
    const SoftmaxPolicy* best_policy = nullptr;
    for (const GridSearchRow& row : result.rows) {
        rows.push_back(row.metrics);
        if (row.r == result.best_r) best_policy = &row.policy;
    }

    std::vector<std::pair<std::string, std::string>> outputs;
    write_output(dir, "grid_search.csv", metrics_csv(rows), outputs);
    if (best_policy != nullptr) {
        write_output(dir, "policy_best.txt", policy_to_text(*best_policy),
                     outputs);
    }
    finish_manifest(dir, "manifest_grid_search.json", config, outputs);
    std::cout << "best r " << result.best_r << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// Oracle suites: randomized instances checked against the closed forms.

struct SyntheticInstance {
    OccupancyMeasure occ_ref;
    OccupancyMeasure occ_pi;
    RewardTable proxy_norm;
    double r = 0.5;
};

Vec random_simplex(int k, RandomStream& rng) {
    Vec w(k);
    for (int i = 0; i < k; ++i) w[i] = -std::log(1.0 - rng.uniform01());
    return w / w.sum();
}

SyntheticInstance random_instance(RandomStream& rng, int min_pairs,
                                  int max_pairs, double min_h) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
        const int k = min_pairs + static_cast<int>(rng.uniform01() *
                                                   (max_pairs - min_pairs + 1));
        SyntheticInstance inst;
        inst.occ_ref = OccupancyMeasure{random_simplex(std::min(k, max_pairs),
                                                       rng),
                                        true};
        inst.occ_pi = OccupancyMeasure{
            random_simplex(static_cast<int>(inst.occ_ref.weights.size()), rng),
            true};
        Vec raw(inst.occ_ref.weights.size());
        for (int i = 0; i < raw.size(); ++i) raw[i] = rng.normal();
        const ProxyMoments moments = proxy_moments_exact(inst.occ_ref, raw);
        if (moments.variance < 1e-3) continue;
        inst.proxy_norm = normalize_proxy(raw, moments);
        inst.r = 0.05 + 0.9 * rng.uniform01();
        const RobustStats stats =
            robust_stats(inst.occ_pi, inst.occ_ref, inst.proxy_norm);
        if (stats.h < min_h) continue;
        return inst;
    }
    throw Error("could not draw a non-degenerate oracle instance");
}

nlohmann::json instance_json(const SyntheticInstance& inst) {
    auto to_vector = [](const Vec& v) {
        return std::vector<double>(v.data(), v.data() + v.size());
    };
    return nlohmann::json{{"occ_ref", to_vector(inst.occ_ref.weights)},
                          {"occ_pi", to_vector(inst.occ_pi.weights)},
                          {"proxy_norm", to_vector(inst.proxy_norm)},
                          {"r", inst.r}};
}

struct OracleFailure {
    std::string check;
    int instance_index = 0;
    std::string detail;
    nlohmann::json instance;
};

class OracleRun {
  public:
    explicit OracleRun(const OracleConfig& config, std::uint64_t seed)
        : config_(config), master_(seed) {}

    bool run() {
        strong_duality_and_feasibility();
        whitening_and_linear();
        gradient_fd();
        improvement_bound();
        return !failure_.has_value();
    }

    const std::optional<OracleFailure>& failure() const { return failure_; }

  private:
    void fail(const std::string& check, int index, const std::string& detail,
              nlohmann::json instance) {
        if (failure_.has_value()) return;
        failure_ = OracleFailure{check, index, detail, std::move(instance)};
        std::cout << "[FAIL] " << check << ": instance " << index << ": "
                  << detail << "\n";
    }

    void pass(const std::string& check, const std::string& detail) {
        std::cout << "[PASS] " << check << ": " << detail << "\n";
    }

    void strong_duality_and_feasibility() {
        RandomStream rng = master_.child(1);
        double max_closed_gap = 0.0;
        double max_oracle_gap = 0.0;
        double max_residual = 0.0;
        bool ok = true;
        for (int i = 0; i < config_.duality_instances && ok; ++i) {
            const SyntheticInstance inst = random_instance(rng, 3, 12, 1e-8);
            const CorrelationSpec spec{inst.r, 0.0, 1.0};
            const RobustStats stats =
                robust_stats(inst.occ_pi, inst.occ_ref, inst.proxy_norm);
            const DualVariables duals = dual_solution(stats, spec);
            const LogRatioModel ratio =
                ratio_exact(inst.occ_pi, inst.occ_ref);
            const MaskedReward rstar =
                worst_case_reward(ratio, inst.proxy_norm, duals, spec);
            const double pairing = inst.occ_pi.weights.dot(rstar.values);
            const double closed = robust_value(stats, spec);
            const double closed_gap = std::abs(pairing - closed);
            max_closed_gap = std::max(max_closed_gap, closed_gap);
            if (closed_gap > config_.duality_tol) {
                fail("strong-duality", i,
                     "pairing vs closed form gap " + std::to_string(closed_gap),
                     instance_json(inst));
                ok = false;
                break;
            }
            RandomStream sphere_rng = rng.child(1000u + i);
            const OracleResult oracle = brute_force_inner_min(
                inst.occ_pi, inst.occ_ref, inst.proxy_norm, spec,
                config_.sphere_samples, sphere_rng);
            const double oracle_gap = std::abs(oracle.analytic_min - closed);
            max_oracle_gap = std::max(max_oracle_gap, oracle_gap);
            if (oracle_gap > config_.duality_tol ||
                oracle.sampled_min < closed - 1e-9) {
                fail("strong-duality", i,
                     "sphere oracle gap " + std::to_string(oracle_gap),
                     instance_json(inst));
                ok = false;
                break;
            }
            const FeasibilityReport feasibility =
                feasibility_check(rstar.values, inst.occ_ref, inst.proxy_norm,
                                  spec, config_.feasibility_tol);
            max_residual = std::max(
                {max_residual, std::abs(feasibility.mean_residual),
                 std::abs(feasibility.second_moment_residual),
                 std::abs(feasibility.correlation_residual)});
            if (!feasibility.pass) {
                fail("feasibility", i,
                     "constraint residuals " + feasibility.to_json().dump(),
                     instance_json(inst));
                ok = false;
            }
        }
        if (ok) {
            std::ostringstream detail;
            detail << config_.duality_instances
                   << " instances; max closed-form gap " << max_closed_gap
                   << ", max sphere-oracle gap " << max_oracle_gap;
            pass("strong-duality", detail.str());
            std::ostringstream fdetail;
            fdetail << "max constraint residual " << max_residual << " (tol "
                    << config_.feasibility_tol << ")";
            pass("feasibility", fdetail.str());
        }
    }

    void whitening_and_linear() {
        RandomStream rng = master_.child(2);
        double max_whiten = 0.0;
        double max_grad_norm = 0.0;
        double max_theta_residual = 0.0;
        double min_dominance_slack = std::numeric_limits<double>::infinity();
        int converged = 0;
        bool ok = true;
        for (int i = 0; i < config_.duality_instances && ok; ++i) {
            const SyntheticInstance inst = random_instance(rng, 4, 12, 1e-8);
            const int pairs = static_cast<int>(inst.occ_ref.weights.size());
            // Features spanning the proxy direction plus reference-centered
            // random extras: centering makes the zero-mean constraint hold
            // for every nonnegative theta, so the linear uncertainty set is
            // generically non-empty and the solves converge.
            FeatureMap features;
            features.dim = 3;
            features.values = Mat(pairs, 3);
            for (int p = 0; p < pairs; ++p) {
                features.values(p, 0) = inst.proxy_norm[p];
                features.values(p, 1) = rng.normal();
                features.values(p, 2) = rng.normal();
            }
            for (int j = 1; j < 3; ++j) {
                const double mean =
                    inst.occ_ref.weights.dot(features.values.col(j));
                features.values.col(j).array() -= mean;
            }
            const Mat q = compute_Q(inst.occ_ref, features);
            WhitenedFeatures whitened;
            try {
                whitened = whiten(q, features);
            } catch (const SpanError&) {
                continue;  // rank-deficient random draw; skip
            }
            const Mat identity_gap =
                whitened.values.transpose() *
                    inst.occ_ref.weights.asDiagonal() * whitened.values -
                Mat::Identity(3, 3);
            const double gap = identity_gap.cwiseAbs().maxCoeff();
            max_whiten = std::max(max_whiten, gap);
            if (gap > 1e-8) {
                fail("whitening", i,
                     "||W Q W^T - I||_inf = " + std::to_string(gap),
                     instance_json(inst));
                ok = false;
                break;
            }
            const CorrelationSpec spec{inst.r, 0.0, 1.0};
            const LinearDualStats lstats = linear_dual_stats(
                inst.occ_pi, inst.occ_ref, inst.proxy_norm, whitened);
            DualVariables duals;
            try {
                duals = solve_linear_duals(lstats, spec);
            } catch (const NonConvergenceError&) {
                continue;  // geometry without a feasible linear point
            }
            ++converged;
            const Vec gradients = linear_dual_gradients(duals, lstats, spec);
            max_grad_norm = std::max(max_grad_norm, gradients.norm());
            const ThetaWeights theta = theta_star(duals, lstats, whitened);
            const double theta_residual =
                std::abs(theta.weights.squaredNorm() - 1.0);
            max_theta_residual = std::max(max_theta_residual, theta_residual);
            const RobustStats stats =
                robust_stats(inst.occ_pi, inst.occ_ref, inst.proxy_norm);
            const double slack = lstats.v_phi.dot(theta.weights) -
                                 robust_value(stats, spec);
            min_dominance_slack = std::min(min_dominance_slack, slack);
            if (gradients.norm() > 1e-6 || theta_residual > 1e-5 ||
                slack < -1e-8) {
                std::ostringstream detail;
                detail << "grad norm " << gradients.norm()
                       << ", |theta|^2 residual " << theta_residual
                       << ", dominance slack " << slack;
                fail("linear-duals", i, detail.str(), instance_json(inst));
                ok = false;
            }
        }
        if (ok) {
            std::ostringstream wdetail;
            wdetail << "max ||W Q W^T - I||_inf = " << max_whiten;
            pass("whitening", wdetail.str());
            std::ostringstream ldetail;
            ldetail << converged << " converged solves; max gradient norm "
                    << max_grad_norm << ", max theta-norm residual "
                    << max_theta_residual << ", min dominance slack "
                    << (converged > 0 ? min_dominance_slack : 0.0);
            pass("linear-duals", ldetail.str());
        }
    }

    double fd_relative_error(const TabularMdp& mdp, const SoftmaxPolicy& at,
                             const Mat& analytic,
                             const std::function<double(const SoftmaxPolicy&)>&
                                 objective) {
        const double eps = 1e-5;
        Mat fd(at.logits.rows(), at.logits.cols());
        for (int s = 0; s < at.logits.rows(); ++s) {
            for (int a = 0; a < at.logits.cols(); ++a) {
                SoftmaxPolicy up = at;
                SoftmaxPolicy down = at;
                up.logits(s, a) += eps;
                down.logits(s, a) -= eps;
                fd(s, a) = (objective(up) - objective(down)) / (2.0 * eps);
            }
        }
        (void)mdp;
        const double scale = std::max(fd.norm(), 1e-8);
        return (analytic - fd).norm() / scale;
    }

    void gradient_fd() {
        RandomStream rng = master_.child(3);
        double worst_error = 0.0;
        std::string worst_label = "none";
        bool ok = true;
        for (int i = 0; i < config_.fd_instances && ok; ++i) {
            const int n_states = 3 + static_cast<int>(rng.uniform01() * 3);
            const int n_actions = 2 + static_cast<int>(rng.uniform01() * 2);
            const EnvBundle bundle =
                make_chain(n_states, 0.9, rng.child(10u + i).seed(), n_actions,
                           0.7);
            const OccupancyMeasure occ_ref =
                exact_occupancy(bundle.mdp, bundle.reference);
            const ProxyMoments moments =
                proxy_moments_exact(occ_ref, bundle.proxy_raw);
            const RewardTable proxy_norm =
                normalize_proxy(bundle.proxy_raw, moments);
            const double r = 0.2 + 0.6 * rng.uniform01();
            const double lambda = orpo_lambda(moments.std_dev, r);

            SoftmaxPolicy policy = bundle.reference;
            for (int s = 0; s < policy.logits.rows(); ++s) {
                for (int a = 0; a < policy.logits.cols(); ++a) {
                    policy.logits(s, a) += 0.5 * rng.normal();
                }
            }
            const OccupancyMeasure occ =
                exact_occupancy(bundle.mdp, policy);
            const RobustStats stats = robust_stats(occ, occ_ref, proxy_norm);
            if (stats.h < 1e-6) {
                --i;  // kinked point; redraw
                continue;
            }
            const LogRatioModel ratio = ratio_exact(occ, occ_ref);

            struct Case {
                const char* label;
                RewardTable pseudo;
                std::function<double(const SoftmaxPolicy&)> objective;
            };
            std::vector<Case> cases;
            cases.push_back(
                {"maxmin",
                 maxmin_pseudo_reward(ratio, proxy_norm, stats, r),
                 [&, r](const SoftmaxPolicy& p) {
                     const OccupancyMeasure o =
                         exact_occupancy(bundle.mdp, p);
                     return maxmin_objective(
                         robust_stats(o, occ_ref, proxy_norm), r);
                 }});
            cases.push_back(
                {"orpo",
                 orpo_pseudo_reward(ratio, proxy_norm, stats.chi2, lambda),
                 [&, lambda](const SoftmaxPolicy& p) {
                     const OccupancyMeasure o =
                         exact_occupancy(bundle.mdp, p);
                     return orpo_objective(
                         robust_stats(o, occ_ref, proxy_norm), lambda);
                 }});
            // Frozen linear adversary: gradient of <mu_pi, theta^T phi~> at
            // fixed theta.
            FeatureMap features;
            features.dim = 3;
            features.values = Mat(bundle.mdp.pair_count(), 3);
            for (int p = 0; p < features.values.rows(); ++p) {
                features.values(p, 0) = proxy_norm[p];
                features.values(p, 1) = rng.normal();
                features.values(p, 2) = rng.normal();
            }
            const WhitenedFeatures whitened =
                whiten(compute_Q(occ_ref, features), features);
            ThetaWeights frozen;
            frozen.weights = Vec(3);
            for (int j = 0; j < 3; ++j) frozen.weights[j] = rng.normal();
            frozen.weights /= frozen.weights.norm();
            frozen.unwhitened = whitened.transform.transpose() * frozen.weights;
            const RewardTable linear_pseudo =
                linear_worst_reward(frozen, whitened);
            cases.push_back({"linear-frozen-theta", linear_pseudo,
                             [&, linear_pseudo](const SoftmaxPolicy& p) {
                                 return exact_occupancy(bundle.mdp, p)
                                     .weights.dot(linear_pseudo);
                             }});

            for (const Case& c : cases) {
                const Mat analytic =
                    policy_gradient_exact(bundle.mdp, policy, c.pseudo);
                const double err = fd_relative_error(bundle.mdp, policy,
                                                     analytic, c.objective);
                if (err > worst_error) {
                    worst_error = err;
                    worst_label = c.label;
                }
                if (err > config_.grad_tol) {
                    fail("gradient-fd", i,
                         std::string(c.label) + " relative error " +
                             std::to_string(err),
                         nlohmann::json{{"seed", rng.seed()},
                                        {"n_states", n_states},
                                        {"n_actions", n_actions}});
                    ok = false;
                    break;
                }
            }
        }
        if (ok) {
            std::ostringstream detail;
            detail << config_.fd_instances
                   << " instances x 3 objectives; worst relative error "
                   << worst_error << " (" << worst_label << ")";
            pass("gradient-fd", detail.str());
        }
    }

    void improvement_bound() {
        RandomStream rng = master_.child(4);
        double min_margin = std::numeric_limits<double>::infinity();
        bool ok = true;
        const int cells = 5;
        for (int i = 0; i < cells && ok; ++i) {
            const EnvBundle bundle =
                make_chain(4 + i, 0.9, rng.child(20u + i).seed(), 2, 0.7);
            SoftmaxPolicy policy = bundle.reference;
            for (int s = 0; s < policy.logits.rows(); ++s) {
                for (int a = 0; a < policy.logits.cols(); ++a) {
                    policy.logits(s, a) += 0.5 * rng.normal();
                }
            }
            const CorrelationSpec spec{0.2 + 0.15 * i, 0.0, 1.0};
            try {
                RandomStream cell_rng = rng.child(40u + i);
                const Theorem1Report report = verify_theorem1(
                    bundle, policy, spec, config_.theorem_rewards, cell_rng);
                min_margin = std::min(min_margin, report.min_margin);
            } catch (const TheoremViolationError& err) {
                fail("improvement-bound", i, err.what(),
                     nlohmann::json{{"cell", i}});
                ok = false;
            }
        }
        if (ok) {
            std::ostringstream detail;
            detail << cells << " cells x " << config_.theorem_rewards
                   << " sampled rewards; zero violations, min margin "
                   << min_margin;
            pass("improvement-bound", detail.str());
        }
    }

    OracleConfig config_;
    RandomStream master_;
    std::optional<OracleFailure> failure_;
};

int cmd_oracle(const CommonOpts& opts) {
    RunConfig config = load_with_overrides(opts);
    const std::filesystem::path dir = ensure_outdir(opts, config);

    OracleRun run(config.oracle, config.seed);
    const bool passed = run.run();
    if (!passed) {
        const OracleFailure& failure = *run.failure();
        const nlohmann::json report{{"check", failure.check},
                                    {"instance_index", failure.instance_index},
                                    {"detail", failure.detail},
                                    {"master_seed", config.seed},
                                    {"instance", failure.instance}};
        const std::string path = (dir / "oracle_failure.json").string();
        write_text_file(path, report.dump(2) + "\n");
        std::cerr << "oracle failure serialized to " << path << "\n";
        return 1;
    }
    std::cout << "all oracle checks passed\n";
    return 0;
}

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_artifacts) {
    cmd->add_option("--config", opts.config_path, "Run configuration (JSON)")
        ->required();
    cmd->add_option("--out", opts.out_flag,
                    "Output directory (overrides config and " +
                        std::string(kOutputDirEnvVar) + ")");
    cmd->add_option("--seed", opts.seed_flag,
                    "Master seed override for this run");
    cmd->add_option("--jobs", opts.jobs, "Worker threads for sweep cells")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--mode", opts.mode_flag,
                    "Batch mode override for the algorithm section")
        ->check(CLI::IsMember({"exact", "sampled"}));
    if (with_artifacts) {
        cmd->add_option("artifacts", opts.artifacts,
                        "Policy artifacts ('ref' selects the reference "
                        "policy; default: reference only)");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Robust policy optimization against correlation-constrained "
        "proxy-reward uncertainty"};
    app.require_subcommand(1);

    CommonOpts train_opts;
    CLI::App* train_cmd = app.add_subcommand(
        "train", "Train a policy and write artifact, log, and manifest");
    add_common(train_cmd, train_opts, false);

    CommonOpts eval_opts;
    CLI::App* eval_cmd = app.add_subcommand(
        "evaluate", "Worst-case metrics for policy artifacts");
    add_common(eval_cmd, eval_opts, true);

    CommonOpts sweep_opts;
    CLI::App* sweep_cmd = app.add_subcommand(
        "sweep", "Robustness sweep across correlation levels");
    add_common(sweep_cmd, sweep_opts, true);

    CommonOpts grid_opts;
    CLI::App* grid_cmd = app.add_subcommand(
        "grid-search", "Train across the r grid and select by Worst");
    add_common(grid_cmd, grid_opts, false);

    CommonOpts oracle_opts;
    CLI::App* oracle_cmd = app.add_subcommand(
        "oracle", "Randomized closed-form verification suites");
    add_common(oracle_cmd, oracle_opts, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) {
            train_opts.seed_set = train_cmd->count("--seed") > 0;
            return cmd_train(train_opts);
        }
        if (eval_cmd->parsed()) {
            eval_opts.seed_set = eval_cmd->count("--seed") > 0;
            return cmd_evaluate(eval_opts);
        }
        if (sweep_cmd->parsed()) {
            sweep_opts.seed_set = sweep_cmd->count("--seed") > 0;
            return cmd_sweep(sweep_opts);
        }
        if (grid_cmd->parsed()) {
            grid_opts.seed_set = grid_cmd->count("--seed") > 0;
            return cmd_grid_search(grid_opts);
        }
        if (oracle_cmd->parsed()) {
            oracle_opts.seed_set = oracle_cmd->count("--seed") > 0;
            return cmd_oracle(oracle_opts);
        }
    } catch (const maxminrl::Error& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    } catch (const std::exception& err) {
        std::cerr << "unexpected error: " << err.what() << "\n";
        return 2;
    }
    return 0;
}
