// Micro-benchmarks for the hot paths: occupancy solves, the closed-form
// adversary, the linear dual solve, one training iteration, and the
// evaluation-protocol kernels.

#include <benchmark/benchmark.h>

#include <maxminrl/adversary.hpp>
#include <maxminrl/environments.hpp>
#include <maxminrl/estimators.hpp>
#include <maxminrl/evaluation.hpp>
#include <maxminrl/linear_adversary.hpp>
#include <maxminrl/mdp.hpp>
#include <maxminrl/train.hpp>

using namespace maxminrl;

namespace {

struct TomatoFixture {
    EnvBundle env = make_tomato(TomatoConfig{});
    OccupancyMeasure occ_ref = exact_occupancy(env.mdp, env.reference);
    SoftmaxPolicy policy = [this] {
        RandomStream rng(17);
        SoftmaxPolicy p = env.reference;
        for (int s = 0; s < p.logits.rows(); ++s)
            for (int a = 0; a < p.logits.cols(); ++a)
                p.logits(s, a) += 0.3 * rng.normal();
        return p;
    }();
    OccupancyMeasure occ_pi = exact_occupancy(env.mdp, policy);
    RewardTable proxy_norm = normalize_proxy(
        env.proxy_raw, proxy_moments_exact(occ_ref, env.proxy_raw));
    RobustStats stats = robust_stats(occ_pi, occ_ref, proxy_norm);
    CorrelationSpec spec{0.5, 0.0, 1.0};
    LogRatioModel ratio = ratio_exact(occ_pi, occ_ref);
};

const TomatoFixture& fixture() {
    static const TomatoFixture f;
    return f;
}

void bench_exact_occupancy(benchmark::State& state) {
    const TomatoFixture& f = fixture();
    for (auto _ : state) {
        benchmark::DoNotOptimize(exact_occupancy(f.env.mdp, f.policy));
    }
}
BENCHMARK(bench_exact_occupancy);

void bench_dual_solution(benchmark::State& state) {
    const TomatoFixture& f = fixture();
    for (auto _ : state) {
        benchmark::DoNotOptimize(dual_solution(f.stats, f.spec));
    }
}
BENCHMARK(bench_dual_solution);

void bench_worst_case_reward(benchmark::State& state) {
    const TomatoFixture& f = fixture();
    const DualVariables duals = dual_solution(f.stats, f.spec);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            worst_case_reward(f.ratio, f.proxy_norm, duals, f.spec));
    }
}
BENCHMARK(bench_worst_case_reward);

void bench_restricted_worst_reward(benchmark::State& state) {
    const TomatoFixture& f = fixture();
    for (auto _ : state) {
        benchmark::DoNotOptimize(restricted_worst_reward(
            f.occ_pi, f.occ_ref, f.proxy_norm, f.spec));
    }
}
BENCHMARK(bench_restricted_worst_reward);

void bench_linear_dual_solve(benchmark::State& state) {
    // Centered synthetic features admit a converging solve, which is the
    // path worth timing (stalled solves exit through the iteration cap).
    RandomStream rng(23);
    const TabularMdp mdp = [&] {
        TabularMdp m;
        m.n_states = 6;
        m.n_actions = 2;
        m.gamma = 0.9;
        m.transition = Mat(12, 6);
        for (int row = 0; row < 12; ++row) {
            double total = 0.0;
            for (int s = 0; s < 6; ++s) {
                m.transition(row, s) = 0.05 + rng.uniform01();
                total += m.transition(row, s);
            }
            m.transition.row(row) /= total;
        }
        m.initial = Vec::Constant(6, 1.0 / 6.0);
        return m;
    }();
    const OccupancyMeasure occ_ref =
        exact_occupancy(mdp, SoftmaxPolicy::uniform(6, 2));
    SoftmaxPolicy shifted = SoftmaxPolicy::uniform(6, 2);
    for (int s = 0; s < 6; ++s)
        for (int a = 0; a < 2; ++a) shifted.logits(s, a) += 0.4 * rng.normal();
    const OccupancyMeasure occ_pi = exact_occupancy(mdp, shifted);
    Vec raw(12);
    for (int i = 0; i < 12; ++i) raw[i] = rng.normal();
    const RewardTable proxy =
        normalize_proxy(raw, proxy_moments_exact(occ_ref, raw));
    Mat values(12, 3);
    values.col(0) = proxy;
    for (int j = 1; j < 3; ++j) {
        Vec f(12);
        for (int i = 0; i < 12; ++i) f[i] = rng.normal();
        f.array() -= occ_ref.weights.dot(f);
        values.col(j) = f;
    }
    FeatureMap features;
    features.dim = 3;
    features.values = values;
    const WhitenedFeatures white =
        whiten(compute_Q(occ_ref, features), features);
    const LinearDualStats stats =
        linear_dual_stats(occ_pi, occ_ref, proxy, white);
    const CorrelationSpec spec{0.5, 0.0, 1.0};
    for (auto _ : state) {
        try {
            benchmark::DoNotOptimize(solve_linear_duals(stats, spec));
        } catch (const NonConvergenceError&) {
        }
    }
}
BENCHMARK(bench_linear_dual_solve);

void bench_train_iteration(benchmark::State& state) {
    const TomatoFixture& f = fixture();
    TrainConfig config;
    config.algorithm = Algorithm::maxmin;
    config.r = 0.5;
    config.iterations = 1;
    config.mode = BatchMode::exact;
    config.seed = 3;
    for (auto _ : state) {
        benchmark::DoNotOptimize(train(f.env, config));
    }
}
BENCHMARK(bench_train_iteration);

void bench_theta_sampling(benchmark::State& state) {
    const TomatoFixture& f = fixture();
    for (auto _ : state) {
        RandomStream rng(41);
        benchmark::DoNotOptimize(sample_feasible_thetas(
            f.occ_ref, *f.env.features, f.proxy_norm, 0.5, 100, 0.02, rng));
    }
}
BENCHMARK(bench_theta_sampling);

}  // namespace

BENCHMARK_MAIN();
