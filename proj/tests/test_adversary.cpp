#include <doctest.h>

#include <cmath>

#include <maxminrl/adversary.hpp>
#include <maxminrl/mdp.hpp>

#include "test_helpers.hpp"

using namespace maxminrl;
using testutil::occupancy;
using testutil::random_mdp;
using testutil::random_normalized_proxy;
using testutil::random_policy;
using testutil::vec;

namespace {

CorrelationSpec spec_r(double r, double m = 0.0, double v = 1.0) {
    CorrelationSpec spec;
    spec.r = r;
    spec.mean_m = m;
    spec.std_v = v;
    return spec;
}

/// Random absolutely continuous instance on a small random MDP.
struct Instance {
    OccupancyMeasure occ_ref;
    OccupancyMeasure occ_pi;
    Vec proxy;
};

Instance random_instance(int n_states, RandomStream& rng) {
    const TabularMdp mdp = random_mdp(n_states, 2, 0.9, rng);
    Instance inst;
    inst.occ_ref = exact_occupancy(mdp, random_policy(n_states, 2, 0.8, rng));
    inst.occ_pi = exact_occupancy(mdp, random_policy(n_states, 2, 0.8, rng));
    inst.proxy = random_normalized_proxy(inst.occ_ref, rng);
    return inst;
}

}  // namespace

TEST_CASE("robust stats: reference point, two-point saturation, four-point instance") {
    const OccupancyMeasure ref2 = occupancy({0.5, 0.5});
    const Vec p2 = vec({1, -1});

    const RobustStats at_ref = robust_stats(ref2, ref2, p2);
    CHECK(at_ref.chi2 == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(at_ref.proxy_mean_pi == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(at_ref.h == doctest::Approx(0.0).epsilon(1e-12));

    // Two-point instances always saturate chi^2 = E^2: with mu_pi = (w, 1-w),
    // chi^2 = 2(w^2 + (1-w)^2) - 1 = (2w-1)^2 and E = 2w - 1.
    const RobustStats two = robust_stats(occupancy({0.8, 0.2}), ref2, p2);
    CHECK(two.chi2 == doctest::Approx(0.36));
    CHECK(two.proxy_mean_pi == doctest::Approx(0.6));
    CHECK(two.h == doctest::Approx(0.0).epsilon(1e-12));

    // Uniform reference over four pairs: chi^2 = 4(0.16+0.09+0.04+0.01) - 1.
    const RobustStats four =
        robust_stats(occupancy({0.4, 0.3, 0.2, 0.1}),
                     occupancy({0.25, 0.25, 0.25, 0.25}), vec({1, 1, -1, -1}));
    CHECK(four.chi2 == doctest::Approx(0.2));
    CHECK(four.proxy_mean_pi == doctest::Approx(0.4));
    CHECK(four.h == doctest::Approx(0.04));
}

TEST_CASE("robust stats rejects unnormalized proxies") {
    const OccupancyMeasure ref = occupancy({0.5, 0.5});
    CHECK_THROWS_AS(
        (void)robust_stats(ref, ref, vec({2, -1})), InvalidModelError);
}

TEST_CASE("closed-form duals: frozen instance and edge flags") {
    RobustStats stats;
    stats.chi2 = 0.72;
    stats.proxy_mean_pi = 0.6;
    stats.h = 0.36;
    const DualVariables duals = dual_solution(stats, spec_r(0.5));
    // lambda3 = -sqrt(0.36) / (2 sqrt(0.75)) = -0.6/1.7320508
    CHECK(duals.lambda3 == doctest::Approx(-0.34641016).epsilon(1e-7));
    CHECK(duals.lambda2 == doctest::Approx(1.0));
    // lambda1 = E - 2 r lambda3 = 0.6 + 0.34641016
    CHECK(duals.lambda1 == doctest::Approx(0.94641016).epsilon(1e-7));
    CHECK(!duals.degenerate);
    CHECK(!duals.penalty_free);

    // M != 0 enters only through lambda2 = 1 - 2 lambda3 M.
    const DualVariables shifted = dual_solution(stats, spec_r(0.5, 2.0, 1.0));
    CHECK(shifted.lambda2 ==
          doctest::Approx(1.0 - 2.0 * shifted.lambda3 * 2.0));

    RobustStats degenerate;
    degenerate.chi2 = 0.0;
    degenerate.proxy_mean_pi = 0.0;
    degenerate.h = 0.0;
    const DualVariables at_ref = dual_solution(degenerate, spec_r(0.5));
    CHECK(at_ref.degenerate);
    CHECK(at_ref.lambda3 < 0.0);
    CHECK(at_ref.lambda1 ==
          doctest::Approx(-2.0 * 0.5 * at_ref.lambda3).epsilon(1e-10));

    const DualVariables free = dual_solution(stats, spec_r(1.0));
    CHECK(free.penalty_free);
}

TEST_CASE("adversarial reward: zero numerator, frozen two-point values") {
    LogRatioModel flat;
    flat.mode = LogRatioModel::Mode::exact_table;
    flat.table = Vec::Zero(2);
    flat.seen = {1, 1};
    DualVariables duals;
    duals.lambda1 = 0.0;
    duals.lambda2 = 1.0;
    duals.lambda3 = -0.7;
    const MaskedReward zero =
        worst_case_reward(flat, vec({1, -1}), duals, spec_r(0.5));
    CHECK(zero.values.lpNorm<Eigen::Infinity>() < 1e-12);

    // L = (1.6, 0.4), duals (0.94641016, 1, -0.34641016):
    //   R*(0) = (1.6 - 0.94641016 - 1)/(-0.69282032) = 0.5
    //   R*(1) = (0.4 + 0.94641016 - 1)/(-0.69282032) = -0.5
    const LogRatioModel ratio =
        ratio_exact(occupancy({0.8, 0.2}), occupancy({0.5, 0.5}));
    DualVariables frozen;
    frozen.lambda1 = 0.94641016;
    frozen.lambda2 = 1.0;
    frozen.lambda3 = -0.34641016;
    const MaskedReward rstar =
        worst_case_reward(ratio, vec({1, -1}), frozen, spec_r(0.5));
    CHECK(rstar.values(0) == doctest::Approx(0.5).epsilon(1e-7));
    CHECK(rstar.values(1) == doctest::Approx(-0.5).epsilon(1e-7));

    // On two points the mean and correlation constraints hold but the
    // second-moment constraint cannot (the complement sphere is empty), so
    // the full feasibility check reports exactly that pattern.  Residuals
    // are reported as absolute deviations: |0.25 observed - 1 required|.
    const FeasibilityReport report = feasibility_check(
        rstar.values, occupancy({0.5, 0.5}), vec({1, -1}), spec_r(0.5), 1e-6);
    CHECK(report.mean_residual < 1e-7);
    CHECK(report.correlation_residual < 1e-7);
    CHECK(report.second_moment_residual == doctest::Approx(0.75).epsilon(1e-7));
    CHECK(!report.pass);
}

TEST_CASE("self-consistent four-point instance: duals, feasibility, strong duality") {
    // Construct mu_pi = mu_ref * L with L = 1 + E p + sqrt(h) c, where p is
    // the normalized proxy and c a unit direction orthogonal to {1, p} under
    // mu_ref. Then chi^2 = E^2 + h exactly, and the closed-form adversarial
    // reward must satisfy all three constraints.
    const OccupancyMeasure ref = occupancy({0.25, 0.25, 0.25, 0.25});
    const Vec p = vec({1, -1, 1, -1});
    const Vec c = vec({1, 1, -1, -1});
    const double e = 0.3, h = 0.09;
    Vec ell = Vec::Ones(4) + e * p + std::sqrt(h) * c;
    const OccupancyMeasure pi = occupancy(
        {0.25 * ell(0), 0.25 * ell(1), 0.25 * ell(2), 0.25 * ell(3)});
    CHECK(pi.total() == doctest::Approx(1.0).epsilon(1e-12));

    const RobustStats stats = robust_stats(pi, ref, p);
    CHECK(stats.chi2 == doctest::Approx(0.18).epsilon(1e-10));
    CHECK(stats.proxy_mean_pi == doctest::Approx(0.3).epsilon(1e-10));
    CHECK(stats.h == doctest::Approx(0.09).epsilon(1e-10));

    const CorrelationSpec spec = spec_r(0.5);
    const DualVariables duals = dual_solution(stats, spec);
    CHECK(duals.lambda3 == doctest::Approx(-0.17320508).epsilon(1e-7));
    CHECK(duals.lambda1 == doctest::Approx(0.47320508).epsilon(1e-7));
    CHECK(duals.lambda2 == doctest::Approx(1.0));

    const MaskedReward rstar =
        worst_case_reward(ratio_exact(pi, ref), p, duals, spec);
    const FeasibilityReport report =
        feasibility_check(rstar.values, ref, p, spec, 1e-6);
    CHECK(report.pass);

    const double value = robust_value(stats, spec);
    CHECK(value == doctest::Approx(0.5 * 0.3 - std::sqrt(0.75) * 0.3)
                       .epsilon(1e-10));
    CHECK(pi.weights.dot(rstar.values) == doctest::Approx(value).epsilon(1e-8));
}

TEST_CASE("robust value: frozen example and limiting cases") {
    RobustStats stats;
    stats.chi2 = 0.72;
    stats.proxy_mean_pi = 0.6;
    stats.h = 0.36;
    CHECK(robust_value(stats, spec_r(0.5)) ==
          doctest::Approx(-0.21961524).epsilon(1e-7));

    RobustStats at_ref;
    CHECK(robust_value(at_ref, spec_r(0.5, 3.0, 2.0)) == doctest::Approx(3.0));

    CHECK(robust_value(stats, spec_r(1.0, 0.5, 2.0)) ==
          doctest::Approx(2.0 * 0.6 + 0.5));

    CHECK(improvement_lower_bound(at_ref, spec_r(0.5)) == doctest::Approx(0.0));
    CHECK(improvement_lower_bound(stats, spec_r(0.5)) ==
          doctest::Approx(robust_value(stats, spec_r(0.5))).epsilon(1e-12));
}

TEST_CASE("robust value transforms affinely in (M, V) and preserves ranking") {
    RandomStream rng(61);
    for (int i = 0; i < 20; ++i) {
        const Instance inst = random_instance(4, rng);
        const RobustStats stats =
            robust_stats(inst.occ_pi, inst.occ_ref, inst.proxy);
        const double base = robust_value(stats, spec_r(0.6));
        const double m = 2.0 * rng.normal();
        const double v = 0.2 + 2.0 * rng.uniform01();
        CHECK(robust_value(stats, spec_r(0.6, m, v)) ==
              doctest::Approx(v * base + m).epsilon(1e-10));
    }

    // Ranking of two policies is invariant under any (M, V > 0).
    RandomStream rng2(67);
    const Instance a = random_instance(5, rng2);
    const RobustStats sa = robust_stats(a.occ_pi, a.occ_ref, a.proxy);
    const OccupancyMeasure other =
        exact_occupancy(random_mdp(5, 2, 0.9, rng2),
                        random_policy(5, 2, 0.8, rng2));
    // Use the same reference/proxy for both policies.
    const RobustStats sb = robust_stats(a.occ_ref, a.occ_ref, a.proxy);
    const double d0 = robust_value(sa, spec_r(0.6)) - robust_value(sb, spec_r(0.6));
    const double d1 = robust_value(sa, spec_r(0.6, -1.5, 3.0)) -
                      robust_value(sb, spec_r(0.6, -1.5, 3.0));
    CHECK(d0 * d1 >= 0.0);
    (void)other;
}

TEST_CASE("robust value is nondecreasing in r when the proxy mean is positive") {
    RandomStream rng(71);
    for (int i = 0; i < 20; ++i) {
        Instance inst = random_instance(4, rng);
        RobustStats stats = robust_stats(inst.occ_pi, inst.occ_ref, inst.proxy);
        if (stats.proxy_mean_pi <= 0.0) {
            inst.proxy = -inst.proxy;  // flip to make the mean positive
            stats = robust_stats(inst.occ_pi, inst.occ_ref, inst.proxy);
        }
        double prev = -1e100;
        for (double r = 0.1; r < 1.0001; r += 0.1) {
            const double value = robust_value(stats, spec_r(std::min(r, 1.0)));
            CHECK(value >= prev - 1e-12);
            prev = value;
        }
    }
}

TEST_CASE("feasibility check: proxy against itself and a constant reward") {
    RandomStream rng(73);
    const Instance inst = random_instance(4, rng);
    const FeasibilityReport self = feasibility_check(
        inst.proxy, inst.occ_ref, inst.proxy, spec_r(1.0), 1e-6);
    CHECK(self.pass);

    const FeasibilityReport constant = feasibility_check(
        Vec::Constant(8, 2.0), inst.occ_ref, inst.proxy, spec_r(0.5, 2.0, 1.5),
        1e-6);
    CHECK(constant.mean_residual < 1e-10);
    // Constant reward has zero central second moment; the absolute residual
    // against the required V^2 = 2.25 is therefore exactly 2.25.
    CHECK(constant.second_moment_residual ==
          doctest::Approx(1.5 * 1.5).epsilon(1e-10));
    CHECK(!constant.pass);
}

TEST_CASE("sphere basis is orthonormal and spans the feasible set") {
    RandomStream rng(79);
    const Instance inst = random_instance(5, rng);
    const SphereBasis basis = sphere_basis(inst.occ_ref, inst.proxy);
    const auto dot_ref = [&](const Vec& x, const Vec& y) {
        return x.cwiseProduct(inst.occ_ref.weights).dot(y);
    };
    CHECK(dot_ref(basis.e0, basis.e0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(dot_ref(basis.e1, basis.e1) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::abs(dot_ref(basis.e0, basis.e1)) < 1e-10);
    for (int j = 0; j < basis.dim(); ++j) {
        const Vec u = basis.complement.col(j);
        CHECK(dot_ref(u, u) == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(std::abs(dot_ref(u, basis.e0)) < 1e-10);
        CHECK(std::abs(dot_ref(u, basis.e1)) < 1e-10);
    }

    // Every sampled feasible reward passes the constraint check.
    const CorrelationSpec spec = spec_r(0.7, 0.5, 1.5);
    RandomStream sampler(83);
    for (int i = 0; i < 50; ++i) {
        const RewardTable reward = sample_feasible_reward(basis, spec, sampler);
        CHECK(feasibility_check(reward, inst.occ_ref, inst.proxy, spec, 1e-8)
                  .pass);
    }
}

TEST_CASE("sphere basis requires three support points and a varying proxy") {
    CHECK_THROWS_AS(
        (void)sphere_basis(occupancy({0.5, 0.5}), vec({1, -1})),
        InvalidModelError);
}

TEST_CASE("brute-force oracle agrees with the closed form") {
    RandomStream rng(89);
    for (int i = 0; i < 20; ++i) {
        const Instance inst = random_instance(3, rng);
        const CorrelationSpec spec = spec_r(0.2 + 0.6 * rng.uniform01());
        const RobustStats stats =
            robust_stats(inst.occ_pi, inst.occ_ref, inst.proxy);
        const double value = robust_value(stats, spec);
        RandomStream oracle_rng(1000 + i);
        const OracleResult oracle = brute_force_inner_min(
            inst.occ_pi, inst.occ_ref, inst.proxy, spec, 0, oracle_rng);
        CHECK(oracle.analytic_min == doctest::Approx(value).epsilon(1e-8));
    }

    // Sampling can only overestimate the minimum, and approaches it.
    const Instance inst = random_instance(4, rng);
    const CorrelationSpec spec = spec_r(0.5);
    const double value =
        robust_value(robust_stats(inst.occ_pi, inst.occ_ref, inst.proxy), spec);
    RandomStream oracle_rng(91);
    const OracleResult oracle = brute_force_inner_min(
        inst.occ_pi, inst.occ_ref, inst.proxy, spec, 100000, oracle_rng);
    CHECK(oracle.sampled_min >= value - 1e-10);
    CHECK(oracle.sampled_min - value < 1e-2);
}

TEST_CASE("improvement bound holds for sphere-sampled feasible rewards") {
    RandomStream rng(97);
    const Instance inst = random_instance(4, rng);
    const CorrelationSpec spec = spec_r(0.5);
    const RobustStats stats =
        robust_stats(inst.occ_pi, inst.occ_ref, inst.proxy);
    const double bound = improvement_lower_bound(stats, spec);
    const SphereBasis basis = sphere_basis(inst.occ_ref, inst.proxy);
    RandomStream sampler(101);
    double min_margin = 1e100;
    for (int i = 0; i < 1000; ++i) {
        const RewardTable reward = sample_feasible_reward(basis, spec, sampler);
        const double gain = inst.occ_pi.weights.dot(reward) -
                            inst.occ_ref.weights.dot(reward);
        const double margin = gain - bound;
        CHECK(margin >= -1e-8);
        min_margin = std::min(min_margin, margin);
    }
    CHECK(min_margin >= -1e-8);
}
