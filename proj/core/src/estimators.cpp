// estimators.cpp — statistical estimators and the discriminator-based ratio
// model.

#include "maxminrl/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace maxminrl {

namespace {

/// log(1 + e^x) computed without overflow.
double softplus(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

/// Logistic sigmoid.
double sigmoid(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

/// Normalized discount-weighted visit distribution of a batch over flattened
/// pairs: proportional to sum_i sum_t gamma^t 1{pair}, normalized to sum 1.
Vec pair_distribution(const TrajectoryBatch& batch, double discount,
                      int n_states, int n_actions) {
    Vec mass = Vec::Zero(static_cast<Eigen::Index>(n_states) * n_actions);
    for (std::size_t i = 0; i < batch.states.size(); ++i) {
        double w = 1.0;
        for (std::size_t t = 0; t < batch.states[i].size(); ++t) {
            mass[batch.states[i][t] * n_actions + batch.actions[i][t]] += w;
            w *= discount;
        }
    }
    const double total = mass.sum();
    if (!(total > 0.0)) {
        throw InvalidModelError("pair_distribution: batch carries no visit mass");
    }
    return mass / total;
}

}  // namespace

bool LogRatioModel::defined_at(int pair) const {
    if (mode == Mode::learned) return true;
    return seen.at(static_cast<std::size_t>(pair)) != 0;
}

double LogRatioModel::log_ratio(int pair) const {
    double d;
    if (mode == Mode::exact_table) {
        if (!defined_at(pair)) {
            throw SupportViolationError(
                "LogRatioModel: ratio undefined outside the reference support",
                {pair});
        }
        d = table[pair];
    } else {
        d = w2.dot((w1.col(pair) + b1).array().tanh().matrix()) + b2;
    }
    return std::clamp(d, -clip, clip);
}

double LogRatioModel::ratio(int pair) const { return std::exp(log_ratio(pair)); }

OccupancyMeasure empirical_occupancy(const TrajectoryBatch& batch,
                                     double discount, int n_states,
                                     int n_actions) {
    if (batch.states.empty()) {
        throw InvalidModelError("empirical_occupancy: empty batch");
    }
    OccupancyMeasure occ;
    occ.exact = false;
    occ.weights = Vec::Zero(static_cast<Eigen::Index>(n_states) * n_actions);
    const double n = static_cast<double>(batch.states.size());
    for (std::size_t i = 0; i < batch.states.size(); ++i) {
        double w = 1.0;
        for (std::size_t t = 0; t < batch.states[i].size(); ++t) {
            occ.weights[batch.states[i][t] * n_actions + batch.actions[i][t]] += w;
            w *= discount;
        }
    }
    occ.weights *= (1.0 - discount) / n;
    return occ;
}

double empirical_return(const TrajectoryBatch& batch, double discount,
                        const RewardTable& reward, int n_actions) {
    if (batch.states.empty()) {
        throw InvalidModelError("empirical_return: empty batch");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < batch.states.size(); ++i) {
        double w = 1.0;
        for (std::size_t t = 0; t < batch.states[i].size(); ++t) {
            total += w * reward[batch.states[i][t] * n_actions + batch.actions[i][t]];
            w *= discount;
        }
    }
    return (1.0 - discount) * total / static_cast<double>(batch.states.size());
}

double double_sample_square(const TrajectoryBatch& batch_a,
                            const TrajectoryBatch& batch_b, double discount,
                            const RewardTable& reward, int n_actions) {
    if (batch_a.seed == batch_b.seed) {
        throw IndependenceViolationError(
            "double_sample_square: batches share a seed; the squared-mean "
            "estimator requires independent batches");
    }
    return empirical_return(batch_a, discount, reward, n_actions) *
           empirical_return(batch_b, discount, reward, n_actions);
}

ProxyMoments proxy_moments_exact(const OccupancyMeasure& occ_ref,
                                 const RewardTable& raw_proxy) {
    if (occ_ref.weights.size() != raw_proxy.size()) {
        throw InvalidModelError("proxy_moments_exact: length mismatch");
    }
    ProxyMoments m;
    m.mean = occ_ref.weights.dot(raw_proxy);
    const double second = occ_ref.weights.dot(raw_proxy.cwiseProduct(raw_proxy));
    m.variance = second - m.mean * m.mean;
    if (m.variance <= 0.0) {
        throw DegenerateProxyError(
            "proxy moments: proxy reward is constant under the reference "
            "occupancy; cannot normalize");
    }
    m.std_dev = std::max(std::sqrt(m.variance), 1e-8);
    return m;
}

ProxyMoments proxy_moments_ref(const TrajectoryBatch& batch_ref,
                               const TrajectoryBatch& batch_ref_star,
                               double discount, const RewardTable& raw_proxy,
                               int n_actions) {
    ProxyMoments m;
    m.mean = empirical_return(batch_ref, discount, raw_proxy, n_actions);
    const double second =
        empirical_return(batch_ref, discount,
                         raw_proxy.cwiseProduct(raw_proxy).eval(), n_actions);
    const double squared_mean = double_sample_square(
        batch_ref, batch_ref_star, discount, raw_proxy, n_actions);
    m.variance = second - squared_mean;
    if (m.variance <= 0.0) {
        throw DegenerateProxyError(
            "proxy moments: sampled variance estimate is not positive; proxy "
            "appears constant under the reference policy");
    }
    m.std_dev = std::max(std::sqrt(m.variance), 1e-8);
    return m;
}

RewardTable normalize_proxy(const RewardTable& raw_proxy,
                            const ProxyMoments& moments) {
    if (!(moments.std_dev > 0.0)) {
        throw DegenerateProxyError("normalize_proxy: std must be positive");
    }
    return (raw_proxy.array() - moments.mean) / moments.std_dev;
}

double chi_squared(const OccupancyMeasure& occ_pi,
                   const OccupancyMeasure& occ_ref) {
    if (occ_pi.weights.size() != occ_ref.weights.size()) {
        throw InvalidModelError("chi_squared: length mismatch");
    }
    std::vector<int> violations;
    double sum = 0.0;
    for (int p = 0; p < occ_ref.weights.size(); ++p) {
        if (occ_ref.weights[p] > 0.0) {
            sum += occ_pi.weights[p] * occ_pi.weights[p] / occ_ref.weights[p];
        } else if (occ_pi.weights[p] > 0.0) {
            violations.push_back(p);
        }
    }
    if (!violations.empty()) {
        std::ostringstream msg;
        msg << "chi_squared: policy occupancy has mass on " << violations.size()
            << " pair(s) outside the reference support (first: pair "
            << violations.front() << ")";
        throw SupportViolationError(msg.str(), violations);
    }
    return std::max(sum - 1.0, 0.0);
}

double chi_squared_sampled(const OccupancyMeasure& occ_pi_empirical,
                           const LogRatioModel& ratio) {
    if (ratio.direction != RatioDirection::policy_over_ref) {
        throw InvalidModelError(
            "chi_squared_sampled: needs the mu_pi/mu_ref ratio direction");
    }
    double sum = 0.0;
    for (int p = 0; p < occ_pi_empirical.weights.size(); ++p) {
        const double w = occ_pi_empirical.weights[p];
        if (w <= 0.0) continue;
        sum += w * (ratio.ratio(p) - 1.0);
    }
    return std::max(sum, 0.0);
}

LogRatioModel ratio_exact(const OccupancyMeasure& occ_pi,
                          const OccupancyMeasure& occ_ref,
                          RatioDirection direction) {
    if (occ_pi.weights.size() != occ_ref.weights.size()) {
        throw InvalidModelError("ratio_exact: length mismatch");
    }
    std::vector<int> violations;
    LogRatioModel model;
    model.mode = LogRatioModel::Mode::exact_table;
    model.direction = direction;
    model.table = Vec::Zero(occ_ref.weights.size());
    model.seen.assign(static_cast<std::size_t>(occ_ref.weights.size()), 0);
    for (int p = 0; p < occ_ref.weights.size(); ++p) {
        if (occ_ref.weights[p] > 0.0) {
            model.seen[p] = 1;
            const double forward =
                std::log(std::max(occ_pi.weights[p], 0.0)) - std::log(occ_ref.weights[p]);
            model.table[p] =
                direction == RatioDirection::policy_over_ref ? forward : -forward;
        } else if (occ_pi.weights[p] > 0.0) {
            violations.push_back(p);
        }
    }
    if (!violations.empty()) {
        throw SupportViolationError(
            "ratio_exact: policy occupancy leaves the reference support",
            violations);
    }
    return model;
}

double discriminator_loss(const LogRatioModel& model,
                          const TrajectoryBatch& batch_ref,
                          const TrajectoryBatch& batch_pi, int n_states,
                          int n_actions) {
    const Vec u_ref = pair_distribution(batch_ref, batch_ref.gamma, n_states, n_actions);
    const Vec u_pi = pair_distribution(batch_pi, batch_pi.gamma, n_states, n_actions);
    const double sign =
        model.direction == RatioDirection::policy_over_ref ? 1.0 : -1.0;
    double loss = 0.0;
    for (int p = 0; p < u_ref.size(); ++p) {
        if (u_ref[p] == 0.0 && u_pi[p] == 0.0) continue;
        // Unclipped output: the loss is evaluated on the raw discriminator.
        double d;
        if (model.mode == LogRatioModel::Mode::learned) {
            d = model.w2.dot((model.w1.col(p) + model.b1).array().tanh().matrix()) +
                model.b2;
        } else {
            d = model.defined_at(p) ? model.table[p] : model.clip;
        }
        // With direction policy_over_ref the "positive class" is the policy
        // batch; the reverse direction swaps roles, which equals negating d.
        loss += u_ref[p] * softplus(sign * d) + u_pi[p] * softplus(-sign * d);
    }
    return loss;
}

LogRatioModel train_ratio_estimator(const TrajectoryBatch& batch_ref,
                                    const TrajectoryBatch& batch_pi,
                                    int n_states, int n_actions,
                                    RatioDirection direction,
                                    const RatioTrainConfig& config) {
    if (batch_ref.states.empty() || batch_pi.states.empty()) {
        throw InvalidModelError("train_ratio_estimator: empty batch");
    }
    const int pairs = n_states * n_actions;
    const Vec u_ref = pair_distribution(batch_ref, batch_ref.gamma, n_states, n_actions);
    const Vec u_pi = pair_distribution(batch_pi, batch_pi.gamma, n_states, n_actions);

    LogRatioModel model;
    model.mode = LogRatioModel::Mode::learned;
    model.direction = direction;
    model.clip = config.clip;
    RandomStream rng(config.seed);
    // Small random hidden weights so gradients flow; zero output weights so
    // the initial discriminator is identically zero (loss = 2 log 2).
    model.w1 = Mat::Zero(config.hidden_units, pairs);
    for (int h = 0; h < config.hidden_units; ++h) {
        for (int p = 0; p < pairs; ++p) {
            model.w1(h, p) = rng.uniform(-0.5, 0.5);
        }
    }
    model.b1 = Vec::Zero(config.hidden_units);
    model.w2 = Vec::Zero(config.hidden_units);
    model.b2 = 0.0;

    // Only pairs visited by either batch contribute to the loss.
    std::vector<int> active;
    for (int p = 0; p < pairs; ++p) {
        if (u_ref[p] > 0.0 || u_pi[p] > 0.0) active.push_back(p);
    }
    const double sign = direction == RatioDirection::policy_over_ref ? 1.0 : -1.0;

    const int batch_size = config.minibatch > 0
                               ? config.minibatch
                               : static_cast<int>(active.size());
    std::vector<int> order = active;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        // Deterministic shuffle from the stream.
        for (int i = static_cast<int>(order.size()) - 1; i > 0; --i) {
            const int j = static_cast<int>(rng.uniform01() * (i + 1));
            std::swap(order[i], order[std::min(j, i)]);
        }
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(batch_size)) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(batch_size));
            Mat grad_w1 = Mat::Zero(model.w1.rows(), model.w1.cols());
            Vec grad_b1 = Vec::Zero(model.b1.size());
            Vec grad_w2 = Vec::Zero(model.w2.size());
            double grad_b2 = 0.0;
            for (std::size_t k = start; k < stop; ++k) {
                const int p = order[k];
                const Vec hidden = (model.w1.col(p) + model.b1).array().tanh().matrix();
                const double d = model.w2.dot(hidden) + model.b2;
                epoch_loss +=
                    u_ref[p] * softplus(sign * d) + u_pi[p] * softplus(-sign * d);
                // d(loss)/d(d) for this pair's weighted terms.
                const double dloss =
                    sign * (u_ref[p] * sigmoid(sign * d) - u_pi[p] * sigmoid(-sign * d));
                grad_w2 += dloss * hidden;
                grad_b2 += dloss;
                const Vec dhidden =
                    dloss * model.w2.cwiseProduct(
                                (1.0 - hidden.array().square()).matrix());
                grad_w1.col(p) += dhidden;
                grad_b1 += dhidden;
            }
            model.w2 -= config.step_size * grad_w2;
            model.b2 -= config.step_size * grad_b2;
            model.w1 -= config.step_size * grad_w1;
            model.b1 -= config.step_size * grad_b1;
        }
        if (!std::isfinite(epoch_loss)) {
            throw DivergenceError(
                "train_ratio_estimator: non-finite loss; reduce the step size");
        }
        model.training_log.push_back({epoch, epoch_loss});
    }
    return model;
}

std::string training_log_csv(const std::vector<EpochLoss>& log) {
    std::ostringstream out;
    out << "epoch,loss\n";
    char buffer[64];
    for (const auto& row : log) {
        std::snprintf(buffer, sizeof(buffer), "%d,%.17g\n", row.epoch, row.loss);
        out << buffer;
    }
    return out.str();
}

}  // namespace maxminrl
