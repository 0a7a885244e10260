// rng.hpp — deterministic random stream.
//
// All stochastic operations in maxminrl take an explicit RandomStream so runs
// are reproducible from a single recorded seed. The stream avoids
// std::*_distribution so the generated sequence depends only on std::mt19937_64
// (whose output is fixed by the standard), not on library-specific distribution
// algorithms.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Core>

#include "maxminrl/errors.hpp"

namespace maxminrl {

/// splitmix64 step; used to derive independent child seeds from a master seed.
inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream_id) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream_id + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via Box-Muller (deterministic, no rejection loop).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        // Guard the log: uniform01() can return exactly 0.
        while (u1 <= 0.0) u1 = uniform01();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * M_PI * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    /// Sample an index from an (unnormalized, nonnegative) weight vector by
    /// CDF walk. The last positive entry absorbs floating-point slack.
    int categorical(const Eigen::VectorXd& weights) {
        const double total = weights.sum();
        if (!(total > 0.0)) {
            throw InvalidModelError("categorical: weights must have positive sum");
        }
        const double u = uniform01() * total;
        double cum = 0.0;
        int last_positive = -1;
        for (int i = 0; i < weights.size(); ++i) {
            if (weights[i] <= 0.0) continue;
            cum += weights[i];
            last_positive = i;
            if (u < cum) return i;
        }
        return last_positive;
    }

    /// Child stream with an independent, reproducible seed.
    RandomStream child(std::uint64_t stream_id) const {
        return RandomStream(split_seed(seed_, stream_id));
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace maxminrl
