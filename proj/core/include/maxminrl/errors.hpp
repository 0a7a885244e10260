// errors.hpp — exception hierarchy for maxminrl.
//
// Every precondition violation surfaces as a typed exception carrying enough
// context to diagnose the failure (offending state-action pairs, best iterates,
// residuals) rather than a bare message.

#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace maxminrl {

/// Base class for all maxminrl errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// An MDP, policy, or occupancy measure failed structural validation
/// (non-stochastic rows, non-finite entries, shape mismatch, ...).
class InvalidModelError : public Error {
public:
    using Error::Error;
};

/// A policy occupancy places mass on state-action pairs the reference policy
/// never visits, so ratios/divergences against the reference are undefined.
class SupportViolationError : public Error {
public:
    SupportViolationError(const std::string& what, std::vector<int> pairs)
        : Error(what), offending_pairs(std::move(pairs)) {}
    /// Flat (state * n_actions + action) indices with policy mass but no
    /// reference mass.
    std::vector<int> offending_pairs;
};

/// The proxy reward is (numerically) constant under the reference occupancy,
/// so it cannot be normalized to unit variance.
class DegenerateProxyError : public Error {
public:
    using Error::Error;
};

/// Two trajectory batches that must be statistically independent were sampled
/// from the same seed.
class IndependenceViolationError : public Error {
public:
    using Error::Error;
};

/// The feature second-moment matrix is singular on the reference support: the
/// features do not span the feature space there.
class SpanError : public Error {
public:
    SpanError(const std::string& what, std::vector<int> directions)
        : Error(what), deficient_directions(std::move(directions)) {}
    /// Indices of eigendirections with eigenvalue below the floor.
    std::vector<int> deficient_directions;
};

/// An iterative solve did not reach its residual tolerance. Carries the best
/// iterate found so callers can decide whether to reuse it.
class NonConvergenceError : public Error {
public:
    NonConvergenceError(const std::string& what, std::vector<double> best,
                        double residual)
        : Error(what), best_iterate(std::move(best)), best_residual(residual) {}
    std::vector<double> best_iterate;
    double best_residual;
};

/// A reward sampled from the constrained uncertainty set violated the proved
/// improvement lower bound — this indicates an implementation bug upstream.
class TheoremViolationError : public Error {
public:
    using Error::Error;
};

/// The engineered feature map cannot reproduce the environment's proxy reward
/// exactly.
class FeatureMismatchError : public Error {
public:
    FeatureMismatchError(const std::string& what, double residual)
        : Error(what), reconstruction_residual(residual) {}
    double reconstruction_residual;
};

/// The discriminator training loss became non-finite.
class DivergenceError : public Error {
public:
    using Error::Error;
};

/// A run configuration failed validation (unknown keys, bad ranges, missing
/// required fields).
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace maxminrl
