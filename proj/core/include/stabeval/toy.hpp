#pragma once

#include <cstdint>
#include <vector>

#include "stabeval/core.hpp"
#include "stabeval/models.hpp"

namespace stabeval {

/// Phi^{-1}(u) for u in (0, 1): Acklam's rational approximation refined by
/// one Halley step against std::erfc.
double standard_normal_quantile(double u);

/// Two unit-covariance Gaussian classes. The negative class (label -1) is
/// drawn first, then the positive class; within a point, coordinates are
/// drawn in order. Uniforms are ((x >> 11) + 0.5) * 2^-53 for successive
/// outputs x of std::mt19937_64 seeded with `seed`, mapped through
/// standard_normal_quantile.
Dataset generate_toy(std::uint64_t seed, std::size_t n_per_class = 100,
                     std::vector<double> mean_pos = {-1.0, -1.0}, std::vector<double> mean_neg = {2.0, 2.0});

/// Full-batch gradient descent on the mean cross-entropy from zero weights.
LogisticModel fit_logistic(const Dataset& data, int epochs = 500, double step = 0.1);

}  // namespace stabeval
