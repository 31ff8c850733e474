#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stabeval/config.hpp"
#include "stabeval/core.hpp"
#include "stabeval/dual_solvers.hpp"
#include "stabeval/models.hpp"

namespace stabeval {

/// Q* from a solved dual. Weights come from the d-transform values at h*;
/// tied samples are split between their low- and high-loss maximizers with
/// one common share chosen so that E_Q*[W l] = r when h* > 0.
SensitiveDistribution extract_sensitive_distribution(const Dataset& data, const ValidatedConfig& config,
                                                     const DualSolution& dual);

/// (1/n) sum_i [theta1 w_i d(z_i*, z_hat_i) + theta2 phi(w_i)_+], mass-split
/// samples contributing their share-weighted transport cost.
double primal_cost(const SensitiveDistribution& qstar, const EvalConfig& config);

/// E_Q*[W l] with split samples averaged by their share.
double weighted_risk(const LossModel& model, const SensitiveDistribution& qstar);

/// Delta_I = mean l(z*) - mean l(z_hat); Delta_II = mean w l(z*) - mean l(z*).
Decomposition decompose_excess_risk(const Dataset& data, const LossModel& model,
                                    const SensitiveDistribution& qstar);

struct EvaluationResult {
  DualSolution solution;
  std::optional<SensitiveDistribution> qstar;  ///< absent when r is unreachable
  StabilityReport report;
};

/// Validate, solve, extract Q*, and assemble the report. An unreachable
/// threshold yields status ThresholdUnreachable and the infinity sentinel
/// rather than an exception.
EvaluationResult evaluate(const Dataset& data, const LossModel& model, const EvalConfig& config);

struct FeatureStability {
  std::size_t index;  ///< 0-based column
  std::string name;
  ExtendedReal criterion;
  SolveStatus status;

  friend bool operator==(const FeatureStability&, const FeatureStability&) = default;
};

struct FeatureStabilityReport {
  std::vector<FeatureStability> per_feature;  ///< in request order
  std::vector<std::size_t> ranking;           ///< column indices, most sensitive first

  friend bool operator==(const FeatureStabilityReport&, const FeatureStabilityReport&) = default;
};

/// Criterion with transport restricted to one coordinate at a time, sharing
/// one threshold r. An empty `features` means every column. Unreachable
/// features carry the infinity sentinel and rank last.
FeatureStabilityReport feature_stability(const Dataset& data, const LossModel& model,
                                         const EvalConfig& config, std::span<const std::size_t> features);

}  // namespace stabeval
