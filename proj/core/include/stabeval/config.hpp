#pragma once

#include "stabeval/core.hpp"
#include "stabeval/models.hpp"

namespace stabeval {

/// EvalConfig checked against a concrete dataset and model.
struct ValidatedConfig {
  EvalConfig config;
  LossModel model;       ///< model viewed through config.loss_kind
  FeatureMask mask;
  double baseline_risk;  ///< E_{P0}[l(beta, Z)]
  bool baseline_exceeds_threshold;  ///< r <= baseline, so the criterion is 0
};

/// Throws ThresholdUnreachable for the 0/1 loss with r >= 1, InvalidCost for
/// a violated budget constant, DimensionMismatch / Unsupported for a model
/// that does not fit the data or the requested loss class.
ValidatedConfig validate_config(const EvalConfig& config, const Dataset& data, const LossModel& model);

}  // namespace stabeval
