#include "stabeval/config.hpp"

#include <cmath>
#include <string>

#include "stabeval/error.hpp"
#include "stabeval/numeric.hpp"

namespace stabeval {

ValidatedConfig validate_config(const EvalConfig& config, const Dataset& data, const LossModel& model) {
  // CostSpec validates itself on construction; re-run the budget check so a
  // config assembled field-by-field cannot slip through.
  const CostSpec cost(config.cost.theta1, config.cost.theta2, config.cost.budget_constant,
                      config.cost.feature_mask);
  if (model.dimension() != data.dimension()) {
    fail(ErrorCode::DimensionMismatch, "model expects " + std::to_string(model.dimension()) +
                                           " features, dataset has " +
                                           std::to_string(data.dimension()));
  }
  if (config.loss_kind == LossKind::ZeroOne && config.risk_threshold >= 1.0) {
    fail(ErrorCode::ThresholdUnreachable,
         "error-rate threshold r = " + numeric::shortest(config.risk_threshold) +
             " cannot be reached: the 0/1 risk never exceeds 1");
  }
  LossModel resolved = resolve_loss(model, config.loss_kind);
  FeatureMask mask = cost.mask(data.dimension());
  const double base = baseline_risk(resolved, data);
  return ValidatedConfig{config, std::move(resolved), std::move(mask), base,
                         config.risk_threshold <= base};
}

}  // namespace stabeval
