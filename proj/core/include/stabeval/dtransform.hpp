#pragma once

#include <optional>
#include <span>
#include <vector>

#include "stabeval/core.hpp"
#include "stabeval/models.hpp"

namespace stabeval {

/// A maximizer of h*l(beta, z) - theta1*d(z, z_hat) with its loss and cost.
struct Candidate {
  std::vector<double> x;
  double loss;
  double cost;  ///< d(z, z_hat) = ||x - x_hat||^2 (labels never move)
};

/// When several maximizers attain the value with different losses (a kink of
/// h -> value), the lowest- and highest-loss ones. d value / dh from the left
/// is low.loss and from the right is high.loss.
struct TieSpan {
  Candidate low;
  Candidate high;
};

/// The d-transform l_{h,theta1}(z_hat) = max_z h*l(beta, z) - theta1*d(z, z_hat).
struct DTransformResult {
  double value;
  std::vector<double> maximizer;
  double maximizer_loss;
  double transport_cost;
  bool moved;
  std::optional<TieSpan> tie;

  double loss_low() const { return tie ? tie->low.loss : maximizer_loss; }
  double loss_high() const { return tie ? tie->high.loss : maximizer_loss; }
};

/// Adaptive-moment ascent settings for the inner sample maximization.
struct InnerOptions {
  int steps = 20;
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Closed form: max_k h^2 ||a_k . m||^2 / (4 theta1) + h (y a_k^T x_hat + b_k).
/// Argmax ties across pieces resolve to the lowest index.
DTransformResult dtransform_piecewise(const PiecewiseLinearModel& model, SampleView z_hat, double h,
                                      Price theta1, const FeatureMask& mask,
                                      double tie_tolerance = 1e-9);

/// Closed form: (h - theta1 d*(z_hat))_+. At the knife edge h = theta1 d*
/// the maximizer stays at z_hat and the boundary projection is reported as
/// the high side of the tie.
DTransformResult dtransform_zero_one(const LinearClassifier& model, SampleView z_hat, double h,
                                     Price theta1, const FeatureMask& mask,
                                     double tie_tolerance = 1e-9);

/// Local maximization by adaptive-moment gradient ascent from `start`
/// (default z_hat) over masked coordinates. Returns the best point seen,
/// with z_hat always among the candidates.
DTransformResult dtransform_nonlinear(const LossModel& model, SampleView z_hat, double h,
                                      Price theta1, const InnerOptions& options,
                                      const FeatureMask& mask,
                                      std::optional<std::span<const double>> start = std::nullopt);

/// Dispatch on the model's loss class.
DTransformResult dtransform(const LossModel& model, SampleView z_hat, double h, Price theta1,
                            const FeatureMask& mask, const SolverOptions& options);

}  // namespace stabeval
