#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "stabeval/config.hpp"
#include "stabeval/core.hpp"
#include "stabeval/dtransform.hpp"

namespace stabeval {

struct DualSolution {
  SolveStatus status = SolveStatus::Converged;
  double h_star = 0.0;
  double alpha_star = 0.0;
  double dual_value = 0.0;
  std::size_t evaluations = 0;
  std::vector<TracePoint> trace;
  /// Per-sample d-transforms at h_star (final iterates on the iterative path).
  std::vector<DTransformResult> transforms;

  /// max(dual value, 0), or the infinity sentinel when r is out of reach.
  ExtendedReal criterion() const;
};

/// Sample weights of the dual certificate for d-transform values v_i:
/// KL: exp(v_i / theta2) normalized to mean 1; chi-squared:
/// ((v_i + alpha) / (2 theta2) + 1)_+. Unit weights when theta2 = inf.
std::vector<double> dual_weights(Phi phi, Price theta2, std::span<const double> values, double alpha);

/// The alpha that maximizes the dual for fixed h: -theta2 log E[exp(v/theta2)]
/// for KL, the root of the piecewise-linear weight equation for chi-squared,
/// and -E[v] in the theta2 = inf limit (both divergences).
double optimal_alpha(Phi phi, Price theta2, std::span<const double> values);

/// Root of E[((v + alpha) / (2 theta2) + 1)_+] = 1, by sorting breakpoints and
/// solving the linear segment containing it.
double chi2_alpha_star(std::span<const double> values, double theta2);

/// Dual objective for given d-transform values at h.
double dual_objective_from_values(Phi phi, Price theta2, double h, double r,
                                  std::span<const double> values);

/// g(h) = h r - theta2 log E[exp(l_{h,theta1}(Z)/theta2)]  (h r - E[l_{h,theta1}] for theta2 = inf).
double kl_dual_objective(const Dataset& data, const ValidatedConfig& config, double h);

struct Chi2Objective {
  double value;
  double alpha;
};
/// G(h) = max_alpha h r + alpha + theta2 - theta2 E[((l_{h,theta1} + alpha)/(2 theta2) + 1)_+^2].
Chi2Objective chi2_dual_objective(const Dataset& data, const ValidatedConfig& config, double h);

/// One-dimensional concave maximization over h via bracket doubling and
/// golden-section search, polished by bisection on the one-sided slopes.
DualSolution solve_kl(const Dataset& data, const ValidatedConfig& config);
DualSolution solve_chi2(const Dataset& data, const ValidatedConfig& config);

/// Alternating scheme for smooth losses: inner adaptive-moment ascent on the
/// samples, then one adaptive-moment step on h. Throws NonConvergence when
/// the weighted risk misses r by more than the trace tolerance.
DualSolution solve_nonlinear(const Dataset& data, const ValidatedConfig& config);

/// Picks the solver for the config's loss class and divergence.
DualSolution solve_dual(const Dataset& data, const ValidatedConfig& config);

DualSolution solve_kl(const Dataset& data, const LossModel& model, const EvalConfig& config);
DualSolution solve_chi2(const Dataset& data, const LossModel& model, const EvalConfig& config);
DualSolution solve_nonlinear(const Dataset& data, const LossModel& model, const EvalConfig& config);

}  // namespace stabeval
