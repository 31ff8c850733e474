#include "stabeval/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stabeval/error.hpp"
#include "stabeval/numeric.hpp"

namespace stabeval {

SensitiveDistribution extract_sensitive_distribution(const Dataset& data, const ValidatedConfig& vc,
                                                     const DualSolution& dual) {
  const std::size_t n = data.size();
  const std::size_t d = data.dimension();
  if (dual.status == SolveStatus::ThresholdUnreachable) {
    fail(ErrorCode::ThresholdUnreachable, "no sensitive distribution: the threshold is unreachable");
  }
  if (dual.transforms.size() != n) fail(ErrorCode::DimensionMismatch, "dual solution does not match the dataset");
  const auto& cfg = vc.config;

  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = dual.transforms[i].value;
  std::vector<double> w = dual_weights(cfg.phi, cfg.cost.theta2, values, dual.alpha_star);
  const double m = numeric::mean(w);
  if (m > 0.0 && m != 1.0) {
    for (double& x : w) x /= m;
  }

  // Common share on the high-loss maximizer for tied samples.
  double share = 1.0;
  bool any_tie = false;
  if (dual.h_star > 0.0) {
    std::vector<double> low(n), high(n);
    for (std::size_t i = 0; i < n; ++i) {
      low[i] = w[i] * dual.transforms[i].loss_low();
      high[i] = w[i] * dual.transforms[i].loss_high();
      any_tie = any_tie || dual.transforms[i].tie.has_value();
    }
    const double risk_low = numeric::mean(low);
    const double risk_high = numeric::mean(high);
    if (any_tie && risk_high > risk_low) {
      share = std::clamp((cfg.risk_threshold - risk_low) / (risk_high - risk_low), 0.0, 1.0);
    }
  }

  Matrix points(n, d), alternates(n, d);
  std::vector<int> labels(data.labels());
  std::vector<double> costs(n), alt_costs(n), shares(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const DTransformResult& tr = dual.transforms[i];
    const std::vector<double>* primary = &tr.maximizer;
    const std::vector<double>* alternate = &tr.maximizer;
    double c = tr.transport_cost;
    double c_alt = tr.transport_cost;
    if (tr.tie && any_tie && dual.h_star > 0.0) {
      if (share >= 1.0) {
        primary = alternate = &tr.tie->high.x;
        c = c_alt = tr.tie->high.cost;
      } else if (share <= 0.0) {
        primary = alternate = &tr.tie->low.x;
        c = c_alt = tr.tie->low.cost;
      } else {
        primary = &tr.tie->high.x;
        alternate = &tr.tie->low.x;
        c = tr.tie->high.cost;
        c_alt = tr.tie->low.cost;
        shares[i] = share;
      }
    }
    std::copy(primary->begin(), primary->end(), points.row(i).begin());
    std::copy(alternate->begin(), alternate->end(), alternates.row(i).begin());
    costs[i] = c;
    alt_costs[i] = c_alt;
  }
  return SensitiveDistribution(std::move(points), std::move(labels), std::move(w), std::move(costs),
                               std::move(shares), std::move(alternates), std::move(alt_costs),
                               dual.h_star, dual.alpha_star, cfg.solver.weight_tolerance);
}

double primal_cost(const SensitiveDistribution& q, const EvalConfig& config) {
  const std::size_t n = q.size();
  const Price theta1 = config.cost.theta1;
  const Price theta2 = config.cost.theta2;
  std::vector<double> terms(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = q.primary_share()[i];
    const double w = q.weights()[i];
    const double moved = s * q.transport_costs()[i] + (1.0 - s) * q.alternate_costs()[i];
    double transport = 0.0;
    if (moved > 0.0 && w > 0.0) {
      if (theta1.is_infinite()) fail(ErrorCode::InvalidCost, "moved mass has infinite transport price");
      transport = theta1.value() * w * moved;
    }
    const double phi = std::max(phi_value(config.phi, w), 0.0);
    double reweight = 0.0;
    if (phi > 0.0) {
      if (theta2.is_infinite()) fail(ErrorCode::InvalidCost, "reweighted mass has infinite price");
      reweight = theta2.value() * phi;
    }
    terms[i] = transport + reweight;
  }
  return numeric::mean(terms);
}

namespace {

std::vector<double> mixture_losses(const LossModel& model, const SensitiveDistribution& q) {
  const std::size_t n = q.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = q.primary_share()[i];
    const double l = loss(model, SampleView{q.points().row(i), q.labels()[i]});
    if (s >= 1.0) {
      out[i] = l;
    } else {
      const double l_alt = loss(model, SampleView{q.alternate_points().row(i), q.labels()[i]});
      out[i] = s * l + (1.0 - s) * l_alt;
    }
  }
  return out;
}

}  // namespace

double weighted_risk(const LossModel& model, const SensitiveDistribution& q) {
  std::vector<double> l = mixture_losses(model, q);
  for (std::size_t i = 0; i < l.size(); ++i) l[i] *= q.weights()[i];
  return numeric::mean(l);
}

Decomposition decompose_excess_risk(const Dataset& data, const LossModel& model,
                                    const SensitiveDistribution& q) {
  if (q.size() != data.size()) fail(ErrorCode::DimensionMismatch, "Q* and dataset sizes differ");
  std::vector<double> base(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) base[i] = loss(model, data.sample(i));
  const std::vector<double> moved = mixture_losses(model, q);
  std::vector<double> weighted(moved);
  for (std::size_t i = 0; i < weighted.size(); ++i) weighted[i] *= q.weights()[i];

  const double a = numeric::mean(base);
  const double b = numeric::mean(moved);
  const double c = numeric::mean(weighted);
  Decomposition out{0.0, b - a, c - b};
  out.delta_total = out.delta_corruption + out.delta_reweighting;
  return out;
}

EvaluationResult evaluate(const Dataset& data, const LossModel& model, const EvalConfig& config) {
  EvaluationResult out;
  std::optional<ValidatedConfig> vc;
  try {
    vc = validate_config(config, data, model);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ThresholdUnreachable) throw;
    out.solution.status = SolveStatus::ThresholdUnreachable;
    out.report.status = SolveStatus::ThresholdUnreachable;
    out.report.criterion_value = ExtendedReal::infinity();
    out.report.baseline_risk = baseline_risk(resolve_loss(model, config.loss_kind), data);
    return out;
  }

  out.solution = solve_dual(data, *vc);
  StabilityReport& rep = out.report;
  rep.status = out.solution.status;
  rep.criterion_value = out.solution.criterion();
  rep.dual_value = out.solution.dual_value;
  rep.trace = out.solution.trace;
  rep.baseline_risk = vc->baseline_risk;
  rep.h_star = out.solution.h_star;
  rep.alpha_star = out.solution.alpha_star;
  if (rep.status == SolveStatus::ThresholdUnreachable) return out;

  out.qstar = extract_sensitive_distribution(data, *vc, out.solution);
  rep.primal_cost_of_qstar = primal_cost(*out.qstar, config);
  rep.duality_gap = rep.primal_cost_of_qstar - rep.dual_value;
  rep.decomposition = decompose_excess_risk(data, vc->model, *out.qstar);
  rep.weighted_risk = weighted_risk(vc->model, *out.qstar);

  const bool iterative = vc->model.kind() == LossKind::SmoothNonlinear && config.cost.theta1.is_finite();
  const double tol = iterative ? config.solver.trace_tolerance * std::max(1.0, rep.h_star)
                               : config.solver.gap_tolerance;
  rep.check(tol);
  return out;
}

FeatureStabilityReport feature_stability(const Dataset& data, const LossModel& model,
                                         const EvalConfig& config, std::span<const std::size_t> features) {
  std::vector<std::size_t> cols(features.begin(), features.end());
  if (cols.empty()) {
    cols.resize(data.dimension());
    std::iota(cols.begin(), cols.end(), std::size_t{0});
  }
  for (std::size_t j : cols) {
    if (j >= data.dimension()) {
      fail(ErrorCode::InvalidArgument, "feature index " + std::to_string(j) + " is out of range");
    }
  }

  FeatureStabilityReport rep;
  rep.per_feature.resize(cols.size());
  const bool fan_out = config.solver.threads > 1 && cols.size() > 1;
  numeric::parallel_for(cols.size(), fan_out ? config.solver.threads : 1u, [&](std::size_t k) {
    const std::size_t j = cols[k];
    EvalConfig one = config;
    one.cost = CostSpec(config.cost.theta1, config.cost.theta2, config.cost.budget_constant,
                        std::vector<std::size_t>{j});
    if (fan_out) one.solver.threads = 1;
    const EvaluationResult r = evaluate(data, model, one);
    rep.per_feature[k] = {j, data.feature_names()[j], r.report.criterion_value, r.report.status};
  });

  std::vector<std::size_t> order(cols.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return rep.per_feature[a].criterion.as_double() < rep.per_feature[b].criterion.as_double();
  });
  for (std::size_t k : order) rep.ranking.push_back(rep.per_feature[k].index);
  return rep;
}

}  // namespace stabeval
