#include "stabeval/dual_solvers.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "stabeval/error.hpp"
#include "stabeval/numeric.hpp"

namespace stabeval {

ExtendedReal DualSolution::criterion() const {
  if (status == SolveStatus::ThresholdUnreachable) return ExtendedReal::infinity();
  if (status == SolveStatus::BaselineExceedsThreshold) return ExtendedReal(0.0);
  return ExtendedReal(std::max(dual_value, 0.0));
}

std::vector<double> dual_weights(Phi phi, Price theta2, std::span<const double> values, double alpha) {
  const std::size_t n = values.size();
  if (theta2.is_infinite()) return std::vector<double>(n, 1.0);
  const double t2 = theta2.value();
  std::vector<double> w(n);
  if (phi == Phi::KL) {
    const double top = *std::max_element(values.begin(), values.end());
    for (std::size_t i = 0; i < n; ++i) w[i] = std::exp((values[i] - top) / t2);
    const double m = numeric::mean(w);
    for (double& x : w) x /= m;
    return w;
  }
  for (std::size_t i = 0; i < n; ++i) w[i] = std::max((values[i] + alpha) / (2.0 * t2) + 1.0, 0.0);
  return w;
}

double chi2_alpha_star(std::span<const double> values, double theta2) {
  const std::size_t n = values.size();
  if (n == 0) fail(ErrorCode::InvalidArgument, "chi2_alpha_star needs at least one value");
  if (!(theta2 > 0.0) || !std::isfinite(theta2)) {
    fail(ErrorCode::InvalidArgument, "chi2_alpha_star needs a finite positive theta2");
  }
  // Term i is active for alpha > b_i = -v_i - 2 theta2 and contributes
  // (alpha - b_i) / (2 theta2 n); on the segment with k active terms the
  // left side is (k alpha - S_k) / (2 theta2 n).
  std::vector<double> breaks(n);
  for (std::size_t i = 0; i < n; ++i) breaks[i] = -values[i] - 2.0 * theta2;
  std::sort(breaks.begin(), breaks.end());
  const double target = 2.0 * theta2 * static_cast<double>(n);
  double prefix = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    prefix += breaks[k - 1];
    const double root = (target + prefix) / static_cast<double>(k);
    if (k == n || root <= breaks[k]) return root;
  }
  return breaks.back();  // unreachable
}

double optimal_alpha(Phi phi, Price theta2, std::span<const double> values) {
  if (theta2.is_infinite()) return -numeric::mean(values);
  const double t2 = theta2.value();
  if (phi == Phi::KL) {
    std::vector<double> scaled(values.begin(), values.end());
    for (double& v : scaled) v /= t2;
    return -t2 * numeric::log_mean_exp(scaled);
  }
  return chi2_alpha_star(values, t2);
}

double dual_objective_from_values(Phi phi, Price theta2, double h, double r,
                                  std::span<const double> values) {
  if (theta2.is_infinite()) return h * r - numeric::mean(values);
  const double t2 = theta2.value();
  if (phi == Phi::KL) {
    std::vector<double> scaled(values.begin(), values.end());
    for (double& v : scaled) v /= t2;
    return h * r - t2 * numeric::log_mean_exp(scaled);
  }
  const double alpha = chi2_alpha_star(values, t2);
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double w = std::max((values[i] + alpha) / (2.0 * t2) + 1.0, 0.0);
    sq[i] = w * w;
  }
  return h * r + alpha + t2 - t2 * numeric::mean(sq);
}

namespace {

struct PointEval {
  double h = 0.0;
  double objective = 0.0;
  double alpha = 0.0;
  std::vector<DTransformResult> transforms;
  std::vector<double> weights;
  double risk_primary = 0.0;
  double risk_low = 0.0;
  double risk_high = 0.0;
};

double weighted_mean(std::span<const double> w, std::span<const double> l) {
  std::vector<double> prod(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) prod[i] = w[i] * l[i];
  return numeric::mean(prod);
}

class ClosedFormDual {
 public:
  ClosedFormDual(const Dataset& data, const ValidatedConfig& vc, Phi phi)
      : data_(data), vc_(vc), phi_(phi) {
    if (data.dimension() != vc.model.dimension()) {
      fail(ErrorCode::DimensionMismatch, "dataset and model dimensions differ");
    }
  }

  PointEval evaluate(double h) {
    ++evaluations;
    const std::size_t n = data_.size();
    PointEval p;
    p.h = h;
    p.transforms.resize(n);
    const auto& cfg = vc_.config;
    numeric::parallel_for(n, cfg.solver.threads, [&](std::size_t i) {
      p.transforms[i] = dtransform(vc_.model, data_.sample(i), h, cfg.cost.theta1, vc_.mask, cfg.solver);
    });
    std::vector<double> values(n), primary(n), low(n), high(n);
    for (std::size_t i = 0; i < n; ++i) {
      values[i] = p.transforms[i].value;
      primary[i] = p.transforms[i].maximizer_loss;
      low[i] = p.transforms[i].loss_low();
      high[i] = p.transforms[i].loss_high();
    }
    p.alpha = optimal_alpha(phi_, cfg.cost.theta2, values);
    p.objective = dual_objective_from_values(phi_, cfg.cost.theta2, h, cfg.risk_threshold, values);
    p.weights = dual_weights(phi_, cfg.cost.theta2, values, p.alpha);
    p.risk_primary = weighted_mean(p.weights, primary);
    p.risk_low = weighted_mean(p.weights, low);
    p.risk_high = weighted_mean(p.weights, high);
    return p;
  }

  double objective(double h) {
    auto it = cache_.find(h);
    if (it != cache_.end()) return it->second.first;
    PointEval p = evaluate(h);
    cache_.emplace(h, std::make_pair(p.objective, p.risk_primary));
    return p.objective;
  }

  double cached_risk(double h) {
    auto it = cache_.find(h);
    if (it == cache_.end()) {
      objective(h);
      it = cache_.find(h);
    }
    return it->second.second;
  }

  std::size_t evaluations = 0;

 private:
  const Dataset& data_;
  const ValidatedConfig& vc_;
  Phi phi_;
  std::map<double, std::pair<double, double>> cache_;
};

DualSolution finish(DualSolution sol, PointEval p, double r, std::size_t& iteration) {
  sol.h_star = p.h;
  sol.alpha_star = p.alpha;
  sol.dual_value = p.objective;
  // Split tied samples so the risk constraint is active: the extracted Q*
  // attains clamp(r, risk_low, risk_high).
  const double risk = std::clamp(r, p.risk_low, p.risk_high);
  sol.trace.push_back({iteration++, p.h, p.objective, p.h > 0.0 ? risk : p.risk_primary});
  sol.transforms = std::move(p.transforms);
  return sol;
}

DualSolution solve_closed_form(const Dataset& data, const ValidatedConfig& vc, Phi phi) {
  ClosedFormDual dual(data, vc, phi);
  const SolverOptions& opts = vc.config.solver;
  const double r = vc.config.risk_threshold;
  DualSolution sol;
  std::size_t iteration = 0;

  if (vc.baseline_exceeds_threshold) {
    sol.status = SolveStatus::BaselineExceedsThreshold;
    sol = finish(std::move(sol), dual.evaluate(0.0), r, iteration);
    sol.evaluations = dual.evaluations;
    return sol;
  }

  // Bracket: double H while the objective is still increasing at H.
  double lo = 0.0;
  double hi = 1.0;
  bool turned = false;
  for (int k = 0; k <= opts.max_doublings; ++k) {
    const double f_hi = dual.objective(hi);
    const double probe = opts.slope_probe * std::max(1.0, hi);
    const double f_probe = dual.objective(hi + probe);
    sol.trace.push_back({iteration++, hi, f_hi, dual.cached_risk(hi)});
    if (f_probe - f_hi <= 0.0) {
      turned = true;
      break;
    }
    lo = hi;
    hi *= 2.0;
  }
  if (!turned) {
    sol.status = SolveStatus::ThresholdUnreachable;
    sol.h_star = hi;
    sol.dual_value = dual.objective(hi);
    sol.evaluations = dual.evaluations;
    return sol;
  }

  const numeric::GoldenResult golden = numeric::golden_section_max(
      [&](double h) { return dual.objective(h); }, lo, hi, opts.h_tolerance,
      [&](int, double h, double f) { sol.trace.push_back({iteration++, h, f, dual.cached_risk(h)}); });

  // Polish by bisection on the one-sided slopes r - E[w l_high] (right) and
  // r - E[w l_low] (left); concavity makes both nonincreasing in h.
  auto increasing_right = [&](const PointEval& p) { return r - p.risk_high > 0.0; };
  auto decreasing_left = [&](const PointEval& p) { return r - p.risk_low < 0.0; };

  const double width = 16.0 * opts.h_tolerance * std::max(1.0, golden.argmax);
  double a = std::max(lo, golden.argmax - width);
  double b = std::min(hi, golden.argmax + width);
  PointEval pa = dual.evaluate(a);
  for (double step = width; a > lo && !increasing_right(pa); step *= 2.0) {
    if (!decreasing_left(pa)) break;  // a itself is optimal
    a = std::max(lo, a - step);
    pa = dual.evaluate(a);
  }
  PointEval pb = dual.evaluate(b);
  for (double step = width; b < hi && !decreasing_left(pb); step *= 2.0) {
    if (!increasing_right(pb)) break;
    b = std::min(hi, b + step);
    pb = dual.evaluate(b);
  }

  std::optional<PointEval> best;
  if (!increasing_right(pa) && !decreasing_left(pa)) best = std::move(pa);
  if (!best && !increasing_right(pb) && !decreasing_left(pb)) best = std::move(pb);
  for (int it = 0; !best && it < 200; ++it) {
    const double mid = a + 0.5 * (b - a);
    if (!(mid > a && mid < b)) break;
    PointEval pm = dual.evaluate(mid);
    if (increasing_right(pm)) {
      a = mid;
      pa = std::move(pm);
    } else if (decreasing_left(pm)) {
      b = mid;
      pb = std::move(pm);
    } else {
      best = std::move(pm);
    }
  }
  if (!best) best = pa.objective >= pb.objective ? std::move(pa) : std::move(pb);

  sol.status = SolveStatus::Converged;
  sol = finish(std::move(sol), std::move(*best), r, iteration);
  sol.evaluations = dual.evaluations;
  return sol;
}

struct ScalarAdam {
  double lr;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double m = 0.0;
  double v = 0.0;
  int t = 0;

  double step(double grad) {
    ++t;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad * grad;
    const double mhat = m / (1.0 - std::pow(beta1, t));
    const double vhat = v / (1.0 - std::pow(beta2, t));
    return lr * mhat / (std::sqrt(vhat) + eps);
  }
};

}  // namespace

double kl_dual_objective(const Dataset& data, const ValidatedConfig& config, double h) {
  if (!(h >= 0.0)) fail(ErrorCode::InvalidArgument, "h must be >= 0");
  return ClosedFormDual(data, config, Phi::KL).evaluate(h).objective;
}

Chi2Objective chi2_dual_objective(const Dataset& data, const ValidatedConfig& config, double h) {
  if (!(h >= 0.0)) fail(ErrorCode::InvalidArgument, "h must be >= 0");
  PointEval p = ClosedFormDual(data, config, Phi::ChiSquared).evaluate(h);
  return {p.objective, p.alpha};
}

DualSolution solve_kl(const Dataset& data, const ValidatedConfig& config) {
  return solve_closed_form(data, config, Phi::KL);
}

DualSolution solve_chi2(const Dataset& data, const ValidatedConfig& config) {
  return solve_closed_form(data, config, Phi::ChiSquared);
}

DualSolution solve_nonlinear(const Dataset& data, const ValidatedConfig& vc) {
  const auto& cfg = vc.config;
  const auto& opts = cfg.solver;
  const double r = cfg.risk_threshold;
  const std::size_t n = data.size();
  if (vc.model.kind() == LossKind::ZeroOne) {
    fail(ErrorCode::Unsupported, "the iterative solver needs sample gradients; 0/1 loss has none");
  }

  DualSolution sol;
  if (vc.baseline_exceeds_threshold) {
    sol.status = SolveStatus::BaselineExceedsThreshold;
    sol.transforms.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const SampleView z = data.sample(i);
      sol.transforms[i] = dtransform_nonlinear(vc.model, z, 0.0, cfg.cost.theta1, {}, vc.mask);
    }
    std::vector<double> values(n, 0.0);
    sol.alpha_star = optimal_alpha(cfg.phi, cfg.cost.theta2, values);
    sol.trace.push_back({0, 0.0, 0.0, vc.baseline_risk});
    return sol;
  }

  InnerOptions inner;
  inner.steps = opts.inner_steps;
  inner.learning_rate = opts.inner_learning_rate;

  std::vector<std::vector<double>> iterates(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = data.sample(i).x;
    iterates[i].assign(x.begin(), x.end());
  }

  double h = 1.0;
  ScalarAdam adam{opts.outer_learning_rate};
  std::vector<DTransformResult> transforms(n);
  std::vector<double> values(n), losses(n);
  double last_h = h, last_alpha = 0.0, last_objective = 0.0, last_risk = 0.0;

  for (int epoch = 0; epoch < opts.outer_epochs; ++epoch) {
    numeric::parallel_for(n, opts.threads, [&](std::size_t i) {
      transforms[i] = dtransform_nonlinear(vc.model, data.sample(i), h, cfg.cost.theta1, inner,
                                           vc.mask, std::span<const double>(iterates[i]));
    });
    ++sol.evaluations;
    for (std::size_t i = 0; i < n; ++i) {
      iterates[i] = transforms[i].maximizer;
      values[i] = transforms[i].value;
      losses[i] = transforms[i].maximizer_loss;
    }
    const double alpha = optimal_alpha(cfg.phi, cfg.cost.theta2, values);
    const std::vector<double> w = dual_weights(cfg.phi, cfg.cost.theta2, values, alpha);
    const double risk = weighted_mean(w, losses);
    const double objective = dual_objective_from_values(cfg.phi, cfg.cost.theta2, h, r, values);
    sol.trace.push_back({static_cast<std::size_t>(epoch), h, objective, risk});

    last_h = h;
    last_alpha = alpha;
    last_objective = objective;
    last_risk = risk;

    // d/dh of the dual is r - E_Q[W l(beta, z_i)] (envelope theorem).
    h = std::max(0.0, h + adam.step(r - risk));
  }

  sol.h_star = last_h;
  sol.alpha_star = last_alpha;
  sol.dual_value = last_objective;
  sol.transforms = std::move(transforms);

  const double gap = last_risk - r;
  if (std::abs(gap) <= opts.trace_tolerance) {
    sol.status = SolveStatus::Converged;
    return sol;
  }
  // A risk that sits below r and has stopped moving while h keeps growing
  // means r lies beyond what the perturbations can reach.
  const std::size_t quarter = sol.trace.size() - sol.trace.size() / 4 - 1;
  const auto& q = sol.trace[quarter];
  const bool stalled = gap < 0.0 && last_risk - q.weighted_risk <= 1e-8 && last_h > q.h;
  if (stalled) {
    sol.status = SolveStatus::ThresholdUnreachable;
    return sol;
  }
  fail(ErrorCode::NonConvergence, "weighted risk " + numeric::shortest(last_risk) +
                                      " misses threshold " + numeric::shortest(r) + " after " +
                                      std::to_string(opts.outer_epochs) + " epochs");
}

DualSolution solve_dual(const Dataset& data, const ValidatedConfig& config) {
  const Phi phi = config.config.phi;
  const bool closed_form = config.model.kind() != LossKind::SmoothNonlinear ||
                           config.config.cost.theta1.is_infinite();
  if (!closed_form) return solve_nonlinear(data, config);
  return phi == Phi::KL ? solve_kl(data, config) : solve_chi2(data, config);
}

DualSolution solve_kl(const Dataset& data, const LossModel& model, const EvalConfig& config) {
  return solve_kl(data, validate_config(config, data, model));
}

DualSolution solve_chi2(const Dataset& data, const LossModel& model, const EvalConfig& config) {
  return solve_chi2(data, validate_config(config, data, model));
}

DualSolution solve_nonlinear(const Dataset& data, const LossModel& model, const EvalConfig& config) {
  return solve_nonlinear(data, validate_config(config, data, model));
}

}  // namespace stabeval
