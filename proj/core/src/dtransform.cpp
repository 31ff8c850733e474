#include "stabeval/dtransform.hpp"

#include <cmath>

#include "stabeval/error.hpp"
#include "stabeval/numeric.hpp"

namespace stabeval {

namespace {

DTransformResult stay(SampleView z_hat, double value, double loss_at_start) {
  return {value, std::vector<double>(z_hat.x.begin(), z_hat.x.end()), loss_at_start, 0.0, false,
          std::nullopt};
}

void check_h(double h) {
  if (!(h >= 0.0) || !std::isfinite(h)) fail(ErrorCode::InvalidArgument, "h must be finite and >= 0");
}

}  // namespace

DTransformResult dtransform_piecewise(const PiecewiseLinearModel& model, SampleView z_hat, double h,
                                      Price theta1, const FeatureMask& mask, double tie_tolerance) {
  check_h(h);
  auto pw_loss = [&](SampleView z) {
    double best_value = model.piece_value(0, z);
    for (std::size_t k = 1; k < model.pieces(); ++k) best_value = std::max(best_value, model.piece_value(k, z));
    return best_value;
  };
  if (z_hat.x.size() != model.dimension()) fail(ErrorCode::DimensionMismatch, "sample dimension mismatch");
  const double base_loss = pw_loss(z_hat);
  if (theta1.is_infinite() || h == 0.0) return stay(z_hat, h * base_loss, base_loss);

  const double t1 = theta1.value();
  const std::size_t K = model.pieces();
  std::vector<double> values(K);
  std::vector<double> masked_norm2(K, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t j = 0; j < model.dimension(); ++j) {
      if (mask.movable(j)) masked_norm2[k] += model.slopes[k][j] * model.slopes[k][j];
    }
    values[k] = h * h * masked_norm2[k] / (4.0 * t1) + h * model.piece_value(k, z_hat);
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < K; ++k) {
    if (values[k] > values[best]) best = k;
  }

  auto candidate = [&](std::size_t k) {
    std::vector<double> x(z_hat.x.begin(), z_hat.x.end());
    const double step = h * z_hat.y / (2.0 * t1);
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (mask.movable(j)) x[j] += step * model.slopes[k][j];
    }
    const double l = pw_loss(SampleView{x, z_hat.y});
    const double c = numeric::squared_distance(x, z_hat.x);
    return Candidate{std::move(x), l, c};
  };

  Candidate primary = candidate(best);
  DTransformResult out{values[best], primary.x, primary.loss, primary.cost, primary.cost > 0.0,
                       std::nullopt};

  const double band = tie_tolerance * std::max(1.0, std::abs(values[best]));
  std::optional<Candidate> low, high;
  for (std::size_t k = 0; k < K; ++k) {
    if (values[best] - values[k] > band) continue;
    Candidate c = k == best ? primary : candidate(k);
    if (!low || c.loss < low->loss) low = c;
    if (!high || c.loss > high->loss) high = c;
  }
  if (low && high && high->loss > low->loss) out.tie = TieSpan{*low, *high};
  return out;
}

DTransformResult dtransform_zero_one(const LinearClassifier& model, SampleView z_hat, double h,
                                     Price theta1, const FeatureMask& mask, double tie_tolerance) {
  check_h(h);
  const bool misclassified = z_hat.y * model.score(z_hat.x) <= 0.0;
  if (misclassified) return stay(z_hat, h, 1.0);
  if (theta1.is_infinite() || h == 0.0) return stay(z_hat, 0.0, 0.0);

  const ExtendedReal dstar = margin_distance(model, z_hat, mask);
  if (dstar.is_infinite()) return stay(z_hat, 0.0, 0.0);

  const double gain = h - theta1.value() * dstar.value();
  const double band = tie_tolerance * std::max(1.0, h);
  if (gain > band) {
    std::vector<double> x = boundary_projection(model, z_hat, mask);
    const double c = numeric::squared_distance(x, z_hat.x);
    return {gain, std::move(x), 1.0, c, true, std::nullopt};
  }
  DTransformResult out = stay(z_hat, std::max(gain, 0.0), 0.0);
  if (gain >= -band) {
    std::vector<double> x = boundary_projection(model, z_hat, mask);
    const double c = numeric::squared_distance(x, z_hat.x);
    out.tie = TieSpan{Candidate{out.maximizer, 0.0, 0.0}, Candidate{std::move(x), 1.0, c}};
  }
  return out;
}

DTransformResult dtransform_nonlinear(const LossModel& model, SampleView z_hat, double h,
                                      Price theta1, const InnerOptions& options,
                                      const FeatureMask& mask,
                                      std::optional<std::span<const double>> start) {
  check_h(h);
  const double base_loss = loss(model, z_hat);
  if (theta1.is_infinite()) return stay(z_hat, h * base_loss, base_loss);
  if (h == 0.0) return stay(z_hat, 0.0, base_loss);

  const double t1 = theta1.value();
  const std::size_t d = z_hat.x.size();

  auto objective = [&](std::span<const double> x, double& l) {
    l = loss(model, SampleView{x, z_hat.y});
    return h * l - t1 * numeric::squared_distance(x, z_hat.x);
  };

  std::vector<double> best_x(z_hat.x.begin(), z_hat.x.end());
  double best_loss = base_loss;
  double best_value = h * base_loss;

  std::vector<double> x = best_x;
  if (start) {
    if (start->size() != d) fail(ErrorCode::DimensionMismatch, "warm start has wrong dimension");
    for (std::size_t j = 0; j < d; ++j) {
      if (mask.movable(j)) x[j] = (*start)[j];
    }
    double l = 0.0;
    const double v = objective(x, l);
    if (v > best_value) {
      best_value = v;
      best_loss = l;
      best_x = x;
    }
  }

  std::vector<double> m(d, 0.0), s(d, 0.0);
  double b1t = 1.0, b2t = 1.0;
  for (int step = 0; step < options.steps; ++step) {
    std::vector<double> g = grad_sample(model, SampleView{x, z_hat.y});
    b1t *= options.beta1;
    b2t *= options.beta2;
    for (std::size_t j = 0; j < d; ++j) {
      if (!mask.movable(j)) continue;
      const double grad = h * g[j] - 2.0 * t1 * (x[j] - z_hat.x[j]);
      m[j] = options.beta1 * m[j] + (1.0 - options.beta1) * grad;
      s[j] = options.beta2 * s[j] + (1.0 - options.beta2) * grad * grad;
      const double mhat = m[j] / (1.0 - b1t);
      const double shat = s[j] / (1.0 - b2t);
      x[j] += options.learning_rate * mhat / (std::sqrt(shat) + options.epsilon);
    }
    double l = 0.0;
    const double v = objective(x, l);
    if (v > best_value) {
      best_value = v;
      best_loss = l;
      best_x = x;
    }
  }

  const double cost = numeric::squared_distance(best_x, z_hat.x);
  return {best_value, std::move(best_x), best_loss, cost, cost > 0.0, std::nullopt};
}

DTransformResult dtransform(const LossModel& model, SampleView z_hat, double h, Price theta1,
                            const FeatureMask& mask, const SolverOptions& options) {
  if (const auto* pw = model.get_if<PiecewiseLinearModel>()) {
    return dtransform_piecewise(*pw, z_hat, h, theta1, mask, options.tie_tolerance);
  }
  if (const auto* lin = model.get_if<LinearClassifier>()) {
    return dtransform_zero_one(*lin, z_hat, h, theta1, mask, options.tie_tolerance);
  }
  InnerOptions inner;
  inner.steps = options.inner_steps;
  inner.learning_rate = options.inner_learning_rate;
  return dtransform_nonlinear(model, z_hat, h, theta1, inner, mask);
}

}  // namespace stabeval
