#include "stabeval/models.hpp"

#include <cmath>
#include <string>

#include "stabeval/error.hpp"
#include "stabeval/numeric.hpp"

namespace stabeval {

namespace {

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) fail(ErrorCode::InvalidArgument, std::string(what) + " must be finite");
  }
}

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) fail(ErrorCode::InvalidArgument, std::string(what) + " must be finite");
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

// log(1 + exp(t)) without overflow.
double softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }

double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

void check_dimension(std::size_t expected, SampleView z) {
  if (z.x.size() != expected) {
    fail(ErrorCode::DimensionMismatch, "sample has " + std::to_string(z.x.size()) +
                                           " features, model expects " + std::to_string(expected));
  }
  if (z.y != 1 && z.y != -1) fail(ErrorCode::LabelDomainError, "label must be +1 or -1");
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

PiecewiseLinearModel::PiecewiseLinearModel(std::vector<std::vector<double>> a, std::vector<double> b)
    : slopes(std::move(a)), intercepts(std::move(b)) {
  if (intercepts.empty() || slopes.size() != intercepts.size()) {
    fail(ErrorCode::InvalidArgument, "piecewise-linear model needs K >= 1 matching (a_k, b_k) pairs");
  }
  const std::size_t d = slopes.front().size();
  if (d == 0) fail(ErrorCode::InvalidArgument, "piecewise-linear slopes must be nonempty");
  for (const auto& a_k : slopes) {
    if (a_k.size() != d) fail(ErrorCode::DimensionMismatch, "all slopes must share one dimension");
    require_finite(a_k, "slope");
  }
  require_finite(intercepts, "intercept");
}

double PiecewiseLinearModel::piece_value(std::size_t k, SampleView z) const {
  return z.y * dot(slopes[k], z.x) + intercepts[k];
}

LinearClassifier::LinearClassifier(std::vector<double> w, double b) : weights(std::move(w)), bias(b) {
  if (weights.empty()) fail(ErrorCode::InvalidArgument, "classifier weights must be nonempty");
  require_finite(weights, "classifier weight");
  require_finite(bias, "classifier bias");
  if (dot(weights, weights) <= 0.0) fail(ErrorCode::InvalidArgument, "classifier weights must be nonzero");
}

double LinearClassifier::score(std::span<const double> x) const { return dot(weights, x) + bias; }

LogisticModel::LogisticModel(std::vector<double> w, double b) : weights(std::move(w)), bias(b) {
  if (weights.empty()) fail(ErrorCode::InvalidArgument, "logistic weights must be nonempty");
  require_finite(weights, "logistic weight");
  require_finite(bias, "logistic bias");
}

double LogisticModel::score(std::span<const double> x) const { return dot(weights, x) + bias; }

MlpModel::MlpModel(std::size_t h, std::size_t d, std::vector<double> w1_, std::vector<double> b1_,
                   std::vector<double> w2_, double b2_, Activation act)
    : hidden(h), input(d), w1(std::move(w1_)), b1(std::move(b1_)), w2(std::move(w2_)), b2(b2_),
      activation(act) {
  if (hidden < 1 || input < 1) fail(ErrorCode::InvalidArgument, "MLP needs hidden >= 1 and input >= 1");
  if (w1.size() != hidden * input || b1.size() != hidden || w2.size() != hidden) {
    fail(ErrorCode::DimensionMismatch, "MLP parameter shapes do not match hidden/input sizes");
  }
  require_finite(w1, "MLP layer-1 weight");
  require_finite(b1, "MLP layer-1 bias");
  require_finite(w2, "MLP layer-2 weight");
  require_finite(b2, "MLP layer-2 bias");
}

double MlpModel::score(std::span<const double> x) const {
  double m = b2;
  for (std::size_t u = 0; u < hidden; ++u) {
    const double pre = dot(std::span<const double>(w1.data() + u * input, input), x) + b1[u];
    const double a = activation == Activation::ReLU ? std::max(pre, 0.0) : std::tanh(pre);
    m += w2[u] * a;
  }
  return m;
}

LossKind LossModel::kind() const noexcept {
  return std::visit(overloaded{
                        [](const PiecewiseLinearModel&) { return LossKind::PiecewiseLinear; },
                        [](const LinearClassifier&) { return LossKind::ZeroOne; },
                        [](const LogisticModel&) { return LossKind::SmoothNonlinear; },
                        [](const MlpModel&) { return LossKind::SmoothNonlinear; },
                    },
                    model_);
}

std::size_t LossModel::dimension() const {
  return std::visit([](const auto& m) { return m.dimension(); }, model_);
}

LossModel resolve_loss(const LossModel& model, LossKind kind) {
  if (model.kind() == kind) return model;
  if (kind == LossKind::ZeroOne) {
    if (const auto* lr = model.get_if<LogisticModel>()) {
      return LossModel(LinearClassifier(lr->weights, lr->bias));
    }
  }
  fail(ErrorCode::Unsupported, "model of kind " + std::string(to_string(model.kind())) +
                                   " cannot be evaluated with loss " + std::string(to_string(kind)));
}

double loss(const LossModel& model, SampleView z) {
  check_dimension(model.dimension(), z);
  return std::visit(
      overloaded{
          [&](const PiecewiseLinearModel& m) {
            double best = m.piece_value(0, z);
            for (std::size_t k = 1; k < m.pieces(); ++k) best = std::max(best, m.piece_value(k, z));
            return best;
          },
          [&](const LinearClassifier& m) { return z.y * m.score(z.x) <= 0.0 ? 1.0 : 0.0; },
          [&](const LogisticModel& m) { return softplus(-z.y * m.score(z.x)); },
          [&](const MlpModel& m) { return softplus(-z.y * m.score(z.x)); },
      },
      model.variant());
}

std::vector<double> grad_sample(const LossModel& model, SampleView z) {
  check_dimension(model.dimension(), z);
  return std::visit(
      overloaded{
          [&](const PiecewiseLinearModel& m) {
            std::size_t best_k = 0;
            double best = m.piece_value(0, z);
            for (std::size_t k = 1; k < m.pieces(); ++k) {
              const double v = m.piece_value(k, z);
              if (v > best) {
                best = v;
                best_k = k;
              }
            }
            std::vector<double> g(m.slopes[best_k]);
            for (double& v : g) v *= z.y;
            return g;
          },
          [&](const LinearClassifier&) -> std::vector<double> {
            fail(ErrorCode::Unsupported, "grad_sample is not defined for the 0/1 loss");
          },
          [&](const LogisticModel& m) {
            // d/dx softplus(-y m) = -y sigma(-y m) w
            const double c = -z.y * sigmoid(-z.y * m.score(z.x));
            std::vector<double> g(m.weights);
            for (double& v : g) v *= c;
            return g;
          },
          [&](const MlpModel& m) {
            std::vector<double> pre(m.hidden);
            double out = m.b2;
            for (std::size_t u = 0; u < m.hidden; ++u) {
              pre[u] = dot(std::span<const double>(m.w1.data() + u * m.input, m.input), z.x) + m.b1[u];
              const double a = m.activation == Activation::ReLU ? std::max(pre[u], 0.0) : std::tanh(pre[u]);
              out += m.w2[u] * a;
            }
            const double dl_dout = -z.y * sigmoid(-z.y * out);
            std::vector<double> g(m.input, 0.0);
            for (std::size_t u = 0; u < m.hidden; ++u) {
              double dact = 0.0;
              if (m.activation == Activation::ReLU) {
                dact = pre[u] > 0.0 ? 1.0 : 0.0;
              } else {
                const double t = std::tanh(pre[u]);
                dact = 1.0 - t * t;
              }
              const double c = dl_dout * m.w2[u] * dact;
              if (c == 0.0) continue;
              for (std::size_t j = 0; j < m.input; ++j) g[j] += c * m.w1[u * m.input + j];
            }
            return g;
          },
      },
      model.variant());
}

ExtendedReal margin_distance(const LinearClassifier& model, SampleView z, const FeatureMask& mask) {
  check_dimension(model.dimension(), z);
  const double s = model.score(z.x);
  if (z.y * s <= 0.0) return ExtendedReal(0.0);
  double norm2 = 0.0;
  for (std::size_t j = 0; j < model.weights.size(); ++j) {
    if (mask.movable(j)) norm2 += model.weights[j] * model.weights[j];
  }
  if (norm2 == 0.0) return ExtendedReal::infinity();
  return ExtendedReal(s * s / norm2);
}

ExtendedReal margin_distance(const LinearClassifier& model, SampleView z) {
  return margin_distance(model, z, FeatureMask::all(model.dimension()));
}

std::vector<double> boundary_projection(const LinearClassifier& model, SampleView z,
                                        const FeatureMask& mask) {
  check_dimension(model.dimension(), z);
  std::vector<double> x(z.x.begin(), z.x.end());
  double norm2 = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (mask.movable(j)) norm2 += model.weights[j] * model.weights[j];
  }
  if (norm2 == 0.0) return x;
  const double s = model.score(z.x);
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (mask.movable(j)) x[j] -= s * model.weights[j] / norm2;
  }
  // Land on (or just past) the boundary so the 0/1 loss reads 1 at the
  // projected point despite rounding.
  for (int guard = 0; guard < 64 && z.y * model.score(x) > 0.0; ++guard) {
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (mask.movable(j) && model.weights[j] != 0.0) {
        const double dir = model.weights[j] * z.y > 0 ? -1.0 : 1.0;
        x[j] = std::nextafter(x[j], dir * std::numeric_limits<double>::infinity());
      }
    }
  }
  return x;
}

double baseline_risk(const LossModel& model, const Dataset& data) {
  std::vector<double> losses(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) losses[i] = loss(model, data.sample(i));
  return numeric::mean(losses);
}

}  // namespace stabeval
