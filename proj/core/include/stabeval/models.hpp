#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "stabeval/core.hpp"

namespace stabeval {

/// l(z) = max_k y * a_k^T x + b_k.
struct PiecewiseLinearModel {
  std::vector<std::vector<double>> slopes;  ///< a_k, each of length d
  std::vector<double> intercepts;           ///< b_k

  PiecewiseLinearModel(std::vector<std::vector<double>> slopes, std::vector<double> intercepts);
  std::size_t pieces() const noexcept { return intercepts.size(); }
  std::size_t dimension() const noexcept { return slopes.front().size(); }
  /// Value of piece k at z.
  double piece_value(std::size_t k, SampleView z) const;

  friend bool operator==(const PiecewiseLinearModel&, const PiecewiseLinearModel&) = default;
};

/// f(x) = sign(beta^T x + beta_0), evaluated with the 0/1 loss. A point on
/// the boundary counts as misclassified.
struct LinearClassifier {
  std::vector<double> weights;
  double bias;

  LinearClassifier(std::vector<double> weights, double bias);
  std::size_t dimension() const noexcept { return weights.size(); }
  double score(std::span<const double> x) const;

  friend bool operator==(const LinearClassifier&, const LinearClassifier&) = default;
};

/// Cross-entropy of sigma(w^T x + b) against y in {+1,-1}: log(1 + exp(-y m)).
struct LogisticModel {
  std::vector<double> weights;
  double bias;

  LogisticModel(std::vector<double> weights, double bias);
  std::size_t dimension() const noexcept { return weights.size(); }
  double score(std::span<const double> x) const;

  friend bool operator==(const LogisticModel&, const LogisticModel&) = default;
};

enum class Activation { ReLU, Tanh };

/// Two-layer perceptron with scalar output m = w2^T act(W1 x + b1) + b2 and
/// cross-entropy loss log(1 + exp(-y m)).
struct MlpModel {
  std::size_t hidden;
  std::size_t input;
  std::vector<double> w1;  ///< hidden x input, row-major
  std::vector<double> b1;
  std::vector<double> w2;
  double b2;
  Activation activation;

  MlpModel(std::size_t hidden, std::size_t input, std::vector<double> w1, std::vector<double> b1,
           std::vector<double> w2, double b2, Activation activation);
  std::size_t dimension() const noexcept { return input; }
  double score(std::span<const double> x) const;

  friend bool operator==(const MlpModel&, const MlpModel&) = default;
};

/// A trained predictor tagged with the loss class the solvers dispatch on.
class LossModel {
 public:
  using Variant = std::variant<PiecewiseLinearModel, LinearClassifier, LogisticModel, MlpModel>;

  LossModel(PiecewiseLinearModel m) : model_(std::move(m)) {}
  LossModel(LinearClassifier m) : model_(std::move(m)) {}
  LossModel(LogisticModel m) : model_(std::move(m)) {}
  LossModel(MlpModel m) : model_(std::move(m)) {}

  LossKind kind() const noexcept;
  std::size_t dimension() const;
  const Variant& variant() const noexcept { return model_; }

  template <class T>
  const T* get_if() const noexcept {
    return std::get_if<T>(&model_);
  }

  friend bool operator==(const LossModel&, const LossModel&) = default;

 private:
  Variant model_;
};

/// Model whose natural loss class is `kind`: a logistic model evaluated with
/// the 0/1 loss becomes its linear decision rule. Throws Unsupported for
/// combinations that have no such view.
LossModel resolve_loss(const LossModel& model, LossKind kind);

double loss(const LossModel& model, SampleView z);

/// dl/dx. A subgradient at nondifferentiable points; Unsupported for 0/1.
std::vector<double> grad_sample(const LossModel& model, SampleView z);

/// d*(z): squared distance to the nearest point the classifier gets wrong,
/// moving only masked coordinates. Zero when already misclassified; the
/// infinity sentinel when no movable coordinate affects the score.
ExtendedReal margin_distance(const LinearClassifier& model, SampleView z, const FeatureMask& mask);
ExtendedReal margin_distance(const LinearClassifier& model, SampleView z);

/// Closest point (on masked coordinates) where the score is zero.
std::vector<double> boundary_projection(const LinearClassifier& model, SampleView z,
                                        const FeatureMask& mask);

/// Mean loss over the dataset, E_{P0}[l].
double baseline_risk(const LossModel& model, const Dataset& data);

}  // namespace stabeval
