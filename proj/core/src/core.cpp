#include "stabeval/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "stabeval/error.hpp"
#include "stabeval/numeric.hpp"

namespace stabeval {

// ---------------------------------------------------------------- ExtendedReal

ExtendedReal::ExtendedReal(double value) : value_(value) {
  if (!std::isfinite(value)) {
    fail(ErrorCode::InvalidArgument, "extended real must be finite or the infinity sentinel");
  }
}

ExtendedReal ExtendedReal::infinity() noexcept {
  ExtendedReal x;
  x.infinite_ = true;
  return x;
}

double ExtendedReal::value() const {
  if (infinite_) fail(ErrorCode::Unsupported, "value() on the infinity sentinel");
  return value_;
}

double ExtendedReal::reciprocal() const {
  if (infinite_) return 0.0;
  return 1.0 / value_;
}

double ExtendedReal::as_double() const noexcept {
  return infinite_ ? std::numeric_limits<double>::infinity() : value_;
}

std::string ExtendedReal::to_string() const {
  return infinite_ ? std::string("inf") : numeric::shortest(value_);
}

ExtendedReal ExtendedReal::parse(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "inf" || lower == "+inf" || lower == "infinity" || lower == "+infinity") {
    return infinity();
  }
  double v = 0.0;
  if (!numeric::parse_double(text, v) || !std::isfinite(v)) {
    fail(ErrorCode::InvalidArgument, "cannot parse '" + std::string(text) + "' as a real or 'inf'");
  }
  return ExtendedReal(v);
}

// ---------------------------------------------------------------------- Matrix

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    fail(ErrorCode::DimensionMismatch, "matrix data size does not match rows*cols");
  }
}

// --------------------------------------------------------------------- Dataset

Dataset::Dataset(Matrix features, std::vector<int> labels, std::vector<std::string> feature_names)
    : features_(std::move(features)), labels_(std::move(labels)), names_(std::move(feature_names)) {
  if (features_.rows() == 0) fail(ErrorCode::InvalidArgument, "dataset has no samples");
  if (features_.cols() == 0) fail(ErrorCode::InvalidArgument, "dataset has no features");
  if (labels_.size() != features_.rows()) {
    fail(ErrorCode::DimensionMismatch, "label count does not match sample count");
  }
  if (names_.size() != features_.cols()) {
    fail(ErrorCode::DimensionMismatch, "feature name count does not match feature dimension");
  }
  for (double v : features_.data()) {
    if (!std::isfinite(v)) fail(ErrorCode::InvalidArgument, "non-finite feature value");
  }
  for (int y : labels_) {
    if (y != 1 && y != -1) fail(ErrorCode::LabelDomainError, "labels must be +1 or -1");
  }
  std::set<std::string> unique(names_.begin(), names_.end());
  if (unique.size() != names_.size()) fail(ErrorCode::InvalidArgument, "feature names must be unique");
}

// ----------------------------------------------------------------- FeatureMask

FeatureMask FeatureMask::all(std::size_t dimension) {
  return FeatureMask(std::vector<char>(dimension, 1));
}

FeatureMask::FeatureMask(std::size_t dimension, std::span<const std::size_t> movable)
    : flags_(dimension, 0) {
  if (movable.empty()) fail(ErrorCode::InvalidArgument, "feature mask must be nonempty");
  for (std::size_t j : movable) {
    if (j >= dimension) {
      fail(ErrorCode::DimensionMismatch,
           "feature mask index " + std::to_string(j) + " out of range for dimension " +
               std::to_string(dimension));
    }
    flags_[j] = 1;
  }
}

bool FeatureMask::is_full() const noexcept {
  return std::all_of(flags_.begin(), flags_.end(), [](char c) { return c != 0; });
}

std::vector<std::size_t> FeatureMask::indices() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < flags_.size(); ++j) {
    if (flags_[j]) out.push_back(j);
  }
  return out;
}

// -------------------------------------------------------------------- CostSpec

CostSpec::CostSpec(Price t1, Price t2, std::optional<double> c,
                   std::optional<std::vector<std::size_t>> mask)
    : theta1(t1), theta2(t2), budget_constant(c), feature_mask(std::move(mask)) {
  if (theta1.is_finite() && !(theta1.value() > 0.0)) {
    fail(ErrorCode::InvalidCost, "theta1 must be positive or inf");
  }
  if (theta2.is_finite() && !(theta2.value() > 0.0)) {
    fail(ErrorCode::InvalidCost, "theta2 must be positive or inf");
  }
  if (budget_constant) {
    if (!(*budget_constant > 0.0) || !std::isfinite(*budget_constant)) {
      fail(ErrorCode::InvalidCost, "budget constant C must be a positive real");
    }
    const double sum = theta1.reciprocal() + theta2.reciprocal();
    if (std::abs(sum - *budget_constant) > 1e-12) {
      fail(ErrorCode::InvalidCost, "1/theta1 + 1/theta2 = " + numeric::shortest(sum) +
                                       " violates budget constant C = " +
                                       numeric::shortest(*budget_constant));
    }
  }
  if (feature_mask) {
    if (feature_mask->empty()) fail(ErrorCode::InvalidArgument, "feature mask must be nonempty");
    std::sort(feature_mask->begin(), feature_mask->end());
    feature_mask->erase(std::unique(feature_mask->begin(), feature_mask->end()), feature_mask->end());
  }
}

FeatureMask CostSpec::mask(std::size_t dimension) const {
  if (!feature_mask) return FeatureMask::all(dimension);
  return FeatureMask(dimension, *feature_mask);
}

// ------------------------------------------------------------------ enums

double phi_value(Phi phi, double t) {
  switch (phi) {
    case Phi::KL:
      if (t == 0.0) return 1.0;
      return t * std::log(t) - t + 1.0;
    case Phi::ChiSquared:
      return (t - 1.0) * (t - 1.0);
  }
  return 0.0;
}

std::string_view to_string(Phi phi) { return phi == Phi::KL ? "kl" : "chi2"; }

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::PiecewiseLinear: return "piecewise_linear";
    case LossKind::ZeroOne: return "zero_one";
    case LossKind::SmoothNonlinear: return "smooth_nonlinear";
  }
  return "";
}

Phi parse_phi(std::string_view text) {
  if (text == "kl" || text == "KL") return Phi::KL;
  if (text == "chi2" || text == "chi-squared" || text == "ChiSquared") return Phi::ChiSquared;
  fail(ErrorCode::InvalidArgument, "unknown phi divergence '" + std::string(text) + "'");
}

LossKind parse_loss_kind(std::string_view text) {
  if (text == "piecewise_linear" || text == "pw") return LossKind::PiecewiseLinear;
  if (text == "zero_one" || text == "01") return LossKind::ZeroOne;
  if (text == "smooth_nonlinear" || text == "smooth") return LossKind::SmoothNonlinear;
  fail(ErrorCode::InvalidArgument, "unknown loss kind '" + std::string(text) + "'");
}

std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged: return "Converged";
    case SolveStatus::ThresholdUnreachable: return "ThresholdUnreachable";
    case SolveStatus::BaselineExceedsThreshold: return "BaselineExceedsThreshold";
  }
  return "";
}

SolveStatus parse_solve_status(std::string_view text) {
  if (text == "Converged") return SolveStatus::Converged;
  if (text == "ThresholdUnreachable") return SolveStatus::ThresholdUnreachable;
  if (text == "BaselineExceedsThreshold") return SolveStatus::BaselineExceedsThreshold;
  fail(ErrorCode::SchemaError, "unknown status '" + std::string(text) + "'");
}

// ------------------------------------------------------------------ EvalConfig

EvalConfig::EvalConfig(CostSpec c, Phi p, double r, LossKind kind, SolverOptions opts)
    : cost(std::move(c)), phi(p), risk_threshold(r), loss_kind(kind), solver(opts) {
  if (!(risk_threshold > 0.0) || !std::isfinite(risk_threshold)) {
    fail(ErrorCode::InvalidArgument, "risk threshold r must be a positive finite real");
  }
  if (solver.outer_epochs < 1 || solver.inner_steps < 0 || solver.max_doublings < 1) {
    fail(ErrorCode::InvalidArgument, "solver iteration counts out of range");
  }
  if (!(solver.h_tolerance > 0.0) || !(solver.inner_learning_rate > 0.0) ||
      !(solver.outer_learning_rate > 0.0)) {
    fail(ErrorCode::InvalidArgument, "solver tolerances and learning rates must be positive");
  }
}

// ------------------------------------------------------- SensitiveDistribution

SensitiveDistribution::SensitiveDistribution(Matrix points, std::vector<int> labels,
                                             std::vector<double> weights,
                                             std::vector<double> transport_costs,
                                             std::vector<double> primary_share,
                                             Matrix alternate_points,
                                             std::vector<double> alternate_costs, double h_star,
                                             double alpha_star, double weight_tolerance)
    : points_(std::move(points)),
      labels_(std::move(labels)),
      weights_(std::move(weights)),
      costs_(std::move(transport_costs)),
      share_(std::move(primary_share)),
      alt_points_(std::move(alternate_points)),
      alt_costs_(std::move(alternate_costs)),
      h_star_(h_star),
      alpha_star_(alpha_star) {
  const std::size_t n = points_.rows();
  if (n == 0) fail(ErrorCode::InvalidArgument, "sensitive distribution is empty");
  if (labels_.size() != n || weights_.size() != n || costs_.size() != n || share_.size() != n ||
      alt_points_.rows() != n || alt_points_.cols() != points_.cols() || alt_costs_.size() != n) {
    fail(ErrorCode::DimensionMismatch, "sensitive distribution fields have inconsistent sizes");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(weights_[i] >= 0.0) || !std::isfinite(weights_[i])) {
      fail(ErrorCode::InvalidArgument, "weights must be finite and nonnegative");
    }
    if (!(costs_[i] >= 0.0) || !(alt_costs_[i] >= 0.0)) {
      fail(ErrorCode::InvalidArgument, "transport costs must be nonnegative");
    }
    if (!(share_[i] >= 0.0 && share_[i] <= 1.0)) {
      fail(ErrorCode::InvalidArgument, "primary share must lie in [0, 1]");
    }
    if (labels_[i] != 1 && labels_[i] != -1) fail(ErrorCode::LabelDomainError, "labels must be +1 or -1");
  }
  const double m = numeric::mean(weights_);
  if (std::abs(m - 1.0) > weight_tolerance) {
    fail(ErrorCode::InvalidArgument,
         "weights must average to 1 (got " + numeric::shortest(m) + ")");
  }
  if (!std::isfinite(h_star_) || h_star_ < 0.0) fail(ErrorCode::InvalidArgument, "h* must be >= 0");
}

// ------------------------------------------------------------- StabilityReport

void StabilityReport::check(double gap_tolerance) const {
  if (criterion_value.is_finite() && criterion_value.value() < 0.0) {
    fail(ErrorCode::InvalidArgument, "criterion value must be nonnegative");
  }
  if (status == SolveStatus::ThresholdUnreachable) return;
  if (duality_gap < -gap_tolerance * std::max(1.0, std::abs(dual_value))) {
    fail(ErrorCode::InvalidArgument, "duality gap below tolerance: " + numeric::shortest(duality_gap));
  }
  if (decomposition.delta_total !=
      decomposition.delta_corruption + decomposition.delta_reweighting) {
    fail(ErrorCode::InvalidArgument, "decomposition does not sum");
  }
}

}  // namespace stabeval
