#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stabeval {

/// Nonnegative real or +inf. The infinite state is a flag, never a floating
/// infinity, so arithmetic paths must branch on is_infinite() explicitly.
class ExtendedReal {
 public:
  constexpr ExtendedReal() = default;
  explicit ExtendedReal(double value);

  static ExtendedReal infinity() noexcept;

  bool is_infinite() const noexcept { return infinite_; }
  bool is_finite() const noexcept { return !infinite_; }

  /// Finite value; throws Unsupported on the infinite sentinel.
  double value() const;
  /// 1/x with 1/inf = 0. Zero is rejected at construction of prices, so
  /// callers never see 1/0 from a validated CostSpec.
  double reciprocal() const;
  /// IEEE view for reporting and comparisons only.
  double as_double() const noexcept;

  std::string to_string() const;
  static ExtendedReal parse(std::string_view text);

  friend bool operator==(const ExtendedReal&, const ExtendedReal&) = default;
  friend std::partial_ordering operator<=>(const ExtendedReal& a, const ExtendedReal& b) {
    return a.as_double() <=> b.as_double();
  }

 private:
  double value_ = 0.0;
  bool infinite_ = false;
};

using Price = ExtendedReal;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const std::vector<double>& data() const noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct SampleView {
  std::span<const double> x;
  int y;
};

/// Labeled samples forming the empirical reference measure (1/n) sum delta_{z_i}.
/// Labels are stored as +1/-1.
class Dataset {
 public:
  Dataset(Matrix features, std::vector<int> labels, std::vector<std::string> feature_names);

  std::size_t size() const noexcept { return features_.rows(); }
  std::size_t dimension() const noexcept { return features_.cols(); }
  const Matrix& features() const noexcept { return features_; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  const std::vector<std::string>& feature_names() const noexcept { return names_; }

  SampleView sample(std::size_t i) const { return {features_.row(i), labels_[i]}; }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  Matrix features_;
  std::vector<int> labels_;
  std::vector<std::string> names_;
};

/// Coordinates that may be perturbed. Everything else has infinite transport cost.
class FeatureMask {
 public:
  static FeatureMask all(std::size_t dimension);
  FeatureMask(std::size_t dimension, std::span<const std::size_t> movable);

  std::size_t dimension() const noexcept { return flags_.size(); }
  bool movable(std::size_t j) const { return flags_[j] != 0; }
  bool is_full() const noexcept;
  std::vector<std::size_t> indices() const;

 private:
  explicit FeatureMask(std::vector<char> flags) : flags_(std::move(flags)) {}
  std::vector<char> flags_;
};

struct CostSpec {
  Price theta1;
  Price theta2;
  std::optional<double> budget_constant;
  /// 0-based movable coordinates; nullopt means all.
  std::optional<std::vector<std::size_t>> feature_mask;

  CostSpec(Price theta1, Price theta2, std::optional<double> budget_constant = std::nullopt,
           std::optional<std::vector<std::size_t>> feature_mask = std::nullopt);

  FeatureMask mask(std::size_t dimension) const;

  friend bool operator==(const CostSpec&, const CostSpec&) = default;
};

enum class Phi { KL, ChiSquared };

/// phi(t) = t log t - t + 1 (KL) or (t - 1)^2 (chi-squared), t >= 0.
double phi_value(Phi phi, double t);

enum class LossKind { PiecewiseLinear, ZeroOne, SmoothNonlinear };

std::string_view to_string(Phi phi);
std::string_view to_string(LossKind kind);
Phi parse_phi(std::string_view text);
LossKind parse_loss_kind(std::string_view text);

struct SolverOptions {
  double h_tolerance = 1e-9;          ///< golden-section interval width (relative to max(1, h))
  double weight_tolerance = 1e-8;     ///< |mean(w) - 1|
  double gap_tolerance = 1e-6;        ///< relative duality gap accepted
  double slope_probe = 1e-6;          ///< bracket slope probe step, times max(1, h)
  int max_doublings = 60;
  double tie_tolerance = 1e-9;        ///< d-transform maximizers closer than this in value are tied
  int outer_epochs = 500;
  int inner_steps = 20;
  double inner_learning_rate = 1e-2;
  double outer_learning_rate = 1e-2;
  double trace_tolerance = 1e-2;      ///< |E_Q[W l] - r| accepted by the iterative path
  unsigned threads = 1;

  friend bool operator==(const SolverOptions&, const SolverOptions&) = default;
};

struct EvalConfig {
  CostSpec cost;
  Phi phi;
  double risk_threshold;
  LossKind loss_kind;
  SolverOptions solver;

  EvalConfig(CostSpec cost, Phi phi, double risk_threshold, LossKind loss_kind,
             SolverOptions solver = {});

  friend bool operator==(const EvalConfig&, const EvalConfig&) = default;
};

enum class SolveStatus { Converged, ThresholdUnreachable, BaselineExceedsThreshold };
std::string_view to_string(SolveStatus status);
SolveStatus parse_solve_status(std::string_view text);

struct TracePoint {
  std::size_t iteration;
  double h;
  double objective;
  double weighted_risk;  ///< E_Q[W * l(beta, Z)] at this iterate

  friend bool operator==(const TracePoint&, const TracePoint&) = default;
};

/// Q* = (1/n) sum_i [ s_i delta_(z_i, w_i) + (1 - s_i) delta_(z'_i, w_i) ].
///
/// z_i is the d-transform maximizer at h*. When two maximizers tie (a kink of
/// the dual in h) the sample's mass is split between them with share s_i so
/// that the risk constraint is met with equality; otherwise s_i = 1 and the
/// alternate equals the primary point.
class SensitiveDistribution {
 public:
  SensitiveDistribution(Matrix points, std::vector<int> labels, std::vector<double> weights,
                        std::vector<double> transport_costs, std::vector<double> primary_share,
                        Matrix alternate_points, std::vector<double> alternate_costs, double h_star,
                        double alpha_star, double weight_tolerance = 1e-8);

  std::size_t size() const noexcept { return points_.rows(); }
  const Matrix& points() const noexcept { return points_; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  const std::vector<double>& transport_costs() const noexcept { return costs_; }
  const std::vector<double>& primary_share() const noexcept { return share_; }
  const Matrix& alternate_points() const noexcept { return alt_points_; }
  const std::vector<double>& alternate_costs() const noexcept { return alt_costs_; }
  double h_star() const noexcept { return h_star_; }
  double alpha_star() const noexcept { return alpha_star_; }

  bool is_split(std::size_t i) const { return share_[i] < 1.0; }

  friend bool operator==(const SensitiveDistribution&, const SensitiveDistribution&) = default;

 private:
  Matrix points_;
  std::vector<int> labels_;
  std::vector<double> weights_;
  std::vector<double> costs_;
  std::vector<double> share_;
  Matrix alt_points_;
  std::vector<double> alt_costs_;
  double h_star_;
  double alpha_star_;
};

struct Decomposition {
  double delta_total;
  double delta_corruption;    ///< Delta_I: moving samples
  double delta_reweighting;   ///< Delta_II: reweighting moved samples

  friend bool operator==(const Decomposition&, const Decomposition&) = default;
};

struct StabilityReport {
  ExtendedReal criterion_value;
  double dual_value = 0.0;
  double primal_cost_of_qstar = 0.0;
  double duality_gap = 0.0;
  Decomposition decomposition{0.0, 0.0, 0.0};
  std::vector<TracePoint> trace;
  SolveStatus status = SolveStatus::Converged;

  double baseline_risk = 0.0;
  double weighted_risk = 0.0;
  double h_star = 0.0;
  double alpha_star = 0.0;

  /// Throws InvalidArgument when an invariant is violated.
  void check(double gap_tolerance = 1e-6) const;

  friend bool operator==(const StabilityReport&, const StabilityReport&) = default;
};

}  // namespace stabeval
