#pragma once

#include <map>
#include <string>
#include <vector>

#include "stabeval/config.hpp"
#include "stabeval/core.hpp"
#include "stabeval/dual_solvers.hpp"
#include "stabeval/models.hpp"

namespace stabeval {

struct Variable {
  std::string name;
  bool nonnegative = false;

  friend bool operator==(const Variable&, const Variable&) = default;
};

struct Term {
  std::string variable;
  double coefficient;

  friend bool operator==(const Term&, const Term&) = default;
};

struct AffineExpr {
  std::vector<Term> terms;
  double constant = 0.0;

  double evaluate(const std::map<std::string, double>& assignment) const;

  friend bool operator==(const AffineExpr&, const AffineExpr&) = default;
};

enum class Relation { LessEqual, Equal, GreaterEqual };

struct LinearConstraint {
  std::string name;
  AffineExpr lhs;
  Relation relation = Relation::LessEqual;
  double rhs = 0.0;

  friend bool operator==(const LinearConstraint&, const LinearConstraint&) = default;
};

/// (x1, x2, x3) in K_exp: x1 >= x2 exp(x3 / x2) with x2 > 0, or x2 = 0,
/// x1 >= 0, x3 <= 0.
struct ExpConeConstraint {
  std::string name;
  AffineExpr x1;
  AffineExpr x2;
  AffineExpr x3;

  friend bool operator==(const ExpConeConstraint&, const ExpConeConstraint&) = default;
};

/// h_squared * v^2 + h_linear * v + constant + shift <= rhs, for one scalar
/// variable v (the dual step size h).
struct PieceConstraint {
  std::string name;
  std::string variable;
  double h_squared = 0.0;
  double h_linear = 0.0;
  double constant = 0.0;
  AffineExpr shift;
  AffineExpr rhs;

  friend bool operator==(const PieceConstraint&, const PieceConstraint&) = default;
};

/// sum_j c_j v_j^2 + affine <= 0.
struct QuadraticConstraint {
  std::string name;
  std::vector<Term> squares;
  AffineExpr affine;

  friend bool operator==(const QuadraticConstraint&, const QuadraticConstraint&) = default;
};

/// A minimization program over named variables.
struct ConicProgram {
  std::vector<Variable> variables;
  AffineExpr objective;
  std::vector<LinearConstraint> linear;
  std::vector<ExpConeConstraint> expcone;
  std::vector<PieceConstraint> pieces;
  std::vector<QuadraticConstraint> quadratic;

  /// Throws MissingVariable if any row names an undeclared variable, and
  /// InvalidArgument on duplicate variable names.
  void validate() const;

  friend bool operator==(const ConicProgram&, const ConicProgram&) = default;
};

/// Exponential-cone program whose optimal value is -sup_h g(h) for a
/// piecewise-linear loss with finite prices.
ConicProgram assemble_kl_program(const Dataset& data, const PiecewiseLinearModel& model,
                                 const EvalConfig& config);

/// Quadratic program whose optimal value is -sup_{h, alpha} G(h, alpha).
/// Variables h >= 0, alpha, t, eta >= 0; rows
///   q h^2 + c h + alpha + 2 theta2 <= 2 theta2 eta_i,
///   (theta2 / n) sum eta_i^2 <= t,
/// objective -h r - alpha - theta2 + t.
ConicProgram assemble_chi2_program(const Dataset& data, const PiecewiseLinearModel& model,
                                   const EvalConfig& config);

struct RowSlack {
  std::string name;
  double violation;  ///< >= 0; 0 means satisfied
};

struct FeasibilityReport {
  std::vector<RowSlack> rows;  ///< sign rows first, then linear, expcone, pieces, quadratic
  double max_violation = 0.0;
  std::string worst_row;
  double objective = 0.0;
};

/// Violation of K_exp membership, branching on the sign of x2.
double expcone_violation(double x1, double x2, double x3);

FeasibilityReport check_feasibility(const ConicProgram& program,
                                    const std::map<std::string, double>& assignment);

/// Point in the KL program built from a solved dual: h = h*, p_i the
/// d-transform values, t = theta2 log E[exp(p / theta2)],
/// eta_i = theta2 exp((p_i - t) / theta2).
std::map<std::string, double> kl_certificate(const Dataset& data, const PiecewiseLinearModel& model,
                                             const EvalConfig& config, const DualSolution& dual);

/// Point in the chi-squared program: h = h*, alpha = alpha*, eta_i = w_i,
/// t = (theta2 / n) sum w_i^2.
std::map<std::string, double> chi2_certificate(const Dataset& data, const PiecewiseLinearModel& model,
                                               const EvalConfig& config, const DualSolution& dual);

}  // namespace stabeval
