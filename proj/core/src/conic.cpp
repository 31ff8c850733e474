#include "stabeval/conic.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "stabeval/error.hpp"
#include "stabeval/numeric.hpp"

namespace stabeval {

namespace {

std::string indexed(const char* base, std::size_t i) { return std::string(base) + "[" + std::to_string(i) + "]"; }

double lookup(const std::map<std::string, double>& assignment, const std::string& name) {
  auto it = assignment.find(name);
  if (it == assignment.end()) fail(ErrorCode::MissingVariable, "assignment has no value for '" + name + "'");
  return it->second;
}

struct PieceCoefficients {
  double quadratic;
  double linear;
};

// q = ||a_k . m||^2 / (4 theta1), c = y a_k^T x + b_k (b_k scaled by h).
PieceCoefficients piece(const PiecewiseLinearModel& model, std::size_t k, SampleView z,
                        const FeatureMask& mask, double theta1) {
  double norm2 = 0.0;
  for (std::size_t j = 0; j < model.dimension(); ++j) {
    if (mask.movable(j)) norm2 += model.slopes[k][j] * model.slopes[k][j];
  }
  return {norm2 / (4.0 * theta1), model.piece_value(k, z)};
}

struct Prepared {
  double theta1;
  double theta2;
  FeatureMask mask;
};

Prepared prepare(const Dataset& data, const PiecewiseLinearModel& model, const EvalConfig& config) {
  if (config.cost.theta1.is_infinite() || config.cost.theta2.is_infinite()) {
    fail(ErrorCode::Unsupported, "conic export needs finite theta1 and theta2");
  }
  if (model.dimension() != data.dimension()) {
    fail(ErrorCode::DimensionMismatch, "model and dataset dimensions differ");
  }
  return {config.cost.theta1.value(), config.cost.theta2.value(), config.cost.mask(data.dimension())};
}

void require_certificate(const DualSolution& dual, std::size_t n) {
  if (dual.status == SolveStatus::ThresholdUnreachable) {
    fail(ErrorCode::ThresholdUnreachable, "no certificate exists when the threshold is unreachable");
  }
  if (dual.transforms.size() != n) {
    fail(ErrorCode::DimensionMismatch, "dual solution does not match the dataset size");
  }
}

}  // namespace

double AffineExpr::evaluate(const std::map<std::string, double>& assignment) const {
  double s = constant;
  for (const Term& t : terms) s += t.coefficient * lookup(assignment, t.variable);
  return s;
}

void ConicProgram::validate() const {
  std::set<std::string> declared;
  for (const Variable& v : variables) {
    if (v.name.empty()) fail(ErrorCode::InvalidArgument, "variable names must be nonempty");
    if (!declared.insert(v.name).second) fail(ErrorCode::InvalidArgument, "duplicate variable '" + v.name + "'");
  }
  auto need = [&](const std::string& name, const std::string& row) {
    if (!declared.count(name)) {
      fail(ErrorCode::MissingVariable, "row '" + row + "' references undeclared variable '" + name + "'");
    }
  };
  auto need_expr = [&](const AffineExpr& e, const std::string& row) {
    for (const Term& t : e.terms) need(t.variable, row);
  };
  need_expr(objective, "objective");
  for (const auto& c : linear) need_expr(c.lhs, c.name);
  for (const auto& c : expcone) {
    need_expr(c.x1, c.name);
    need_expr(c.x2, c.name);
    need_expr(c.x3, c.name);
  }
  for (const auto& c : pieces) {
    need(c.variable, c.name);
    need_expr(c.shift, c.name);
    need_expr(c.rhs, c.name);
  }
  for (const auto& c : quadratic) {
    for (const Term& t : c.squares) need(t.variable, c.name);
    need_expr(c.affine, c.name);
  }
}

ConicProgram assemble_kl_program(const Dataset& data, const PiecewiseLinearModel& model,
                                 const EvalConfig& config) {
  const Prepared prep = prepare(data, model, config);
  const std::size_t n = data.size();
  ConicProgram prog;
  prog.variables.push_back({"h", true});
  prog.variables.push_back({"t", false});
  for (std::size_t i = 0; i < n; ++i) prog.variables.push_back({indexed("eta", i), true});
  for (std::size_t i = 0; i < n; ++i) prog.variables.push_back({indexed("p", i), false});

  prog.objective = AffineExpr{{{"h", -config.risk_threshold}, {"t", 1.0}}, 0.0};

  for (std::size_t i = 0; i < n; ++i) {
    const SampleView z = data.sample(i);
    prog.expcone.push_back({indexed("cone", i), AffineExpr{{{indexed("eta", i), 1.0}}, 0.0},
                            AffineExpr{{}, prep.theta2},
                            AffineExpr{{{indexed("p", i), 1.0}, {"t", -1.0}}, 0.0}});
    for (std::size_t k = 0; k < model.pieces(); ++k) {
      const PieceCoefficients pc = piece(model, k, z, prep.mask, prep.theta1);
      prog.pieces.push_back({"piece[" + std::to_string(i) + "," + std::to_string(k) + "]", "h",
                             pc.quadratic, pc.linear, 0.0, AffineExpr{},
                             AffineExpr{{{indexed("p", i), 1.0}}, 0.0}});
    }
  }
  AffineExpr budget;
  for (std::size_t i = 0; i < n; ++i) budget.terms.push_back({indexed("eta", i), 1.0 / static_cast<double>(n)});
  prog.linear.push_back({"budget", std::move(budget), Relation::LessEqual, prep.theta2});
  prog.validate();
  return prog;
}

ConicProgram assemble_chi2_program(const Dataset& data, const PiecewiseLinearModel& model,
                                   const EvalConfig& config) {
  const Prepared prep = prepare(data, model, config);
  const std::size_t n = data.size();
  const double t2 = prep.theta2;
  ConicProgram prog;
  prog.variables.push_back({"h", true});
  prog.variables.push_back({"alpha", false});
  prog.variables.push_back({"t", false});
  for (std::size_t i = 0; i < n; ++i) prog.variables.push_back({indexed("eta", i), true});

  prog.objective = AffineExpr{{{"h", -config.risk_threshold}, {"alpha", -1.0}, {"t", 1.0}}, -t2};

  for (std::size_t i = 0; i < n; ++i) {
    const SampleView z = data.sample(i);
    for (std::size_t k = 0; k < model.pieces(); ++k) {
      const PieceCoefficients pc = piece(model, k, z, prep.mask, prep.theta1);
      prog.pieces.push_back({"piece[" + std::to_string(i) + "," + std::to_string(k) + "]", "h",
                             pc.quadratic, pc.linear, 2.0 * t2, AffineExpr{{{"alpha", 1.0}}, 0.0},
                             AffineExpr{{{indexed("eta", i), 2.0 * t2}}, 0.0}});
    }
  }
  QuadraticConstraint budget{"budget", {}, AffineExpr{{{"t", -1.0}}, 0.0}};
  for (std::size_t i = 0; i < n; ++i) budget.squares.push_back({indexed("eta", i), t2 / static_cast<double>(n)});
  prog.quadratic.push_back(std::move(budget));
  prog.validate();
  return prog;
}

double expcone_violation(double x1, double x2, double x3) {
  if (x2 > 0.0) return std::max(0.0, x2 * std::exp(x3 / x2) - x1);
  if (x2 == 0.0) return std::max({0.0, -x1, x3});
  return -x2 + std::max({0.0, -x1, x3});
}

FeasibilityReport check_feasibility(const ConicProgram& program,
                                    const std::map<std::string, double>& assignment) {
  program.validate();
  FeasibilityReport rep;
  auto add = [&](const std::string& name, double violation) {
    rep.rows.push_back({name, violation});
    if (rep.worst_row.empty() || violation > rep.max_violation) {
      rep.max_violation = violation;
      rep.worst_row = name;
    }
  };
  for (const Variable& v : program.variables) {
    const double x = lookup(assignment, v.name);
    if (v.nonnegative) add("sign:" + v.name, std::max(0.0, -x));
  }
  for (const auto& c : program.linear) {
    const double lhs = c.lhs.evaluate(assignment);
    double viol = 0.0;
    switch (c.relation) {
      case Relation::LessEqual: viol = std::max(0.0, lhs - c.rhs); break;
      case Relation::GreaterEqual: viol = std::max(0.0, c.rhs - lhs); break;
      case Relation::Equal: viol = std::abs(lhs - c.rhs); break;
    }
    add(c.name, viol);
  }
  for (const auto& c : program.expcone) {
    add(c.name, expcone_violation(c.x1.evaluate(assignment), c.x2.evaluate(assignment),
                                  c.x3.evaluate(assignment)));
  }
  for (const auto& c : program.pieces) {
    const double v = lookup(assignment, c.variable);
    const double lhs = c.h_squared * v * v + c.h_linear * v + c.constant + c.shift.evaluate(assignment);
    add(c.name, std::max(0.0, lhs - c.rhs.evaluate(assignment)));
  }
  for (const auto& c : program.quadratic) {
    double lhs = c.affine.evaluate(assignment);
    for (const Term& t : c.squares) {
      const double v = lookup(assignment, t.variable);
      lhs += t.coefficient * v * v;
    }
    add(c.name, std::max(0.0, lhs));
  }
  rep.objective = program.objective.evaluate(assignment);
  return rep;
}

std::map<std::string, double> kl_certificate(const Dataset& data, const PiecewiseLinearModel& model,
                                             const EvalConfig& config, const DualSolution& dual) {
  const Prepared prep = prepare(data, model, config);
  const std::size_t n = data.size();
  require_certificate(dual, n);
  std::vector<double> p(n), scaled(n);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = dual.transforms[i].value;
    scaled[i] = p[i] / prep.theta2;
  }
  const double t = prep.theta2 * numeric::log_mean_exp(scaled);
  std::map<std::string, double> a;
  a["h"] = dual.h_star;
  a["t"] = t;
  for (std::size_t i = 0; i < n; ++i) {
    a[indexed("p", i)] = p[i];
    a[indexed("eta", i)] = prep.theta2 * std::exp((p[i] - t) / prep.theta2);
  }
  return a;
}

std::map<std::string, double> chi2_certificate(const Dataset& data, const PiecewiseLinearModel& model,
                                               const EvalConfig& config, const DualSolution& dual) {
  const Prepared prep = prepare(data, model, config);
  const std::size_t n = data.size();
  require_certificate(dual, n);
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = dual.transforms[i].value;
  const double alpha = chi2_alpha_star(values, prep.theta2);
  const std::vector<double> w = dual_weights(Phi::ChiSquared, config.cost.theta2, values, alpha);
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) sq[i] = w[i] * w[i];
  std::map<std::string, double> a;
  a["h"] = dual.h_star;
  a["alpha"] = alpha;
  a["t"] = prep.theta2 * numeric::mean(sq);
  for (std::size_t i = 0; i < n; ++i) a[indexed("eta", i)] = w[i];
  return a;
}

}  // namespace stabeval
