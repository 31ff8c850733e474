#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "stabeval/conic.hpp"
#include "stabeval/error.hpp"
#include "stabeval/serialize.hpp"

using namespace stabeval;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an exception";
  return ErrorCode::IoError;
}

EvalConfig pw_config(double theta1, double theta2, Phi phi, double r) {
  return EvalConfig(CostSpec(Price(theta1), Price(theta2)), phi, r, LossKind::PiecewiseLinear);
}

}  // namespace

TEST(KlProgram, StructuralCounts) {
  std::mt19937_64 rng(1);
  const oracle::Instance in = oracle::random_piecewise(rng, 2, 2, 3);
  const auto& m = *in.model.get_if<PiecewiseLinearModel>();
  const ConicProgram p = assemble_kl_program(in.data, m, pw_config(0.5, 0.5, Phi::KL, in.r));
  EXPECT_EQ(p.pieces.size(), 6u);
  EXPECT_EQ(p.expcone.size(), 2u);
  EXPECT_EQ(p.linear.size(), 1u);
  EXPECT_EQ(p.variables.size(), 2u + 2u * 2u);
  EXPECT_TRUE(p.quadratic.empty());
  EXPECT_NO_THROW(p.validate());
}

TEST(Chi2Program, StructuralCounts) {
  const Dataset data(Matrix(2, 1, std::vector<double>{1.0, -1.0}), {1, -1}, {"a"});
  const PiecewiseLinearModel m({{-1.0}}, {1.0});
  const ConicProgram p = assemble_chi2_program(data, m, pw_config(0.5, 0.5, Phi::ChiSquared, 1.0));
  EXPECT_EQ(p.pieces.size(), 2u);
  EXPECT_EQ(p.quadratic.size(), 1u);
  EXPECT_EQ(p.variables.size(), 3u + 2u);
  EXPECT_TRUE(p.expcone.empty());
  EXPECT_NO_THROW(p.validate());
}

TEST(Programs, RejectInfinitePrices) {
  const Dataset data(Matrix(1, 1, std::vector<double>{1.0}), {1}, {"a"});
  const PiecewiseLinearModel m({{1.0}}, {0.0});
  const EvalConfig cfg(CostSpec(fixtures::inf(), Price(1.0)), Phi::KL, 2.0, LossKind::PiecewiseLinear);
  EXPECT_EQ(code_of([&] { assemble_kl_program(data, m, cfg); }), ErrorCode::Unsupported);
  EXPECT_EQ(code_of([&] { assemble_chi2_program(data, m, cfg); }), ErrorCode::Unsupported);
}

TEST(KlProgram, DegenerateConstantLoss) {
  const double L = 0.7;
  const Dataset data(Matrix(1, 2, std::vector<double>{0.3, -0.2}), {1}, {"a", "b"});
  const PiecewiseLinearModel m({{0.0, 0.0}}, {L});
  const double theta2 = 0.5;
  const ConicProgram p = assemble_kl_program(data, m, pw_config(1.0, theta2, Phi::KL, L));
  const FeasibilityReport rep = check_feasibility(p, {{"h", 0.0}, {"t", 0.0}, {"p[0]", 0.0}, {"eta[0]", theta2}});
  EXPECT_LE(rep.max_violation, 1e-15);
  EXPECT_EQ(rep.objective, 0.0);
}

TEST(Chi2Program, AllEqualLossesCertificate) {
  const double L = 1.3, theta2 = 0.8;
  const Dataset data(Matrix(3, 1, std::vector<double>{0.3, -0.2, 5.0}), {1, -1, 1}, {"a"});
  const PiecewiseLinearModel m({{0.0}}, {L});
  const ConicProgram p = assemble_chi2_program(data, m, pw_config(1.0, theta2, Phi::ChiSquared, 2.0));
  std::map<std::string, double> a{{"h", 1.0}, {"alpha", -L}, {"t", theta2}};
  for (int i = 0; i < 3; ++i) a["eta[" + std::to_string(i) + "]"] = 1.0;
  const FeasibilityReport rep = check_feasibility(p, a);
  EXPECT_LE(rep.max_violation, 1e-14);
  // -h r - alpha - theta2 + t = -(2 - L)
  EXPECT_NEAR(rep.objective, -(2.0 - L), 1e-14);
}

TEST(Feasibility, NamesViolatedLinearRow) {
  ConicProgram p;
  p.variables = {{"x", false}, {"y", true}};
  p.objective = AffineExpr{{{"x", 1.0}}, 0.0};
  p.linear.push_back({"cap", AffineExpr{{{"x", 1.0}, {"y", 1.0}}, 0.0}, Relation::LessEqual, 1.0});
  p.linear.push_back({"floor", AffineExpr{{{"x", 1.0}}, 0.0}, Relation::GreaterEqual, -5.0});
  const FeasibilityReport rep = check_feasibility(p, {{"x", 1.0}, {"y", 0.5}});
  EXPECT_DOUBLE_EQ(rep.max_violation, 0.5);
  EXPECT_EQ(rep.worst_row, "cap");
  EXPECT_EQ(rep.objective, 1.0);

  const FeasibilityReport neg = check_feasibility(p, {{"x", -10.0}, {"y", -2.0}});
  EXPECT_EQ(neg.worst_row, "floor");
  EXPECT_DOUBLE_EQ(neg.max_violation, 5.0);
  bool sign_row = false;
  for (const auto& row : neg.rows) sign_row = sign_row || (row.name == "sign:y" && row.violation == 2.0);
  EXPECT_TRUE(sign_row);
}

TEST(Feasibility, MissingVariable) {
  std::mt19937_64 rng(2);
  const oracle::Instance in = oracle::random_piecewise(rng, 2, 2, 2);
  const ConicProgram p =
      assemble_kl_program(in.data, *in.model.get_if<PiecewiseLinearModel>(), pw_config(1.0, 1.0, Phi::KL, in.r));
  EXPECT_EQ(code_of([&] { check_feasibility(p, {{"h", 1.0}}); }), ErrorCode::MissingVariable);
  ConicProgram broken = p;
  broken.linear[0].lhs.terms.push_back({"ghost", 1.0});
  EXPECT_EQ(code_of([&] { broken.validate(); }), ErrorCode::MissingVariable);
  ConicProgram dup = p;
  dup.variables.push_back({"h", false});
  EXPECT_EQ(code_of([&] { dup.validate(); }), ErrorCode::InvalidArgument);
}

TEST(ExpCone, Membership) {
  EXPECT_EQ(expcone_violation(1.0, 1.0, 0.0), 0.0);
  EXPECT_NEAR(expcone_violation(0.9, 1.0, 0.0), 0.1, 1e-15);
  EXPECT_EQ(expcone_violation(0.0, 0.0, -1.0), 0.0);
  EXPECT_EQ(expcone_violation(0.0, 0.0, 0.5), 0.5);
  EXPECT_EQ(expcone_violation(-0.3, 0.0, 0.0), 0.3);
  EXPECT_GT(expcone_violation(5.0, -1.0, -2.0), 0.0);
  EXPECT_NEAR(expcone_violation(std::exp(2.0), 2.0, 2.0), 0.0, 1e-12);
}

TEST(Certificates, FeasibleWithObjectiveMinusCriterion) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 15; ++trial) {
    const oracle::Instance in = oracle::random_piecewise(rng, 10 + trial, 1 + trial % 4, 2 + trial % 3);
    const auto& m = *in.model.get_if<PiecewiseLinearModel>();
    for (Phi phi : {Phi::KL, Phi::ChiSquared}) {
      const EvalConfig cfg = pw_config(in.theta1, in.theta2, phi, in.r);
      const DualSolution sol = solve_dual(in.data, validate_config(cfg, in.data, in.model));
      ASSERT_EQ(sol.status, SolveStatus::Converged);
      const ConicProgram p = phi == Phi::KL ? assemble_kl_program(in.data, m, cfg) : assemble_chi2_program(in.data, m, cfg);
      const auto cert = phi == Phi::KL ? kl_certificate(in.data, m, cfg, sol) : chi2_certificate(in.data, m, cfg, sol);
      const FeasibilityReport rep = check_feasibility(p, cert);
      EXPECT_LE(rep.max_violation, 1e-6) << rep.worst_row;
      const double crit = sol.criterion().value();
      EXPECT_NEAR(rep.objective, -crit, 1e-6 * std::max(1.0, crit));
    }
  }
}

TEST(Certificates, BaselineAndUnreachable) {
  const Dataset data(Matrix(2, 1, std::vector<double>{1.0, -1.0}), {1, -1}, {"a"});
  const PiecewiseLinearModel m({{0.0}}, {0.5});
  const LossModel model(m);
  const EvalConfig low = pw_config(1.0, 1.0, Phi::KL, 0.2);
  const DualSolution base = solve_dual(data, validate_config(low, data, model));
  EXPECT_EQ(base.status, SolveStatus::BaselineExceedsThreshold);
  const FeasibilityReport rep = check_feasibility(assemble_kl_program(data, m, low), kl_certificate(data, m, low, base));
  EXPECT_LE(rep.max_violation, 1e-12);
  EXPECT_NEAR(rep.objective, 0.0, 1e-12);

  const EvalConfig high = pw_config(1.0, 1.0, Phi::KL, 0.9);
  const DualSolution none = solve_dual(data, validate_config(high, data, model));
  EXPECT_EQ(none.status, SolveStatus::ThresholdUnreachable);
  EXPECT_EQ(code_of([&] { kl_certificate(data, m, high, none); }), ErrorCode::ThresholdUnreachable);
}

TEST(ConicJson, RoundTrip) {
  std::mt19937_64 rng(4);
  const oracle::Instance in = oracle::random_piecewise(rng, 4, 3, 3);
  const auto& m = *in.model.get_if<PiecewiseLinearModel>();
  for (Phi phi : {Phi::KL, Phi::ChiSquared}) {
    const EvalConfig cfg = pw_config(in.theta1, in.theta2, phi, in.r);
    const ConicProgram p = phi == Phi::KL ? assemble_kl_program(in.data, m, cfg) : assemble_chi2_program(in.data, m, cfg);
    const std::string text = to_json(p);
    EXPECT_EQ(conic_program_from_json(text), p);
    EXPECT_EQ(to_json(conic_program_from_json(text)), text);
  }
  EXPECT_EQ(code_of([] { conic_program_from_json("{\"variables\": 3}"); }), ErrorCode::SchemaError);
}
