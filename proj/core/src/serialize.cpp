#include "stabeval/serialize.hpp"

#include <json.hpp>

#include "stabeval/error.hpp"
#include "stabeval/numeric.hpp"

namespace stabeval {

using json = nlohmann::ordered_json;

namespace {

json parse(std::string_view text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::SchemaError, std::string(what) + " is not valid JSON: " + e.what());
  }
}

const json& field(const json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) fail(ErrorCode::SchemaError, std::string("missing field '") + name + "'");
  return j[name];
}

double real(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_number()) fail(ErrorCode::SchemaError, std::string("field '") + name + "' must be a number");
  return v.get<double>();
}

template <class T>
T integer(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_number_integer()) fail(ErrorCode::SchemaError, std::string("field '") + name + "' must be an integer");
  return v.get<T>();
}

std::string text(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_string()) fail(ErrorCode::SchemaError, std::string("field '") + name + "' must be a string");
  return v.get<std::string>();
}

ExtendedReal extended(const json& j, const char* name) {
  try {
    return ExtendedReal::parse(text(j, name));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SchemaError) throw;
    fail(ErrorCode::SchemaError, std::string("field '") + name + "': " + e.what());
  }
}

std::vector<double> reals(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_array()) fail(ErrorCode::SchemaError, std::string("field '") + name + "' must be an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& x : v) {
    if (!x.is_number()) fail(ErrorCode::SchemaError, std::string("field '") + name + "' must hold numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto r = m.row(i);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return rows;
}

Matrix matrix(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_array() || v.empty()) fail(ErrorCode::SchemaError, std::string("field '") + name + "' must be a nonempty array of rows");
  std::vector<double> data;
  std::size_t cols = 0;
  for (const auto& row : v) {
    json wrapper = {{"row", row}};
    const std::vector<double> r = reals(wrapper, "row");
    if (data.empty()) cols = r.size();
    if (r.size() != cols || cols == 0) fail(ErrorCode::SchemaError, std::string("field '") + name + "' has ragged rows");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Matrix(v.size(), cols, std::move(data));
}

// Wrap domain validation failures of a parsed document as schema errors.
template <class F>
auto schema_guard(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SchemaError) throw;
    fail(ErrorCode::SchemaError, std::string("invalid ") + what + ": " + e.what());
  }
}

json config_json(const EvalConfig& c) {
  json j;
  j["theta1"] = c.cost.theta1.to_string();
  j["theta2"] = c.cost.theta2.to_string();
  j["budget_constant"] = c.cost.budget_constant ? json(*c.cost.budget_constant) : json(nullptr);
  j["feature_mask"] = c.cost.feature_mask ? json(*c.cost.feature_mask) : json(nullptr);
  j["phi"] = std::string(to_string(c.phi));
  j["risk_threshold"] = c.risk_threshold;
  j["loss_kind"] = std::string(to_string(c.loss_kind));
  const SolverOptions& s = c.solver;
  j["solver"] = {
      {"h_tolerance", s.h_tolerance},
      {"weight_tolerance", s.weight_tolerance},
      {"gap_tolerance", s.gap_tolerance},
      {"slope_probe", s.slope_probe},
      {"max_doublings", s.max_doublings},
      {"tie_tolerance", s.tie_tolerance},
      {"outer_epochs", s.outer_epochs},
      {"inner_steps", s.inner_steps},
      {"inner_learning_rate", s.inner_learning_rate},
      {"outer_learning_rate", s.outer_learning_rate},
      {"trace_tolerance", s.trace_tolerance},
      {"threads", s.threads},
  };
  return j;
}

EvalConfig config_from(const json& j) {
  return schema_guard("config", [&] {
    std::optional<double> c;
    if (!field(j, "budget_constant").is_null()) c = real(j, "budget_constant");
    std::optional<std::vector<std::size_t>> mask;
    const json& m = field(j, "feature_mask");
    if (!m.is_null()) {
      if (!m.is_array()) fail(ErrorCode::SchemaError, "field 'feature_mask' must be null or an array");
      mask.emplace();
      for (const auto& x : m) {
        if (!x.is_number_unsigned()) fail(ErrorCode::SchemaError, "field 'feature_mask' must hold indices");
        mask->push_back(x.get<std::size_t>());
      }
    }
    const json& s = field(j, "solver");
    SolverOptions o;
    o.h_tolerance = real(s, "h_tolerance");
    o.weight_tolerance = real(s, "weight_tolerance");
    o.gap_tolerance = real(s, "gap_tolerance");
    o.slope_probe = real(s, "slope_probe");
    o.max_doublings = integer<int>(s, "max_doublings");
    o.tie_tolerance = real(s, "tie_tolerance");
    o.outer_epochs = integer<int>(s, "outer_epochs");
    o.inner_steps = integer<int>(s, "inner_steps");
    o.inner_learning_rate = real(s, "inner_learning_rate");
    o.outer_learning_rate = real(s, "outer_learning_rate");
    o.trace_tolerance = real(s, "trace_tolerance");
    o.threads = integer<unsigned>(s, "threads");
    return EvalConfig(CostSpec(extended(j, "theta1"), extended(j, "theta2"), c, std::move(mask)),
                      parse_phi(text(j, "phi")), real(j, "risk_threshold"),
                      parse_loss_kind(text(j, "loss_kind")), o);
  });
}

json trace_json(const std::vector<TracePoint>& trace) {
  json arr = json::array();
  for (const auto& t : trace) {
    arr.push_back({{"iteration", t.iteration}, {"h", t.h}, {"objective", t.objective}, {"weighted_risk", t.weighted_risk}});
  }
  return arr;
}

std::vector<TracePoint> trace_from(const json& j) {
  if (!j.is_array()) fail(ErrorCode::SchemaError, "field 'trace' must be an array");
  std::vector<TracePoint> out;
  for (const auto& t : j) {
    out.push_back({integer<std::size_t>(t, "iteration"), real(t, "h"), real(t, "objective"), real(t, "weighted_risk")});
  }
  return out;
}

json affine_json(const AffineExpr& e) {
  json terms = json::array();
  for (const Term& t : e.terms) terms.push_back({{"variable", t.variable}, {"coefficient", numeric::digits17(t.coefficient)}});
  return {{"terms", terms}, {"constant", numeric::digits17(e.constant)}};
}

double decimal(const json& j, const char* name) {
  const std::string s = text(j, name);
  double v = 0.0;
  if (!numeric::parse_double(s, v)) fail(ErrorCode::SchemaError, std::string("field '") + name + "' is not a decimal string");
  return v;
}

AffineExpr affine_from(const json& j) {
  AffineExpr e;
  const json& terms = field(j, "terms");
  if (!terms.is_array()) fail(ErrorCode::SchemaError, "field 'terms' must be an array");
  for (const auto& t : terms) e.terms.push_back({text(t, "variable"), decimal(t, "coefficient")});
  e.constant = decimal(j, "constant");
  return e;
}

const char* relation_name(Relation r) {
  switch (r) {
    case Relation::LessEqual: return "<=";
    case Relation::Equal: return "==";
    case Relation::GreaterEqual: return ">=";
  }
  return "";
}

Relation relation_from(const std::string& s) {
  if (s == "<=") return Relation::LessEqual;
  if (s == "==") return Relation::Equal;
  if (s == ">=") return Relation::GreaterEqual;
  fail(ErrorCode::SchemaError, "unknown relation '" + s + "'");
}

}  // namespace

std::string to_json(const EvalConfig& config) { return config_json(config).dump(2) + "\n"; }

EvalConfig eval_config_from_json(std::string_view t) { return config_from(parse(t, "config")); }

std::string to_json(const StabilityReport& r) {
  json j;
  j["criterion_value"] = r.criterion_value.to_string();
  j["status"] = std::string(to_string(r.status));
  j["dual_value"] = r.dual_value;
  j["primal_cost_of_qstar"] = r.primal_cost_of_qstar;
  j["duality_gap"] = r.duality_gap;
  j["decomposition"] = {{"delta_total", r.decomposition.delta_total},
                        {"delta_I", r.decomposition.delta_corruption},
                        {"delta_II", r.decomposition.delta_reweighting}};
  j["baseline_risk"] = r.baseline_risk;
  j["weighted_risk"] = r.weighted_risk;
  j["h_star"] = r.h_star;
  j["alpha_star"] = r.alpha_star;
  j["trace"] = trace_json(r.trace);
  return j.dump(2) + "\n";
}

StabilityReport stability_report_from_json(std::string_view t) {
  const json j = parse(t, "report");
  StabilityReport r;
  r.criterion_value = extended(j, "criterion_value");
  r.status = parse_solve_status(text(j, "status"));
  r.dual_value = real(j, "dual_value");
  r.primal_cost_of_qstar = real(j, "primal_cost_of_qstar");
  r.duality_gap = real(j, "duality_gap");
  const json& d = field(j, "decomposition");
  r.decomposition = {real(d, "delta_total"), real(d, "delta_I"), real(d, "delta_II")};
  r.baseline_risk = real(j, "baseline_risk");
  r.weighted_risk = real(j, "weighted_risk");
  r.h_star = real(j, "h_star");
  r.alpha_star = real(j, "alpha_star");
  r.trace = trace_from(field(j, "trace"));
  return r;
}

std::string to_json(const SensitiveDistribution& q) {
  json j;
  j["h_star"] = q.h_star();
  j["alpha_star"] = q.alpha_star();
  j["perturbed_points"] = matrix_json(q.points());
  j["labels"] = q.labels();
  j["weights"] = q.weights();
  j["transport_costs"] = q.transport_costs();
  j["primary_share"] = q.primary_share();
  j["alternate_points"] = matrix_json(q.alternate_points());
  j["alternate_costs"] = q.alternate_costs();
  return j.dump(2) + "\n";
}

SensitiveDistribution sensitive_distribution_from_json(std::string_view t) {
  const json j = parse(t, "sensitive distribution");
  return schema_guard("sensitive distribution", [&] {
    const json& l = field(j, "labels");
    if (!l.is_array()) fail(ErrorCode::SchemaError, "field 'labels' must be an array");
    std::vector<int> labels;
    for (const auto& y : l) {
      if (!y.is_number_integer()) fail(ErrorCode::SchemaError, "field 'labels' must hold integers");
      labels.push_back(y.get<int>());
    }
    return SensitiveDistribution(matrix(j, "perturbed_points"), std::move(labels), reals(j, "weights"),
                                 reals(j, "transport_costs"), reals(j, "primary_share"),
                                 matrix(j, "alternate_points"), reals(j, "alternate_costs"),
                                 real(j, "h_star"), real(j, "alpha_star"));
  });
}

std::string to_json(const FeatureStabilityReport& r) {
  json j;
  json per = json::array();
  for (const auto& f : r.per_feature) {
    per.push_back({{"index", f.index},
                   {"name", f.name},
                   {"criterion_value", f.criterion.to_string()},
                   {"status", std::string(to_string(f.status))}});
  }
  j["per_feature"] = per;
  j["ranking"] = r.ranking;
  return j.dump(2) + "\n";
}

FeatureStabilityReport feature_stability_from_json(std::string_view t) {
  const json j = parse(t, "feature report");
  FeatureStabilityReport r;
  const json& per = field(j, "per_feature");
  if (!per.is_array()) fail(ErrorCode::SchemaError, "field 'per_feature' must be an array");
  for (const auto& f : per) {
    r.per_feature.push_back({integer<std::size_t>(f, "index"), text(f, "name"), extended(f, "criterion_value"),
                             parse_solve_status(text(f, "status"))});
  }
  const json& rank = field(j, "ranking");
  if (!rank.is_array()) fail(ErrorCode::SchemaError, "field 'ranking' must be an array");
  for (const auto& k : rank) {
    if (!k.is_number_unsigned()) fail(ErrorCode::SchemaError, "field 'ranking' must hold indices");
    r.ranking.push_back(k.get<std::size_t>());
  }
  return r;
}

std::string to_json(const ConicProgram& p) {
  json j;
  json vars = json::array();
  for (const auto& v : p.variables) vars.push_back({{"name", v.name}, {"sign", v.nonnegative ? "nonnegative" : "free"}});
  j["variables"] = vars;
  j["objective"] = {{"sense", "minimize"}, {"expression", affine_json(p.objective)}};
  json lin = json::array();
  for (const auto& c : p.linear) {
    lin.push_back({{"name", c.name}, {"lhs", affine_json(c.lhs)}, {"relation", relation_name(c.relation)},
                   {"rhs", numeric::digits17(c.rhs)}});
  }
  j["linear"] = lin;
  json cones = json::array();
  for (const auto& c : p.expcone) {
    cones.push_back({{"name", c.name}, {"x1", affine_json(c.x1)}, {"x2", affine_json(c.x2)}, {"x3", affine_json(c.x3)}});
  }
  j["expcone"] = cones;
  json pieces = json::array();
  for (const auto& c : p.pieces) {
    pieces.push_back({{"name", c.name},
                      {"variable", c.variable},
                      {"h_squared", numeric::digits17(c.h_squared)},
                      {"h_linear", numeric::digits17(c.h_linear)},
                      {"constant", numeric::digits17(c.constant)},
                      {"shift", affine_json(c.shift)},
                      {"rhs", affine_json(c.rhs)}});
  }
  json squares = json::array();
  for (const auto& c : p.quadratic) {
    json sq = json::array();
    for (const Term& t : c.squares) sq.push_back({{"variable", t.variable}, {"coefficient", numeric::digits17(t.coefficient)}});
    squares.push_back({{"name", c.name}, {"squares", sq}, {"affine", affine_json(c.affine)}});
  }
  j["quadratic"] = {{"pieces", pieces}, {"sum_of_squares", squares}};
  return j.dump(2) + "\n";
}

ConicProgram conic_program_from_json(std::string_view t) {
  const json j = parse(t, "conic program");
  ConicProgram p;
  for (const auto& v : field(j, "variables")) {
    const std::string sign = text(v, "sign");
    if (sign != "nonnegative" && sign != "free") fail(ErrorCode::SchemaError, "variable sign must be nonnegative or free");
    p.variables.push_back({text(v, "name"), sign == "nonnegative"});
  }
  p.objective = affine_from(field(field(j, "objective"), "expression"));
  for (const auto& c : field(j, "linear")) {
    p.linear.push_back({text(c, "name"), affine_from(field(c, "lhs")), relation_from(text(c, "relation")), decimal(c, "rhs")});
  }
  for (const auto& c : field(j, "expcone")) {
    p.expcone.push_back({text(c, "name"), affine_from(field(c, "x1")), affine_from(field(c, "x2")),
                         affine_from(field(c, "x3"))});
  }
  const json& q = field(j, "quadratic");
  for (const auto& c : field(q, "pieces")) {
    p.pieces.push_back({text(c, "name"), text(c, "variable"), decimal(c, "h_squared"), decimal(c, "h_linear"),
                        decimal(c, "constant"), affine_from(field(c, "shift")), affine_from(field(c, "rhs"))});
  }
  for (const auto& c : field(q, "sum_of_squares")) {
    QuadraticConstraint qc{text(c, "name"), {}, affine_from(field(c, "affine"))};
    for (const auto& s : field(c, "squares")) qc.squares.push_back({text(s, "variable"), decimal(s, "coefficient")});
    p.quadratic.push_back(std::move(qc));
  }
  schema_guard("conic program", [&] {
    p.validate();
    return 0;
  });
  return p;
}

std::string to_json(const RunManifest& m) {
  json j;
  j["command"] = m.command;
  j["config"] = config_json(m.config);
  j["dataset_path"] = m.dataset_path;
  j["model_path"] = m.model_path;
  j["seed"] = m.seed;
  j["outputs"] = {{"report", m.report_path}, {"sensitive", m.sensitive_path}, {"plot", m.plot_path}};
  return j.dump(2) + "\n";
}

RunManifest run_manifest_from_json(std::string_view t) {
  const json j = parse(t, "manifest");
  const json& seed = field(j, "seed");
  if (!seed.is_number_unsigned()) fail(ErrorCode::SchemaError, "field 'seed' must be an unsigned integer");
  const json& out = field(j, "outputs");
  return RunManifest{text(j, "command"),     config_from(field(j, "config")), text(j, "dataset_path"),
                     text(j, "model_path"),  seed.get<std::uint64_t>(),       text(out, "report"),
                     text(out, "sensitive"), text(out, "plot")};
}

}  // namespace stabeval
