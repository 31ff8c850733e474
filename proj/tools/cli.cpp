#include "cli.hpp"

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stabeval/analysis.hpp"
#include "stabeval/conic.hpp"
#include "stabeval/error.hpp"
#include "stabeval/io.hpp"
#include "stabeval/numeric.hpp"
#include "stabeval/serialize.hpp"
#include "stabeval/toy.hpp"

namespace stabeval::cli {

namespace {

struct Options {
  std::string data;
  std::string model;
  std::string label = "y";
  std::string phi = "kl";
  std::string theta1;
  std::string theta2;
  std::optional<double> budget_c;
  double r = 0.0;
  std::string loss = "auto";
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  std::string features;
  unsigned threads = numeric::default_thread_count();
  std::size_t n_per_class = 100;
};

// Failure tied to a flag or file; reported verbatim with exit 1.
struct InputError {
  std::string message;
};

Price parse_price(const std::string& text, const char* flag) {
  try {
    return Price::parse(text);
  } catch (const Error& e) {
    throw InputError{std::string(flag) + ": " + e.what()};
  }
}

LossKind resolve_kind(const std::string& flag, const LossModel& model) {
  if (flag == "auto") return model.kind();
  return parse_loss_kind(flag);
}

std::string join(const std::string& dir, const char* name) {
  return (std::filesystem::path(dir) / name).string();
}

struct Loaded {
  Dataset data;
  LossModel model;
  EvalConfig config;
};

Loaded load(const Options& o) {
  std::optional<Dataset> data;
  std::optional<LossModel> model;
  try {
    data.emplace(load_dataset(o.data, o.label));
  } catch (const Error& e) {
    throw InputError{std::string("--data: ") + e.what()};
  }
  try {
    model.emplace(load_model(o.model));
  } catch (const Error& e) {
    throw InputError{std::string("--model: ") + e.what()};
  }
  const Price t1 = parse_price(o.theta1, "--theta1");
  const Price t2 = parse_price(o.theta2, "--theta2");
  std::optional<CostSpec> cost;
  try {
    cost.emplace(t1, t2, o.budget_c);
  } catch (const Error& e) {
    throw InputError{std::string("--theta1/--theta2/--budget-c: ") + e.what()};
  }
  SolverOptions solver;
  solver.threads = o.threads;
  try {
    EvalConfig config(*cost, parse_phi(o.phi), o.r, resolve_kind(o.loss, *model), solver);
    (void)resolve_loss(*model, config.loss_kind);
    return Loaded{std::move(*data), std::move(*model), std::move(config)};
  } catch (const Error& e) {
    throw InputError{std::string("--r/--loss: ") + e.what()};
  }
}

RunManifest manifest(const std::string& command, const Options& o, const EvalConfig& config) {
  return RunManifest{command, config, o.data, o.model, o.seed, join(o.out_dir, "report.json"),
                     command == "sensitive" ? join(o.out_dir, "sensitive.json") : "",
                     command == "sensitive" ? join(o.out_dir, "plot.csv") : ""};
}

int status_code(SolveStatus s) {
  return s == SolveStatus::ThresholdUnreachable ? kThresholdUnreachable : kOk;
}

int cmd_evaluate(const std::string& command, const Options& o, std::ostream& out) {
  const Loaded in = load(o);
  const EvaluationResult res = evaluate(in.data, in.model, in.config);
  const RunManifest m = manifest(command, o, in.config);
  write_text_file(m.report_path, to_json(res.report));
  write_text_file(join(o.out_dir, "manifest.json"), to_json(m));

  out << "status: " << to_string(res.report.status) << "\n";
  out << "criterion: " << res.report.criterion_value.to_string() << "\n";
  if (command == "decompose") {
    const Decomposition& d = res.report.decomposition;
    out << "delta: " << numeric::shortest(d.delta_total) << "\n";
    out << "delta_I: " << numeric::shortest(d.delta_corruption) << "\n";
    out << "delta_II: " << numeric::shortest(d.delta_reweighting) << "\n";
  }
  if (command == "sensitive" && res.qstar) {
    write_text_file(m.sensitive_path, to_json(*res.qstar));
    emit_plot_data(*res.qstar, in.data, m.plot_path);
    out << "sensitive: " << m.sensitive_path << "\n";
    out << "plot: " << m.plot_path << "\n";
  }
  out << "report: " << m.report_path << "\n";
  return status_code(res.report.status);
}

std::vector<std::size_t> parse_features(const std::string& text, const Dataset& data) {
  std::vector<std::size_t> out;
  if (text.empty()) return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    bool matched = false;
    for (std::size_t j = 0; j < data.dimension(); ++j) {
      if (data.feature_names()[j] == item) {
        out.push_back(j);
        matched = true;
        break;
      }
    }
    if (matched) continue;
    double v = 0.0;
    if (!numeric::parse_double(item, v) || v < 1.0 || v > static_cast<double>(data.dimension()) ||
        v != static_cast<double>(static_cast<std::size_t>(v))) {
      throw InputError{"--features: '" + item + "' is neither a column name nor an index in 1.." +
                       std::to_string(data.dimension())};
    }
    out.push_back(static_cast<std::size_t>(v) - 1);
  }
  return out;
}

int cmd_feature_rank(const Options& o, std::ostream& out) {
  const Loaded in = load(o);
  const std::vector<std::size_t> features = parse_features(o.features, in.data);
  const FeatureStabilityReport rep = feature_stability(in.data, in.model, in.config, features);
  const std::string path = join(o.out_dir, "features.json");
  write_text_file(path, to_json(rep));
  RunManifest m = manifest("feature-rank", o, in.config);
  m.report_path = path;
  write_text_file(join(o.out_dir, "manifest.json"), to_json(m));
  for (std::size_t j : rep.ranking) {
    for (const auto& f : rep.per_feature) {
      if (f.index == j) out << f.name << ": " << f.criterion.to_string() << " (" << to_string(f.status) << ")\n";
    }
  }
  out << "report: " << path << "\n";
  return kOk;
}

int cmd_export_conic(const Options& o, std::ostream& out) {
  const Loaded in = load(o);
  const auto* pw = in.model.get_if<PiecewiseLinearModel>();
  if (pw == nullptr) throw InputError{"--model: export-conic needs a piecewise_linear model"};
  if (in.config.loss_kind != LossKind::PiecewiseLinear) throw InputError{"--loss: export-conic needs --loss pw or auto"};
  ConicProgram program = [&] {
    try {
      return in.config.phi == Phi::KL ? assemble_kl_program(in.data, *pw, in.config)
                                      : assemble_chi2_program(in.data, *pw, in.config);
    } catch (const Error& e) {
      throw InputError{std::string("--theta1/--theta2: ") + e.what()};
    }
  }();
  const std::string path = join(o.out_dir, "conic.json");
  write_text_file(path, to_json(program));
  out << "program: " << path << " (" << program.variables.size() << " variables, " << program.pieces.size()
      << " piece rows, " << program.expcone.size() << " cone triples)\n";

  const ValidatedConfig vc = validate_config(in.config, in.data, in.model);
  const DualSolution dual = solve_dual(in.data, vc);
  if (dual.status == SolveStatus::ThresholdUnreachable) {
    out << "certificate: none (threshold unreachable)\n";
    return kThresholdUnreachable;
  }
  const auto cert = in.config.phi == Phi::KL ? kl_certificate(in.data, *pw, in.config, dual)
                                             : chi2_certificate(in.data, *pw, in.config, dual);
  const FeasibilityReport fr = check_feasibility(program, cert);
  out << "certificate: max violation " << numeric::shortest(fr.max_violation) << " at " << fr.worst_row
      << ", objective " << numeric::shortest(fr.objective) << ", criterion "
      << dual.criterion().to_string() << "\n";
  return status_code(dual.status);
}

int cmd_toy(const Options& o, std::ostream& out) {
  const Dataset data = generate_toy(o.seed, o.n_per_class);
  const LogisticModel model = fit_logistic(data);
  const std::string data_path = join(o.out_dir, "data.csv");
  const std::string model_path = join(o.out_dir, "model.json");
  write_dataset(data, data_path, o.label);
  write_model(LossModel(model), model_path);
  out << "data: " << data_path << "\n";
  out << "model: " << model_path << "\n";
  return kOk;
}

void add_eval_flags(CLI::App* sub, Options& o) {
  sub->add_option("--data", o.data, "CSV dataset with a header row")->required();
  sub->add_option("--model", o.model, "model JSON")->required();
  sub->add_option("--label", o.label, "label column name");
  sub->add_option("--phi", o.phi, "divergence")->check(CLI::IsMember({"kl", "chi2"}));
  sub->add_option("--theta1", o.theta1, "sample-transport price (positive real or inf)")->required();
  sub->add_option("--theta2", o.theta2, "reweighting price (positive real or inf)")->required();
  sub->add_option("--budget-c", o.budget_c, "require 1/theta1 + 1/theta2 = C");
  sub->add_option("--r", o.r, "risk threshold")->required();
  sub->add_option("--loss", o.loss, "loss class")->check(CLI::IsMember({"auto", "pw", "01", "smooth"}));
  sub->add_option("--seed", o.seed, "seed recorded in the run manifest");
  sub->add_option("--out-dir", o.out_dir, "output directory");
  sub->add_option("--threads", o.threads, "worker threads for per-sample work")->check(CLI::PositiveNumber);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stability evaluation under joint sample and weight perturbations", "stabeval"};
  app.require_subcommand(1);
  Options o;

  std::vector<std::pair<std::string, CLI::App*>> subs;
  for (const char* name : {"evaluate", "sensitive", "decompose", "feature-rank", "export-conic"}) {
    CLI::App* sub = app.add_subcommand(name);
    add_eval_flags(sub, o);
    subs.emplace_back(name, sub);
  }
  subs[0].second->description("print the criterion and write report.json");
  subs[1].second->description("also write the sensitive distribution and plot data");
  subs[2].second->description("print the excess-risk decomposition");
  subs[3].second->description("rank features by single-coordinate criterion");
  subs[3].second->add_option("--features", o.features, "comma list of 1-based indices or column names");
  subs[4].second->description("write the finite convex program and check the dual certificate");

  CLI::App* toy = app.add_subcommand("toy", "write a two-Gaussian dataset and a fitted logistic model");
  toy->add_option("--seed", o.seed, "sampling seed");
  toy->add_option("--out-dir", o.out_dir, "output directory")->required();
  toy->add_option("--n-per-class", o.n_per_class, "samples per class")->check(CLI::PositiveNumber);
  toy->add_option("--label", o.label, "label column name");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (toy->parsed()) return cmd_toy(o, out);
    for (const auto& [name, sub] : subs) {
      if (!sub->parsed()) continue;
      if (name == "feature-rank") return cmd_feature_rank(o, out);
      if (name == "export-conic") return cmd_export_conic(o, out);
      return cmd_evaluate(name, o, out);
    }
  } catch (const InputError& e) {
    err << "error: " << e.message << "\n";
    return kInputError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::ThresholdUnreachable: return kThresholdUnreachable;
      case ErrorCode::NonConvergence: return kNonConvergence;
      default: return kInputError;
    }
  }
  return kInputError;
}

}  // namespace stabeval::cli
