#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "stabeval/analysis.hpp"
#include "stabeval/conic.hpp"
#include "stabeval/core.hpp"

namespace stabeval {

/// Inputs and outputs of one CLI run. The seed fixes every stochastic
/// choice (toy sampling); solvers are deterministic given their inputs.
struct RunManifest {
  std::string command;
  EvalConfig config;
  std::string dataset_path;
  std::string model_path;
  std::uint64_t seed = 0;
  std::string report_path;
  std::string sensitive_path;
  std::string plot_path;

  friend bool operator==(const RunManifest&, const RunManifest&) = default;
};

// JSON documents. Finite reals are written in shortest round-trip form;
// extended reals (prices, the criterion) are strings, "inf" for the sentinel.
// Parsers throw SchemaError on a missing or mistyped field.

std::string to_json(const EvalConfig& config);
EvalConfig eval_config_from_json(std::string_view text);

std::string to_json(const StabilityReport& report);
StabilityReport stability_report_from_json(std::string_view text);

std::string to_json(const SensitiveDistribution& qstar);
SensitiveDistribution sensitive_distribution_from_json(std::string_view text);

std::string to_json(const FeatureStabilityReport& report);
FeatureStabilityReport feature_stability_from_json(std::string_view text);

/// Numbers are strings with 17 significant digits.
std::string to_json(const ConicProgram& program);
ConicProgram conic_program_from_json(std::string_view text);

std::string to_json(const RunManifest& manifest);
RunManifest run_manifest_from_json(std::string_view text);

}  // namespace stabeval
