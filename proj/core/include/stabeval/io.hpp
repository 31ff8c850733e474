#pragma once

#include <string>
#include <string_view>

#include "stabeval/core.hpp"
#include "stabeval/models.hpp"

namespace stabeval {

/// CSV with a header row. Every column except `label_column` becomes a
/// feature, in header order. Labels in {0, 1} or {-1, +1}; 0 maps to -1.
Dataset load_dataset(const std::string& path, const std::string& label_column = "y");
Dataset parse_dataset_csv(std::string_view text, const std::string& label_column = "y",
                          const std::string& source = "<memory>");

/// Labels are written as 0/1 in the last column.
std::string dataset_to_csv(const Dataset& data, const std::string& label_column = "y");
void write_dataset(const Dataset& data, const std::string& path, const std::string& label_column = "y");

/// Model JSON: {"kind": "piecewise_linear" | "linear_classifier_01" |
/// "logistic" | "mlp", ...parameters}.
LossModel load_model(const std::string& path);
LossModel parse_model_json(std::string_view text);
std::string model_to_json(const LossModel& model);
void write_model(const LossModel& model, const std::string& path);

/// Columns x1_orig, x2_orig, x1_pert, x2_pert (only when d = 2), then
/// label, weight, transport_cost. Split samples report their primary point
/// and the share-weighted cost.
std::string plot_data_csv(const SensitiveDistribution& qstar, const Dataset& data);
void emit_plot_data(const SensitiveDistribution& qstar, const Dataset& data, const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

}  // namespace stabeval
