#include "stabeval/io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "stabeval/error.hpp"
#include "stabeval/numeric.hpp"

namespace stabeval {

using json = nlohmann::ordered_json;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

std::vector<double> number_array(const json& j, const char* field) {
  if (!j.contains(field) || !j[field].is_array()) {
    fail(ErrorCode::SchemaError, std::string("model field '") + field + "' must be an array of numbers");
  }
  std::vector<double> out;
  for (const auto& v : j[field]) {
    if (!v.is_number()) fail(ErrorCode::SchemaError, std::string("model field '") + field + "' must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

double number(const json& j, const char* field) {
  if (!j.contains(field) || !j[field].is_number()) {
    fail(ErrorCode::SchemaError, std::string("model field '") + field + "' must be a number");
  }
  return j[field].get<double>();
}

std::size_t count(const json& j, const char* field) {
  if (!j.contains(field) || !j[field].is_number_unsigned()) {
    fail(ErrorCode::SchemaError, std::string("model field '") + field + "' must be a positive integer");
  }
  return j[field].get<std::size_t>();
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, std::string_view content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot open '" + path + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) fail(ErrorCode::IoError, "failed writing '" + path + "'");
}

Dataset parse_dataset_csv(std::string_view text, const std::string& label_column, const std::string& source) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!trim(line).empty()) lines.push_back(line);
    start = end + 1;
  }
  if (lines.empty()) fail(ErrorCode::ParseError, source + ": missing header row");

  const std::vector<std::string_view> header = split(lines[0]);
  std::size_t label_idx = header.size();
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c].empty()) fail(ErrorCode::ParseError, source + ": empty column name at column " + std::to_string(c + 1));
    if (header[c] == label_column) label_idx = c;
  }
  if (label_idx == header.size()) {
    fail(ErrorCode::ParseError, source + ": label column '" + label_column + "' not found in header");
  }
  if (lines.size() == 1) fail(ErrorCode::ParseError, source + ": no samples");

  std::vector<std::string> names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != label_idx) names.emplace_back(header[c]);
  }
  const std::size_t n = lines.size() - 1;
  const std::size_t d = names.size();
  if (d == 0) fail(ErrorCode::ParseError, source + ": no feature columns");
  Matrix x(n, d);
  std::vector<double> raw_labels(n);
  bool has_zero = false, has_minus = false;
  for (std::size_t r = 0; r < n; ++r) {
    const std::vector<std::string_view> cells = split(lines[r + 1]);
    const std::string where = source + ": row " + std::to_string(r + 1);
    if (cells.size() != header.size()) {
      fail(ErrorCode::ParseError, where + " has " + std::to_string(cells.size()) + " cells, header has " +
                                      std::to_string(header.size()));
    }
    std::size_t j = 0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v = 0.0;
      if (cells[c].empty() || !numeric::parse_double(cells[c], v) || !std::isfinite(v)) {
        fail(ErrorCode::ParseError, where + ", column " + std::to_string(c + 1) + " ('" +
                                        std::string(header[c]) + "'): cannot parse '" +
                                        std::string(cells[c]) + "' as a number");
      }
      if (c == label_idx) {
        raw_labels[r] = v;
      } else {
        x(r, j++) = v;
      }
    }
    const double y = raw_labels[r];
    if (y != 0.0 && y != 1.0 && y != -1.0) {
      fail(ErrorCode::LabelDomainError, where + ": label " + numeric::shortest(y) + " is not in {0,1} or {-1,+1}");
    }
    has_zero = has_zero || y == 0.0;
    has_minus = has_minus || y == -1.0;
  }
  if (has_zero && has_minus) {
    fail(ErrorCode::LabelDomainError, source + ": labels mix the {0,1} and {-1,+1} encodings");
  }
  std::vector<int> labels(n);
  for (std::size_t r = 0; r < n; ++r) labels[r] = raw_labels[r] == 1.0 ? 1 : -1;
  return Dataset(std::move(x), std::move(labels), std::move(names));
}

Dataset load_dataset(const std::string& path, const std::string& label_column) {
  return parse_dataset_csv(read_text_file(path), label_column, path);
}

std::string dataset_to_csv(const Dataset& data, const std::string& label_column) {
  std::string out;
  for (const auto& name : data.feature_names()) {
    if (name == label_column) fail(ErrorCode::InvalidArgument, "feature name collides with label column");
    out += name;
    out += ',';
  }
  out += label_column;
  out += '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.features().row(i)) {
      out += numeric::shortest(v);
      out += ',';
    }
    out += data.labels()[i] == 1 ? "1\n" : "0\n";
  }
  return out;
}

void write_dataset(const Dataset& data, const std::string& path, const std::string& label_column) {
  write_text_file(path, dataset_to_csv(data, label_column));
}

LossModel parse_model_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::SchemaError, std::string("model is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    fail(ErrorCode::SchemaError, "model JSON needs a string field 'kind'");
  }
  const std::string kind = j["kind"].get<std::string>();
  try {
    if (kind == "piecewise_linear") {
      if (!j.contains("slopes") || !j["slopes"].is_array()) {
        fail(ErrorCode::SchemaError, "model field 'slopes' must be an array of arrays");
      }
      std::vector<std::vector<double>> slopes;
      for (const auto& row : j["slopes"]) {
        json wrapper = {{"row", row}};
        slopes.push_back(number_array(wrapper, "row"));
      }
      return LossModel(PiecewiseLinearModel(std::move(slopes), number_array(j, "intercepts")));
    }
    if (kind == "linear_classifier_01") {
      return LossModel(LinearClassifier(number_array(j, "weights"), number(j, "bias")));
    }
    if (kind == "logistic") {
      return LossModel(LogisticModel(number_array(j, "weights"), number(j, "bias")));
    }
    if (kind == "mlp") {
      const std::size_t hidden = count(j, "hidden");
      const std::size_t input = count(j, "input");
      if (!j.contains("activation") || !j["activation"].is_string()) {
        fail(ErrorCode::SchemaError, "model field 'activation' must be \"relu\" or \"tanh\"");
      }
      const std::string act = j["activation"].get<std::string>();
      if (act != "relu" && act != "tanh") {
        fail(ErrorCode::SchemaError, "model field 'activation' must be \"relu\" or \"tanh\"");
      }
      if (!j.contains("w1") || !j["w1"].is_array()) {
        fail(ErrorCode::SchemaError, "model field 'w1' must be an array of hidden rows");
      }
      std::vector<double> w1;
      for (const auto& row : j["w1"]) {
        json wrapper = {{"row", row}};
        const std::vector<double> r = number_array(wrapper, "row");
        w1.insert(w1.end(), r.begin(), r.end());
      }
      return LossModel(MlpModel(hidden, input, std::move(w1), number_array(j, "b1"), number_array(j, "w2"),
                                number(j, "b2"), act == "relu" ? Activation::ReLU : Activation::Tanh));
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SchemaError) throw;
    fail(ErrorCode::SchemaError, std::string("invalid ") + kind + " model: " + e.what());
  }
  fail(ErrorCode::SchemaError, "unknown model kind '" + kind + "'");
}

LossModel load_model(const std::string& path) {
  try {
    return parse_model_json(read_text_file(path));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SchemaError) throw;
    fail(ErrorCode::SchemaError, path + ": " + e.what());
  }
}

std::string model_to_json(const LossModel& model) {
  json j;
  if (const auto* m = model.get_if<PiecewiseLinearModel>()) {
    j["kind"] = "piecewise_linear";
    j["slopes"] = m->slopes;
    j["intercepts"] = m->intercepts;
  } else if (const auto* m = model.get_if<LinearClassifier>()) {
    j["kind"] = "linear_classifier_01";
    j["weights"] = m->weights;
    j["bias"] = m->bias;
  } else if (const auto* m = model.get_if<LogisticModel>()) {
    j["kind"] = "logistic";
    j["weights"] = m->weights;
    j["bias"] = m->bias;
  } else if (const auto* m = model.get_if<MlpModel>()) {
    j["kind"] = "mlp";
    j["hidden"] = m->hidden;
    j["input"] = m->input;
    j["activation"] = m->activation == Activation::ReLU ? "relu" : "tanh";
    json rows = json::array();
    for (std::size_t u = 0; u < m->hidden; ++u) {
      rows.push_back(std::vector<double>(m->w1.begin() + static_cast<std::ptrdiff_t>(u * m->input),
                                         m->w1.begin() + static_cast<std::ptrdiff_t>((u + 1) * m->input)));
    }
    j["w1"] = rows;
    j["b1"] = m->b1;
    j["w2"] = m->w2;
    j["b2"] = m->b2;
  }
  return j.dump(2) + "\n";
}

void write_model(const LossModel& model, const std::string& path) { write_text_file(path, model_to_json(model)); }

std::string plot_data_csv(const SensitiveDistribution& q, const Dataset& data) {
  if (q.size() != data.size() || q.points().cols() != data.dimension()) {
    fail(ErrorCode::DimensionMismatch, "Q* does not match the dataset");
  }
  const bool coords = data.dimension() == 2;
  std::string out = coords ? "x1_orig,x2_orig,x1_pert,x2_pert,label,weight,transport_cost\n"
                           : "label,weight,transport_cost\n";
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (coords) {
      const auto x = data.features().row(i);
      const auto z = q.points().row(i);
      out += numeric::shortest(x[0]) + "," + numeric::shortest(x[1]) + "," + numeric::shortest(z[0]) + "," +
             numeric::shortest(z[1]) + ",";
    }
    const double s = q.primary_share()[i];
    const double cost = s >= 1.0 ? q.transport_costs()[i]
                                 : s * q.transport_costs()[i] + (1.0 - s) * q.alternate_costs()[i];
    out += std::to_string(q.labels()[i]) + "," + numeric::shortest(q.weights()[i]) + "," +
           numeric::shortest(cost) + "\n";
  }
  return out;
}

void emit_plot_data(const SensitiveDistribution& qstar, const Dataset& data, const std::string& path) {
  write_text_file(path, plot_data_csv(qstar, data));
}

}  // namespace stabeval
