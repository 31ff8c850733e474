#include <gtest/gtest.h>

#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "fixtures.hpp"
#include "stabeval/io.hpp"
#include "stabeval/serialize.hpp"

using namespace stabeval;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "stabeval");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const CliResult toy = run({"toy", "--seed", "0", "--out-dir", dir.file("t0")});
    ASSERT_EQ(toy.code, cli::kOk) << toy.err;
    data = dir.file("t0/data.csv");
    model = dir.file("t0/model.json");
  }

  std::vector<std::string> eval_args(const std::string& cmd, const std::string& out, std::vector<std::string> extra) {
    std::vector<std::string> a{cmd, "--data", data, "--model", model, "--out-dir", dir.file(out)};
    a.insert(a.end(), extra.begin(), extra.end());
    return a;
  }

  fixtures::TempDir dir;
  std::string data;
  std::string model;
};

}  // namespace

TEST_F(CliTest, ToyWritesLoadableFiles) {
  EXPECT_EQ(load_dataset(data), fixtures::toy_data());
  EXPECT_EQ(load_model(model), LossModel(fixtures::toy_logistic()));
}

TEST_F(CliTest, EvaluateCrossEntropy) {
  const CliResult r =
      run(eval_args("evaluate", "e", {"--phi", "kl", "--theta1", "0.4", "--theta2", "0.4", "--r", "0.5"}));
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const StabilityReport rep = stability_report_from_json(read_text_file(dir.file("e/report.json")));
  EXPECT_GT(rep.criterion_value.value(), 0.0);
  EXPECT_EQ(rep.status, SolveStatus::Converged);
  const RunManifest m = run_manifest_from_json(read_text_file(dir.file("e/manifest.json")));
  EXPECT_EQ(m.command, "evaluate");
  EXPECT_EQ(m.dataset_path, data);
}

TEST_F(CliTest, BelowBaselineAndUnreachable) {
  const CliResult low = run(eval_args("evaluate", "b", {"--theta1", "0.4", "--theta2", "0.4", "--r", "0.0001"}));
  ASSERT_EQ(low.code, cli::kOk) << low.err;
  const StabilityReport rep = stability_report_from_json(read_text_file(dir.file("b/report.json")));
  EXPECT_EQ(rep.status, SolveStatus::BaselineExceedsThreshold);
  EXPECT_EQ(rep.criterion_value, ExtendedReal(0.0));

  const CliResult high =
      run(eval_args("evaluate", "u", {"--loss", "01", "--theta1", "0.4", "--theta2", "0.4", "--r", "1.5"}));
  EXPECT_EQ(high.code, cli::kThresholdUnreachable);
  EXPECT_TRUE(stability_report_from_json(read_text_file(dir.file("u/report.json"))).criterion_value.is_infinite());
}

TEST_F(CliTest, ErrorsNameTheFlag) {
  CliResult r = run(eval_args("evaluate", "x", {"--theta1", "abc", "--theta2", "0.4", "--r", "0.5"}));
  EXPECT_EQ(r.code, cli::kInputError);
  EXPECT_NE(r.err.find("--theta1"), std::string::npos) << r.err;

  r = run(eval_args("evaluate", "x", {"--theta1", "0.2", "--theta2", "0.4", "--budget-c", "5", "--r", "0.5"}));
  EXPECT_EQ(r.code, cli::kInputError);
  EXPECT_NE(r.err.find("--budget-c"), std::string::npos) << r.err;

  r = run({"evaluate", "--data", dir.file("missing.csv"), "--model", model, "--theta1", "1", "--theta2", "1", "--r",
           "0.5"});
  EXPECT_EQ(r.code, cli::kInputError);
  EXPECT_NE(r.err.find("--data"), std::string::npos) << r.err;

  r = run(eval_args("evaluate", "x", {"--theta1", "1", "--theta2", "1", "--r", "0.5", "--loss", "pw"}));
  EXPECT_EQ(r.code, cli::kInputError);
  EXPECT_NE(r.err.find("--loss"), std::string::npos) << r.err;

  r = run({"evaluate", "--data", data});
  EXPECT_EQ(r.code, cli::kInputError);
  r = run({"frobnicate"});
  EXPECT_EQ(r.code, cli::kInputError);
}

TEST_F(CliTest, SensitiveWritesDistributionAndPlot) {
  const CliResult r = run(eval_args("sensitive", "s", {"--theta1", "inf", "--theta2", "0.2", "--r", "0.5"}));
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const SensitiveDistribution q = sensitive_distribution_from_json(read_text_file(dir.file("s/sensitive.json")));
  EXPECT_EQ(q.size(), 200u);
  EXPECT_EQ(q.points(), fixtures::toy_data().features());
  EXPECT_EQ(read_text_file(dir.file("s/plot.csv")), plot_data_csv(q, fixtures::toy_data()));
}

TEST_F(CliTest, DecomposePrintsParts) {
  const CliResult r = run(eval_args("decompose", "d",
                              {"--theta1", "0.2", "--theta2", "inf", "--budget-c", "5", "--r", "0.5", "--loss", "01"}));
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  EXPECT_NE(r.out.find("delta_II: 0\n"), std::string::npos) << r.out;
  const StabilityReport rep = stability_report_from_json(read_text_file(dir.file("d/report.json")));
  EXPECT_EQ(rep.decomposition.delta_reweighting, 0.0);
}

TEST_F(CliTest, FeatureRank) {
  const CliResult r = run(eval_args("feature-rank", "f",
                              {"--theta1", "1", "--theta2", "1", "--r", "0.3", "--loss", "01", "--features", "x2,1"}));
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const FeatureStabilityReport rep = feature_stability_from_json(read_text_file(dir.file("f/features.json")));
  ASSERT_EQ(rep.per_feature.size(), 2u);
  EXPECT_EQ(rep.per_feature[0].index, 1u);
  EXPECT_EQ(rep.per_feature[1].index, 0u);

  const CliResult bad = run(eval_args("feature-rank", "f",
                                {"--theta1", "1", "--theta2", "1", "--r", "0.3", "--loss", "01", "--features", "7"}));
  EXPECT_EQ(bad.code, cli::kInputError);
  EXPECT_NE(bad.err.find("--features"), std::string::npos);
}

TEST_F(CliTest, ExportConic) {
  const std::string pw = dir.file("pw.json");
  write_text_file(pw, R"({"kind":"piecewise_linear","slopes":[[0,0],[-1,-0.5]],"intercepts":[0,0.5]})");
  for (const char* phi : {"kl", "chi2"}) {
    const CliResult r = run({"export-conic", "--data", data, "--model", pw, "--phi", phi, "--theta1", "0.5", "--theta2",
                       "0.5", "--r", "1.0", "--out-dir", dir.file(std::string("c_") + phi)});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    const ConicProgram p = conic_program_from_json(read_text_file(dir.file(std::string("c_") + phi + "/conic.json")));
    EXPECT_EQ(p.pieces.size(), 400u);
    EXPECT_NE(r.out.find("certificate: max violation"), std::string::npos);
  }
  const CliResult logistic = run(eval_args("export-conic", "c", {"--theta1", "1", "--theta2", "1", "--r", "0.5"}));
  EXPECT_EQ(logistic.code, cli::kInputError);
  const CliResult infinite = run({"export-conic", "--data", data, "--model", pw, "--theta1", "inf", "--theta2", "1", "--r",
                            "1.0", "--out-dir", dir.file("ci")});
  EXPECT_EQ(infinite.code, cli::kInputError);
}

TEST_F(CliTest, RerunsAreByteIdentical) {
  for (const char* threads : {"1", "3"}) {
    const CliResult r = run(eval_args("sensitive", std::string("r") + threads,
                                {"--theta1", "0.4", "--theta2", "0.4", "--r", "0.3", "--loss", "01", "--threads", threads}));
    ASSERT_EQ(r.code, cli::kOk) << r.err;
  }
  const CliResult again = run(eval_args("sensitive", "r1b", {"--theta1", "0.4", "--theta2", "0.4", "--r", "0.3", "--loss",
                                                      "01", "--threads", "1"}));
  ASSERT_EQ(again.code, cli::kOk);
  for (const char* f : {"report.json", "sensitive.json", "plot.csv"}) {
    const std::string a = read_text_file(dir.file(std::string("r1/") + f));
    EXPECT_EQ(a, read_text_file(dir.file(std::string("r1b/") + f))) << f;
    EXPECT_EQ(a, read_text_file(dir.file(std::string("r3/") + f))) << f;
  }
}
