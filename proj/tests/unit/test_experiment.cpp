#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "causalreg/errors.hpp"
#include "causalreg/experiment.hpp"
#include "report_schema.hpp"

using namespace causalreg;
using namespace causalreg::experiment;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.benchmark.m = 30;
  c.benchmark.n = 2000;
  c.benchmark.seed = 4;
  c.lambda_grid = glm::log_grid(1e-3, 0.1, 4);
  c.ks = {5, 10};
  return c;
}

const detector::DetectorModel& small_detector() {
  static const detector::DetectorModel model = [] {
    auto c = small_config();
    c.detector_scenarios = 200;
    c.detector_draws = 2000;
    c.detector.hidden = {16};
    c.detector.train.max_epochs = 4;
    c.detector.train.patience = 4;
    return train_config_detector(c);
  }();
  return model;
}

}  // namespace

TEST(RankVariables, ByStandardizedMagnitudeThenIndex) {
  Eigen::VectorXd w(4), sd(4);
  w << 1.0, -2.0, 0.5, 2.0;
  sd << 1.0, 1.0, 4.0, 1.0;
  EXPECT_EQ(rank_variables(w, sd), (std::vector<int>{1, 2, 3, 0}));
}

TEST(SelectLambda, OneStandardErrorRule) {
  const std::vector<double> aucs = {0.80, 0.81, 0.805, 0.70};
  EXPECT_EQ(select_lambda(aucs, LambdaRule::max_auc, 100, 100), 1u);
  const double se = auc_standard_error(0.81, 100, 100);
  ASSERT_GT(se, 0.005);
  EXPECT_EQ(select_lambda(aucs, LambdaRule::one_se, 100, 100), 2u);
}

TEST(AucStandardError, KnownValue) {
  // Hanley-McNeil at A = 0.5, 10 vs 10
  const double q1 = 0.5 / 1.5, q2 = 0.5 / 1.5;
  const double v = (0.25 + 9 * (q1 - 0.25) + 9 * (q2 - 0.25)) / 100.0;
  EXPECT_NEAR(auc_standard_error(0.5, 10, 10), std::sqrt(v), 1e-12);
  EXPECT_THROW(auc_standard_error(0.5, 0, 10), DomainError);
}

TEST(ExperimentConfig, JsonRoundTripAndUnknownKeys) {
  const auto c = small_config();
  const auto back = ExperimentConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  auto j = c.to_json();
  j["lamda_grid"] = {0.1};
  EXPECT_THROW(ExperimentConfig::from_json(j), ConfigError);
  auto bad = c;
  bad.lambda_grid = {0.1, 0.01};
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(RunExperiment, ReportIsCompleteValidAndReproducible) {
  const auto c = small_config();
  const auto a = run_experiment(c, &small_detector());
  const auto b = run_experiment(c, &small_detector());
  ASSERT_TRUE(a.ok());
  ASSERT_EQ(a.methods.size(), 3u);
  for (const char* name : {"LogCause", "LogL1", "TwoStep"}) {
    const auto* m = a.method(name);
    ASSERT_NE(m, nullptr);
    EXPECT_TRUE(m->test_auc.has_value());
    EXPECT_EQ(m->causality_at_k.count(5), 1u);
    EXPECT_EQ(m->path.size(), 4u);
  }
  const std::string ja = a.to_json().dump(), jb = b.to_json().dump();
  EXPECT_EQ(ja, jb);
  EXPECT_TRUE(tools::validate_report(ja).empty());
}

TEST(RunExperiment, FailedStageGivesPartialValidReport) {
  auto c = small_config();
  c.detector_path = "/nonexistent/detector.json";
  const auto r = run_experiment(c);
  EXPECT_FALSE(r.ok());
  bool saw = false;
  for (const auto& s : r.stages)
    if (s.name == "detector") {
      saw = true;
      EXPECT_FALSE(s.ok);
      EXPECT_FALSE(s.error.empty());
    }
  EXPECT_TRUE(saw);
  const auto j = r.to_json();
  EXPECT_FALSE(j["ok"].get<bool>());
  const auto errors = tools::validate_report(j.dump());
  EXPECT_TRUE(errors.empty()) << (errors.empty() ? "" : errors.front());
}

TEST(ReportSchema, RejectsMalformedReports) {
  const auto r = run_experiment(small_config(), &small_detector());
  auto j = r.to_json();
  j["metrics"]["methods"]["LogCause"]["test_auc"] = "high";
  EXPECT_FALSE(tools::validate_report(j.dump()).empty());
  auto k = r.to_json();
  k.erase("schema_version");
  EXPECT_FALSE(tools::validate_report(k.dump()).empty());
  auto n = r.to_json();
  n["metrics"]["spearman_rho"] = {{"value", nullptr}};
  EXPECT_FALSE(tools::validate_report(n.dump()).empty());
  EXPECT_FALSE(tools::validate_report("{not json").empty());
}

TEST(Csv, VariablesAndPathHaveHeaders) {
  const auto r = run_experiment(small_config(), &small_detector());
  const auto dir = std::filesystem::temp_directory_path();
  const auto vp = (dir / "causalreg_vars.csv").string(), pp = (dir / "causalreg_path.csv").string();
  write_variables_csv(vp, r);
  write_path_csv(pp, r);
  std::ifstream v(vp), p(pp);
  std::string hv, hp;
  std::getline(v, hv);
  std::getline(p, hp);
  EXPECT_EQ(hv.rfind("name,role,truth,c,mi", 0), 0u);
  EXPECT_EQ(hp, "method,lambda,valid_auc,test_auc,nonzero");
  std::filesystem::remove(vp);
  std::filesystem::remove(pp);
}
