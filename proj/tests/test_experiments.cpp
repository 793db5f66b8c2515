#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "gpcmc/experiments.hpp"

using namespace gpcmc;
using namespace gpcmc::experiments;

TEST_CASE("problem generation: sizes, class split, determinism") {
  SyntheticProblemSpec spec;
  spec.n_train = 11;
  spec.n_test = 4;
  spec.mu1 = -2.0;
  spec.mu2 = 2.0;
  spec.sd1 = 0.1;
  spec.sd2 = 0.1;
  spec.seed = 5;
  const GeneratedProblem a = generate_problem(spec);
  CHECK(a.train.features.rows() == 11);
  CHECK(a.test_features.rows() == 4);
  // remainder of an odd count goes to class 1
  CHECK((a.train.labels.array() > 0).count() == 6);
  for (int i = 0; i < 6; ++i) CHECK(a.train.features(i, 0) < 0.0);
  for (int i = 6; i < 11; ++i) CHECK(a.train.features(i, 0) > 0.0);

  const GeneratedProblem b = generate_problem(spec);
  CHECK((a.train.features - b.train.features).cwiseAbs().maxCoeff() == 0.0);
  spec.seed = 6;
  const GeneratedProblem c = generate_problem(spec);
  CHECK((a.train.features - c.train.features).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("summarize computes the mean and the standard error") {
  const MetricReport r = summarize(Metric::MaePosterior, {1.0, 2.0, 3.0, 4.0});
  CHECK(r.value == 2.5);
  // sample sd = sqrt(5/3), se = sd/2
  CHECK(r.std_error == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0).epsilon(1e-12));
  CHECK(r.runs == 4);
  const MetricReport single = summarize(Metric::MaePosterior, {0.7});
  CHECK(single.value == 0.7);
  CHECK(single.std_error == 0.0);
}

TEST_CASE("rank-one benchmark: errors are finite, nonnegative, and shrink with M") {
  const auto cells = run_experiment1({12}, {2'000, 200'000}, 6, 77);
  REQUIRE(cells.size() == 2);
  for (const auto& cell : cells) {
    CHECK(cell.failures == 0);
    CHECK(cell.report.runs == 6);
    CHECK(cell.report.value >= 0.0);
    CHECK(cell.report.std_error >= 0.0);
    CHECK(std::isfinite(cell.report.value));
  }
  // 100x more samples must not significantly increase the error
  const auto& coarse = cells[0];
  const auto& fine = cells[1];
  CHECK(fine.report.value - 2.0 * fine.report.std_error <=
        coarse.report.value + 2.0 * coarse.report.std_error);
}

TEST_CASE("rank-one benchmark is deterministic apart from wall-clock times") {
  const auto a = run_experiment1({8}, {3'000}, 4, 123);
  const auto b = run_experiment1({8}, {3'000}, 4, 123);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].report.value == b[i].report.value);
    CHECK(a[i].report.std_error == b[i].report.std_error);
    CHECK(a[i].report.per_run == b[i].report.per_run);
  }
  const auto c = run_experiment1({8}, {3'000}, 4, 124);
  CHECK(a[0].report.value != c[0].report.value);
}

TEST_CASE("classification benchmark produces both tables") {
  SyntheticProblemSpec spec;
  spec.n_train = 24;
  spec.n_test = 8;
  spec.seed = 9;
  const Experiment2Result result = run_experiment2({spec}, {3'000}, 3, 31);
  REQUIRE(result.mae_posterior.size() == 1);
  REQUIRE(result.mape_log_marginal.size() == 1);
  const auto& mae = result.mae_posterior[0];
  const auto& mape = result.mape_log_marginal[0];
  CHECK(mae.report.runs == 3);
  CHECK(mae.report.value >= 0.0);
  CHECK(mae.report.value < 0.1);  // coarse sanity at small M
  CHECK(mape.report.value >= 0.0);
  CHECK(mape.report.value < 5.0);  // percent
  CHECK(mae.failures == 0);
}

TEST_CASE("indistinguishable classes still yield a computable MAE") {
  SyntheticProblemSpec spec;
  spec.n_train = 16;
  spec.n_test = 6;
  spec.mu1 = spec.mu2 = 0.5;
  spec.sd1 = spec.sd2 = 0.3;
  spec.seed = 100;
  const Experiment2Result result = run_experiment2({spec}, {2'000}, 2, 41);
  CHECK(std::isfinite(result.mae_posterior[0].report.value));
  CHECK(result.mae_posterior[0].report.value >= 0.0);
}

TEST_CASE("the standard problem list matches the benchmark definitions") {
  const auto problems = standard_problems(1);
  REQUIRE(problems.size() == 4);
  CHECK(problems[0].n_train == 100);
  CHECK(problems[0].n_test == 50);
  CHECK(problems[3].n_train == 800);
  CHECK(problems[3].n_test == 400);
  CHECK(problems[2].mu2 == 1.5);
  CHECK(problems[1].sd1 == 2.0);
}

TEST_CASE("CSV table emission") {
  const auto cells = run_experiment1({6}, {2'000}, 3, 55);
  std::ostringstream out;
  write_cells_csv(out, cells);
  const std::string text = out.str();
  CHECK(text.rfind("label,dimension,m_samples,metric,value,std_error,runs,seconds\n", 0) == 0);
  CHECK(text.find("N=6,6,2000,mape_log_integral,") != std::string::npos);
  // full-precision scientific notation
  CHECK(text.find("e-") != std::string::npos);
  int lines = 0;
  for (char c : text) lines += c == '\n';
  CHECK(lines == 2);
}
