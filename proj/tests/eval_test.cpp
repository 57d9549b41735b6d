#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "sik/eval.hpp"
#include "sik/io.hpp"

namespace {

using sik::Method;

double variance(const std::vector<double>& xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double v = 0.0;
  for (double x : xs) v += (x - mean) * (x - mean);
  return v / static_cast<double>(xs.size());
}

TEST(AurocTest, Examples) {
  const std::vector<double> perfect = {0.1, 0.2, 0.9, 0.95};
  const std::vector<std::uint8_t> labels = {0, 0, 1, 1};
  EXPECT_EQ(sik::auroc(perfect, labels), 1.0);

  const std::vector<double> flat = {0.3, 0.3, 0.3, 0.3};
  EXPECT_EQ(sik::auroc(flat, labels), 0.5);

  // Pairs (anomaly, normal): (0.35, 0.1) win, (0.35, 0.4) loss,
  // (0.8, 0.1) win, (0.8, 0.4) win -> 3 of 4.
  const std::vector<double> mixed = {0.1, 0.4, 0.35, 0.8};
  EXPECT_EQ(sik_test::brute_auroc(mixed, labels), 0.75);
  EXPECT_EQ(sik::auroc(mixed, labels), 0.75);
}

TEST(AurocTest, Errors) {
  const std::vector<double> s = {0.1, 0.2};
  const std::vector<std::uint8_t> one_class = {1, 1};
  EXPECT_THROW(sik::auroc(s, one_class), sik::UndefinedMetric);
  const std::vector<std::uint8_t> short_labels = {1};
  EXPECT_THROW(sik::auroc(s, short_labels), sik::ShapeError);
  const std::vector<double> nan_scores = {0.1, std::nan("")};
  const std::vector<std::uint8_t> both = {0, 1};
  EXPECT_THROW(sik::auroc(nan_scores, both), sik::ParameterError);
}

struct RandomCase {
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
};

RandomCase random_case(std::mt19937_64& rng, std::size_t n) {
  RandomCase c;
  std::uniform_int_distribution<int> coarse(0, 9);  // forces ties
  std::normal_distribution<double> fine(0.0, 1.0);
  const bool tied = rng() % 2 == 0;
  for (std::size_t i = 0; i < n; ++i) {
    c.scores.push_back(tied ? coarse(rng) * 0.1 : fine(rng));
    c.labels.push_back(static_cast<std::uint8_t>(rng() % 3 == 0));
  }
  c.labels[0] = 0;
  c.labels[1] = 1;
  return c;
}

TEST(AurocTest, MatchesPairEnumerationAndTransforms) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const auto c = random_case(rng, 2 + rng() % 199);
    const double a = sik::auroc(c.scores, c.labels);
    ASSERT_NEAR(a, sik_test::brute_auroc(c.scores, c.labels), 1e-12);

    std::vector<double> affine, cubed, negated;
    for (double s : c.scores) {
      affine.push_back(2.0 * s + 1.0);
      cubed.push_back(s * s * s);
      negated.push_back(-s);
    }
    ASSERT_NEAR(sik::auroc(affine, c.labels), a, 1e-12);
    ASSERT_NEAR(sik::auroc(cubed, c.labels), a, 1e-12);
    ASSERT_NEAR(a + sik::auroc(negated, c.labels), 1.0, 1e-12);
  }
}

TEST(GenBlobsTest, ParameterErrors) {
  EXPECT_THROW(sik::gen_blobs_with_outliers(500, 0, 8, 10, 1), sik::ParameterError);
  EXPECT_THROW(sik::gen_blobs_with_outliers(0, 5, 8, 10, 1), sik::ParameterError);
  EXPECT_THROW(sik::gen_blobs_with_outliers(5, 5, 0, 10, 1), sik::ParameterError);
  EXPECT_THROW(sik::gen_blobs_with_outliers(5, 5, 2, 0.0, 1), sik::ParameterError);
  EXPECT_THROW(sik::gen_blobs_with_outliers(5, 5, 2, -1.0, 1), sik::ParameterError);
}

TEST(GenBlobsTest, AnomaliesLieBeyondAllNormals) {
  const auto data = sik::gen_blobs_with_outliers(500, 25, 8, 10.0, 1);
  ASSERT_EQ(data.embeddings.rows(), 525u);
  ASSERT_EQ(data.anomaly_count(), 25u);
  const std::vector<double> origin(8, 0.0);
  double max_normal = 0.0, min_anomaly = INFINITY;
  for (std::size_t i = 0; i < 525; ++i) {
    const double r = sik_test::plain_distance(data.embeddings.row(i), origin);
    if (data.labels[i]) {
      min_anomaly = std::min(min_anomaly, r);
    } else {
      max_normal = std::max(max_normal, r);
    }
  }
  EXPECT_GE(min_anomaly, 10.0 * std::sqrt(8.0) * (1 - 1e-12));
  EXPECT_GT(min_anomaly, max_normal);
}

TEST(GenBlobsTest, DeterministicBytesAndDefaultSplit) {
  const auto a = sik::gen_blobs_with_outliers(300, 20, 5, 3.0, 9);
  const auto b = sik::gen_blobs_with_outliers(300, 20, 5, 3.0, 9);
  EXPECT_EQ(sik::encode_dataset(a), sik::encode_dataset(b));
  EXPECT_EQ(a.embeddings, b.embeddings);
  EXPECT_NE(a.embeddings, sik::gen_blobs_with_outliers(300, 20, 5, 3.0, 10).embeddings);
  ASSERT_TRUE(a.split.has_value());
  EXPECT_EQ(*a.split, sik::default_split(a));
  EXPECT_EQ(a.split->train.size(), 180u);
  for (auto i : a.split->train) EXPECT_EQ(a.labels[i], 0);
  EXPECT_EQ(a.split->test.size(), 140u);
}

TEST(RunDetectorTest, SeparatedBlobsAreDetected) {
  const auto data = sik::gen_blobs_with_outliers(500, 25, 8, 10.0, 1);
  const auto sik_report = sik::run_detector(data, Method::kSik, 32, 200, 0);
  EXPECT_GE(sik_report.auroc, 0.99);

  // Oracle: every test anomaly is outside every sphere by brute force.
  const auto train = data.embeddings.select_rows(data.split->train);
  const auto e = sik::fit_ensemble(train, 32, 200, 0);
  for (auto i : data.split->test) {
    if (!data.labels[i]) continue;
    for (const auto& p : e.partitionings()) {
      std::vector<std::vector<double>> centers;
      for (std::size_t j = 0; j < p.psi(); ++j) centers.emplace_back(p.center(j).begin(), p.center(j).end());
      ASSERT_EQ(sik_test::brute_locate(centers, p.radii(), data.embeddings.row(i)), -1);
    }
  }

  const auto ik_report = sik::run_detector(data, Method::kIk, 32, 200, 0);
  EXPECT_EQ(ik_report.auroc, sik_report.auroc);

  const std::size_t n_test = data.split->test.size();
  EXPECT_EQ(sik_report.feature_bytes, n_test * 25);  // ceil(200/8)
  EXPECT_EQ(ik_report.feature_bytes, n_test * 32 * 200 / 8);
  EXPECT_EQ(ik_report.feature_bytes / sik_report.feature_bytes, 32u);

  const auto idk_report = sik::run_detector(data, Method::kIdk, 32, 200, 0);
  EXPECT_GE(idk_report.auroc, 0.0);
  EXPECT_LE(idk_report.auroc, 1.0);
  EXPECT_GE(idk_report.fit_seconds, 0.0);
  EXPECT_GE(idk_report.score_seconds, 0.0);
}

TEST(RunDetectorTest, DeterministicReports) {
  const auto data = sik::gen_blobs_with_outliers(300, 30, 4, 1.5, 3);
  for (auto m : {Method::kSik, Method::kIk, Method::kIdk}) {
    const auto a = sik::run_detector(data, m, 16, 50, 5);
    const auto b = sik::run_detector(data, m, 16, 50, 5);
    EXPECT_EQ(a.auroc, b.auroc);
    EXPECT_EQ(a.feature_bytes, b.feature_bytes);
  }
  const auto seeds = sik::default_seeds();
  EXPECT_EQ(sik::evaluate(data, Method::kSik, 16, 50, seeds).auroc,
            sik::evaluate(data, Method::kSik, 16, 50, seeds).auroc);
}

TEST(RunDetectorTest, RequiresLabelsAndEnoughTrainingPoints) {
  auto data = sik::gen_blobs_with_outliers(50, 5, 3, 5.0, 3);
  EXPECT_THROW(sik::run_detector(data, Method::kSik, 31, 10, 0), sik::InvalidHyperparameter);
  data.labels.clear();
  data.split.reset();
  EXPECT_THROW(sik::run_detector(data, Method::kSik, 8, 10, 0), sik::ParameterError);
}

TEST(ContaminationTest, RatioZeroEqualsCleanRun) {
  const auto data = sik::gen_blobs_with_outliers(500, 25, 8, 10.0, 1);
  const std::vector<double> ratios = {0.0};
  const std::vector<std::uint64_t> seeds = {3};
  const auto sweep = sik::contamination_sweep(data, ratios, Method::kSik, 32, 200, seeds);
  const auto clean = sik::run_detector(data, Method::kSik, 32, 200, 3);
  ASSERT_EQ(sweep.size(), 1u);
  EXPECT_EQ(sweep[0].auroc, clean.auroc);
  EXPECT_EQ(sweep[0].feature_bytes, clean.feature_bytes);
  EXPECT_GE(sweep[0].auroc, 0.99);
}

TEST(ContaminationTest, SweepOrderAndDirection) {
  const auto data = sik::gen_blobs_with_outliers(500, 25, 8, 10.0, 1);
  const std::vector<double> ratios = {0.01, 0.02, 0.03, 0.04, 0.05};
  const auto seeds = sik::default_seeds();
  const auto reports = sik::contamination_sweep(data, ratios, Method::kSik, 32, 200, seeds);
  ASSERT_EQ(reports.size(), 5u);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(reports[k].contamination, ratios[k]);
  const std::vector<double> zero = {0.0};
  const auto clean = sik::contamination_sweep(data, zero, Method::kSik, 32, 200, seeds);
  EXPECT_LE(reports.back().auroc, clean[0].auroc + 0.02);
}

TEST(ContaminationTest, Errors) {
  const auto data = sik::gen_blobs_with_outliers(500, 10, 4, 10.0, 1);
  const auto seeds = sik::default_seeds();
  const std::vector<double> too_many = {0.05};  // needs 16 of 10 anomalies
  EXPECT_THROW(sik::contamination_sweep(data, too_many, Method::kSik, 16, 20, seeds),
               sik::ParameterError);
  const std::vector<double> bad = {0.5};
  EXPECT_THROW(sik::contamination_sweep(data, bad, Method::kSik, 16, 20, seeds),
               sik::ParameterError);
  EXPECT_EQ(sik::contamination_count(0.05, 300), 16u);
  EXPECT_EQ(sik::contamination_count(0.0, 300), 0u);
}

TEST(SensitivityTest, GridSizesAndDegeneratePsi) {
  const auto data = sik::gen_blobs_with_outliers(200, 20, 4, 2.0, 4);
  const std::vector<std::size_t> psi_grid = {2, 4, 8, 16, 32};
  const std::vector<std::size_t> t_grid = {10, 20, 30, 40, 50};
  const std::vector<std::uint64_t> seeds = {0, 1};
  const auto reports = sik::sensitivity_sweep(data, psi_grid, t_grid, 8, 20, seeds);
  ASSERT_EQ(reports.size(), 10u);
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_EQ(reports[k].psi, psi_grid[k]);
    EXPECT_EQ(reports[k].t, 20u);
    EXPECT_EQ(reports[5 + k].psi, 8u);
    EXPECT_EQ(reports[5 + k].t, t_grid[k]);
  }
  const std::size_t n_train = data.split->train.size();
  const std::vector<std::size_t> full = {n_train};
  EXPECT_NO_THROW(sik::sensitivity_sweep(data, full, {}, 8, 20, seeds));
}

// Anomalies in a shell just outside a tight cluster: boundary granularity
// (psi) moves AUROC far more than the ensemble size (t).
TEST(SensitivityTest, LessSensitiveToTThanPsi) {
  const auto data = sik::gen_blobs_with_outliers(1000, 60, 4, 1.1, 8);
  const std::vector<std::size_t> psi_grid = {16, 32, 64, 128, 256};
  const std::vector<std::size_t> t_grid = {100, 200, 300, 400, 500};
  const auto seeds = sik::default_seeds();
  const auto reports = sik::sensitivity_sweep(data, psi_grid, t_grid, 16, 200, seeds);
  std::vector<double> by_psi, by_t;
  for (std::size_t k = 0; k < 5; ++k) {
    by_psi.push_back(reports[k].auroc);
    by_t.push_back(reports[5 + k].auroc);
  }
  EXPECT_LT(variance(by_t), variance(by_psi));
}

TEST(BenchScalingTest, RowsAndStructure) {
  const std::vector<std::size_t> sizes = {200, 400, 800};
  const auto rows = sik::bench_scaling(16, sizes, 32, 40, 1);
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(rows[k].n, sizes[k]);
    EXPECT_EQ(rows[k].sik_feature_bytes, sizes[k] * 5);
    EXPECT_EQ(rows[k].ik_dense_feature_bytes / rows[k].sik_feature_bytes, 32u);
    EXPECT_GE(rows[k].sik_fit_seconds, 0.0);
    EXPECT_GT(rows[k].idk_fit_seconds, rows[k].sik_fit_seconds);
  }
  const std::vector<std::size_t> unsorted = {400, 200};
  EXPECT_THROW(sik::bench_scaling(16, unsorted, 32, 40, 1), sik::ParameterError);
}

TEST(MethodTest, ParseAndPrint) {
  for (auto m : {Method::kSik, Method::kIk, Method::kIdk}) {
    EXPECT_EQ(sik::parse_method(sik::to_string(m)), m);
  }
  EXPECT_THROW(sik::parse_method("lof"), sik::ParameterError);
}

}  // namespace
