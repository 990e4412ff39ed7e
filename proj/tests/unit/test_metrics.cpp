#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "cedr/eaa.hpp"
#include "cedr/error.hpp"
#include "cedr/metrics.hpp"
#include "cedr/ops.hpp"
#include "json.hpp"
#include "test_support.hpp"

using namespace cedr;
using nn::Matrix;
using cedr::testing::random_labels;
using cedr::testing::random_matrix;

namespace {

std::size_t count_fields(const std::string& line) {
  return static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
}

}  // namespace

TEST(Evaluate, PerfectPredictions) {
  const std::vector<int> y{0, 1, 2, 2, 1};
  const EvalReport r = evaluate(y, y, 3);
  EXPECT_EQ(r.overall_acc, 1.0);
  EXPECT_EQ(r.avg_class_acc, 1.0);
  EXPECT_EQ(r.macro_f1, 1.0);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      if (i != j) EXPECT_EQ(r.confusion[i][j], 0u);
}

TEST(Evaluate, ConstantPredictorIsChance) {
  std::vector<int> y, pred;
  for (int c = 0; c < 8; ++c)
    for (int k = 0; k < 5; ++k) {
      y.push_back(c);
      pred.push_back(3);
    }
  const EvalReport r = evaluate(pred, y, 8);
  EXPECT_DOUBLE_EQ(r.overall_acc, 0.125);
  EXPECT_DOUBLE_EQ(r.avg_class_acc, 0.125);
  EXPECT_EQ(r.per_class_precision[0], 0.0);
  EXPECT_EQ(r.per_class_f1[0], 0.0);
}

TEST(Evaluate, MatchesLoopOracleOnRandomThreeClassCases) {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 3 + rng.below(30);
    auto y = random_labels(rng, n, 3);
    y[0] = 0, y[1] = 1, y[2] = 2;
    const auto pred = random_labels(rng, n, 3);
    const EvalReport r = evaluate(pred, y, 3);
    std::size_t correct = 0;
    double recall_sum = 0.0, f1_sum = 0.0;
    for (int c = 0; c < 3; ++c) {
      std::size_t tp = 0, fp = 0, fn = 0;
      for (std::size_t i = 0; i < n; ++i) {
        tp += y[i] == c && pred[i] == c;
        fp += y[i] != c && pred[i] == c;
        fn += y[i] == c && pred[i] != c;
      }
      const double p = tp + fp ? double(tp) / double(tp + fp) : 0.0;
      const double rc = double(tp) / double(tp + fn);
      const double f1 = p + rc > 0 ? 2 * p * rc / (p + rc) : 0.0;
      EXPECT_NEAR(r.per_class_precision[c], p, 1e-15);
      EXPECT_NEAR(r.per_class_recall[c], rc, 1e-15);
      EXPECT_NEAR(r.per_class_f1[c], f1, 1e-15);
      correct += tp;
      recall_sum += rc;
      f1_sum += f1;
    }
    EXPECT_NEAR(r.overall_acc, double(correct) / double(n), 1e-15);
    EXPECT_NEAR(r.avg_class_acc, recall_sum / 3.0, 1e-15);
    EXPECT_NEAR(r.macro_f1, f1_sum / 3.0, 1e-15);
    std::vector<std::size_t> col(3, 0);
    for (std::size_t i = 0; i < 3; ++i) {
      std::size_t row = 0;
      for (std::size_t j = 0; j < 3; ++j) {
        row += r.confusion[i][j];
        col[j] += r.confusion[i][j];
      }
      EXPECT_EQ(row, r.support[i]);
    }
    for (int c = 0; c < 3; ++c)
      EXPECT_EQ(col[c], static_cast<std::size_t>(std::count(pred.begin(), pred.end(), c)));
  }
}

TEST(Evaluate, AverageClassAccuracyIgnoresRebalancing) {
  // Class 0 recall 1/2, class 1 recall 1. Tripling class 0 keeps recalls.
  const std::vector<int> y1{0, 0, 1}, p1{0, 1, 1};
  const std::vector<int> y2{0, 0, 0, 0, 0, 0, 1}, p2{0, 0, 0, 1, 1, 1, 1};
  const EvalReport a = evaluate(p1, y1, 2), b = evaluate(p2, y2, 2);
  EXPECT_DOUBLE_EQ(a.avg_class_acc, b.avg_class_acc);
  EXPECT_NE(a.overall_acc, b.overall_acc);
}

TEST(Evaluate, ProbabilityOverloadFillsHistogramAndDistances) {
  Rng rng(2);
  const Matrix p = nn::softmax(random_matrix(rng, 12, 4, -3.0, 3.0));
  auto labels = random_labels(rng, 12, 4);
  labels[0] = 0, labels[1] = 1, labels[2] = 2, labels[3] = 3;
  const Matrix z = nn::l2_normalize(random_matrix(rng, 12, 5));
  const EvalReport r = evaluate(p, labels, &z);
  std::size_t total = 0;
  for (auto h : r.entropy_histogram) total += h;
  EXPECT_EQ(r.entropy_histogram.size(), kEntropyBins);
  EXPECT_EQ(total, 12u);
  EXPECT_EQ(r.center_distance_sum.size(), 4u);
}

TEST(EntropyHistogram, EdgesAndTopValue) {
  const std::vector<double> e{0.0, 3.0, 1.5, 0.149, 0.151};
  const auto h = entropy_histogram(e, 8);
  EXPECT_EQ(h.front(), 2u);  // 0 and 0.149 fall in [0, 0.15)
  EXPECT_EQ(h[1], 1u);
  EXPECT_EQ(h[10], 1u);
  EXPECT_EQ(h.back(), 1u);
}

TEST(CenterDistance, IdenticalEmbeddingsGiveZeroMatrix) {
  const Matrix z(6, 3, 0.5);
  const std::vector<int> labels{0, 1, 2, 0, 1, 2};
  const auto r = center_distance_report(z, labels, 3);
  for (double v : r.dist.values()) EXPECT_EQ(v, 0.0);
  for (double s : r.sums) EXPECT_EQ(s, 0.0);
}

TEST(CenterDistance, UnitSeparatedPair) {
  const Matrix z{{0.0, 0.0}, {1.0, 0.0}};
  const std::vector<int> labels{0, 1};
  const auto r = center_distance_report(z, labels, 2);
  EXPECT_EQ(r.sums, (std::vector<double>{1.0, 1.0}));
}

TEST(CenterDistance, MatchesPairwiseLoopAndFlagsMissing) {
  Rng rng(3);
  const Matrix z = random_matrix(rng, 20, 3);
  auto labels = random_labels(rng, 20, 3);  // class 3 never appears
  labels[0] = 0, labels[1] = 1, labels[2] = 2;
  const auto r = center_distance_report(z, labels, 4);
  EXPECT_FALSE(r.present[3]);
  std::vector<std::vector<double>> c(3, std::vector<double>(3, 0.0));
  std::vector<int> n(3, 0);
  for (std::size_t i = 0; i < 20; ++i) {
    for (int d = 0; d < 3; ++d) c[labels[i]][d] += z(i, d);
    ++n[labels[i]];
  }
  for (int k = 0; k < 3; ++k)
    for (int d = 0; d < 3; ++d) c[k][d] /= n[k];
  for (int a = 0; a < 3; ++a) {
    double sum = 0.0;
    for (int b = 0; b < 3; ++b) {
      double s = 0.0;
      for (int d = 0; d < 3; ++d) s += (c[a][d] - c[b][d]) * (c[a][d] - c[b][d]);
      EXPECT_NEAR(r.dist(a, b), std::sqrt(s), 1e-14);
      sum += std::sqrt(s);
    }
    EXPECT_NEAR(r.sums[a], sum, 1e-13);
  }
}

TEST(ExportEmbeddings, LayoutAndRoundTrip) {
  const Matrix z{{0.6, 0.8}, {-1.0, 0.0}};
  const std::vector<int> labels{3, 1};
  const EntropyProfile prof = classify_samples(Matrix{{0.1, 0.9}, {0.5, 0.5}}, std::vector<int>{0, 0});
  std::stringstream out;
  export_embeddings(out, z, labels, prof);
  std::string header, row;
  std::getline(out, header);
  EXPECT_EQ(header, "sample_id,label,entropy,tag,e0,e1");
  EXPECT_EQ(count_fields(header), 4u + 2u);
  std::size_t rows = 0;
  while (std::getline(out, row)) {
    EXPECT_EQ(count_fields(row), 6u);
    ++rows;
  }
  EXPECT_EQ(rows, 2u);

  std::stringstream again;
  export_embeddings(again, z, labels, prof);
  const EmbeddingTable t = read_embeddings_csv(again);
  EXPECT_EQ(t.labels, labels);
  for (std::size_t i = 0; i < z.size(); ++i) EXPECT_NEAR(t.embeddings.values()[i], z.values()[i], 1e-6);
  EXPECT_NEAR(t.entropy[1], 1.0, 1e-6);
  EXPECT_EQ(t.tags[0], "outlier");
}

TEST(ExportEmbeddings, PathErrorsNameThePath) {
  const Matrix z{{1.0}};
  const EntropyProfile prof = classify_samples(Matrix{{0.5, 0.5}}, std::vector<int>{0});
  try {
    export_embeddings(std::filesystem::path("/nonexistent_dir_xyz/e.csv"), z, std::vector<int>{0}, prof);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent_dir_xyz/e.csv"), std::string::npos);
  }
}

TEST(ReportJson, ContainsHeadlineMetrics) {
  const std::vector<int> y{0, 1}, p{0, 0};
  const auto j = nlohmann::json::parse(report_to_json(evaluate(p, y, 2), {"a", "b"}));
  EXPECT_DOUBLE_EQ(j["overall_acc"].get<double>(), 0.5);
  EXPECT_EQ(j["confusion"][1][0].get<int>(), 1);
  EXPECT_EQ(j["class_names"][1].get<std::string>(), "b");
}

TEST(ConfusionCsv, HeaderAndRows) {
  const std::vector<int> y{0, 1}, p{1, 1};
  std::ostringstream out;
  write_confusion_csv(out, evaluate(p, y, 2), {"a", "b"});
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(count_fields(line), 3u);
  std::getline(in, line);
  EXPECT_EQ(line, "a,0,1");
}
