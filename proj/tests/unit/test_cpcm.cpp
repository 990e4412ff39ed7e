#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cedr/cpcm.hpp"
#include "cedr/error.hpp"
#include "cedr/scc_loss.hpp"
#include "test_support.hpp"

using namespace cedr;
using nn::Matrix;
using cedr::testing::random_labels;
using cedr::testing::random_matrix;
using cedr::testing::random_unit_rows;

namespace {

ClassCenters centers_from_rows(const Matrix& rows) {
  std::vector<int> labels(rows.rows());
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i);
  return compute_centers(rows, labels, rows.rows());
}

}  // namespace

TEST(Centers, SingletonClassesEqualTheirSample) {
  Rng rng(1);
  const Matrix z = random_unit_rows(rng, 4, 3);
  const ClassCenters c = centers_from_rows(z);
  EXPECT_EQ(c.centers, z);
  EXPECT_TRUE(std::all_of(c.present.begin(), c.present.end(), [](bool b) { return b; }));
}

TEST(Centers, IdenticalSamplesGiveThatSample) {
  const Matrix z{{0.6, 0.8}, {0.6, 0.8}};
  const std::vector<int> labels{1, 1};
  const ClassCenters c = compute_centers(z, labels, 3);
  EXPECT_DOUBLE_EQ(c.centers(1, 0), 0.6);
  EXPECT_DOUBLE_EQ(c.centers(1, 1), 0.8);
  EXPECT_FALSE(c.present[0]);
  EXPECT_FALSE(c.present[2]);
}

TEST(Centers, MatchGroupedMeanOracle) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t b = 1 + rng.below(20), classes = 1 + rng.below(6), d = 1 + rng.below(5);
    const Matrix z = random_matrix(rng, b, d);
    const auto labels = random_labels(rng, b, classes);
    const ClassCenters c = compute_centers(z, labels, classes);
    for (std::size_t k = 0; k < classes; ++k) {
      std::vector<double> acc(d, 0.0);
      std::size_t n = 0;
      for (std::size_t i = 0; i < b; ++i) {
        if (labels[i] != static_cast<int>(k)) continue;
        for (std::size_t j = 0; j < d; ++j) acc[j] += z(i, j);
        ++n;
      }
      EXPECT_EQ(c.present[k], n > 0);
      for (std::size_t j = 0; j < d && n > 0; ++j)
        EXPECT_NEAR(c.centers(k, j), acc[j] / static_cast<double>(n), 1e-14);
    }
  }
}

TEST(Centers, RunningAverageUsesDecay) {
  RunningCenters rc(2, 0.9);
  const std::vector<int> l0{0}, l1{0, 1};
  rc.update(Matrix{{1.0, 0.0}}, l0);
  EXPECT_FALSE(rc.current().present[1]);
  const ClassCenters& c = rc.update(Matrix{{0.0, 1.0}, {0.0, -1.0}}, l1);
  EXPECT_NEAR(c.centers(0, 0), 0.9, 1e-15);
  EXPECT_NEAR(c.centers(0, 1), 0.1, 1e-15);
  EXPECT_EQ(c.centers(1, 1), -1.0);
  EXPECT_EQ(c.scope, CenterScope::running);
}

TEST(Centers, RejectsEmptyAndBadLabels) {
  const std::vector<int> none;
  EXPECT_THROW(compute_centers(Matrix(0, 2), none, 2), InvalidInput);
  const std::vector<int> bad{5};
  EXPECT_THROW(compute_centers(Matrix(1, 2), bad, 2), InvalidInput);
}

TEST(CpcmWeight, ClosedFormValues) {
  EXPECT_EQ(cpcm_weight(0.0), 2.0);
  EXPECT_LT(std::abs(cpcm_weight(50.0) - 1.0), 1e-12);
  EXPECT_NEAR(cpcm_weight(1.0), 1.1353352832366127, 1e-15);
  EXPECT_THROW(cpcm_weight(-0.1), InvalidInput);
}

TEST(CpcmWeight, MatchesHyperbolicRatioOnGrid) {
  for (int i = 0; i <= 2000; ++i) {
    const double d = i * 0.005;
    const double ratio = (std::exp(d) + std::exp(-d)) / std::exp(d);
    EXPECT_NEAR(cpcm_weight(d), ratio, 1e-12);
  }
}

TEST(CpcmWeight, StrictlyDecreasingAndInRange) {
  Rng rng(3);
  std::vector<double> d(200);
  for (double& v : d) v = rng.uniform(0.0, 8.0);
  std::sort(d.begin(), d.end());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double w = cpcm_weight(d[i]);
    EXPECT_GT(w, 1.0);
    EXPECT_LE(w, 2.0);
    if (i > 0 && d[i] > d[i - 1]) EXPECT_LT(w, cpcm_weight(d[i - 1]));
  }
}

TEST(ClassPairWeights, SymmetricWithTwoOnDiagonal) {
  Rng rng(4);
  const ClassPairWeights w = class_pair_weights(centers_from_rows(random_unit_rows(rng, 5, 4)));
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(w.w_minus(i, i), 2.0);
    for (std::size_t j = 0; j < 5; ++j) {
      EXPECT_EQ(w.w_minus(i, j), w.w_minus(j, i));
      EXPECT_EQ(w.dist(i, j), w.dist(j, i));
      EXPECT_DOUBLE_EQ(w.w_minus(i, j), cpcm_weight(w.dist(i, j)));
    }
  }
}

TEST(NegativeWeights, CoincidentCentersWeightTwo) {
  const Matrix z{{1.0, 0.0}, {1.0, 0.0}, {1.0, 0.0}};
  const std::vector<int> labels{0, 1, 1};
  const ClassPairWeights cw = class_pair_weights(compute_centers(z, labels, 2));
  const PairWeightMatrix w = cpcm_negative_weights(labels, cw, MiningMethod::all_pairs);
  EXPECT_EQ(w.w_neg(0, 1), 2.0);
  EXPECT_EQ(w.w_neg(2, 0), 2.0);
  EXPECT_EQ(w.w_pos(1, 2), 1.0);
  EXPECT_EQ(w.source, PairWeightMatrix::Source::cpcm);
}

TEST(NegativeWeights, FarCentersReduceToUnweightedLoss) {
  Matrix centers(3, 3);
  centers(0, 0) = 100.0;
  centers(1, 1) = 100.0;
  centers(2, 2) = 100.0;
  const ClassPairWeights cw = class_pair_weights(centers_from_rows(centers));
  Rng rng(5);
  const std::vector<int> labels{0, 0, 1, 1, 2, 2};
  const Matrix z = random_unit_rows(rng, 6, 3);
  const PairWeightMatrix w = cpcm_negative_weights(labels, cw, MiningMethod::all_pairs);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j)
      if (w.is_negative_pair(i, j)) EXPECT_NEAR(w.w_neg(i, j), 1.0, 1e-12);
  EXPECT_NEAR(supervised_infonce(z, labels, &w, {}).mean,
              supervised_infonce(z, labels, nullptr, {}).mean, 1e-12);
}

TEST(NegativeWeights, SingleClassBatchHasNoNegatives) {
  Rng rng(6);
  const std::vector<int> labels{1, 1, 1};
  const Matrix z = random_unit_rows(rng, 3, 4);
  const ClassPairWeights cw = class_pair_weights(compute_centers(z, labels, 2));
  const PairWeightMatrix w = cpcm_negative_weights(labels, cw, MiningMethod::all_pairs);
  const InfonceResult weighted = supervised_infonce(z, labels, &w, {});
  const InfonceResult plain = supervised_infonce(z, labels, nullptr, {});
  EXPECT_EQ(weighted.mean, plain.mean);
  EXPECT_EQ(weighted.mean, 0.0);
}

TEST(NegativeWeights, MissingCenterListsClass) {
  const ClassPairWeights cw = class_pair_weights(compute_centers(
      Matrix{{1.0, 0.0}}, std::vector<int>{0}, 3));
  const std::vector<int> labels{0, 2};
  try {
    cpcm_negative_weights(labels, cw, MiningMethod::all_pairs);
    FAIL();
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find('2'), std::string::npos);
  }
}

TEST(NearestOnly, CraftedDistancesSelectOnlyClosePair) {
  Matrix dist{{0.0, 1.0, 3.0}, {1.0, 0.0, 3.5}, {3.0, 3.5, 0.0}};
  const std::vector<bool> defined(3, true);
  const auto pairs = nearest_only_pairs(dist, defined);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0], std::make_pair(0, 1));
}

TEST(NearestOnly, SmallGapSelectsNothing) {
  Matrix dist{{0.0, 1.0, 1.5}, {1.0, 0.0, 1.2}, {1.5, 1.2, 0.0}};
  EXPECT_TRUE(nearest_only_pairs(dist, std::vector<bool>(3, true)).empty());
}

TEST(NearestOnly, MethodOneDominatesMethodTwo) {
  Rng rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t classes = 2 + rng.below(5);
    Matrix pts = random_matrix(rng, classes, 2, -2.0, 2.0);
    const ClassPairWeights cw = class_pair_weights(centers_from_rows(pts));
    std::vector<int> labels;
    for (std::size_t k = 0; k < classes; ++k) labels.insert(labels.end(), 2, static_cast<int>(k));
    const auto m1 = cpcm_negative_weights(labels, cw, MiningMethod::all_pairs);
    const auto m2 = cpcm_negative_weights(labels, cw, MiningMethod::nearest_only);
    const auto mined = nearest_only_pairs(cw.dist, cw.defined);
    for (std::size_t i = 0; i < labels.size(); ++i)
      for (std::size_t j = 0; j < labels.size(); ++j) {
        if (!m1.is_negative_pair(i, j)) continue;
        EXPECT_GE(m1.w_neg(i, j), m2.w_neg(i, j));
        const auto key = std::minmax(labels[i], labels[j]);
        const bool kept = std::find(mined.begin(), mined.end(),
                                    std::make_pair(key.first, key.second)) != mined.end();
        EXPECT_EQ(m2.w_neg(i, j), kept ? m1.w_neg(i, j) : 1.0);
      }
  }
}

TEST(CenterDistanceCsv, HeadersAndValues) {
  std::ostringstream out;
  write_center_distance_csv(out, Matrix{{0.0, 1.5}, {1.5, 0.0}}, {"a", "b"});
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "class,a,b");
  EXPECT_NE(out.str().find("a,0,1.5"), std::string::npos);
}
