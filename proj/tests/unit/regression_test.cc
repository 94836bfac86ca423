#include <gtest/gtest.h>

#include <vector>

#include "losspred/regression.h"

namespace losspred {
namespace {

TEST(RegressionTree, SplitsStepFunction) {
  const std::vector<double> x{0, 1, 2, 3, 4, 5, 6, 7};
  const std::vector<double> y{0, 0, 0, 0, 1, 1, 1, 1};
  const auto tree = RegressionTree::fit({x, 8, 1}, y, {.max_depth = 3, .min_leaf = 1});
  EXPECT_DOUBLE_EQ(tree.predict(std::vector<double>{1.0}), 0.0);
  EXPECT_DOUBLE_EQ(tree.predict(std::vector<double>{6.0}), 1.0);
  // A pure split leaves nothing to gain further down.
  EXPECT_EQ(tree.leaf_count(), 2);
  EXPECT_DOUBLE_EQ(tree.nodes()[0].threshold, 3.5);
}

TEST(RegressionTree, RespectsMinLeafAndDepth) {
  std::vector<double> x, y;
  for (int i = 0; i < 64; ++i) {
    x.push_back(i);
    y.push_back(i % 3);
  }
  const auto tree = RegressionTree::fit({x, 64, 1}, y, {.max_depth = 2, .min_leaf = 5});
  EXPECT_LE(tree.leaf_count(), 4);
  const auto stump = RegressionTree::fit({x, 64, 1}, y, {.max_depth = 0, .min_leaf = 1});
  EXPECT_EQ(stump.leaf_count(), 1);
  EXPECT_DOUBLE_EQ(stump.predict(std::vector<double>{3.0}), 63.0 / 64.0);
}

TEST(RegressionTree, LeafIdsDepthFirst) {
  const std::vector<double> x{0, 1, 2, 3, 10, 11, 12, 13};
  const std::vector<double> y{0, 0, 1, 1, 5, 5, 9, 9};
  const auto tree = RegressionTree::fit({x, 8, 1}, y, {.max_depth = 2, .min_leaf = 1});
  EXPECT_EQ(tree.leaf_count(), 4);
  EXPECT_EQ(tree.leaf_index(std::vector<double>{0.0}), 0);
  EXPECT_EQ(tree.leaf_index(std::vector<double>{2.0}), 1);
  EXPECT_EQ(tree.leaf_index(std::vector<double>{10.0}), 2);
  EXPECT_EQ(tree.leaf_index(std::vector<double>{13.0}), 3);
  const auto back = RegressionTree::from_json(tree.to_json());
  EXPECT_EQ(back.leaf_index(std::vector<double>{12.0}), 3);
  EXPECT_DOUBLE_EQ(back.predict(std::vector<double>{12.0}), 9.0);
}

TEST(StumpEnsemble, FitsConstantTargetExactly) {
  std::vector<double> x, y;
  for (int i = 0; i < 20; ++i) {
    x.push_back(i);
    y.push_back(0.81);
  }
  const auto model = StumpEnsemble::fit({x, 20, 1}, y, {});
  EXPECT_NEAR(model.predict(std::vector<double>{3.0}), 0.81, 1e-12);
}

TEST(StumpEnsemble, ReducesErrorOnStep) {
  std::vector<double> x, y;
  for (int i = 0; i < 100; ++i) {
    x.push_back(i);
    y.push_back(i < 50 ? 0.2 : 0.7);
  }
  const auto model = StumpEnsemble::fit({x, 100, 1}, y, {.rounds = 200, .learning_rate = 0.2});
  EXPECT_NEAR(model.predict(std::vector<double>{10.0}), 0.2, 1e-3);
  EXPECT_NEAR(model.predict(std::vector<double>{90.0}), 0.7, 1e-3);
  const auto back = StumpEnsemble::from_json(model.to_json());
  EXPECT_DOUBLE_EQ(back.predict(std::vector<double>{90.0}), model.predict(std::vector<double>{90.0}));
}

TEST(Ridge, RecoversLinearMap) {
  std::vector<double> x, y;
  for (int i = 0; i < 30; ++i) {
    const double a = i * 0.1, b = (i % 7) * 0.3;
    x.insert(x.end(), {a, b});
    y.push_back(1.0 + 2.0 * a - 0.5 * b);
  }
  const auto model = RidgeRegression::fit({x, 30, 2}, y, 1e-9);
  EXPECT_NEAR(model.weights()[0], 2.0, 1e-6);
  EXPECT_NEAR(model.weights()[1], -0.5, 1e-6);
  EXPECT_NEAR(model.bias(), 1.0, 1e-6);
  EXPECT_NEAR(RidgeRegression::from_json(model.to_json()).predict(std::vector<double>{1.0, 1.0}),
              2.5, 1e-6);
}

}  // namespace
}  // namespace losspred
