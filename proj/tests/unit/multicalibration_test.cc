#include <gtest/gtest.h>

#include <cmath>

#include "losspred/error.h"
#include "losspred/mc_boost.h"
#include "losspred/multicalibration.h"
#include "support/instances.h"

namespace losspred {
namespace {

using fixtures::make_data;

ViewTable prediction_views(std::vector<double> preds) {
  return ViewTable::from_columns(ViewLevel::kPredictionOnly, preds, {}, 0);
}

TEST(MceFinite, TwoPointOracle) {
  const auto views = prediction_views({0.4, 0.4});
  const std::vector<int> labels{1, 0};
  const std::vector<TestFunction> c{TestFunction::constant(1.0)};
  const auto r = mce_finite(c, views, labels);
  EXPECT_NEAR(r.value, 0.1, 1e-15);
  EXPECT_EQ(r.argmax, 0u);
}

TEST(MceFinite, NegationAndDuplicationInvariant) {
  const auto inst = fixtures::small_instance(3);
  const auto a = inst.stumps[0];
  const auto neg = TestFunction::product(TestFunction::constant(-1.0), a);
  const double one = mce_finite(std::vector<TestFunction>{a}, inst.views, inst.labels).value;
  EXPECT_DOUBLE_EQ(mce_finite(std::vector<TestFunction>{neg}, inst.views, inst.labels).value, one);
  EXPECT_DOUBLE_EQ(mce_finite(std::vector<TestFunction>{a, a}, inst.views, inst.labels).value, one);
  EXPECT_THROW(mce_finite(std::vector<TestFunction>{}, inst.views, inst.labels), ConfigError);
}

TEST(MceFinite, UnionIsMax) {
  const auto inst = fixtures::small_instance(8);
  const std::vector<TestFunction> c1{inst.stumps[0], inst.stumps[1]};
  const std::vector<TestFunction> c2{inst.stumps[2], inst.stumps[3]};
  const std::vector<TestFunction> both{inst.stumps.begin(), inst.stumps.end()};
  EXPECT_DOUBLE_EQ(mce_finite(both, inst.views, inst.labels).value,
                   std::max(mce_finite(c1, inst.views, inst.labels).value,
                            mce_finite(c2, inst.views, inst.labels).value));
}

TEST(MceFinite, CalibratedTableOnLevelSets) {
  const auto data = make_data({0, 0, 0, 1, 1, 2}, 1, {1, 0, 1, 0, 1, 1});
  const auto p = fit_table(data);
  const auto views = build_views(ViewLevel::kPredictionOnly, p, data);
  std::vector<TestFunction> c;
  for (double v : views.predictions()) {
    c.push_back(TestFunction::level_set(v, 1.0));
    c.push_back(TestFunction::level_set(v, -1.0));
  }
  EXPECT_NEAR(mce_finite(c, views, data.labels).value, 0.0, 1e-15);
}

TEST(MceLossClass, SelfEntropyClassIsZero) {
  const auto views = prediction_views({0.2, 0.7, 0.9});
  const std::vector<int> labels{1, 0, 1};
  for (const auto& l : builtin_losses()) {
    const std::vector<LossPredictor> f{LossPredictor::self_entropy(l)};
    const std::vector<ProperLoss> ls{l};
    const auto r = mce_loss_class(f, ls, views, labels);
    EXPECT_DOUBLE_EQ(r.mce.value, 0.0) << l.name();
    EXPECT_DOUBLE_EQ(r.max_advantage, 0.0);
    EXPECT_TRUE(r.bound_holds);
  }
}

TEST(MceLossClass, AdvantageBoundedByTwiceMce) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto inst = fixtures::small_instance(seed);
    std::vector<ProperLoss> ls{inst.loss, ProperLoss::squared()};
    const auto r = mce_loss_class(inst.family, ls, inst.views, inst.labels);
    EXPECT_TRUE(r.bound_holds) << seed;
    EXPECT_LE(r.max_advantage, 2 * r.mce.value + 1e-9);
  }
}

TEST(BinnedCe, Oracles) {
  EXPECT_NEAR(binned_ce(std::vector<double>{0.4, 0.4}, std::vector<int>{1, 0}, 1), 0.1, 1e-15);
  EXPECT_NEAR(binned_ce(std::vector<double>(5, 0.9), std::vector<int>(5, 0), 10), 0.9, 1e-15);
  // Level sets 0.25 and 0.75 in separate bins, calibrated in each.
  EXPECT_NEAR(binned_ce(std::vector<double>{0.25, 0.25, 0.25, 0.25, 0.75, 0.75, 0.75, 0.75},
                        std::vector<int>{1, 0, 0, 0, 1, 1, 1, 0}, 2),
              0.0, 1e-15);
  EXPECT_NEAR(binned_ce(std::vector<double>{1.0}, std::vector<int>{0}, 4), 1.0, 1e-15);
}

TEST(SmoothedCe, ZeroResidualsAndNarrowKernel) {
  EXPECT_DOUBLE_EQ(smoothed_ce(std::vector<double>{0.0, 1.0}, std::vector<int>{0, 1}, 0.1), 0.0);
  EXPECT_NEAR(smoothed_ce(std::vector<double>{0.4, 0.4}, std::vector<int>{1, 0}, 1e-3), 0.1, 1e-6);
  EXPECT_THROW(smoothed_ce(std::vector<double>{0.4}, std::vector<int>{1}, 0.0), ConfigError);
}

TEST(SmoothedCe, PermutationInvariant) {
  const std::vector<double> p{0.1, 0.5, 0.7, 0.9};
  const std::vector<int> y{0, 1, 1, 0};
  const std::vector<double> p2{0.9, 0.7, 0.1, 0.5};
  const std::vector<int> y2{0, 1, 0, 1};
  EXPECT_NEAR(smoothed_ce(p, y, 0.1), smoothed_ce(p2, y2, 0.1), 1e-15);
  EXPECT_NEAR(binned_ce(p, y, 5), binned_ce(p2, y2, 5), 1e-15);
}

TEST(MaxSubgroupCe, PicksMiscalibratedGroup) {
  auto data = make_data({0, 1, 2, 3}, 1, {1, 0, 1, 1});
  data.subgroups["a-calibrated"] = {1, 1, 0, 0};
  data.subgroups["b-off"] = {0, 0, 1, 1};
  // Group b: predictions 0.7, labels 1 -> residual 0.3.
  const std::vector<double> preds{0.5, 0.5, 0.7, 0.7};
  CalibrationParams params{.metric = CalibrationMetric::kBinned, .bins = 1};
  const auto r = max_subgroup_ce(preds, data, params);
  EXPECT_NEAR(r.value, 0.3, 1e-15);
  EXPECT_EQ(r.subgroup, "b-off");

  data.subgroups.clear();
  data.subgroups["all"] = {1, 1, 1, 1};
  EXPECT_DOUBLE_EQ(max_subgroup_ce(preds, data, params).value,
                   calibration_error(preds, data.labels, params));
}

TEST(MaxSubgroupCe, TieGoesToFirstNameAndEmptyIsSkipped) {
  auto data = make_data({0, 1, 2, 3}, 1, {1, 1, 1, 1});
  data.subgroups["x"] = {1, 1, 0, 0};
  data.subgroups["y"] = {0, 0, 1, 1};
  data.subgroups["z"] = {0, 0, 0, 0};
  const std::vector<double> preds(4, 0.5);
  const auto r = max_subgroup_ce(preds, data, CalibrationParams{});
  EXPECT_EQ(r.subgroup, "x");
  EXPECT_EQ(r.skipped, std::vector<std::string>{"z"});
  data.subgroups = {{"z", {0, 0, 0, 0}}};
  EXPECT_THROW(max_subgroup_ce(preds, data, CalibrationParams{}), EmptySubgroup);
}

TEST(PceEstimate, Oracles) {
  const auto basis = lipschitz_basis(0.5);
  const auto r = pce_estimate(std::vector<double>(4, 0.9), std::vector<int>(4, 0), basis);
  EXPECT_NEAR(r.raw_max, 0.9, 1e-15);
  EXPECT_NEAR(r.upper_bound, 4 * 0.9 + 0.5, 1e-12);
  const auto data = make_data({0, 0, 1, 1}, 1, {1, 0, 1, 1});
  EXPECT_NEAR(pce_estimate(fit_table(data), data, basis).raw_max, 0.0, 1e-15);
}

TEST(Sandwich, Oracles) {
  const auto sq = ProperLoss::squared();
  const auto views = prediction_views(std::vector<double>(3, 0.9));
  const std::vector<int> labels(3, 0);
  const std::vector<LossPredictor> sep{LossPredictor::self_entropy(sq)};
  const auto r0 = sandwich_check(sep, sq, views, labels, 1001);
  EXPECT_DOUBLE_EQ(r0.max_advantage, 0.0);
  EXPECT_DOUBLE_EQ(r0.mce, 0.0);
  const std::vector<LossPredictor> f{LossPredictor::constant(0.81, sq)};
  const auto r = sandwich_check(f, sq, views, labels, 1001);
  EXPECT_NEAR(r.max_advantage, 0.5184, 1e-12);
  EXPECT_NEAR(r.mce, 0.5184, 1e-12);
  EXPECT_GE(r.max_advantage_augmented, 0.5184 - 1e-12);
  EXPECT_LE(r.mce, std::sqrt(r.max_advantage_augmented) + r.grid_tolerance);
  EXPECT_NEAR(r.grid_tolerance, 2e-3, 1e-15);
  EXPECT_THROW(sandwich_check(f, sq, views, labels, 2), ConfigError);
}

TEST(SandwichProperty, RandomInstances) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const auto inst = fixtures::small_instance(seed);
    EXPECT_NO_THROW(sandwich_check(inst.family, inst.loss, inst.views, inst.labels, 201))
        << seed;
  }
}

}  // namespace
}  // namespace losspred
