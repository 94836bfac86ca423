#include <gtest/gtest.h>

#include <cmath>

#include "losspred/error.h"
#include "losspred/loss_prediction.h"
#include "losspred/multicalibration.h"
#include "support/instances.h"

namespace losspred {
namespace {

using fixtures::make_data;

// p = 0.9 everywhere, every label 0: the one-point instance.
struct OnePoint {
  ProperLoss loss = ProperLoss::squared();
  std::vector<int> labels = std::vector<int>(10, 0);
  ViewTable views = ViewTable::from_columns(ViewLevel::kPredictionOnly,
                                            std::vector<double>(10, 0.9), {}, 0);
};

TEST(SelfEntropy, Oracles) {
  const auto sq = ProperLoss::squared();
  EXPECT_DOUBLE_EQ(self_entropy(sq, 0.5), 0.25);
  EXPECT_NEAR(self_entropy(sq, 0.9), 0.09, 1e-15);
  for (const auto& loss : builtin_losses()) {
    EXPECT_DOUBLE_EQ(self_entropy(loss, 0.0), eval_loss(loss, 0, 0.0));
  }
}

TEST(Advantage, OnePointOracle) {
  OnePoint o;
  const auto lp = LossPredictor::constant(0.81, o.loss);
  const auto adv = advantage(lp, o.loss, o.views, o.labels);
  EXPECT_NEAR(adv.advantage, 0.5184, 1e-12);
  EXPECT_NEAR(adv.sep_sq_error, 0.5184, 1e-12);
  EXPECT_NEAR(adv.lp_sq_error, 0.0, 1e-12);
  EXPECT_EQ(adv.n, 10u);
}

TEST(Advantage, SelfEntropyHasZeroAdvantage) {
  const auto inst = fixtures::small_instance(5);
  const auto sep = LossPredictor::self_entropy(inst.loss, ViewLevel::kInputAware);
  EXPECT_DOUBLE_EQ(advantage(sep, inst.loss, inst.views, inst.labels).advantage, 0.0);
}

TEST(Advantage, BlindSpotNeverHelps) {
  const auto sq = ProperLoss::squared();
  const auto views = ViewTable::from_columns(ViewLevel::kPredictionOnly,
                                             std::vector<double>(6, 0.5), {}, 0);
  const std::vector<int> labels{0, 1, 1, 0, 1, 1};
  for (double c : {0.0, 0.2, 0.25, 0.7}) {
    EXPECT_LE(advantage(LossPredictor::constant(c, sq), sq, views, labels).advantage, 0.0);
  }
}

TEST(Witness, OnePointOracle) {
  OnePoint o;
  const auto c = witness_from_lp(LossPredictor::constant(0.81, o.loss), o.loss);
  EXPECT_NEAR(c(o.views.row(0)), -0.576, 1e-12);
  EXPECT_NEAR(signed_correlation(c, o.views, o.labels), 0.5184, 1e-12);
  EXPECT_LE(c.bound(), 1.0);
}

TEST(Witness, SepAndBlindSpotGiveZero) {
  const auto sq = ProperLoss::squared();
  const auto sep = witness_from_lp(LossPredictor::self_entropy(sq), sq);
  const std::vector<double> phi{0.3};
  EXPECT_DOUBLE_EQ(sep(phi), 0.0);
  const std::vector<double> blind{0.5};
  for (double v : {0.0, 0.6, 1.0}) {
    EXPECT_DOUBLE_EQ(witness_from_lp(LossPredictor::constant(v, sq), sq)(blind), 0.0);
  }
}

TEST(LpFromWitness, OnePointEqualityCase) {
  OnePoint o;
  const auto delta = TestFunction::constant(1.0);
  const auto weighted = TestFunction::product(delta, TestFunction::superderivative(o.loss));
  const double beta = signed_correlation(weighted, o.views, o.labels);
  EXPECT_NEAR(beta, 0.72, 1e-12);
  const auto lp = lp_from_witness(delta, beta, o.loss, ViewLevel::kPredictionOnly);
  EXPECT_NEAR(lp(o.views.row(0)), 0.81, 1e-12);
  EXPECT_NEAR(advantage(lp, o.loss, o.views, o.labels).advantage, beta * beta, 1e-12);
}

TEST(LpFromWitness, Guards) {
  const auto sq = ProperLoss::squared();
  const auto zero = lp_from_witness(TestFunction::constant(0.5), 0.0, sq,
                                    ViewLevel::kPredictionOnly);
  const std::vector<double> phi{0.3};
  EXPECT_DOUBLE_EQ(zero(phi), sq.entropy(0.3));
  EXPECT_THROW(lp_from_witness(TestFunction::constant(1.0), 1.5, sq, ViewLevel::kPredictionOnly),
               DomainError);
  EXPECT_THROW(lp_from_witness(TestFunction::constant(1.0), -0.1, sq, ViewLevel::kPredictionOnly),
               DomainError);
  const auto wide = TestFunction::custom("wide", {}, [](std::span<const double>) { return 2.0; }, 2.0);
  EXPECT_THROW(lp_from_witness(wide, 0.5, sq, ViewLevel::kPredictionOnly), DomainError);
}

TEST(TrainLossPredictor, ConstantTargetsAreLearned) {
  const auto sq = ProperLoss::squared();
  std::vector<double> x;
  for (int i = 0; i < 50; ++i) x.push_back(i * 0.1);
  const auto data = make_data(x, 1, std::vector<int>(50, 0));
  const auto p = Predictor::constant(0.9);
  for (const std::string algo : {"stump-ensemble", "tree", "ridge", "constant"}) {
    LossPredictorSpec spec;
    spec.algo = algo;
    const auto lp = train_loss_predictor(spec, sq, p, ViewLevel::kInputAware, data);
    EXPECT_NEAR(lp(std::vector<double>{0.9, 1.0}), 0.81, 1e-9) << algo;
    EXPECT_NEAR(advantage(lp, sq, p, data).advantage, 0.5184, 1e-9) << algo;
  }
}

TEST(TrainLossPredictor, ConstantIsMeanLoss) {
  const auto sq = ProperLoss::squared();
  const auto data = make_data({0, 1, 2, 3}, 1, {0, 1, 1, 1});
  LossPredictorSpec spec;
  spec.algo = "constant";
  const auto lp = train_loss_predictor(spec, sq, Predictor::constant(0.75), ViewLevel::kInputAware,
                                       data);
  // Losses 0.5625, 0.0625 x3.
  EXPECT_NEAR(lp(std::vector<double>{0.75, 0.0}), (0.5625 + 3 * 0.0625) / 4, 1e-12);
}

TEST(TrainLossPredictor, Errors) {
  const auto sq = ProperLoss::squared();
  LossPredictorSpec spec;
  EXPECT_THROW(train_loss_predictor(spec, sq, Predictor::constant(0.5), ViewLevel::kInputAware,
                                    make_data({}, 1, {})),
               DataError);
  spec.algo = "crystal-ball";
  EXPECT_THROW(train_loss_predictor(spec, sq, Predictor::constant(0.5), ViewLevel::kInputAware,
                                    make_data({1.0}, 1, {1})),
               ConfigError);
  const auto data = make_data({1.0, 2.0}, 1, {0, 1});
  EXPECT_THROW(train_loss_predictor(LossPredictorSpec{}, sq, Predictor::constant(0.5),
                                    ViewLevel::kInternalRepresentation, data),
               UnsupportedRepresentation);
}

TEST(LossPredictor, JsonRoundTrip) {
  const auto sq = ProperLoss::squared();
  Rng rng(9);
  std::vector<double> x;
  std::vector<int> y;
  for (int i = 0; i < 200; ++i) {
    x.push_back(rng.normal());
    y.push_back(rng.bernoulli(0.3));
  }
  const auto data = make_data(x, 1, y);
  const auto p = Predictor::constant(0.3);
  for (const std::string algo : {"stump-ensemble", "tree", "ridge", "constant", "self-entropy"}) {
    LossPredictorSpec spec;
    spec.algo = algo;
    const auto lp = train_loss_predictor(spec, sq, p, ViewLevel::kInputAware, data);
    const auto back = LossPredictor::from_json(lp.to_json());
    EXPECT_EQ(back.algo(), lp.algo());
    const std::vector<double> phi{0.3, 0.4};
    EXPECT_DOUBLE_EQ(back(phi), lp(phi)) << algo;
  }
  EXPECT_EQ(LossPredictorSpec::from_json(LossPredictorSpec{}.to_json()).to_json(),
            LossPredictorSpec{}.to_json());
}

// Bridge inequalities on random small instances.
TEST(LossPredictionProperty, WitnessAndConverse) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto inst = fixtures::small_instance(seed);
    for (const auto& lp : inst.family) {
      const double adv = advantage(lp, inst.loss, inst.views, inst.labels).advantage;
      const double corr = signed_correlation(witness_from_lp(lp, inst.loss), inst.views, inst.labels);
      EXPECT_GE(corr, adv / 2.0 - 1e-9) << "seed " << seed;
    }
    for (const auto& stump : inst.stumps) {
      const auto weighted = TestFunction::product(stump, TestFunction::superderivative(inst.loss));
      double beta = signed_correlation(weighted, inst.views, inst.labels);
      const auto delta = beta >= 0 ? stump : TestFunction::product(TestFunction::constant(-1.0), stump);
      beta = std::min(std::abs(beta), 1.0);
      const auto lp = lp_from_witness(delta, beta, inst.loss, ViewLevel::kInputAware);
      EXPECT_GE(advantage(lp, inst.loss, inst.views, inst.labels).advantage, beta * beta - 1e-9)
          << "seed " << seed;
    }
  }
}

}  // namespace
}  // namespace losspred
