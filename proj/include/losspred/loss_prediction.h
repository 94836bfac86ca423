#ifndef LOSSPRED_LOSS_PREDICTION_H_
#define LOSSPRED_LOSS_PREDICTION_H_

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "losspred/dataset.h"
#include "losspred/losses.h"
#include "losspred/predictors.h"
#include "losspred/regression.h"
#include "losspred/test_function.h"

namespace losspred {

// H(v).
double self_entropy(const ProperLoss& loss, double v);

// loss(y_i, p_i) for every row.
std::vector<double> realized_losses(const ProperLoss& loss,
                                    std::span<const double> predictions,
                                    std::span<const int> labels);

// A map from flattened feature views to [0, 1]; every output is clamped.
class LossPredictor {
 public:
  struct SelfEntropy {};
  struct Constant {
    double value = 0.0;
  };
  // clamp(H(p) + beta * delta(phi)).
  struct Shifted {
    TestFunction delta;
    double beta = 0.0;
  };
  struct Custom {
    std::string id;
    TestFunction::Eval eval;
  };
  using Model = std::variant<SelfEntropy, Constant, Shifted, RidgeRegression,
                             StumpEnsemble, RegressionTree, Custom>;

  LossPredictor(Model model, ProperLoss loss, ViewLevel level);

  static LossPredictor self_entropy(const ProperLoss& loss,
                                    ViewLevel level = ViewLevel::kPredictionOnly);
  static LossPredictor constant(double value, const ProperLoss& loss,
                                ViewLevel level = ViewLevel::kPredictionOnly);

  double operator()(std::span<const double> phi) const;
  std::vector<double> predict_all(const ViewTable& views) const;

  std::string algo() const;
  std::string id() const;
  const ProperLoss& loss() const { return loss_; }
  ViewLevel level() const { return level_; }
  const Model& model() const { return model_; }

  // Custom models serialize their id only and cannot be read back.
  nlohmann::json to_json() const;
  static LossPredictor from_json(const nlohmann::json& j);

 private:
  Model model_;
  ProperLoss loss_;
  ViewLevel level_;
};

struct LossPredictorSpec {
  // ridge, stump-ensemble, tree, constant or self-entropy.
  std::string algo = "stump-ensemble";
  double ridge_lambda = 1e-3;
  RegressionTree::Options tree;
  StumpEnsemble::Options stumps;

  static LossPredictorSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// Regresses realized losses loss(y, p(x)) on the views. The regressors see
// the whole flattened view, prediction included.
LossPredictor train_loss_predictor(const LossPredictorSpec& spec,
                                   const ProperLoss& loss, const ViewTable& views,
                                   std::span<const int> labels);
LossPredictor train_loss_predictor(const LossPredictorSpec& spec,
                                   const ProperLoss& loss, const Predictor& p,
                                   ViewLevel level, const Dataset& data);

struct AdvantageReport {
  double sep_sq_error = 0.0;
  double lp_sq_error = 0.0;
  double advantage = 0.0;
  std::size_t n = 0;

  nlohmann::json to_json() const;
};

AdvantageReport advantage(const LossPredictor& lp, const ProperLoss& loss,
                          const ViewTable& views, std::span<const int> labels);
AdvantageReport advantage(const LossPredictor& lp, const ProperLoss& loss,
                          const Predictor& p, const Dataset& data);

// c(phi) = (LP(phi) - H(p)) * H'(p). Loss predictors map into [0, 1], so c
// already lies in [-1, 1] and no rescaling is applied.
TestFunction witness_from_lp(const LossPredictor& lp, const ProperLoss& loss);

// clamp(H(p) + beta * delta(phi)). Throws DomainError unless beta is in
// [0, 1] and delta maps into [-1, 1].
LossPredictor lp_from_witness(const TestFunction& delta, double beta,
                              const ProperLoss& loss, ViewLevel level);

}  // namespace losspred

#endif  // LOSSPRED_LOSS_PREDICTION_H_
