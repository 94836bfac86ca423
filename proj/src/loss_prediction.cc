#include "losspred/loss_prediction.h"

#include <algorithm>

#include "losspred/error.h"
#include "losspred/util.h"

namespace losspred {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

double self_entropy(const ProperLoss& loss, double v) { return loss.entropy(v); }

std::vector<double> realized_losses(const ProperLoss& loss,
                                    std::span<const double> predictions,
                                    std::span<const int> labels) {
  if (predictions.size() != labels.size()) throw ArityError("label count mismatch");
  std::vector<double> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out[i] = eval_loss(loss, labels[i], predictions[i]);
  }
  return out;
}

LossPredictor::LossPredictor(Model model, ProperLoss loss, ViewLevel level)
    : model_(std::move(model)), loss_(std::move(loss)), level_(level) {
  if (const auto* s = std::get_if<Shifted>(&model_)) {
    if (!(s->beta >= -1.0 && s->beta <= 1.0)) throw DomainError("shift must lie in [-1, 1]");
  }
}

LossPredictor LossPredictor::self_entropy(const ProperLoss& loss, ViewLevel level) {
  return LossPredictor(SelfEntropy{}, loss, level);
}

LossPredictor LossPredictor::constant(double value, const ProperLoss& loss,
                                      ViewLevel level) {
  return LossPredictor(Constant{value}, loss, level);
}

double LossPredictor::operator()(std::span<const double> phi) const {
  const double raw = std::visit(
      Overloaded{
          [&](const SelfEntropy&) { return loss_.entropy(phi[0]); },
          [](const Constant& m) { return m.value; },
          [&](const Shifted& m) { return loss_.entropy(phi[0]) + m.beta * m.delta(phi); },
          [&](const RidgeRegression& m) { return m.predict(phi); },
          [&](const StumpEnsemble& m) { return m.predict(phi); },
          [&](const RegressionTree& m) { return m.predict(phi); },
          [&](const Custom& m) { return m.eval(phi); },
      },
      model_);
  return std::clamp(raw, 0.0, 1.0);
}

std::vector<double> LossPredictor::predict_all(const ViewTable& views) const {
  std::vector<double> out(views.n);
  for (std::size_t i = 0; i < views.n; ++i) out[i] = (*this)(views.row(i));
  return out;
}

std::string LossPredictor::algo() const {
  return std::visit(Overloaded{
                        [](const SelfEntropy&) { return "self-entropy"; },
                        [](const Constant&) { return "constant"; },
                        [](const Shifted&) { return "shifted"; },
                        [](const RidgeRegression&) { return "ridge"; },
                        [](const StumpEnsemble&) { return "stump-ensemble"; },
                        [](const RegressionTree&) { return "tree"; },
                        [](const Custom&) { return "custom"; },
                    },
                    model_);
}

std::string LossPredictor::id() const {
  if (const auto* c = std::get_if<Constant>(&model_)) {
    return "const(" + format_number(c->value) + ")";
  }
  if (const auto* s = std::get_if<Shifted>(&model_)) {
    return "H+" + format_number(s->beta) + "*" + s->delta.id();
  }
  if (const auto* c = std::get_if<Custom>(&model_)) return c->id;
  if (std::holds_alternative<SelfEntropy>(model_)) return "SEP[" + loss_.name() + "]";
  return algo() + "[" + loss_.name() + "," + to_string(level_) + "]";
}

nlohmann::json LossPredictor::to_json() const {
  nlohmann::json j = {{"algo", algo()}, {"loss", loss_.to_json()}, {"level", to_string(level_)}};
  std::visit(Overloaded{
                 [](const SelfEntropy&) {},
                 [&](const Constant& m) { j["value"] = m.value; },
                 [&](const Shifted& m) {
                   j["delta"] = m.delta.to_json();
                   j["beta"] = m.beta;
                 },
                 [&](const RidgeRegression& m) { j["model"] = m.to_json(); },
                 [&](const StumpEnsemble& m) { j["model"] = m.to_json(); },
                 [&](const RegressionTree& m) { j["model"] = m.to_json(); },
                 [&](const Custom& m) { j["id"] = m.id; },
             },
             model_);
  return j;
}

LossPredictor LossPredictor::from_json(const nlohmann::json& j) {
  const std::string algo = j.at("algo").get<std::string>();
  ProperLoss loss = ProperLoss::from_json(j.at("loss"));
  const ViewLevel level = view_level_from_string(j.at("level").get<std::string>());
  if (algo == "self-entropy") return LossPredictor(SelfEntropy{}, loss, level);
  if (algo == "constant") return LossPredictor(Constant{j.at("value").get<double>()}, loss, level);
  if (algo == "shifted") {
    return LossPredictor(Shifted{TestFunction::from_json(j.at("delta")), j.at("beta").get<double>()},
                         loss, level);
  }
  if (algo == "ridge") return LossPredictor(RidgeRegression::from_json(j.at("model")), loss, level);
  if (algo == "stump-ensemble") {
    return LossPredictor(StumpEnsemble::from_json(j.at("model")), loss, level);
  }
  if (algo == "tree") return LossPredictor(RegressionTree::from_json(j.at("model")), loss, level);
  throw ConfigError("loss predictor '" + algo + "' cannot be deserialized");
}

LossPredictorSpec LossPredictorSpec::from_json(const nlohmann::json& j) {
  LossPredictorSpec s;
  if (j.is_string()) {
    s.algo = j.get<std::string>();
    return s;
  }
  s.algo = j.value("algo", s.algo);
  s.ridge_lambda = j.value("ridge_lambda", s.ridge_lambda);
  s.tree.max_depth = j.value("max_depth", s.tree.max_depth);
  s.tree.min_leaf = j.value("min_leaf", s.tree.min_leaf);
  s.stumps.min_leaf = j.value("min_leaf", s.stumps.min_leaf);
  s.stumps.rounds = j.value("rounds", s.stumps.rounds);
  s.stumps.learning_rate = j.value("learning_rate", s.stumps.learning_rate);
  return s;
}

nlohmann::json LossPredictorSpec::to_json() const {
  nlohmann::json j = {{"algo", algo}};
  if (algo == "ridge") j["ridge_lambda"] = ridge_lambda;
  if (algo == "tree") {
    j["max_depth"] = tree.max_depth;
    j["min_leaf"] = tree.min_leaf;
  }
  if (algo == "stump-ensemble") {
    j["rounds"] = stumps.rounds;
    j["learning_rate"] = stumps.learning_rate;
    j["min_leaf"] = stumps.min_leaf;
  }
  return j;
}

LossPredictor train_loss_predictor(const LossPredictorSpec& spec, const ProperLoss& loss,
                                   const ViewTable& views, std::span<const int> labels) {
  if (views.n == 0) throw DataError("cannot train a loss predictor on empty data");
  const std::vector<double> targets = realized_losses(loss, views.predictions(), labels);
  const RowMatrix x = views.matrix();
  if (spec.algo == "self-entropy") return LossPredictor::self_entropy(loss, views.level);
  if (spec.algo == "constant") {
    double mean = 0.0;
    for (double t : targets) mean += t;
    return LossPredictor::constant(mean / static_cast<double>(targets.size()), loss,
                                   views.level);
  }
  if (spec.algo == "ridge") {
    return LossPredictor(RidgeRegression::fit(x, targets, spec.ridge_lambda), loss,
                         views.level);
  }
  if (spec.algo == "stump-ensemble") {
    return LossPredictor(StumpEnsemble::fit(x, targets, spec.stumps), loss, views.level);
  }
  if (spec.algo == "tree") {
    return LossPredictor(RegressionTree::fit(x, targets, spec.tree), loss, views.level);
  }
  throw ConfigError("unknown loss predictor algorithm: " + spec.algo);
}

LossPredictor train_loss_predictor(const LossPredictorSpec& spec, const ProperLoss& loss,
                                   const Predictor& p, ViewLevel level,
                                   const Dataset& data) {
  if (data.n == 0) throw DataError("cannot train a loss predictor on empty data");
  return train_loss_predictor(spec, loss, build_views(level, p, data), data.labels);
}

nlohmann::json AdvantageReport::to_json() const {
  return {{"sep_sq_error", sep_sq_error},
          {"lp_sq_error", lp_sq_error},
          {"advantage", advantage},
          {"n", n}};
}

AdvantageReport advantage(const LossPredictor& lp, const ProperLoss& loss,
                          const ViewTable& views, std::span<const int> labels) {
  if (labels.size() != views.n) throw ArityError("label count mismatch");
  AdvantageReport r;
  r.n = views.n;
  if (views.n == 0) return r;
  for (std::size_t i = 0; i < views.n; ++i) {
    const auto phi = views.row(i);
    const double realized = eval_loss(loss, labels[i], phi[0]);
    const double sep = realized - loss.entropy(phi[0]);
    const double err = realized - lp(phi);
    r.sep_sq_error += sep * sep;
    r.lp_sq_error += err * err;
  }
  r.sep_sq_error /= static_cast<double>(views.n);
  r.lp_sq_error /= static_cast<double>(views.n);
  r.advantage = r.sep_sq_error - r.lp_sq_error;
  return r;
}

AdvantageReport advantage(const LossPredictor& lp, const ProperLoss& loss,
                          const Predictor& p, const Dataset& data) {
  return advantage(lp, loss, build_views(lp.level(), p, data), data.labels);
}

TestFunction witness_from_lp(const LossPredictor& lp, const ProperLoss& loss) {
  return TestFunction::loss_weighted(
      lp.id(), lp.to_json(), [lp](std::span<const double> phi) { return lp(phi); }, 1.0,
      loss, 1.0);
}

LossPredictor lp_from_witness(const TestFunction& delta, double beta,
                              const ProperLoss& loss, ViewLevel level) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw DomainError("beta must lie in [0, 1]");
  if (delta.bound() > 1.0) throw DomainError("delta must map into [-1, 1]");
  return LossPredictor(LossPredictor::Shifted{delta, beta}, loss, level);
}

}  // namespace losspred
