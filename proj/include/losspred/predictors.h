#ifndef LOSSPRED_PREDICTORS_H_
#define LOSSPRED_PREDICTORS_H_

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "losspred/dataset.h"
#include "losspred/regression.h"
#include "losspred/test_function.h"

namespace losspred {

class Predictor;

struct ConstantModel {
  double value = 0.5;
};

// Keyed by the full feature vector. Unseen keys fall back to `fallback`.
struct TableModel {
  std::map<std::vector<double>, double> table;
  double fallback = 0.5;
};

struct LogisticModel {
  std::vector<double> weights;
  double bias = 0.0;
};

struct NaiveBayesModel {
  double prior1 = 0.5;
  std::vector<double> mean0, var0, mean1, var1;
};

struct TreeModel {
  RegressionTree tree;
};

struct StumpModel {
  StumpEnsemble ensemble;
};

// (1 - theta) * base(x) + theta * target.
struct BlendModel {
  std::shared_ptr<const Predictor> base;
  double theta = 0.0;
  double target = 0.5;
};

enum class ViewLevel {
  kPredictionOnly,
  kInputAware,
  kInternalRepresentation,
  kExternalRepresentation,
};

std::string to_string(ViewLevel level);
ViewLevel view_level_from_string(const std::string& s);

struct BoostStep {
  TestFunction delta;
  double step = 0.0;
};

// p_0 = base (or the constant 1/2 when base is null), then
// p_{t+1}(x) = clamp(p_t(x) + step_t * delta_t(phi(p_t, x))) where the view
// is prediction-only or input-aware.
struct BoostedModel {
  std::shared_ptr<const Predictor> base;
  ViewLevel level = ViewLevel::kPredictionOnly;
  std::vector<BoostStep> steps;
};

// A map from feature vectors to [0, 1]. Immutable once built.
class Predictor {
 public:
  using Model = std::variant<ConstantModel, TableModel, LogisticModel,
                             NaiveBayesModel, TreeModel, StumpModel, BlendModel,
                             BoostedModel>;

  Predictor(Model model, std::size_t arity,
            nlohmann::json training_log = nlohmann::json::object());

  static Predictor constant(double value);

  // Throws ArityError when x.size() != arity() (constants accept anything).
  double predict(std::span<const double> x) const;
  std::vector<double> predict_all(const Dataset& data) const;

  std::string family() const;
  // 0 for constant predictors.
  std::size_t arity() const { return arity_; }
  const Model& model() const { return model_; }
  const nlohmann::json& training_log() const { return log_; }

  bool has_internal_representation() const;
  // Tree: one-hot leaf id. Stump ensemble: raw stump outputs. Logistic: the
  // margin. Throws UnsupportedRepresentation for every other family.
  std::vector<double> internal_representation(std::span<const double> x) const;
  std::size_t internal_dim() const;

  nlohmann::json to_json() const;
  static Predictor from_json(const nlohmann::json& j);

 private:
  Model model_;
  std::size_t arity_;
  nlohmann::json log_;
};

// Training recipe. Families: constant, table, logistic, naive-bayes, tree,
// stump-ensemble, blend (wraps `base`).
struct PredictorSpec {
  std::string family = "logistic";
  double value = 0.5;
  double learning_rate = 0.1;
  int iterations = 2000;
  int max_depth = 4;
  std::size_t min_leaf = 5;
  int rounds = 100;
  double theta = 0.0;
  double target = 0.9;
  std::shared_ptr<PredictorSpec> base;

  static PredictorSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// Throws ConfigError for an unknown family, DataError for empty data or when
// naive Bayes sees a single class.
Predictor fit(const PredictorSpec& spec, const Dataset& data);

// Table predictor mapping each distinct feature vector to its mean label.
Predictor fit_table(const Dataset& data);

struct FeatureView {
  ViewLevel level = ViewLevel::kPredictionOnly;
  double prediction = 0.0;
  std::vector<double> inputs;
  std::vector<double> representation;

  // [prediction, inputs..., representation...]
  std::vector<double> flatten() const;
};

// `external` must be given iff the level is kExternalRepresentation.
FeatureView feature_view(ViewLevel level, const Predictor& p,
                         std::span<const double> x,
                         std::optional<std::span<const double>> external = {});

// Flattened views of every row of a dataset. Column 0 is the prediction.
struct ViewTable {
  ViewLevel level = ViewLevel::kPredictionOnly;
  std::size_t n = 0;
  std::size_t width = 1;
  std::vector<double> values;

  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * width, width};
  }
  double prediction(std::size_t i) const { return values[i * width]; }
  std::vector<double> predictions() const;
  RowMatrix matrix() const { return {values, n, width}; }

  // Builds a table from raw predictions and (optionally) per-row extras.
  static ViewTable from_columns(ViewLevel level, std::span<const double> predictions,
                                std::span<const double> extras, std::size_t extra_dim);
  // Copy with column 0 replaced.
  ViewTable with_predictions(std::span<const double> predictions) const;
};

ViewTable build_views(ViewLevel level, const Predictor& p, const Dataset& data);

}  // namespace losspred

#endif  // LOSSPRED_PREDICTORS_H_
