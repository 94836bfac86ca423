#include "losspred/predictors.h"

#include <algorithm>
#include <cmath>
#include <span>

#include "losspred/error.h"

namespace losspred {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

double logistic_margin(const LogisticModel& m, std::span<const double> x) {
  double t = m.bias;
  for (std::size_t j = 0; j < m.weights.size(); ++j) t += m.weights[j] * x[j];
  return t;
}

double gaussian_log_density(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (std::log(2.0 * M_PI * var) + d * d / var);
}

std::vector<double> labels_as_double(const Dataset& data) {
  return {data.labels.begin(), data.labels.end()};
}

void require_nonempty(const Dataset& data) {
  if (data.n == 0) throw DataError("cannot fit a predictor on empty data");
}

Predictor fit_logistic(const PredictorSpec& spec, const Dataset& data) {
  const std::size_t n = data.n, d = data.d;
  // Descend on standardized columns, then fold the scaling back into the weights.
  std::vector<double> mean(d, 0.0), scale(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += data.row(i)[j] / static_cast<double>(n);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double c = data.row(i)[j] - mean[j];
      scale[j] += c * c / static_cast<double>(n);
    }
  }
  for (auto& s : scale) s = s > 1e-24 ? std::sqrt(s) : 1.0;
  std::vector<double> z(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) z[i * d + j] = (data.row(i)[j] - mean[j]) / scale[j];
  }

  LogisticModel m{std::vector<double>(d, 0.0), 0.0};
  std::vector<double> grad(d);
  for (int it = 0; it < spec.iterations; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::span<const double> x(z.data() + i * d, d);
      const double r = sigmoid(logistic_margin(m, x)) - data.labels[i];
      for (std::size_t j = 0; j < d; ++j) grad[j] += r * x[j];
      grad_b += r;
    }
    for (std::size_t j = 0; j < d; ++j) {
      m.weights[j] -= spec.learning_rate * grad[j] / static_cast<double>(n);
    }
    m.bias -= spec.learning_rate * grad_b / static_cast<double>(n);
  }
  for (std::size_t j = 0; j < d; ++j) {
    m.weights[j] /= scale[j];
    m.bias -= m.weights[j] * mean[j];
  }
  return Predictor(m, d,
                   {{"family", "logistic"},
                    {"iterations", spec.iterations},
                    {"learning_rate", spec.learning_rate}});
}

Predictor fit_naive_bayes(const Dataset& data) {
  const std::size_t d = data.d;
  NaiveBayesModel m;
  m.mean0.assign(d, 0.0);
  m.mean1.assign(d, 0.0);
  m.var0.assign(d, 0.0);
  m.var1.assign(d, 0.0);
  std::size_t n1 = 0;
  for (std::size_t i = 0; i < data.n; ++i) {
    auto& mean = data.labels[i] ? m.mean1 : m.mean0;
    const auto x = data.row(i);
    for (std::size_t j = 0; j < d; ++j) mean[j] += x[j];
    n1 += data.labels[i];
  }
  const std::size_t n0 = data.n - n1;
  if (n0 == 0 || n1 == 0) {
    throw DataError("naive Bayes needs examples of both classes");
  }
  for (std::size_t j = 0; j < d; ++j) {
    m.mean0[j] /= static_cast<double>(n0);
    m.mean1[j] /= static_cast<double>(n1);
  }
  for (std::size_t i = 0; i < data.n; ++i) {
    const bool pos = data.labels[i] == 1;
    const auto& mean = pos ? m.mean1 : m.mean0;
    auto& var = pos ? m.var1 : m.var0;
    const auto x = data.row(i);
    for (std::size_t j = 0; j < d; ++j) var[j] += (x[j] - mean[j]) * (x[j] - mean[j]);
  }
  for (std::size_t j = 0; j < d; ++j) {
    m.var0[j] = std::max(m.var0[j] / static_cast<double>(n0), 1e-6);
    m.var1[j] = std::max(m.var1[j] / static_cast<double>(n1), 1e-6);
  }
  m.prior1 = static_cast<double>(n1) / static_cast<double>(data.n);
  return Predictor(m, d, {{"family", "naive-bayes"}, {"variance_floor", 1e-6}});
}

nlohmann::json steps_to_json(const std::vector<BoostStep>& steps) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& s : steps) out.push_back({{"delta", s.delta.to_json()}, {"step", s.step}});
  return out;
}

}  // namespace

std::string to_string(ViewLevel level) {
  switch (level) {
    case ViewLevel::kPredictionOnly:
      return "prediction-only";
    case ViewLevel::kInputAware:
      return "input-aware";
    case ViewLevel::kInternalRepresentation:
      return "internal-representation";
    case ViewLevel::kExternalRepresentation:
      return "external-representation";
  }
  return "";
}

ViewLevel view_level_from_string(const std::string& s) {
  for (ViewLevel level :
       {ViewLevel::kPredictionOnly, ViewLevel::kInputAware,
        ViewLevel::kInternalRepresentation, ViewLevel::kExternalRepresentation}) {
    if (to_string(level) == s) return level;
  }
  throw ConfigError("unknown view level: " + s);
}

Predictor::Predictor(Model model, std::size_t arity, nlohmann::json training_log)
    : model_(std::move(model)), arity_(arity), log_(std::move(training_log)) {
  if (const auto* c = std::get_if<ConstantModel>(&model_)) {
    if (!(c->value >= 0.0 && c->value <= 1.0)) {
      throw DomainError("constant prediction must lie in [0, 1]");
    }
  }
  if (const auto* t = std::get_if<TableModel>(&model_)) {
    for (const auto& [key, v] : t->table) {
      if (!(v >= 0.0 && v <= 1.0)) throw DomainError("table value outside [0, 1]");
    }
    if (!(t->fallback >= 0.0 && t->fallback <= 1.0)) {
      throw DomainError("table fallback outside [0, 1]");
    }
  }
  if (const auto* b = std::get_if<BlendModel>(&model_)) {
    if (!(b->theta >= 0.0 && b->theta <= 1.0) ||
        !(b->target >= 0.0 && b->target <= 1.0)) {
      throw ConfigError("blend needs theta and target in [0, 1]");
    }
  }
}

Predictor Predictor::constant(double value) { return Predictor(ConstantModel{value}, 0); }

double Predictor::predict(std::span<const double> x) const {
  if (arity_ != 0 && x.size() != arity_) {
    throw ArityError("predictor expects " + std::to_string(arity_) +
                     " features, got " + std::to_string(x.size()));
  }
  return std::visit(
      Overloaded{
          [](const ConstantModel& m) { return m.value; },
          [&](const TableModel& m) {
            auto it = m.table.find(std::vector<double>(x.begin(), x.end()));
            return it == m.table.end() ? m.fallback : it->second;
          },
          [&](const LogisticModel& m) { return sigmoid(logistic_margin(m, x)); },
          [&](const NaiveBayesModel& m) {
            double t = std::log(m.prior1) - std::log(1.0 - m.prior1);
            for (std::size_t j = 0; j < x.size(); ++j) {
              t += gaussian_log_density(x[j], m.mean1[j], m.var1[j]) -
                   gaussian_log_density(x[j], m.mean0[j], m.var0[j]);
            }
            return sigmoid(t);
          },
          [&](const TreeModel& m) { return clamp01(m.tree.predict(x)); },
          [&](const StumpModel& m) { return clamp01(m.ensemble.predict(x)); },
          [&](const BlendModel& m) {
            return (1.0 - m.theta) * m.base->predict(x) + m.theta * m.target;
          },
          [&](const BoostedModel& m) {
            double p = m.base ? m.base->predict(x) : 0.5;
            const bool with_inputs = m.level == ViewLevel::kInputAware;
            std::vector<double> phi(1 + (with_inputs ? x.size() : 0));
            if (with_inputs) std::copy(x.begin(), x.end(), phi.begin() + 1);
            for (const auto& s : m.steps) {
              phi[0] = p;
              p = clamp01(p + s.step * s.delta(phi));
            }
            return p;
          },
      },
      model_);
}

std::vector<double> Predictor::predict_all(const Dataset& data) const {
  std::vector<double> out(data.n);
  for (std::size_t i = 0; i < data.n; ++i) out[i] = predict(data.row(i));
  return out;
}

std::string Predictor::family() const {
  return std::visit(Overloaded{
                        [](const ConstantModel&) { return "constant"; },
                        [](const TableModel&) { return "table"; },
                        [](const LogisticModel&) { return "logistic"; },
                        [](const NaiveBayesModel&) { return "naive-bayes"; },
                        [](const TreeModel&) { return "tree"; },
                        [](const StumpModel&) { return "stump-ensemble"; },
                        [](const BlendModel&) { return "blend"; },
                        [](const BoostedModel&) { return "boosted"; },
                    },
                    model_);
}

bool Predictor::has_internal_representation() const {
  return std::holds_alternative<TreeModel>(model_) ||
         std::holds_alternative<StumpModel>(model_) ||
         std::holds_alternative<LogisticModel>(model_);
}

std::size_t Predictor::internal_dim() const {
  if (const auto* t = std::get_if<TreeModel>(&model_)) {
    return static_cast<std::size_t>(t->tree.leaf_count());
  }
  if (const auto* s = std::get_if<StumpModel>(&model_)) return s->ensemble.terms().size();
  if (std::holds_alternative<LogisticModel>(model_)) return 1;
  throw UnsupportedRepresentation("family '" + family() +
                                  "' has no internal representation");
}

std::vector<double> Predictor::internal_representation(std::span<const double> x) const {
  if (arity_ != 0 && x.size() != arity_) throw ArityError("predictor arity mismatch");
  if (const auto* t = std::get_if<TreeModel>(&model_)) {
    std::vector<double> onehot(static_cast<std::size_t>(t->tree.leaf_count()), 0.0);
    onehot[static_cast<std::size_t>(t->tree.leaf_index(x))] = 1.0;
    return onehot;
  }
  if (const auto* s = std::get_if<StumpModel>(&model_)) return s->ensemble.stump_outputs(x);
  if (const auto* l = std::get_if<LogisticModel>(&model_)) return {logistic_margin(*l, x)};
  throw UnsupportedRepresentation("family '" + family() +
                                  "' has no internal representation");
}

nlohmann::json Predictor::to_json() const {
  nlohmann::json j = std::visit(
      Overloaded{
          [](const ConstantModel& m) -> nlohmann::json { return {{"value", m.value}}; },
          [](const TableModel& m) -> nlohmann::json {
            nlohmann::json entries = nlohmann::json::array();
            for (const auto& [key, v] : m.table) entries.push_back({{"key", key}, {"value", v}});
            return {{"fallback", m.fallback}, {"entries", entries}};
          },
          [](const LogisticModel& m) -> nlohmann::json {
            return {{"weights", m.weights}, {"bias", m.bias}};
          },
          [](const NaiveBayesModel& m) -> nlohmann::json {
            return {{"prior1", m.prior1}, {"mean0", m.mean0}, {"var0", m.var0},
                    {"mean1", m.mean1}, {"var1", m.var1}};
          },
          [](const TreeModel& m) -> nlohmann::json { return {{"tree", m.tree.to_json()}}; },
          [](const StumpModel& m) -> nlohmann::json {
            return {{"ensemble", m.ensemble.to_json()}};
          },
          [](const BlendModel& m) -> nlohmann::json {
            return {{"base", m.base->to_json()}, {"theta", m.theta}, {"target", m.target}};
          },
          [](const BoostedModel& m) -> nlohmann::json {
            return {{"base", m.base ? m.base->to_json() : nlohmann::json()},
                    {"level", to_string(m.level)},
                    {"steps", steps_to_json(m.steps)}};
          },
      },
      model_);
  j["family"] = family();
  j["arity"] = arity_;
  j["training_log"] = log_;
  return j;
}

Predictor Predictor::from_json(const nlohmann::json& j) {
  const std::string family = j.at("family").get<std::string>();
  const std::size_t arity = j.value("arity", std::size_t{0});
  const nlohmann::json log = j.value("training_log", nlohmann::json::object());
  if (family == "constant") return Predictor(ConstantModel{j.at("value").get<double>()}, 0, log);
  if (family == "table") {
    TableModel m;
    m.fallback = j.at("fallback").get<double>();
    for (const auto& e : j.at("entries")) {
      m.table[e.at("key").get<std::vector<double>>()] = e.at("value").get<double>();
    }
    return Predictor(std::move(m), arity, log);
  }
  if (family == "logistic") {
    return Predictor(LogisticModel{j.at("weights").get<std::vector<double>>(),
                                   j.at("bias").get<double>()},
                     arity, log);
  }
  if (family == "naive-bayes") {
    NaiveBayesModel m;
    m.prior1 = j.at("prior1").get<double>();
    m.mean0 = j.at("mean0").get<std::vector<double>>();
    m.var0 = j.at("var0").get<std::vector<double>>();
    m.mean1 = j.at("mean1").get<std::vector<double>>();
    m.var1 = j.at("var1").get<std::vector<double>>();
    return Predictor(std::move(m), arity, log);
  }
  if (family == "tree") {
    return Predictor(TreeModel{RegressionTree::from_json(j.at("tree"))}, arity, log);
  }
  if (family == "stump-ensemble") {
    return Predictor(StumpModel{StumpEnsemble::from_json(j.at("ensemble"))}, arity, log);
  }
  if (family == "blend") {
    return Predictor(BlendModel{std::make_shared<const Predictor>(from_json(j.at("base"))),
                                j.at("theta").get<double>(), j.at("target").get<double>()},
                     arity, log);
  }
  if (family == "boosted") {
    BoostedModel m;
    if (!j.at("base").is_null()) {
      m.base = std::make_shared<const Predictor>(from_json(j.at("base")));
    }
    m.level = view_level_from_string(j.at("level").get<std::string>());
    for (const auto& s : j.at("steps")) {
      m.steps.push_back({TestFunction::from_json(s.at("delta")), s.at("step").get<double>()});
    }
    return Predictor(std::move(m), arity, log);
  }
  throw ConfigError("unknown predictor family: " + family);
}

PredictorSpec PredictorSpec::from_json(const nlohmann::json& j) {
  PredictorSpec s;
  if (j.is_string()) {
    s.family = j.get<std::string>();
    return s;
  }
  s.family = j.value("family", s.family);
  s.value = j.value("value", s.value);
  s.learning_rate = j.value("learning_rate", s.learning_rate);
  s.iterations = j.value("iterations", s.iterations);
  s.max_depth = j.value("max_depth", s.max_depth);
  s.min_leaf = j.value("min_leaf", s.min_leaf);
  s.rounds = j.value("rounds", s.rounds);
  s.theta = j.value("theta", s.theta);
  s.target = j.value("target", s.target);
  if (j.contains("base")) s.base = std::make_shared<PredictorSpec>(from_json(j.at("base")));
  return s;
}

nlohmann::json PredictorSpec::to_json() const {
  nlohmann::json j = {{"family", family}};
  if (family == "constant") j["value"] = value;
  if (family == "logistic") {
    j["learning_rate"] = learning_rate;
    j["iterations"] = iterations;
  }
  if (family == "tree") {
    j["max_depth"] = max_depth;
    j["min_leaf"] = min_leaf;
  }
  if (family == "stump-ensemble") {
    j["rounds"] = rounds;
    j["learning_rate"] = learning_rate;
    j["min_leaf"] = min_leaf;
  }
  if (family == "blend") {
    j["theta"] = theta;
    j["target"] = target;
    if (base) j["base"] = base->to_json();
  }
  return j;
}

Predictor fit(const PredictorSpec& spec, const Dataset& data) {
  const std::string& f = spec.family;
  if (f == "constant") return Predictor::constant(spec.value);
  require_nonempty(data);
  if (f == "table") return fit_table(data);
  if (f == "logistic") return fit_logistic(spec, data);
  if (f == "naive-bayes") return fit_naive_bayes(data);
  const RowMatrix x{data.features, data.n, data.d};
  const std::vector<double> y = labels_as_double(data);
  if (f == "tree") {
    RegressionTree::Options o;
    o.max_depth = spec.max_depth;
    o.min_leaf = spec.min_leaf;
    return Predictor(TreeModel{RegressionTree::fit(x, y, o)}, data.d,
                     {{"family", "tree"}, {"max_depth", o.max_depth}, {"min_leaf", o.min_leaf}});
  }
  if (f == "stump-ensemble") {
    StumpEnsemble::Options o;
    o.rounds = spec.rounds;
    o.learning_rate = spec.learning_rate;
    o.min_leaf = spec.min_leaf;
    return Predictor(StumpModel{StumpEnsemble::fit(x, y, o)}, data.d,
                     {{"family", "stump-ensemble"}, {"rounds", o.rounds}});
  }
  if (f == "blend") {
    if (!spec.base) throw ConfigError("blend needs a base spec");
    auto base = std::make_shared<const Predictor>(fit(*spec.base, data));
    return Predictor(BlendModel{base, spec.theta, spec.target}, data.d,
                     {{"family", "blend"}, {"theta", spec.theta}, {"target", spec.target}});
  }
  throw ConfigError("unknown predictor family: " + f);
}

Predictor fit_table(const Dataset& data) {
  require_nonempty(data);
  std::map<std::vector<double>, std::pair<double, std::size_t>> sums;
  for (std::size_t i = 0; i < data.n; ++i) {
    const auto x = data.row(i);
    auto& [sum, count] = sums[std::vector<double>(x.begin(), x.end())];
    sum += data.labels[i];
    ++count;
  }
  TableModel m;
  for (const auto& [key, sc] : sums) m.table[key] = sc.first / static_cast<double>(sc.second);
  m.fallback = data.base_rate();
  return Predictor(std::move(m), data.d,
                   {{"family", "table"}, {"keys", m.table.size()}});
}

std::vector<double> FeatureView::flatten() const {
  std::vector<double> out{prediction};
  out.insert(out.end(), inputs.begin(), inputs.end());
  out.insert(out.end(), representation.begin(), representation.end());
  return out;
}

FeatureView feature_view(ViewLevel level, const Predictor& p, std::span<const double> x,
                         std::optional<std::span<const double>> external) {
  const bool wants_external = level == ViewLevel::kExternalRepresentation;
  if (wants_external != external.has_value()) {
    throw ConfigError("an external representation is required exactly at the "
                      "external-representation level");
  }
  FeatureView view;
  view.level = level;
  view.prediction = p.predict(x);
  if (level != ViewLevel::kPredictionOnly) view.inputs.assign(x.begin(), x.end());
  if (level == ViewLevel::kInternalRepresentation) {
    view.representation = p.internal_representation(x);
  } else if (wants_external) {
    view.representation.assign(external->begin(), external->end());
  }
  for (double v : view.flatten()) {
    if (!std::isfinite(v)) throw DomainError("feature view contains a non-finite value");
  }
  return view;
}

std::vector<double> ViewTable::predictions() const {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = prediction(i);
  return out;
}

ViewTable ViewTable::from_columns(ViewLevel level, std::span<const double> predictions,
                                  std::span<const double> extras, std::size_t extra_dim) {
  ViewTable t;
  t.level = level;
  t.n = predictions.size();
  t.width = 1 + extra_dim;
  if (extras.size() != t.n * extra_dim) throw ArityError("view extras have the wrong size");
  t.values.resize(t.n * t.width);
  for (std::size_t i = 0; i < t.n; ++i) {
    t.values[i * t.width] = predictions[i];
    std::copy_n(extras.begin() + static_cast<std::ptrdiff_t>(i * extra_dim), extra_dim,
                t.values.begin() + static_cast<std::ptrdiff_t>(i * t.width + 1));
  }
  return t;
}

ViewTable ViewTable::with_predictions(std::span<const double> predictions) const {
  if (predictions.size() != n) throw ArityError("prediction count mismatch");
  ViewTable t = *this;
  for (std::size_t i = 0; i < n; ++i) t.values[i * width] = predictions[i];
  return t;
}

ViewTable build_views(ViewLevel level, const Predictor& p, const Dataset& data) {
  if (level == ViewLevel::kExternalRepresentation && data.external_dim == 0) {
    throw DataError("dataset has no external representation");
  }
  ViewTable t;
  t.level = level;
  t.n = data.n;
  t.values.clear();
  for (std::size_t i = 0; i < data.n; ++i) {
    std::optional<std::span<const double>> ext;
    if (level == ViewLevel::kExternalRepresentation) ext = data.external_row(i);
    const auto flat = feature_view(level, p, data.row(i), ext).flatten();
    if (i == 0) t.width = flat.size();
    t.values.insert(t.values.end(), flat.begin(), flat.end());
  }
  if (data.n == 0) {
    t.width = 1;
    if (level != ViewLevel::kPredictionOnly) t.width += data.d;
    if (level == ViewLevel::kInternalRepresentation) t.width += p.internal_dim();
    if (level == ViewLevel::kExternalRepresentation) t.width += data.external_dim;
  }
  return t;
}

}  // namespace losspred
