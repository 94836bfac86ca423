#include "losspred/multicalibration.h"

#include <algorithm>
#include <cmath>

#include "losspred/error.h"
#include "losspred/mc_boost.h"

namespace losspred {
namespace {

void check_labels(std::size_t n, std::span<const int> labels) {
  if (labels.size() != n) throw ArityError("label count mismatch");
}

std::vector<int> masked_labels(const Dataset& data, const Mask& mask) {
  std::vector<int> out;
  for (std::size_t i = 0; i < data.n; ++i) {
    if (mask[i]) out.push_back(data.labels[i]);
  }
  return out;
}

}  // namespace

double signed_correlation(const TestFunction& c, const ViewTable& views,
                          std::span<const int> labels) {
  check_labels(views.n, labels);
  if (views.n == 0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < views.n; ++i) {
    const auto phi = views.row(i);
    total += c(phi) * (labels[i] - phi[0]);
  }
  return total / static_cast<double>(views.n);
}

nlohmann::json MceReport::to_json() const {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& [id, corr] : per_function) per.push_back({{"id", id}, {"correlation", corr}});
  return {{"value", value},
          {"argmax", argmax},
          {"argmax_id", argmax_id},
          {"argmax_function", argmax_json},
          {"per_function", per},
          {"n", n}};
}

MceReport mce_finite(std::span<const TestFunction> functions, const ViewTable& views,
                     std::span<const int> labels) {
  if (functions.empty()) throw ConfigError("test class is empty");
  MceReport r;
  r.n = views.n;
  r.value = -1.0;
  for (std::size_t k = 0; k < functions.size(); ++k) {
    const double corr = signed_correlation(functions[k], views, labels);
    r.per_function.emplace_back(functions[k].id(), corr);
    if (std::abs(corr) > r.value) {
      r.value = std::abs(corr);
      r.argmax = k;
    }
  }
  r.argmax_id = functions[r.argmax].id();
  r.argmax_json = functions[r.argmax].to_json();
  return r;
}

MceReport mce_finite(std::span<const TestFunction> functions, const Predictor& p,
                     ViewLevel level, const Dataset& data) {
  return mce_finite(functions, build_views(level, p, data), data.labels);
}

std::vector<TestFunction> loss_class_functions(std::span<const LossPredictor> predictors,
                                               std::span<const ProperLoss> losses) {
  std::vector<TestFunction> out;
  for (const auto& loss : losses) {
    for (const auto& f : predictors) out.push_back(witness_from_lp(f, loss));
  }
  return out;
}

nlohmann::json LossClassReport::to_json() const {
  return {{"mce", mce.to_json()},
          {"max_advantage", max_advantage},
          {"bound_holds", bound_holds}};
}

LossClassReport mce_loss_class(std::span<const LossPredictor> predictors,
                               std::span<const ProperLoss> losses,
                               const ViewTable& views, std::span<const int> labels) {
  LossClassReport r;
  const auto functions = loss_class_functions(predictors, losses);
  r.mce = mce_finite(functions, views, labels);
  r.max_advantage = -INFINITY;
  for (const auto& loss : losses) {
    for (const auto& f : predictors) {
      r.max_advantage = std::max(r.max_advantage, advantage(f, loss, views, labels).advantage);
    }
  }
  r.bound_holds = r.max_advantage <= 2.0 * r.mce.value + 1e-9;
  return r;
}

double binned_ce(std::span<const double> predictions, std::span<const int> labels,
                 int bins) {
  if (bins < 1) throw ConfigError("bins must be >= 1");
  check_labels(predictions.size(), labels);
  if (predictions.empty()) return 0.0;
  std::vector<double> sum_p(bins, 0.0), sum_y(bins, 0.0);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const int b = std::min(bins - 1, static_cast<int>(predictions[i] * bins));
    sum_p[b] += predictions[i];
    sum_y[b] += labels[i];
  }
  // sum_b (n_b / n) |mean_b(y) - mean_b(p)| == sum_b |sum_y - sum_p| / n.
  double total = 0.0;
  for (int b = 0; b < bins; ++b) total += std::abs(sum_y[b] - sum_p[b]);
  return total / static_cast<double>(predictions.size());
}

double binned_ce(const Predictor& p, const Dataset& data, int bins) {
  return binned_ce(p.predict_all(data), data.labels, bins);
}

double smoothed_ce(std::span<const double> predictions, std::span<const int> labels,
                   double bandwidth) {
  if (!(bandwidth > 0.0)) throw ConfigError("bandwidth must be > 0");
  check_labels(predictions.size(), labels);
  if (predictions.empty()) return 0.0;
  const double step = std::min(1.0 / 512.0, bandwidth / 4.0);
  const int cells = static_cast<int>(std::ceil(1.0 / step));
  const double h = 1.0 / cells;
  std::vector<double> residual(static_cast<std::size_t>(cells) + 1, 0.0);
  const double norm = 1.0 / (bandwidth * std::sqrt(2.0 * M_PI));
  const double reach = 8.0 * bandwidth;
  const double n = static_cast<double>(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double p = predictions[i];
    const double r = (labels[i] - p) / n;
    // Mirror images about 0 and 1 keep the kernel mass inside [0, 1].
    for (double centre : {p, -p, 2.0 - p}) {
      const int lo = std::max(0, static_cast<int>(std::floor((centre - reach) / h)));
      const int hi = std::min(cells, static_cast<int>(std::ceil((centre + reach) / h)));
      for (int k = lo; k <= hi; ++k) {
        const double u = (k * h - centre) / bandwidth;
        residual[k] += r * norm * std::exp(-0.5 * u * u);
      }
    }
  }
  double total = 0.0;
  for (int k = 0; k <= cells; ++k) {
    const double w = (k == 0 || k == cells) ? 0.5 : 1.0;
    total += w * std::abs(residual[k]);
  }
  return total * h;
}

double smoothed_ce(const Predictor& p, const Dataset& data, double bandwidth) {
  return smoothed_ce(p.predict_all(data), data.labels, bandwidth);
}

CalibrationParams CalibrationParams::from_json(const nlohmann::json& j) {
  CalibrationParams c;
  const std::string metric = j.value("metric", std::string("smoothed"));
  if (metric == "smoothed") {
    c.metric = CalibrationMetric::kSmoothed;
  } else if (metric == "binned") {
    c.metric = CalibrationMetric::kBinned;
  } else {
    throw ConfigError("unknown calibration metric: " + metric);
  }
  c.bins = j.value("bins", c.bins);
  c.bandwidth = j.value("bandwidth", c.bandwidth);
  return c;
}

nlohmann::json CalibrationParams::to_json() const {
  return {{"metric", metric == CalibrationMetric::kSmoothed ? "smoothed" : "binned"},
          {"bins", bins},
          {"bandwidth", bandwidth}};
}

double calibration_error(std::span<const double> predictions, std::span<const int> labels,
                         const CalibrationParams& params) {
  return params.metric == CalibrationMetric::kBinned
             ? binned_ce(predictions, labels, params.bins)
             : smoothed_ce(predictions, labels, params.bandwidth);
}

SubgroupCe max_subgroup_ce(std::span<const double> predictions, const Dataset& data,
                           const CalibrationParams& params) {
  check_labels(data.n, std::span<const int>(data.labels));
  if (predictions.size() != data.n) throw ArityError("prediction count mismatch");
  if (data.subgroups.empty()) throw EmptySubgroup("dataset has no subgroups");
  SubgroupCe r;
  r.value = -1.0;
  for (const auto& [name, mask] : data.subgroups) {
    std::vector<double> p;
    for (std::size_t i = 0; i < data.n; ++i) {
      if (mask[i]) p.push_back(predictions[i]);
    }
    if (p.empty()) {
      r.skipped.push_back(name);
      continue;
    }
    const double v = calibration_error(p, masked_labels(data, mask), params);
    r.per_group.emplace_back(name, v);
    if (v > r.value) {
      r.value = v;
      r.subgroup = name;
    }
  }
  if (r.per_group.empty()) throw EmptySubgroup("every subgroup is empty");
  return r;
}

SubgroupCe max_subgroup_ce(const Predictor& p, const Dataset& data,
                           const CalibrationParams& params) {
  return max_subgroup_ce(p.predict_all(data), data, params);
}

nlohmann::json PceReport::to_json() const {
  return {{"raw_max", raw_max},
          {"argmax", argmax},
          {"lambda", lambda},
          {"epsilon", epsilon},
          {"upper_bound", upper_bound}};
}

PceReport pce_estimate(std::span<const double> predictions, std::span<const int> labels,
                       const Basis& basis) {
  check_labels(predictions.size(), labels);
  PceReport r;
  r.lambda = basis.lambda;
  r.epsilon = basis.epsilon;
  const double n = static_cast<double>(std::max<std::size_t>(1, predictions.size()));
  r.raw_max = -1.0;
  for (const auto& g : basis.functions) {
    double total = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
      const double phi[1] = {predictions[i]};
      total += g(phi) * (labels[i] - predictions[i]);
    }
    const double corr = std::abs(total / n);
    if (corr > r.raw_max) {
      r.raw_max = corr;
      r.argmax = g.id();
    }
  }
  r.raw_max = std::max(r.raw_max, 0.0);
  r.upper_bound = r.lambda * r.raw_max + r.epsilon;
  return r;
}

PceReport pce_estimate(const Predictor& p, const Dataset& data, const Basis& basis) {
  return pce_estimate(p.predict_all(data), data.labels, basis);
}

nlohmann::json SandwichReport::to_json() const {
  return {{"max_advantage", max_advantage},
          {"mce", mce},
          {"max_advantage_augmented", max_advantage_augmented},
          {"grid_tolerance", grid_tolerance},
          {"beta_grid", beta_grid},
          {"lower_holds", lower_holds},
          {"upper_holds", upper_holds}};
}

SandwichReport sandwich_check(std::span<const LossPredictor> predictors,
                              const ProperLoss& loss, const ViewTable& views,
                              std::span<const int> labels, int beta_grid,
                              double grid_tolerance) {
  if (beta_grid < 3) throw ConfigError("beta grid needs at least 3 points");
  if (predictors.empty()) throw ConfigError("loss predictor class is empty");
  check_labels(views.n, labels);
  SandwichReport r;
  r.beta_grid = beta_grid;
  r.grid_tolerance = grid_tolerance >= 0.0 ? grid_tolerance : 2.0 / (beta_grid - 1);

  const std::size_t n = views.n;
  std::vector<double> realized(n), sep(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = views.prediction(i);
    realized[i] = eval_loss(loss, labels[i], p);
    sep[i] = loss.entropy(p);
  }
  r.max_advantage = -INFINITY;
  r.max_advantage_augmented = -INFINITY;
  std::vector<double> f(n);
  for (const auto& lp : predictors) {
    r.max_advantage = std::max(r.max_advantage, advantage(lp, loss, views, labels).advantage);
    for (std::size_t i = 0; i < n; ++i) f[i] = lp(views.row(i));
    for (int k = 0; k < beta_grid; ++k) {
      const double beta = -1.0 + 2.0 * k / (beta_grid - 1);
      double sep_err = 0.0, lp_err = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double v = std::clamp((1.0 - beta) * sep[i] + beta * f[i], 0.0, 1.0);
        sep_err += (realized[i] - sep[i]) * (realized[i] - sep[i]);
        lp_err += (realized[i] - v) * (realized[i] - v);
      }
      r.max_advantage_augmented =
          std::max(r.max_advantage_augmented, (sep_err - lp_err) / static_cast<double>(n));
    }
  }
  const auto functions = loss_class_functions(predictors, std::span<const ProperLoss>(&loss, 1));
  r.mce = mce_finite(functions, views, labels).value;
  r.lower_holds = r.max_advantage / 2.0 <= r.mce + 1e-9;
  r.upper_holds =
      r.mce <= std::sqrt(std::max(0.0, r.max_advantage_augmented)) + r.grid_tolerance;
  if (!r.lower_holds || !r.upper_holds) {
    throw SandwichViolation("sandwich inequality failed: A=" + std::to_string(r.max_advantage) +
                            " M=" + std::to_string(r.mce) +
                            " B=" + std::to_string(r.max_advantage_augmented));
  }
  return r;
}

}  // namespace losspred
