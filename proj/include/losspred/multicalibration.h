#ifndef LOSSPRED_MULTICALIBRATION_H_
#define LOSSPRED_MULTICALIBRATION_H_

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "losspred/dataset.h"
#include "losspred/loss_prediction.h"
#include "losspred/predictors.h"
#include "losspred/test_function.h"

namespace losspred {

struct Basis;

// mean_i c(phi_i) * (y_i - p_i), with p_i = phi_i[0].
double signed_correlation(const TestFunction& c, const ViewTable& views,
                          std::span<const int> labels);

struct MceReport {
  double value = 0.0;
  std::size_t argmax = 0;
  std::string argmax_id;
  nlohmann::json argmax_json;
  // (function id, signed correlation) in class order.
  std::vector<std::pair<std::string, double>> per_function;
  std::size_t n = 0;

  nlohmann::json to_json() const;
};

// Empirical max |E[c (y - p)]| over a finite class. The first maximizer in
// class order wins ties. Throws ConfigError for an empty class.
MceReport mce_finite(std::span<const TestFunction> functions, const ViewTable& views,
                     std::span<const int> labels);
MceReport mce_finite(std::span<const TestFunction> functions, const Predictor& p,
                     ViewLevel level, const Dataset& data);

// {(f - H_l(p)) H'_l(p) : f in F, l in Ls}, loss-major order.
std::vector<TestFunction> loss_class_functions(std::span<const LossPredictor> predictors,
                                               std::span<const ProperLoss> losses);

struct LossClassReport {
  MceReport mce;
  // Largest advantage of any f in F measured against any loss in Ls.
  double max_advantage = 0.0;
  bool bound_holds = true;  // max_advantage <= 2 * mce.value + 1e-9

  nlohmann::json to_json() const;
};

LossClassReport mce_loss_class(std::span<const LossPredictor> predictors,
                               std::span<const ProperLoss> losses,
                               const ViewTable& views, std::span<const int> labels);

// Equal-width bins over [0, 1]; p == 1 falls in the last bin.
double binned_ce(std::span<const double> predictions, std::span<const int> labels,
                 int bins);
double binned_ce(const Predictor& p, const Dataset& data, int bins);

// Kernel-smoothed calibration error: the integral over t in [0, 1] of
// |(1/n) sum_i K(t, p_i)(y_i - p_i)| with a Gaussian kernel reflected at 0
// and 1, by the trapezoid rule on a grid of step min(1/512, bandwidth / 4).
// A fixed-bandwidth proxy; no self-consistent bandwidth search.
double smoothed_ce(std::span<const double> predictions, std::span<const int> labels,
                   double bandwidth);
double smoothed_ce(const Predictor& p, const Dataset& data, double bandwidth);

enum class CalibrationMetric { kBinned, kSmoothed };

struct CalibrationParams {
  CalibrationMetric metric = CalibrationMetric::kSmoothed;
  int bins = 10;
  double bandwidth = 0.1;

  static CalibrationParams from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

double calibration_error(std::span<const double> predictions, std::span<const int> labels,
                         const CalibrationParams& params);

struct SubgroupCe {
  double value = 0.0;
  std::string subgroup;
  std::vector<std::pair<std::string, double>> per_group;
  // Empty subgroups, skipped; callers are expected to surface these.
  std::vector<std::string> skipped;
};

// Max of the metric over the dataset's subgroups (lexicographic order, first
// maximizer wins). Throws EmptySubgroup when no subgroup has rows.
SubgroupCe max_subgroup_ce(std::span<const double> predictions, const Dataset& data,
                           const CalibrationParams& params);
SubgroupCe max_subgroup_ce(const Predictor& p, const Dataset& data,
                           const CalibrationParams& params);

struct PceReport {
  double raw_max = 0.0;
  std::string argmax;
  double lambda = 0.0;
  double epsilon = 0.0;
  // lambda * raw_max + epsilon bounds |E[H'(p)(y - p)]| for every loss whose
  // superderivative the basis approximates.
  double upper_bound = 0.0;

  nlohmann::json to_json() const;
};

PceReport pce_estimate(std::span<const double> predictions, std::span<const int> labels,
                       const Basis& basis);
PceReport pce_estimate(const Predictor& p, const Dataset& data, const Basis& basis);

struct SandwichReport {
  double max_advantage = 0.0;            // A, over F
  double mce = 0.0;                      // M, unrescaled witnesses
  double max_advantage_augmented = 0.0;  // B, over the beta-augmented class
  double grid_tolerance = 0.0;
  int beta_grid = 0;
  bool lower_holds = false;  // A / 2 <= M + 1e-9
  bool upper_holds = false;  // M <= sqrt(B) + grid_tolerance

  nlohmann::json to_json() const;
};

// Throws SandwichViolation if either inequality fails; otherwise returns the
// measured quantities. beta runs over a uniform grid of `beta_grid` points in
// [-1, 1]; grid_tolerance defaults to the grid spacing.
SandwichReport sandwich_check(std::span<const LossPredictor> predictors,
                              const ProperLoss& loss, const ViewTable& views,
                              std::span<const int> labels, int beta_grid,
                              double grid_tolerance = -1.0);

}  // namespace losspred

#endif  // LOSSPRED_MULTICALIBRATION_H_
