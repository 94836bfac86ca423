#include "losspred/losses.h"

#include <algorithm>
#include <cmath>

#include "losspred/error.h"
#include "losspred/rng.h"

namespace losspred {
namespace {

constexpr double kRangeSlack = 1e-9;
constexpr int kFineCells = 4096;

void check_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw DomainError(std::string(what) + " must lie in [0,1], got " +
                      std::to_string(v));
  }
}

double binary_entropy_nats(double v) {
  return -v * std::log(v) - (1.0 - v) * std::log1p(-v);
}

// Antiderivative of a continuous piecewise-linear profile given by knots and
// knot values, evaluated at x.
double integrate_profile(const std::vector<double>& knots,
                         const std::vector<double>& heights, double x) {
  double total = 0.0;
  for (std::size_t j = 0; j + 1 < knots.size(); ++j) {
    const double a = knots[j];
    const double b = knots[j + 1];
    if (x <= a) break;
    const double hi = std::min(x, b);
    const double slope = (heights[j + 1] - heights[j]) / (b - a);
    const double at_hi = heights[j] + slope * (hi - a);
    total += 0.5 * (heights[j] + at_hi) * (hi - a);
  }
  return total;
}

}  // namespace

ProperLoss ProperLoss::squared() { return ProperLoss("squared", Form::kSquared); }

ProperLoss ProperLoss::half_squared() {
  return ProperLoss("half-squared", Form::kHalfSquared);
}

ProperLoss ProperLoss::clipped_cross_entropy(double eta) {
  if (!(eta > 0.0 && eta < 0.5)) {
    throw DomainError("clipping eta must lie in (0, 0.5)");
  }
  ProperLoss loss("clipped-cross-entropy", Form::kClippedCrossEntropy);
  loss.eta_ = eta;
  return loss;
}

ProperLoss ProperLoss::piecewise_linear(std::string name,
                                        std::vector<double> breakpoints,
                                        std::vector<double> values) {
  if (breakpoints.size() < 2 || breakpoints.size() != values.size()) {
    throw DomainError("piecewise entropy needs >= 2 matching breakpoints/values");
  }
  if (breakpoints.front() != 0.0 || breakpoints.back() != 1.0) {
    throw DomainError("piecewise entropy breakpoints must span [0,1]");
  }
  std::vector<double> slopes(breakpoints.size() - 1);
  for (std::size_t j = 0; j + 1 < breakpoints.size(); ++j) {
    const double width = breakpoints[j + 1] - breakpoints[j];
    if (!(width > 0.0)) {
      throw DomainError("piecewise entropy breakpoints must increase strictly");
    }
    slopes[j] = (values[j + 1] - values[j]) / width;
  }
  for (double h : values) {
    if (!(h >= -kRangeSlack && h <= 1.0 + kRangeSlack)) {
      throw DomainError("entropy values must lie in [0,1]");
    }
  }
  for (std::size_t j = 0; j < slopes.size(); ++j) {
    if (std::abs(slopes[j]) > 1.0 + kRangeSlack) {
      throw DomainError("entropy slopes must lie in [-1,1]");
    }
    if (j > 0 && slopes[j] > slopes[j - 1] + kRangeSlack) {
      throw DomainError("entropy must be concave (non-increasing slopes)");
    }
    // On a linear piece, loss(0, .) is the intercept and loss(1, .) the
    // intercept plus slope; both are constant across the piece.
    const double intercept = values[j] - slopes[j] * breakpoints[j];
    for (double partial : {intercept, intercept + slopes[j]}) {
      if (partial < -kRangeSlack || partial > 1.0 + kRangeSlack) {
        throw DomainError("piecewise entropy induces a loss outside [0,1]");
      }
    }
  }
  ProperLoss loss(std::move(name), Form::kPiecewise);
  loss.breakpoints_ = std::move(breakpoints);
  loss.values_ = std::move(values);
  loss.slopes_ = std::move(slopes);
  return loss;
}

ProperLoss ProperLoss::from_slopes(std::string name,
                                   std::span<const double> slopes,
                                   std::span<const double> interior_breakpoints,
                                   double h0) {
  if (slopes.empty() || interior_breakpoints.size() + 1 != slopes.size()) {
    throw DomainError("need exactly one more slope than interior breakpoints");
  }
  std::vector<double> breakpoints{0.0};
  breakpoints.insert(breakpoints.end(), interior_breakpoints.begin(),
                     interior_breakpoints.end());
  breakpoints.push_back(1.0);
  std::vector<double> values{h0};
  for (std::size_t j = 0; j < slopes.size(); ++j) {
    values.push_back(values.back() +
                     slopes[j] * (breakpoints[j + 1] - breakpoints[j]));
  }
  return piecewise_linear(std::move(name), std::move(breakpoints),
                          std::move(values));
}

LossKind ProperLoss::kind() const {
  return form_ == Form::kPiecewise ? LossKind::kPiecewiseLinear
                                   : LossKind::kClosedForm;
}

double ProperLoss::entropy(double v) const {
  check_unit(v, "prediction");
  switch (form_) {
    case Form::kSquared:
      return v * (1.0 - v);
    case Form::kHalfSquared:
      return 0.5 * v * (1.0 - v);
    case Form::kClippedCrossEntropy: {
      const double scale = std::log(1.0 / eta_);
      const double c = std::clamp(v, eta_, 1.0 - eta_);
      // Tangent extension outside the clipping window.
      return (binary_entropy_nats(c) + (v - c) * std::log((1.0 - c) / c)) /
             scale;
    }
    case Form::kPiecewise: {
      auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), v);
      std::size_t j = static_cast<std::size_t>(it - breakpoints_.begin());
      j = std::clamp<std::size_t>(j, 1, breakpoints_.size() - 1) - 1;
      return values_[j] + slopes_[j] * (v - breakpoints_[j]);
    }
  }
  return 0.0;
}

double ProperLoss::superderivative(double v) const {
  check_unit(v, "prediction");
  switch (form_) {
    case Form::kSquared:
      return 1.0 - 2.0 * v;
    case Form::kHalfSquared:
      return 0.5 - v;
    case Form::kClippedCrossEntropy: {
      const double c = std::clamp(v, eta_, 1.0 - eta_);
      return std::log((1.0 - c) / c) / std::log(1.0 / eta_);
    }
    case Form::kPiecewise: {
      auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), v);
      const std::size_t j = static_cast<std::size_t>(it - breakpoints_.begin());
      if (j == 0) return slopes_.front();
      if (j == breakpoints_.size() - 1 && v == 1.0) return slopes_.back();
      if (breakpoints_[j] == v) return 0.5 * (slopes_[j - 1] + slopes_[j]);
      return slopes_[j - 1];
    }
  }
  return 0.0;
}

nlohmann::json ProperLoss::to_json() const {
  if (!recipe_.is_null()) return recipe_;
  nlohmann::json j;
  j["name"] = name_;
  switch (form_) {
    case Form::kSquared:
    case Form::kHalfSquared:
      j["kind"] = "closed-form";
      break;
    case Form::kClippedCrossEntropy:
      j["kind"] = "closed-form";
      j["eta"] = eta_;
      break;
    case Form::kPiecewise:
      j["kind"] = "piecewise-linear";
      j["breakpoints"] = breakpoints_;
      j["values"] = values_;
      break;
  }
  return j;
}

ProperLoss ProperLoss::from_json(const nlohmann::json& j) {
  if (j.is_string()) return from_json(nlohmann::json{{"name", j}});
  if (j.value("kind", std::string()) == "sampled-lipschitz") {
    return sample_lipschitz_loss(j.at("seed").get<std::uint64_t>(),
                                 j.at("pieces").get<int>());
  }
  if (j.contains("breakpoints") || j.contains("values")) {
    return piecewise_linear(j.value("name", std::string("piecewise")),
                            j.at("breakpoints").get<std::vector<double>>(),
                            j.at("values").get<std::vector<double>>());
  }
  const std::string name = j.at("name").get<std::string>();
  if (name == "squared") return squared();
  if (name == "half-squared") return half_squared();
  if (name == "clipped-cross-entropy") {
    return clipped_cross_entropy(j.value("eta", 0.01));
  }
  throw DomainError("unknown loss: " + name);
}

double eval_loss(const ProperLoss& loss, int y, double v) {
  if (y != 0 && y != 1) throw DomainError("label must be 0 or 1");
  const double value =
      loss.entropy(v) + (static_cast<double>(y) - v) * loss.superderivative(v);
  if (value < -kRangeSlack || value > 1.0 + kRangeSlack) {
    throw RangeError("loss " + loss.name() + " left [0,1]: " +
                     std::to_string(value));
  }
  return std::clamp(value, 0.0, 1.0);
}

double expected_loss(const ProperLoss& loss, double p_star, double v) {
  check_unit(p_star, "p_star");
  return loss.entropy(v) + (p_star - v) * loss.superderivative(v);
}

double pointwise_gap(const ProperLoss& loss, double p_star, double v) {
  check_unit(p_star, "p_star");
  return (p_star - v) * loss.superderivative(v);
}

std::vector<double> blind_spots(const ProperLoss& loss, double grid_step,
                                double tol) {
  if (!(grid_step > 0.0 && grid_step <= 0.5)) {
    throw DomainError("grid_step must lie in (0, 0.5]");
  }
  std::vector<double> spots;
  const double inverse = 1.0 / grid_step;
  const double rounded = std::round(inverse);
  const bool integral = std::abs(inverse - rounded) < 1e-9 * rounded;
  const long count = integral ? static_cast<long>(rounded)
                              : static_cast<long>(std::floor(inverse));
  for (long k = 0; k <= count; ++k) {
    const double v = integral ? static_cast<double>(k) / rounded
                              : static_cast<double>(k) * grid_step;
    if (v > 1.0) break;
    if (std::abs(loss.superderivative(v)) <= tol) spots.push_back(v);
  }
  return spots;
}

ProperLoss sample_lipschitz_loss(std::uint64_t seed, int pieces) {
  if (pieces < 1) throw DomainError("pieces must be >= 1");
  Rng rng(seed);
  std::vector<double> knots{0.0};
  for (int j = 0; j + 1 < pieces; ++j) knots.push_back(rng.uniform());
  std::sort(knots.begin() + 1, knots.end());
  knots.push_back(1.0);

  // Segment j drops by m_j * width_j with m_j <= 1, so the total drop is at
  // most 1 and the profile stays inside [-1, 1].
  std::vector<double> drops(knots.size() - 1);
  double total_drop = 0.0;
  for (std::size_t j = 0; j < drops.size(); ++j) {
    drops[j] = rng.uniform() * (knots[j + 1] - knots[j]);
    total_drop += drops[j];
  }
  std::vector<double> heights{rng.uniform(-1.0 + total_drop, 1.0)};
  for (double d : drops) heights.push_back(heights.back() - d);

  std::vector<double> breakpoints(kFineCells + 1);
  std::vector<double> values(kFineCells + 1);
  for (int k = 0; k <= kFineCells; ++k) {
    breakpoints[k] = static_cast<double>(k) / kFineCells;
    values[k] = integrate_profile(knots, heights, breakpoints[k]);
  }
  // Shift H so that both partial losses land inside [0, 1]; the admissible
  // window is never empty because the profile has total variation <= 1.
  double lo = 0.0, hi = 0.0;
  for (int k = 0; k < kFineCells; ++k) {
    const double slope = (values[k + 1] - values[k]) * kFineCells;
    const double intercept = values[k] - slope * breakpoints[k];
    const double partial1 = intercept + slope;
    if (k == 0) {
      lo = std::min(intercept, partial1);
      hi = std::max(intercept, partial1);
    }
    lo = std::min({lo, intercept, partial1});
    hi = std::max({hi, intercept, partial1});
  }
  const double low_shift = -lo + 1e-12;
  const double high_shift = 1.0 - hi - 1e-12;
  const double shift = rng.uniform(low_shift, std::max(low_shift, high_shift));
  for (double& h : values) h += shift;
  ProperLoss loss = ProperLoss::piecewise_linear(
      "lipschitz-" + std::to_string(seed) + "-" + std::to_string(pieces),
      std::move(breakpoints), std::move(values));
  loss.recipe_ = {{"name", loss.name()},
                  {"kind", "sampled-lipschitz"},
                  {"seed", seed},
                  {"pieces", pieces}};
  return loss;
}

std::vector<ProperLoss> builtin_losses() {
  return {ProperLoss::squared(), ProperLoss::half_squared(),
          ProperLoss::clipped_cross_entropy()};
}

std::vector<double> unit_grid(int n) {
  std::vector<double> grid(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) grid[k] = static_cast<double>(k) / n;
  return grid;
}

}  // namespace losspred
