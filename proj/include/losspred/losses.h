#ifndef LOSSPRED_LOSSES_H_
#define LOSSPRED_LOSSES_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace losspred {

enum class LossKind { kClosedForm, kPiecewiseLinear };

// A bounded proper loss for binary labels, held through its concave entropy
// H and a superderivative H'. The loss itself is always derived:
//
//   loss(y, v) = H(v) + (y - v) * H'(v)
//
// so loss(1, v) - loss(0, v) == H'(v) holds by construction.
//
// Piecewise-linear entropies store breakpoints 0 = b_0 < ... < b_k = 1 and
// the values H(b_i). At an interior breakpoint the superderivative is the
// average of the adjacent slopes.
class ProperLoss {
 public:
  // H(v) = v (1 - v).
  static ProperLoss squared();
  // H(v) = v (1 - v) / 2. 1-Lipschitz in the prediction.
  static ProperLoss half_squared();
  // Binary cross-entropy with predictions clipped to [eta, 1 - eta], divided
  // by ln(1/eta) so that the worst-case loss is exactly 1. Outside the
  // clipping window H is extended along its tangent, which makes
  // loss(y, v) == loss(y, clip(v)).
  static ProperLoss clipped_cross_entropy(double eta = 0.01);

  // Throws DomainError unless the data describes a concave entropy whose
  // loss stays inside [0, 1].
  static ProperLoss piecewise_linear(std::string name,
                                     std::vector<double> breakpoints,
                                     std::vector<double> values);
  // Builds the piecewise-linear entropy with H(0) = h0 and the given slopes
  // between consecutive breakpoints (interior_breakpoints.size() ==
  // slopes.size() - 1).
  static ProperLoss from_slopes(std::string name, std::span<const double> slopes,
                                std::span<const double> interior_breakpoints,
                                double h0);

  const std::string& name() const { return name_; }
  LossKind kind() const;

  // Both throw DomainError for v outside [0, 1] (or NaN).
  double entropy(double v) const;
  double superderivative(double v) const;

  // Empty for closed-form losses.
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& values() const { return values_; }

  // Sampled losses serialize as their (seed, pieces) recipe.
  nlohmann::json to_json() const;
  static ProperLoss from_json(const nlohmann::json& j);

 private:
  friend ProperLoss sample_lipschitz_loss(std::uint64_t seed, int pieces);

  enum class Form { kSquared, kHalfSquared, kClippedCrossEntropy, kPiecewise };

  ProperLoss(std::string name, Form form) : name_(std::move(name)), form_(form) {}

  std::string name_;
  Form form_;
  double eta_ = 0.0;
  std::vector<double> breakpoints_;
  std::vector<double> values_;
  std::vector<double> slopes_;
  nlohmann::json recipe_;
};

// loss(y, v); values within 1e-9 of [0, 1] are clamped, anything further out
// raises RangeError.
double eval_loss(const ProperLoss& loss, int y, double v);

// L(p*; v) = H(v) + (p* - v) H'(v), the expected loss when y ~ Ber(p*).
double expected_loss(const ProperLoss& loss, double p_star, double v);

// (p* - v) H'(v) = L(p*; v) - H(v).
double pointwise_gap(const ProperLoss& loss, double p_star, double v);

// Grid points v = k * grid_step with |H'(v)| <= tol. When 1/grid_step is an
// integer N the points are computed as k / N so that exact rationals such as
// 1/3 land on their correctly rounded double.
std::vector<double> blind_spots(const ProperLoss& loss, double grid_step,
                                double tol);

// Draws a bounded proper loss whose partial losses loss(y, .) are
// 1-Lipschitz. The superderivative is a continuous, non-increasing,
// piecewise-linear profile with `pieces` segments and |slope| <= 1; the
// entropy is its exact integral sampled on a 1/4096 grid and stored as a
// piecewise-linear concave entropy.
ProperLoss sample_lipschitz_loss(std::uint64_t seed, int pieces);

// squared, half-squared, clipped cross-entropy.
std::vector<ProperLoss> builtin_losses();

// Grid of k / n for k = 0..n.
std::vector<double> unit_grid(int n);

}  // namespace losspred

#endif  // LOSSPRED_LOSSES_H_
