#ifndef LOSSPRED_TEST_FUNCTION_H_
#define LOSSPRED_TEST_FUNCTION_H_

#include <functional>
#include <memory>
#include <span>
#include <string>

#include "json.hpp"
#include "losspred/losses.h"

namespace losspred {

// A weight function over flattened feature views. Coordinate 0 of a view is
// always the prediction p(x); see predictors.h for the layout of the rest.
//
// `bound()` is a guaranteed upper bound on |c(phi)|. Every constructor except
// loss_weighted() and custom() yields bound() <= 1.
class TestFunction {
 public:
  using Eval = std::function<double(std::span<const double>)>;

  TestFunction() : TestFunction(constant(0.0)) {}

  // c(phi) = value, |value| <= 1.
  static TestFunction constant(double value);
  // sign * 1{phi[coordinate] >= threshold}, or sign * 1{phi[coordinate] <
  // threshold} when `below` is set. sign is +1 or -1.
  static TestFunction stump(std::size_t coordinate, double threshold,
                            bool below, double sign);
  // sign * 1{phi[0] == value}; the level-set indicator of a prediction value.
  static TestFunction level_set(double value, double sign);
  // sign * H(phi[0]).
  static TestFunction entropy(const ProperLoss& loss, double sign);
  // H'(phi[0]).
  static TestFunction superderivative(const ProperLoss& loss);
  // a(phi) * b(phi).
  static TestFunction product(const TestFunction& a, const TestFunction& b);
  // scale * (f(phi) - H(phi[0])) * H'(phi[0]) where f maps into [0, 1].
  // Unscaled the range is [-1, 1]; bound() reports 2 * |scale| only if
  // `f_bound` exceeds 1.
  static TestFunction loss_weighted(std::string f_id, nlohmann::json f_json,
                                    Eval f, double f_bound,
                                    const ProperLoss& loss, double scale);
  // Arbitrary function; `json` should describe it well enough to audit.
  static TestFunction custom(std::string id, nlohmann::json json, Eval eval,
                             double bound);

  double operator()(std::span<const double> phi) const { return (*eval_)(phi); }

  const std::string& id() const { return id_; }
  double bound() const { return bound_; }
  // Structural description. constant, stump, level_set, entropy,
  // superderivative and product of these round-trip through from_json.
  const nlohmann::json& to_json() const { return json_; }
  static TestFunction from_json(const nlohmann::json& j);

 private:
  TestFunction(std::string id, nlohmann::json json, Eval eval, double bound)
      : id_(std::move(id)),
        json_(std::move(json)),
        eval_(std::make_shared<const Eval>(std::move(eval))),
        bound_(bound) {}

  std::string id_;
  nlohmann::json json_;
  std::shared_ptr<const Eval> eval_;
  double bound_ = 1.0;
};

}  // namespace losspred

#endif  // LOSSPRED_TEST_FUNCTION_H_
