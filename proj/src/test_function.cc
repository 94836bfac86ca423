#include "losspred/test_function.h"

#include <cmath>

#include "losspred/error.h"
#include "losspred/util.h"

namespace losspred {
namespace {

double checked_sign(double sign) {
  if (sign != 1.0 && sign != -1.0) throw ConfigError("sign must be +1 or -1");
  return sign;
}

std::string sign_prefix(double sign) { return sign > 0 ? "+" : "-"; }

}  // namespace

TestFunction TestFunction::constant(double value) {
  if (!(std::abs(value) <= 1.0)) {
    throw DomainError("constant test function must lie in [-1, 1]");
  }
  return TestFunction("const(" + format_number(value) + ")",
                      {{"form", "constant"}, {"value", value}},
                      [value](std::span<const double>) { return value; },
                      std::abs(value));
}

TestFunction TestFunction::stump(std::size_t coordinate, double threshold,
                                 bool below, double sign) {
  checked_sign(sign);
  std::string id = sign_prefix(sign) + "1{phi" + std::to_string(coordinate) +
                   (below ? "<" : ">=") + format_number(threshold) + "}";
  nlohmann::json j = {{"form", "stump"},
                      {"coordinate", coordinate},
                      {"threshold", threshold},
                      {"below", below},
                      {"sign", sign}};
  Eval eval = [=](std::span<const double> phi) {
    const bool above = phi[coordinate] >= threshold;
    return (above != below) ? sign : 0.0;
  };
  return TestFunction(std::move(id), std::move(j), std::move(eval), 1.0);
}

TestFunction TestFunction::level_set(double value, double sign) {
  checked_sign(sign);
  return TestFunction(sign_prefix(sign) + "1{p==" + format_number(value) + "}",
                      {{"form", "level_set"}, {"value", value}, {"sign", sign}},
                      [=](std::span<const double> phi) {
                        return phi[0] == value ? sign : 0.0;
                      },
                      1.0);
}

TestFunction TestFunction::entropy(const ProperLoss& loss, double sign) {
  checked_sign(sign);
  return TestFunction(sign_prefix(sign) + "H[" + loss.name() + "](p)",
                      {{"form", "entropy"}, {"loss", loss.to_json()}, {"sign", sign}},
                      [loss, sign](std::span<const double> phi) {
                        return sign * loss.entropy(phi[0]);
                      },
                      1.0);
}

TestFunction TestFunction::superderivative(const ProperLoss& loss) {
  return TestFunction("dH[" + loss.name() + "](p)",
                      {{"form", "superderivative"}, {"loss", loss.to_json()}},
                      [loss](std::span<const double> phi) {
                        return loss.superderivative(phi[0]);
                      },
                      1.0);
}

TestFunction TestFunction::product(const TestFunction& a, const TestFunction& b) {
  auto ea = a.eval_;
  auto eb = b.eval_;
  return TestFunction("(" + a.id() + ")*(" + b.id() + ")",
                      {{"form", "product"}, {"a", a.to_json()}, {"b", b.to_json()}},
                      [ea, eb](std::span<const double> phi) {
                        return (*ea)(phi) * (*eb)(phi);
                      },
                      a.bound() * b.bound());
}

TestFunction TestFunction::loss_weighted(std::string f_id, nlohmann::json f_json,
                                         Eval f, double f_bound,
                                         const ProperLoss& loss, double scale) {
  const double bound = (f_bound > 1.0 ? 2.0 : 1.0) * std::abs(scale);
  std::string id = "(" + f_id + "-H[" + loss.name() + "])*dH";
  if (scale != 1.0) id = format_number(scale) + "*" + id;
  nlohmann::json j = {{"form", "loss_weighted"},
                      {"f", std::move(f_json)},
                      {"loss", loss.name()},
                      {"scale", scale}};
  Eval eval = [f = std::move(f), loss, scale](std::span<const double> phi) {
    const double v = phi[0];
    return scale * (f(phi) - loss.entropy(v)) * loss.superderivative(v);
  };
  return TestFunction(std::move(id), std::move(j), std::move(eval), bound);
}

TestFunction TestFunction::custom(std::string id, nlohmann::json json, Eval eval,
                                  double bound) {
  return TestFunction(std::move(id), std::move(json), std::move(eval), bound);
}

TestFunction TestFunction::from_json(const nlohmann::json& j) {
  const std::string form = j.at("form").get<std::string>();
  if (form == "constant") return constant(j.at("value").get<double>());
  if (form == "stump") {
    return stump(j.at("coordinate").get<std::size_t>(),
                 j.at("threshold").get<double>(), j.at("below").get<bool>(),
                 j.at("sign").get<double>());
  }
  if (form == "level_set") {
    return level_set(j.at("value").get<double>(), j.at("sign").get<double>());
  }
  if (form == "entropy") {
    return entropy(ProperLoss::from_json(j.at("loss")), j.at("sign").get<double>());
  }
  if (form == "superderivative") {
    return superderivative(ProperLoss::from_json(j.at("loss")));
  }
  if (form == "product") return product(from_json(j.at("a")), from_json(j.at("b")));
  throw ConfigError("test function form '" + form + "' cannot be deserialized");
}

}  // namespace losspred
