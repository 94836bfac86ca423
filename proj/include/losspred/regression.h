#ifndef LOSSPRED_REGRESSION_H_
#define LOSSPRED_REGRESSION_H_

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "json.hpp"

namespace losspred {

// Non-owning row-major matrix.
struct RowMatrix {
  std::span<const double> data;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::span<const double> row(std::size_t i) const {
    return data.subspan(i * cols, cols);
  }
};

// Squared-error regressors shared by the base predictors (fit on labels) and
// the loss predictors (fit on realized losses).

// Greedy CART on squared-error impurity. Rows with x[feature] <= threshold go
// left. Leaf values are empirical means; leaves are numbered in depth-first
// order.
class RegressionTree {
 public:
  struct Options {
    int max_depth = 4;
    std::size_t min_leaf = 5;
  };
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
    int leaf_id = -1;
  };

  static RegressionTree fit(const RowMatrix& x, std::span<const double> y,
                            const Options& options);

  double predict(std::span<const double> x) const;
  int leaf_index(std::span<const double> x) const;
  int leaf_count() const { return leaf_count_; }
  std::size_t arity() const { return arity_; }
  const std::vector<Node>& nodes() const { return nodes_; }

  nlohmann::json to_json() const;
  static RegressionTree from_json(const nlohmann::json& j);

 private:
  std::vector<Node> nodes_;
  int leaf_count_ = 0;
  std::size_t arity_ = 0;
};

struct Stump {
  std::size_t feature = 0;
  double threshold = 0.0;
  double left = 0.0;
  double right = 0.0;

  double operator()(std::span<const double> x) const {
    return x[feature] <= threshold ? left : right;
  }
};

// L2 gradient boosting with depth-1 trees: bias + sum_k weight_k * stump_k(x).
class StumpEnsemble {
 public:
  struct Options {
    int rounds = 100;
    double learning_rate = 0.1;
    std::size_t min_leaf = 5;
  };

  StumpEnsemble() = default;
  StumpEnsemble(double bias, std::vector<std::pair<Stump, double>> terms,
                std::size_t arity)
      : bias_(bias), terms_(std::move(terms)), arity_(arity) {}

  static StumpEnsemble fit(const RowMatrix& x, std::span<const double> y,
                           const Options& options);

  // Unclamped sum.
  double predict(std::span<const double> x) const;
  // Unweighted output of every stump.
  std::vector<double> stump_outputs(std::span<const double> x) const;

  double bias() const { return bias_; }
  const std::vector<std::pair<Stump, double>>& terms() const { return terms_; }
  std::size_t arity() const { return arity_; }

  nlohmann::json to_json() const;
  static StumpEnsemble from_json(const nlohmann::json& j);

 private:
  double bias_ = 0.0;
  std::vector<std::pair<Stump, double>> terms_;
  std::size_t arity_ = 0;
};

// Ridge regression with an unpenalized intercept.
class RidgeRegression {
 public:
  RidgeRegression() = default;
  RidgeRegression(std::vector<double> weights, double bias)
      : weights_(std::move(weights)), bias_(bias) {}

  static RidgeRegression fit(const RowMatrix& x, std::span<const double> y,
                             double lambda);

  double predict(std::span<const double> x) const;
  const std::vector<double>& weights() const { return weights_; }
  double bias() const { return bias_; }

  nlohmann::json to_json() const;
  static RidgeRegression from_json(const nlohmann::json& j);

 private:
  std::vector<double> weights_;
  double bias_ = 0.0;
};

}  // namespace losspred

#endif  // LOSSPRED_REGRESSION_H_
