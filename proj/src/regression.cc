#include "losspred/regression.h"

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>

#include "losspred/error.h"

namespace losspred {
namespace {

struct Split {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double gain = 0.0;
};

double split_threshold(double lo, double hi) {
  const double mid = lo + 0.5 * (hi - lo);
  return mid < hi ? mid : lo;
}

// Best squared-error split of `rows` on `targets`. `sorted[f]` lists the
// rows ordered by feature f.
Split best_split(const RowMatrix& x, std::span<const double> targets,
                 const std::vector<std::vector<std::size_t>>& sorted,
                 std::size_t min_leaf) {
  Split best;
  if (sorted.empty()) return best;
  const std::size_t n = sorted[0].size();
  if (n < 2 * min_leaf) return best;
  double total = 0.0;
  for (std::size_t r : sorted[0]) total += targets[r];
  const double base = total * total / static_cast<double>(n);
  for (std::size_t f = 0; f < x.cols; ++f) {
    const auto& order = sorted[f];
    double left_sum = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      left_sum += targets[order[i]];
      const std::size_t n_left = i + 1;
      const std::size_t n_right = n - n_left;
      if (n_left < min_leaf) continue;
      if (n_right < min_leaf) break;
      const double lo = x.data[order[i] * x.cols + f];
      const double hi = x.data[order[i + 1] * x.cols + f];
      if (!(lo < hi)) continue;
      const double right_sum = total - left_sum;
      const double gain = left_sum * left_sum / static_cast<double>(n_left) +
                          right_sum * right_sum / static_cast<double>(n_right) -
                          base;
      if (gain > best.gain + 1e-15) {
        best = {true, f, split_threshold(lo, hi), gain};
      }
    }
  }
  return best;
}

std::vector<std::vector<std::size_t>> sort_rows(const RowMatrix& x,
                                                std::span<const std::size_t> rows) {
  std::vector<std::vector<std::size_t>> sorted(x.cols);
  for (std::size_t f = 0; f < x.cols; ++f) {
    sorted[f].assign(rows.begin(), rows.end());
    std::stable_sort(sorted[f].begin(), sorted[f].end(),
                     [&](std::size_t a, std::size_t b) {
                       return x.data[a * x.cols + f] < x.data[b * x.cols + f];
                     });
  }
  return sorted;
}

void check_fit_inputs(const RowMatrix& x, std::span<const double> y) {
  if (x.rows == 0) throw DataError("cannot fit a regressor on empty data");
  if (y.size() != x.rows || x.data.size() != x.rows * x.cols) {
    throw DataError("regressor inputs have inconsistent shapes");
  }
}

}  // namespace

RegressionTree RegressionTree::fit(const RowMatrix& x, std::span<const double> y,
                                   const Options& options) {
  check_fit_inputs(x, y);
  if (options.max_depth < 0 || options.min_leaf < 1) {
    throw ConfigError("tree needs max_depth >= 0 and min_leaf >= 1");
  }
  RegressionTree tree;
  tree.arity_ = x.cols;

  struct Frame {
    std::vector<std::size_t> rows;
    int depth;
    int node;
  };
  std::vector<std::size_t> all(x.rows);
  std::iota(all.begin(), all.end(), std::size_t{0});
  tree.nodes_.emplace_back();
  std::vector<Frame> stack{{std::move(all), 0, 0}};
  while (!stack.empty()) {
    Frame frame = std::move(stack.back());
    stack.pop_back();
    double sum = 0.0;
    for (std::size_t r : frame.rows) sum += y[r];
    tree.nodes_[frame.node].value = sum / static_cast<double>(frame.rows.size());
    if (frame.depth >= options.max_depth) continue;
    const Split split =
        best_split(x, y, sort_rows(x, frame.rows), options.min_leaf);
    if (!split.found) continue;
    std::vector<std::size_t> left, right;
    for (std::size_t r : frame.rows) {
      (x.data[r * x.cols + split.feature] <= split.threshold ? left : right)
          .push_back(r);
    }
    const int left_id = static_cast<int>(tree.nodes_.size());
    tree.nodes_.emplace_back();
    tree.nodes_.emplace_back();
    Node& node = tree.nodes_[frame.node];
    node.feature = static_cast<int>(split.feature);
    node.threshold = split.threshold;
    node.left = left_id;
    node.right = left_id + 1;
    // Right pushed first so the left subtree is expanded first.
    stack.push_back({std::move(right), frame.depth + 1, left_id + 1});
    stack.push_back({std::move(left), frame.depth + 1, left_id});
  }
  // Depth-first leaf numbering.
  std::vector<int> visit{0};
  while (!visit.empty()) {
    const int id = visit.back();
    visit.pop_back();
    Node& node = tree.nodes_[id];
    if (node.feature < 0) {
      node.leaf_id = tree.leaf_count_++;
    } else {
      visit.push_back(node.right);
      visit.push_back(node.left);
    }
  }
  return tree;
}

int RegressionTree::leaf_index(std::span<const double> x) const {
  int id = 0;
  while (nodes_[id].feature >= 0) {
    const Node& node = nodes_[id];
    id = x[node.feature] <= node.threshold ? node.left : node.right;
  }
  return nodes_[id].leaf_id;
}

double RegressionTree::predict(std::span<const double> x) const {
  int id = 0;
  while (nodes_[id].feature >= 0) {
    const Node& node = nodes_[id];
    id = x[node.feature] <= node.threshold ? node.left : node.right;
  }
  return nodes_[id].value;
}

nlohmann::json RegressionTree::to_json() const {
  nlohmann::json nodes = nlohmann::json::array();
  for (const Node& n : nodes_) {
    nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold},
                     {"left", n.left}, {"right", n.right}, {"value", n.value},
                     {"leaf_id", n.leaf_id}});
  }
  return {{"arity", arity_}, {"leaf_count", leaf_count_}, {"nodes", nodes}};
}

RegressionTree RegressionTree::from_json(const nlohmann::json& j) {
  RegressionTree tree;
  tree.arity_ = j.at("arity").get<std::size_t>();
  tree.leaf_count_ = j.at("leaf_count").get<int>();
  for (const auto& n : j.at("nodes")) {
    tree.nodes_.push_back({n.at("feature").get<int>(), n.at("threshold").get<double>(),
                           n.at("left").get<int>(), n.at("right").get<int>(),
                           n.at("value").get<double>(), n.at("leaf_id").get<int>()});
  }
  if (tree.nodes_.empty()) throw ConfigError("tree has no nodes");
  return tree;
}

StumpEnsemble StumpEnsemble::fit(const RowMatrix& x, std::span<const double> y,
                                 const Options& options) {
  check_fit_inputs(x, y);
  if (options.rounds < 0 || !(options.learning_rate > 0.0) ||
      options.min_leaf < 1) {
    throw ConfigError("invalid stump ensemble options");
  }
  const std::size_t n = x.rows;
  double mean = 0.0;
  for (double t : y) mean += t;
  mean /= static_cast<double>(n);

  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto sorted = sort_rows(x, all);
  std::vector<double> residual(n);
  for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - mean;

  std::vector<std::pair<Stump, double>> terms;
  for (int round = 0; round < options.rounds; ++round) {
    const Split split = best_split(x, residual, sorted, options.min_leaf);
    if (!split.found) break;
    double left_sum = 0.0, right_sum = 0.0;
    std::size_t n_left = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (x.data[i * x.cols + split.feature] <= split.threshold) {
        left_sum += residual[i];
        ++n_left;
      } else {
        right_sum += residual[i];
      }
    }
    const Stump stump{split.feature, split.threshold,
                      left_sum / static_cast<double>(n_left),
                      right_sum / static_cast<double>(n - n_left)};
    for (std::size_t i = 0; i < n; ++i) {
      residual[i] -= options.learning_rate * stump(x.row(i));
    }
    terms.emplace_back(stump, options.learning_rate);
  }
  return StumpEnsemble(mean, std::move(terms), x.cols);
}

double StumpEnsemble::predict(std::span<const double> x) const {
  double total = bias_;
  for (const auto& [stump, weight] : terms_) total += weight * stump(x);
  return total;
}

std::vector<double> StumpEnsemble::stump_outputs(std::span<const double> x) const {
  std::vector<double> out;
  out.reserve(terms_.size());
  for (const auto& [stump, weight] : terms_) out.push_back(stump(x));
  return out;
}

nlohmann::json StumpEnsemble::to_json() const {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& [s, w] : terms_) {
    terms.push_back({{"feature", s.feature}, {"threshold", s.threshold},
                     {"left", s.left}, {"right", s.right}, {"weight", w}});
  }
  return {{"arity", arity_}, {"bias", bias_}, {"terms", terms}};
}

StumpEnsemble StumpEnsemble::from_json(const nlohmann::json& j) {
  std::vector<std::pair<Stump, double>> terms;
  for (const auto& t : j.at("terms")) {
    terms.emplace_back(Stump{t.at("feature").get<std::size_t>(),
                             t.at("threshold").get<double>(),
                             t.at("left").get<double>(), t.at("right").get<double>()},
                       t.at("weight").get<double>());
  }
  return StumpEnsemble(j.at("bias").get<double>(), std::move(terms),
                       j.at("arity").get<std::size_t>());
}

RidgeRegression RidgeRegression::fit(const RowMatrix& x, std::span<const double> y,
                                     double lambda) {
  check_fit_inputs(x, y);
  if (!(lambda >= 0.0)) throw ConfigError("ridge lambda must be >= 0");
  const auto n = static_cast<Eigen::Index>(x.rows);
  const auto k = static_cast<Eigen::Index>(x.cols);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                 Eigen::RowMajor>>
      features(x.data.data(), n, k);
  Eigen::Map<const Eigen::VectorXd> targets(y.data(), n);
  // Centering removes the intercept from the penalized system.
  const Eigen::RowVectorXd mean_x = features.colwise().mean();
  const double mean_y = targets.mean();
  const Eigen::MatrixXd centered = features.rowwise() - mean_x;
  Eigen::MatrixXd gram = centered.transpose() * centered;
  gram.diagonal().array() += lambda;
  const Eigen::VectorXd rhs =
      centered.transpose() * (targets.array() - mean_y).matrix();
  const Eigen::VectorXd w = gram.ldlt().solve(rhs);
  std::vector<double> weights(w.data(), w.data() + w.size());
  return RidgeRegression(std::move(weights), mean_y - mean_x.dot(w));
}

double RidgeRegression::predict(std::span<const double> x) const {
  if (x.size() != weights_.size()) throw ArityError("ridge arity mismatch");
  double total = bias_;
  for (std::size_t j = 0; j < weights_.size(); ++j) total += weights_[j] * x[j];
  return total;
}

nlohmann::json RidgeRegression::to_json() const {
  return {{"weights", weights_}, {"bias", bias_}};
}

RidgeRegression RidgeRegression::from_json(const nlohmann::json& j) {
  return RidgeRegression(j.at("weights").get<std::vector<double>>(),
                         j.at("bias").get<double>());
}

}  // namespace losspred
