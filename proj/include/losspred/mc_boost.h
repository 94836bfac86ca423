#ifndef LOSSPRED_MC_BOOST_H_
#define LOSSPRED_MC_BOOST_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "losspred/dataset.h"
#include "losspred/error.h"
#include "losspred/losses.h"
#include "losspred/predictors.h"
#include "losspred/test_function.h"

namespace losspred {

// The weak learner's hypothesis class over flattened views:
//   +1, -1,
//   s * 1{phi_j >= t} and s * 1{phi_j < t} for every coordinate j, every
//   threshold t drawn from the data quantiles of phi_j, s = +1, -1,
//   +e and -e for every extra function e.
// Enumeration (and tie-breaking) order is exactly the order above, with
// thresholds ascending.
struct StumpClassConfig {
  std::size_t max_thresholds = 16;
  std::vector<TestFunction> extras;

  nlohmann::json to_json() const;
};

// Distinct values of sorted[floor(k n / (q + 1))], k = 1..q.
std::vector<double> quantile_thresholds(std::vector<double> values, std::size_t q);

std::vector<TestFunction> enumerate_stump_class(const ViewTable& views,
                                                const StumpClassConfig& config);

// Sorted orders and thresholds of a view table, reusable across learner calls
// on the same views.
class StumpScan {
 public:
  StumpScan(const ViewTable& views, const StumpClassConfig& config);

  std::size_t n() const { return n_; }
  // Best member by mean a(phi) z, first in enumeration order on ties.
  std::pair<TestFunction, double> best(std::span<const double> z) const;

 private:
  struct Coordinate {
    std::vector<std::size_t> order;
    std::vector<double> sorted;
    std::vector<double> thresholds;
    std::vector<std::size_t> cut;  // first sorted position >= threshold
  };
  std::size_t n_;
  std::vector<Coordinate> coords_;
  std::vector<TestFunction> extras_;
  std::vector<double> extra_values_;  // extras x n
};

struct WalOutcome {
  std::optional<TestFunction> hypothesis;
  // Correlation of the returned hypothesis, or of the best member when the
  // learner returns bottom.
  double correlation = 0.0;
  std::string best_id;
};

// Returns the best class member iff its correlation is >= alpha / 2.
// Throws ConfigError unless alpha is in (0, 1].
WalOutcome weak_agnostic_learn(const ViewTable& views, std::span<const double> z,
                               const StumpClassConfig& config, double alpha);
WalOutcome weak_agnostic_learn(const StumpScan& scan, std::span<const double> z,
                               double alpha);

// x -> clamp(p(x) + beta * delta(phi(p, x))). Throws DomainError unless beta
// is in [0, 1]; only prediction-only and input-aware views are supported.
Predictor gd_update(const Predictor& p, const TestFunction& delta, double beta,
                    ViewLevel level = ViewLevel::kPredictionOnly);

struct BoostRound {
  std::size_t round = 0;
  std::size_t b_index = 0;
  std::string b_id;
  std::string a_id;
  double correlation = 0.0;
  double sq_error_labels = 0.0;  // after the update
  std::optional<double> sq_error_p_star;

  nlohmann::json to_json() const;
};

struct BoostTrace {
  double alpha = 0.0;
  std::size_t cap = 0;
  double initial_sq_error_labels = 0.0;
  std::optional<double> initial_sq_error_p_star;
  std::vector<BoostRound> rounds;
  std::string terminated_by;  // "audit-clean" or "iteration-cap"
  std::size_t wal_calls = 0;
  std::vector<std::string> warnings;

  nlohmann::json summary_json() const;
  // One JSON record per round.
  std::string to_json_lines() const;
};

class IterationCap : public Error {
 public:
  IterationCap(const std::string& what, BoostTrace trace)
      : Error(what), trace_(std::move(trace)) {}
  const BoostTrace& trace() const { return trace_; }

 private:
  BoostTrace trace_;
};

struct BoostOptions {
  double alpha = 0.1;
  // kPredictionOnly or kInputAware.
  ViewLevel level = ViewLevel::kInputAware;
  StumpClassConfig a_class;
  // WAL call k sees shard k mod shards of a seeded partition. 1 reuses the
  // full sample on every call.
  std::size_t shards = 1;
  std::uint64_t shard_seed = 0;
  // Lowers the update cap below ceil(4 / alpha^2).
  std::optional<std::size_t> max_updates;
};

struct BoostResult {
  Predictor predictor;
  BoostTrace trace;
  ViewTable final_views;
};

// ceil(4 / alpha^2).
std::size_t iteration_cap(double alpha);

// Product-class multicalibration from p_0 = 1/2. B is scanned in order and
// restarts from its first element after every update.
BoostResult product_class_mc(const Dataset& data, std::span<const TestFunction> b_class,
                             const BoostOptions& options);

// {1} plus 1{p >= j / (m + 1)} for j = 1..m, m = d - 1, d = ceil(2/eps + 1).
struct Basis {
  std::vector<TestFunction> functions;
  std::vector<double> thresholds;
  double epsilon = 0.0;
  double lambda = 4.0;

  std::size_t d() const { return functions.size(); }
  double operator()(std::span<const double> coefficients, double v) const;
  nlohmann::json to_json() const;
};

Basis lipschitz_basis(double epsilon);

struct BasisFit {
  std::vector<double> coefficients;
  double sup_error = 0.0;  // on the 1/1024 grid
  double norm = 0.0;       // sum |coefficients|
};

// Staircase fit: on every cell between consecutive thresholds the
// approximation is the midrange of the target over the grid points of the
// cell. With `monotone` set the target is asserted to be the superderivative
// of a 1-Lipschitz proper loss (non-increasing, 2-Lipschitz), and
// BasisViolation is thrown unless sup_error <= epsilon and norm <= lambda.
BasisFit basis_fit(const Basis& basis, const std::function<double(double)>& target,
                   bool monotone);

// Largest held-in advantage over the panel: for every loss l and every member
// a of the stump class, clamp(H_l(p) + beta * a(phi)) with beta the
// least-squares coefficient clipped to [-1, 1]; SEP (advantage 0) included.
double panel_max_advantage(std::span<const ProperLoss> panel, const ViewTable& views,
                           std::span<const int> labels, const StumpClassConfig& config);

struct LipschitzOptions {
  double alpha = 0.1;
  double epsilon = 0.2;
  ViewLevel level = ViewLevel::kInputAware;
  StumpClassConfig a_class;
  std::size_t panel_size = 8;
  int panel_pieces = 4;
  std::uint64_t panel_seed = 0;
  std::size_t shards = 1;
  std::optional<std::size_t> max_updates;

  static LipschitzOptions from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct Certificate {
  double alpha = 0.0;
  double epsilon = 0.0;
  double lambda = 4.0;
  double bound = 0.0;  // 4 lambda alpha + 4 epsilon
  double panel_before = 0.0;
  double panel_after = 0.0;
  std::size_t rounds = 0;
  std::size_t cap = 0;
  bool bound_holds = false;
  bool decreased = false;

  nlohmann::json to_json() const;
};

struct LipschitzResult {
  BoostResult boost;
  Certificate certificate;
  std::vector<ProperLoss> panel;
  Basis basis;
};

// Runs product-class multicalibration with A = the stump class plus +-H_l
// for every panel loss and B = the Lipschitz basis composed with p, then
// audits the panel advantage before (p = 1/2) and after.
LipschitzResult mc_all_lipschitz(const Dataset& data, const LipschitzOptions& options);

// Panel losses: seeds panel_seed, panel_seed + 1, ...
std::vector<ProperLoss> sample_panel(std::size_t size, int pieces, std::uint64_t seed);

}  // namespace losspred

#endif  // LOSSPRED_MC_BOOST_H_
