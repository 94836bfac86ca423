#ifndef LOSSPRED_NONPROPER_H_
#define LOSSPRED_NONPROPER_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "losspred/losses.h"
#include "losspred/predictors.h"

namespace losspred {

// A loss over a finite action set: loss(y, a) = (y ? loss1 : loss0)[a].
struct GeneralLoss {
  std::string name;
  std::vector<double> actions;  // action labels, used only for display
  std::vector<double> loss0;
  std::vector<double> loss1;
  // Set for a grid over [0, 1], which is exempt from the 64-action limit.
  bool discretized = false;

  std::size_t size() const { return actions.size(); }
  double operator()(int y, std::size_t a) const { return y ? loss1[a] : loss0[a]; }
  // v loss(1, a) + (1 - v) loss(0, a).
  double expected(double v, std::size_t a) const;

  // Throws DomainError on entries outside [0, 1], mismatched lengths, an
  // empty action set or more than 64 actions on a non-grid loss.
  void validate() const;

  // |y - a| over actions {0, 1}.
  static GeneralLoss absolute();
  // A proper loss restricted to a uniform grid of `points` actions.
  static GeneralLoss discretize(const ProperLoss& loss, int points = 257);

  static GeneralLoss from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// Lowest-index argmin of the expected loss at v.
std::size_t optimal_action(const GeneralLoss& loss, double v);

// The proper loss loss o k: its entropy is the lower envelope of the action
// lines, with breakpoints at the exact line intersections.
ProperLoss properize(const GeneralLoss& loss);

struct LatentPredictor {
  // Mean label per action; NaN for actions h never takes.
  std::vector<double> means;
  std::vector<std::size_t> counts;
  // Table predictor keyed by the one-element vector {action index}.
  Predictor predictor = Predictor::constant(0.5);
};

// p_h(x) = mean of y over rows with the same action as h(x).
LatentPredictor latent_predictor(std::span<const std::size_t> actions,
                                 std::span<const int> labels, std::size_t n_actions);

struct SwapAudit {
  bool is_swap_optimal = true;
  // kappa[a] for every action; identity where a already best-responds.
  std::vector<std::size_t> kappa;
  std::optional<std::vector<std::size_t>> improving_kappa;
  double gain = 0.0;  // mean loss reduction per row under kappa
  std::vector<std::size_t> group_sizes;
  // h(x) is a best response to p_h(x) for every realized action.
  bool best_responds_to_latent = true;

  nlohmann::json to_json() const;
};

SwapAudit swap_audit(std::span<const std::size_t> actions, const GeneralLoss& loss,
                     std::span<const int> labels);

// Reference check: the lowest mean loss over all |A|^|A| relabelings,
// compared with the identity. Returns true iff no relabeling improves.
bool swap_optimal_brute_force(std::span<const std::size_t> actions, const GeneralLoss& loss,
                              std::span<const int> labels);

}  // namespace losspred

#endif  // LOSSPRED_NONPROPER_H_
