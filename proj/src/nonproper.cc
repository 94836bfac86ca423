#include "losspred/nonproper.h"

#include <cmath>
#include <limits>

#include "losspred/error.h"

namespace losspred {
namespace {

// Per-action label counts: (rows with y = 0, rows with y = 1).
std::vector<std::pair<std::size_t, std::size_t>> label_counts(
    std::span<const std::size_t> actions, std::span<const int> labels, std::size_t n_actions) {
  if (actions.size() != labels.size()) throw ArityError("action and label counts differ");
  std::vector<std::pair<std::size_t, std::size_t>> counts(n_actions);
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (actions[i] >= n_actions) throw DomainError("action index out of range");
    (labels[i] ? counts[actions[i]].second : counts[actions[i]].first)++;
  }
  return counts;
}

double group_loss(const GeneralLoss& loss, std::pair<std::size_t, std::size_t> count,
                  std::size_t b) {
  return static_cast<double>(count.first) * loss.loss0[b] +
         static_cast<double>(count.second) * loss.loss1[b];
}

}  // namespace

double GeneralLoss::expected(double v, std::size_t a) const {
  return v * loss1[a] + (1.0 - v) * loss0[a];
}

void GeneralLoss::validate() const {
  if (actions.empty()) throw DomainError("a loss needs at least one action");
  if (!discretized && actions.size() > 64) {
    throw DomainError("at most 64 listed actions are supported");
  }
  if (loss0.size() != actions.size() || loss1.size() != actions.size()) {
    throw DomainError("every action needs a loss for both labels");
  }
  for (std::size_t a = 0; a < actions.size(); ++a) {
    for (double v : {loss0[a], loss1[a]}) {
      if (!(v >= 0.0 && v <= 1.0)) throw DomainError("loss entries must lie in [0, 1]");
    }
  }
}

GeneralLoss GeneralLoss::absolute() { return {"absolute", {0.0, 1.0}, {0.0, 1.0}, {1.0, 0.0}}; }

GeneralLoss GeneralLoss::discretize(const ProperLoss& loss, int points) {
  if (points < 2 || points > 1 << 16) throw DomainError("grid needs 2 to 65536 points");
  GeneralLoss g;
  g.discretized = true;
  g.name = loss.name() + "@grid" + std::to_string(points);
  for (int k = 0; k < points; ++k) {
    const double v = static_cast<double>(k) / (points - 1);
    g.actions.push_back(v);
    g.loss0.push_back(eval_loss(loss, 0, v));
    g.loss1.push_back(eval_loss(loss, 1, v));
  }
  return g;
}

GeneralLoss GeneralLoss::from_json(const nlohmann::json& j) {
  GeneralLoss g;
  g.name = j.value("name", std::string("general"));
  g.loss0 = j.at("loss0").get<std::vector<double>>();
  g.loss1 = j.at("loss1").get<std::vector<double>>();
  g.discretized = j.value("discretized", false);
  if (j.contains("actions")) {
    g.actions = j.at("actions").get<std::vector<double>>();
  } else {
    for (std::size_t a = 0; a < g.loss0.size(); ++a) g.actions.push_back(static_cast<double>(a));
  }
  g.validate();
  return g;
}

nlohmann::json GeneralLoss::to_json() const {
  return {{"name", name},
          {"actions", actions},
          {"loss0", loss0},
          {"loss1", loss1},
          {"discretized", discretized}};
}

std::size_t optimal_action(const GeneralLoss& loss, double v) {
  if (!(v >= 0.0 && v <= 1.0)) throw DomainError("prediction must lie in [0, 1]");
  std::size_t best = 0;
  double best_value = loss.expected(v, 0);
  for (std::size_t a = 1; a < loss.size(); ++a) {
    const double e = loss.expected(v, a);
    if (e < best_value) {
      best_value = e;
      best = a;
    }
  }
  return best;
}

ProperLoss properize(const GeneralLoss& loss) {
  loss.validate();
  const std::size_t k = loss.size();
  auto slope = [&](std::size_t a) { return loss.loss1[a] - loss.loss0[a]; };
  auto envelope = [&](double v) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < k; ++a) m = std::min(m, loss.loss0[a] + v * slope(a));
    return m;
  };
  // Start with the lowest line at 0, smallest slope on ties.
  std::size_t current = 0;
  for (std::size_t a = 1; a < k; ++a) {
    if (loss.loss0[a] < loss.loss0[current] ||
        (loss.loss0[a] == loss.loss0[current] && slope(a) < slope(current))) {
      current = a;
    }
  }
  std::vector<double> breakpoints{0.0};
  double at = 0.0;
  while (true) {
    std::size_t next = k;
    double next_v = 1.0;
    for (std::size_t a = 0; a < k; ++a) {
      if (!(slope(a) < slope(current))) continue;
      const double v = (loss.loss0[a] - loss.loss0[current]) / (slope(current) - slope(a));
      if (v < at || v >= 1.0) continue;
      if (v < next_v || (v == next_v && next < k && slope(a) < slope(next))) {
        next_v = v;
        next = a;
      }
    }
    if (next == k) break;
    if (next_v > at) breakpoints.push_back(next_v);
    at = next_v;
    current = next;
  }
  breakpoints.push_back(1.0);
  std::vector<double> values;
  for (double b : breakpoints) values.push_back(envelope(b));
  return ProperLoss::piecewise_linear(loss.name + "-properized", std::move(breakpoints),
                                      std::move(values));
}

LatentPredictor latent_predictor(std::span<const std::size_t> actions,
                                 std::span<const int> labels, std::size_t n_actions) {
  const auto counts = label_counts(actions, labels, n_actions);
  LatentPredictor out;
  TableModel table;
  std::size_t total1 = 0;
  for (std::size_t a = 0; a < n_actions; ++a) {
    const std::size_t n = counts[a].first + counts[a].second;
    out.counts.push_back(n);
    total1 += counts[a].second;
    if (n == 0) {
      out.means.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    const double mean = static_cast<double>(counts[a].second) / static_cast<double>(n);
    out.means.push_back(mean);
    table.table[{static_cast<double>(a)}] = mean;
  }
  table.fallback =
      actions.empty() ? 0.5 : static_cast<double>(total1) / static_cast<double>(actions.size());
  out.predictor = Predictor(std::move(table), 1, {{"family", "table"}, {"latent", true}});
  return out;
}

nlohmann::json SwapAudit::to_json() const {
  nlohmann::json j = {{"is_swap_optimal", is_swap_optimal},
                      {"kappa", kappa},
                      {"gain", gain},
                      {"group_sizes", group_sizes},
                      {"best_responds_to_latent", best_responds_to_latent}};
  j["improving_kappa"] = improving_kappa ? nlohmann::json(*improving_kappa) : nlohmann::json();
  return j;
}

SwapAudit swap_audit(std::span<const std::size_t> actions, const GeneralLoss& loss,
                     std::span<const int> labels) {
  loss.validate();
  const std::size_t k = loss.size();
  const auto counts = label_counts(actions, labels, k);
  const LatentPredictor latent = latent_predictor(actions, labels, k);
  SwapAudit audit;
  audit.kappa.resize(k);
  double improvement = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    audit.kappa[a] = a;
    const std::size_t n = counts[a].first + counts[a].second;
    audit.group_sizes.push_back(n);
    if (n == 0) continue;
    const double own = group_loss(loss, counts[a], a);
    std::size_t best = a;
    double best_value = own;
    for (std::size_t b = 0; b < k; ++b) {
      const double v = group_loss(loss, counts[a], b);
      if (v < best_value - 1e-12 * static_cast<double>(n)) {
        best_value = v;
        best = b;
      }
    }
    if (best != a) {
      audit.kappa[a] = best;
      improvement += own - best_value;
    }
    // Best response to the latent prediction, compared in expectation.
    const double p = latent.means[a];
    double min_expected = loss.expected(p, a);
    for (std::size_t b = 0; b < k; ++b) min_expected = std::min(min_expected, loss.expected(p, b));
    if (loss.expected(p, a) > min_expected + 1e-12) audit.best_responds_to_latent = false;
  }
  audit.is_swap_optimal = improvement == 0.0;
  if (!audit.is_swap_optimal) audit.improving_kappa = audit.kappa;
  audit.gain = actions.empty() ? 0.0 : improvement / static_cast<double>(actions.size());
  return audit;
}

bool swap_optimal_brute_force(std::span<const std::size_t> actions, const GeneralLoss& loss,
                              std::span<const int> labels) {
  const std::size_t k = loss.size();
  if (k > 6) throw DomainError("brute force is limited to 6 actions");
  if (actions.size() != labels.size()) throw ArityError("action and label counts differ");
  double identity = 0.0;
  for (std::size_t i = 0; i < actions.size(); ++i) identity += loss(labels[i], actions[i]);
  std::size_t total = 1;
  for (std::size_t a = 0; a < k; ++a) total *= k;
  std::vector<std::size_t> kappa(k);
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    for (std::size_t a = 0; a < k; ++a) {
      kappa[a] = c % k;
      c /= k;
    }
    double swapped = 0.0;
    for (std::size_t i = 0; i < actions.size(); ++i) swapped += loss(labels[i], kappa[actions[i]]);
    if (swapped < identity - 1e-12 * static_cast<double>(actions.size())) return false;
  }
  return true;
}

}  // namespace losspred
