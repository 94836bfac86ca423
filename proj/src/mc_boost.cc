#include "losspred/mc_boost.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "losspred/rng.h"

namespace losspred {
namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0, 1]");
}

double mean_sq(std::span<const double> a, std::span<const double> b) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += (a[i] - b[i]) * (a[i] - b[i]);
  return a.empty() ? 0.0 : total / static_cast<double>(a.size());
}

ViewTable initial_views(const Dataset& data, ViewLevel level,
                        std::span<const double> predictions) {
  if (level == ViewLevel::kPredictionOnly) {
    return ViewTable::from_columns(level, predictions, {}, 0);
  }
  if (level == ViewLevel::kInputAware) {
    return ViewTable::from_columns(level, predictions, data.features, data.d);
  }
  throw ConfigError("boosting supports prediction-only and input-aware views");
}

ViewTable subset_views(const ViewTable& views, std::span<const std::size_t> rows) {
  ViewTable t;
  t.level = views.level;
  t.n = rows.size();
  t.width = views.width;
  t.values.reserve(t.n * t.width);
  for (std::size_t r : rows) {
    const auto phi = views.row(r);
    t.values.insert(t.values.end(), phi.begin(), phi.end());
  }
  return t;
}

}  // namespace

nlohmann::json StumpClassConfig::to_json() const {
  nlohmann::json ex = nlohmann::json::array();
  for (const auto& e : extras) ex.push_back(e.id());
  return {{"max_thresholds", max_thresholds}, {"extras", ex}};
}

std::vector<double> quantile_thresholds(std::vector<double> values, std::size_t q) {
  std::sort(values.begin(), values.end());
  std::vector<double> out;
  if (values.empty()) return out;
  const std::size_t n = values.size();
  for (std::size_t k = 1; k <= q; ++k) {
    const double t = values[k * n / (q + 1)];
    if (out.empty() || out.back() != t) out.push_back(t);
  }
  return out;
}

std::vector<TestFunction> enumerate_stump_class(const ViewTable& views,
                                                const StumpClassConfig& config) {
  std::vector<TestFunction> out{TestFunction::constant(1.0), TestFunction::constant(-1.0)};
  for (std::size_t j = 0; j < views.width; ++j) {
    std::vector<double> column(views.n);
    for (std::size_t i = 0; i < views.n; ++i) column[i] = views.row(i)[j];
    for (double t : quantile_thresholds(std::move(column), config.max_thresholds)) {
      for (bool below : {false, true}) {
        for (double sign : {1.0, -1.0}) out.push_back(TestFunction::stump(j, t, below, sign));
      }
    }
  }
  for (const auto& e : config.extras) {
    out.push_back(e);
    out.push_back(TestFunction::product(TestFunction::constant(-1.0), e));
  }
  return out;
}

StumpScan::StumpScan(const ViewTable& views, const StumpClassConfig& config)
    : n_(views.n), extras_(config.extras) {
  coords_.resize(views.width);
  for (std::size_t j = 0; j < views.width; ++j) {
    Coordinate& c = coords_[j];
    std::vector<double> column(n_);
    for (std::size_t i = 0; i < n_; ++i) column[i] = views.row(i)[j];
    c.order.resize(n_);
    std::iota(c.order.begin(), c.order.end(), std::size_t{0});
    std::stable_sort(c.order.begin(), c.order.end(),
                     [&](std::size_t a, std::size_t b) { return column[a] < column[b]; });
    c.sorted.resize(n_);
    for (std::size_t k = 0; k < n_; ++k) c.sorted[k] = column[c.order[k]];
    c.thresholds = quantile_thresholds(column, config.max_thresholds);
    for (double t : c.thresholds) {
      c.cut.push_back(static_cast<std::size_t>(
          std::lower_bound(c.sorted.begin(), c.sorted.end(), t) - c.sorted.begin()));
    }
  }
  extra_values_.resize(extras_.size() * n_);
  for (std::size_t e = 0; e < extras_.size(); ++e) {
    for (std::size_t i = 0; i < n_; ++i) extra_values_[e * n_ + i] = extras_[e](views.row(i));
  }
}

std::pair<TestFunction, double> StumpScan::best(std::span<const double> z) const {
  if (z.size() != n_) throw ArityError("learner targets do not match the sample");
  if (n_ == 0) throw DataError("weak learner needs a nonempty sample");
  const double n = static_cast<double>(n_);
  double total = 0.0;
  for (double v : z) total += v;

  // kind: 0 constant, 1 stump, 2 extra.
  struct Choice {
    int kind = 0;
    std::size_t index = 0;
    std::size_t threshold = 0;
    bool below = false;
    double sign = 1.0;
  } choice;
  double best = total / n;
  auto offer = [&](double corr, const Choice& c) {
    if (corr > best) {
      best = corr;
      choice = c;
    }
  };
  offer(-total / n, {0, 0, 0, false, -1.0});

  std::vector<double> prefix(n_ + 1);
  for (std::size_t j = 0; j < coords_.size(); ++j) {
    const Coordinate& c = coords_[j];
    prefix[0] = 0.0;
    for (std::size_t k = 0; k < n_; ++k) prefix[k + 1] = prefix[k] + z[c.order[k]];
    for (std::size_t t = 0; t < c.thresholds.size(); ++t) {
      const double below_sum = prefix[c.cut[t]];
      const double above_sum = prefix[n_] - below_sum;
      offer(above_sum / n, {1, j, t, false, 1.0});
      offer(-above_sum / n, {1, j, t, false, -1.0});
      offer(below_sum / n, {1, j, t, true, 1.0});
      offer(-below_sum / n, {1, j, t, true, -1.0});
    }
  }
  for (std::size_t e = 0; e < extras_.size(); ++e) {
    double dot = 0.0;
    for (std::size_t i = 0; i < n_; ++i) dot += extra_values_[e * n_ + i] * z[i];
    offer(dot / n, {2, e, 0, false, 1.0});
    offer(-dot / n, {2, e, 0, false, -1.0});
  }

  switch (choice.kind) {
    case 0:
      return {TestFunction::constant(choice.sign), best};
    case 1: {
      const Coordinate& c = coords_[choice.index];
      return {TestFunction::stump(choice.index, c.thresholds[choice.threshold], choice.below,
                                  choice.sign),
              best};
    }
    default: {
      const TestFunction& e = extras_[choice.index];
      if (choice.sign > 0) return {e, best};
      return {TestFunction::product(TestFunction::constant(-1.0), e), best};
    }
  }
}

WalOutcome weak_agnostic_learn(const StumpScan& scan, std::span<const double> z,
                               double alpha) {
  check_alpha(alpha);
  auto [a, corr] = scan.best(z);
  WalOutcome out;
  out.correlation = corr;
  out.best_id = a.id();
  if (corr >= alpha / 2.0) out.hypothesis = std::move(a);
  return out;
}

WalOutcome weak_agnostic_learn(const ViewTable& views, std::span<const double> z,
                               const StumpClassConfig& config, double alpha) {
  check_alpha(alpha);
  return weak_agnostic_learn(StumpScan(views, config), z, alpha);
}

Predictor gd_update(const Predictor& p, const TestFunction& delta, double beta,
                    ViewLevel level) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw DomainError("beta must lie in [0, 1]");
  if (delta.bound() > 1.0) throw DomainError("delta must map into [-1, 1]");
  if (level != ViewLevel::kPredictionOnly && level != ViewLevel::kInputAware) {
    throw ConfigError("updates support prediction-only and input-aware views");
  }
  BoostedModel m;
  m.base = std::make_shared<const Predictor>(p);
  m.level = level;
  m.steps.push_back({delta, beta});
  return Predictor(std::move(m), p.arity(), {{"family", "boosted"}, {"update", "gd"}});
}

nlohmann::json BoostRound::to_json() const {
  nlohmann::json j = {{"round", round},
                      {"b_index", b_index},
                      {"b", b_id},
                      {"a", a_id},
                      {"correlation", correlation},
                      {"sq_error_labels", sq_error_labels}};
  if (sq_error_p_star) j["sq_error_p_star"] = *sq_error_p_star;
  return j;
}

nlohmann::json BoostTrace::summary_json() const {
  nlohmann::json j = {{"alpha", alpha},
                      {"cap", cap},
                      {"rounds", rounds.size()},
                      {"terminated_by", terminated_by},
                      {"wal_calls", wal_calls},
                      {"initial_sq_error_labels", initial_sq_error_labels},
                      {"warnings", warnings}};
  if (initial_sq_error_p_star) j["initial_sq_error_p_star"] = *initial_sq_error_p_star;
  return j;
}

std::string BoostTrace::to_json_lines() const {
  std::ostringstream out;
  for (const auto& r : rounds) out << r.to_json().dump() << '\n';
  return out.str();
}

std::size_t iteration_cap(double alpha) {
  check_alpha(alpha);
  return static_cast<std::size_t>(std::ceil(4.0 / (alpha * alpha) - 1e-9));
}

BoostResult product_class_mc(const Dataset& data, std::span<const TestFunction> b_class,
                             const BoostOptions& options) {
  check_alpha(options.alpha);
  if (b_class.empty()) throw ConfigError("B must be nonempty");
  if (data.n == 0) throw DataError("boosting needs a nonempty sample");
  if (options.shards == 0) throw ConfigError("shards must be >= 1");
  for (const auto& b : b_class) {
    if (b.bound() > 1.0) throw DomainError("B functions must map into [-1, 1]");
  }
  const std::size_t n = data.n;
  const double step = options.alpha / 2.0;

  BoostTrace trace;
  trace.alpha = options.alpha;
  trace.cap = iteration_cap(options.alpha);
  if (options.max_updates) trace.cap = std::min(trace.cap, *options.max_updates);
  std::vector<double> preds(n, 0.5);
  const std::vector<double> y(data.labels.begin(), data.labels.end());
  trace.initial_sq_error_labels = mean_sq(preds, y);
  if (data.p_star) trace.initial_sq_error_p_star = mean_sq(preds, *data.p_star);

  std::vector<std::vector<std::size_t>> shards;
  if (options.shards > 1) {
    Rng rng(options.shard_seed);
    const auto perm = rng.permutation(n);
    shards.resize(options.shards);
    for (std::size_t i = 0; i < n; ++i) shards[i % options.shards].push_back(perm[i]);
    for (auto& s : shards) std::sort(s.begin(), s.end());
  } else {
    trace.warnings.push_back("weak learner reuses the full sample on every call");
  }

  ViewTable views = initial_views(data, options.level, preds);
  std::vector<BoostStep> steps;
  std::vector<double> z(n), b_values(n);
  while (true) {
    std::optional<StumpScan> scan;
    if (shards.empty()) scan.emplace(views, options.a_class);
    bool updated = false;
    for (std::size_t bi = 0; bi < b_class.size() && !updated; ++bi) {
      const TestFunction& b = b_class[bi];
      for (std::size_t i = 0; i < n; ++i) {
        b_values[i] = b(views.row(i));
        z[i] = b_values[i] * (y[i] - preds[i]);
      }
      WalOutcome wal;
      if (shards.empty()) {
        wal = weak_agnostic_learn(*scan, z, options.alpha);
      } else {
        const auto& rows = shards[trace.wal_calls % shards.size()];
        std::vector<double> zs;
        for (std::size_t r : rows) zs.push_back(z[r]);
        wal = weak_agnostic_learn(StumpScan(subset_views(views, rows), options.a_class), zs,
                                  options.alpha);
      }
      ++trace.wal_calls;
      if (!wal.hypothesis) continue;
      if (trace.rounds.size() >= trace.cap) {
        trace.terminated_by = "iteration-cap";
        throw IterationCap("update count would exceed the cap of " +
                               std::to_string(trace.cap),
                           std::move(trace));
      }
      const TestFunction& a = *wal.hypothesis;
      for (std::size_t i = 0; i < n; ++i) {
        const auto phi = views.row(i);
        preds[i] = std::clamp(preds[i] + step * (b_values[i] * a(phi)), 0.0, 1.0);
      }
      for (std::size_t i = 0; i < n; ++i) views.values[i * views.width] = preds[i];
      BoostRound round;
      round.round = trace.rounds.size() + 1;
      round.b_index = bi;
      round.b_id = b.id();
      round.a_id = a.id();
      round.correlation = wal.correlation;
      round.sq_error_labels = mean_sq(preds, y);
      if (data.p_star) round.sq_error_p_star = mean_sq(preds, *data.p_star);
      trace.rounds.push_back(std::move(round));
      steps.push_back({TestFunction::product(b, a), step});
      updated = true;
    }
    if (!updated) break;
  }
  trace.terminated_by = "audit-clean";
  BoostedModel model;
  model.level = options.level;
  model.steps = std::move(steps);
  Predictor predictor(std::move(model), options.level == ViewLevel::kInputAware ? data.d : 0,
                      {{"family", "boosted"}, {"alpha", options.alpha}});
  return {std::move(predictor), std::move(trace), std::move(views)};
}

double Basis::operator()(std::span<const double> coefficients, double v) const {
  double total = 0.0;
  const double phi[1] = {v};
  for (std::size_t k = 0; k < functions.size(); ++k) total += coefficients[k] * functions[k](phi);
  return total;
}

nlohmann::json Basis::to_json() const {
  return {{"d", d()}, {"epsilon", epsilon}, {"lambda", lambda}, {"thresholds", thresholds}};
}

Basis lipschitz_basis(double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw DomainError("epsilon must lie in (0, 1]");
  Basis basis;
  basis.epsilon = epsilon;
  basis.lambda = 4.0;
  const auto d = static_cast<std::size_t>(std::ceil(2.0 / epsilon + 1.0 - 1e-9));
  const std::size_t m = d - 1;
  basis.functions.push_back(TestFunction::constant(1.0));
  for (std::size_t j = 1; j <= m; ++j) {
    const double t = static_cast<double>(j) / static_cast<double>(m + 1);
    basis.thresholds.push_back(t);
    basis.functions.push_back(TestFunction::stump(0, t, false, 1.0));
  }
  return basis;
}

BasisFit basis_fit(const Basis& basis, const std::function<double(double)>& target,
                   bool monotone) {
  constexpr int kGrid = 1024;
  const std::size_t cells = basis.thresholds.size() + 1;
  std::vector<double> lo(cells, INFINITY), hi(cells, -INFINITY);
  std::vector<double> values(kGrid + 1);
  std::vector<std::size_t> cell_of(kGrid + 1);
  for (int k = 0; k <= kGrid; ++k) {
    const double v = static_cast<double>(k) / kGrid;
    std::size_t c = 0;
    while (c < basis.thresholds.size() && v >= basis.thresholds[c]) ++c;
    cell_of[k] = c;
    values[k] = target(v);
    lo[c] = std::min(lo[c], values[k]);
    hi[c] = std::max(hi[c], values[k]);
  }
  std::vector<double> level(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    if (lo[c] <= hi[c]) {
      level[c] = 0.5 * (lo[c] + hi[c]);
    } else {
      level[c] = c == 0 ? 0.0 : level[c - 1];  // no grid point in this cell
    }
  }
  BasisFit fit;
  fit.coefficients.push_back(level[0]);
  for (std::size_t c = 1; c < cells; ++c) fit.coefficients.push_back(level[c] - level[c - 1]);
  for (double a : fit.coefficients) fit.norm += std::abs(a);
  for (int k = 0; k <= kGrid; ++k) {
    const double v = static_cast<double>(k) / kGrid;
    fit.sup_error = std::max(fit.sup_error, std::abs(values[k] - basis(fit.coefficients, v)));
  }
  if (monotone && (fit.sup_error > basis.epsilon || fit.norm > basis.lambda)) {
    throw BasisViolation("basis fit of a Lipschitz superderivative failed: sup error " +
                         std::to_string(fit.sup_error) + ", norm " +
                         std::to_string(fit.norm));
  }
  return fit;
}

double panel_max_advantage(std::span<const ProperLoss> panel, const ViewTable& views,
                           std::span<const int> labels, const StumpClassConfig& config) {
  if (labels.size() != views.n) throw ArityError("label count mismatch");
  const std::size_t n = views.n;
  if (n == 0) return 0.0;
  const auto candidates = enumerate_stump_class(views, config);
  std::vector<double> a_values(candidates.size() * n);
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    for (std::size_t i = 0; i < n; ++i) a_values[c * n + i] = candidates[c](views.row(i));
  }
  double best = 0.0;
  std::vector<double> realized(n), sep(n), resid(n);
  for (const auto& loss : panel) {
    double sep_err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = views.prediction(i);
      realized[i] = eval_loss(loss, labels[i], p);
      sep[i] = loss.entropy(p);
      resid[i] = realized[i] - sep[i];
      sep_err += resid[i] * resid[i];
    }
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      const double* a = &a_values[c * n];
      double ar = 0.0, aa = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        ar += a[i] * resid[i];
        aa += a[i] * a[i];
      }
      if (aa == 0.0) continue;
      const double beta = std::clamp(ar / aa, -1.0, 1.0);
      double lp_err = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double e = realized[i] - std::clamp(sep[i] + beta * a[i], 0.0, 1.0);
        lp_err += e * e;
      }
      best = std::max(best, (sep_err - lp_err) / static_cast<double>(n));
    }
  }
  return best;
}

LipschitzOptions LipschitzOptions::from_json(const nlohmann::json& j) {
  LipschitzOptions o;
  o.alpha = j.value("alpha", o.alpha);
  o.epsilon = j.value("epsilon", o.epsilon);
  if (j.contains("level")) o.level = view_level_from_string(j.at("level").get<std::string>());
  o.a_class.max_thresholds = j.value("max_thresholds", o.a_class.max_thresholds);
  o.panel_size = j.value("panel_size", o.panel_size);
  o.panel_pieces = j.value("panel_pieces", o.panel_pieces);
  o.panel_seed = j.value("panel_seed", o.panel_seed);
  o.shards = j.value("shards", o.shards);
  if (j.contains("max_updates") && !j.at("max_updates").is_null()) {
    o.max_updates = j.at("max_updates").get<std::size_t>();
  }
  return o;
}

nlohmann::json LipschitzOptions::to_json() const {
  return {{"alpha", alpha},
          {"epsilon", epsilon},
          {"level", to_string(level)},
          {"max_thresholds", a_class.max_thresholds},
          {"panel_size", panel_size},
          {"panel_pieces", panel_pieces},
          {"panel_seed", panel_seed},
          {"shards", shards},
          {"max_updates", max_updates ? nlohmann::json(*max_updates) : nlohmann::json()}};
}

nlohmann::json Certificate::to_json() const {
  return {{"alpha", alpha},
          {"epsilon", epsilon},
          {"lambda", lambda},
          {"bound", bound},
          {"panel_max_advantage_before", panel_before},
          {"panel_max_advantage_after", panel_after},
          {"rounds", rounds},
          {"cap", cap},
          {"bound_holds", bound_holds},
          {"decreased", decreased}};
}

std::vector<ProperLoss> sample_panel(std::size_t size, int pieces, std::uint64_t seed) {
  std::vector<ProperLoss> panel;
  for (std::size_t k = 0; k < size; ++k) panel.push_back(sample_lipschitz_loss(seed + k, pieces));
  return panel;
}

LipschitzResult mc_all_lipschitz(const Dataset& data, const LipschitzOptions& options) {
  std::vector<ProperLoss> panel =
      sample_panel(options.panel_size, options.panel_pieces, options.panel_seed);
  Basis basis = lipschitz_basis(options.epsilon);
  BoostOptions boost;
  boost.alpha = options.alpha;
  boost.level = options.level;
  boost.a_class = options.a_class;
  for (const auto& loss : panel) boost.a_class.extras.push_back(TestFunction::entropy(loss, 1.0));
  boost.shards = options.shards;
  boost.shard_seed = options.panel_seed;
  boost.max_updates = options.max_updates;

  const std::vector<double> half(data.n, 0.5);
  const ViewTable before = initial_views(data, options.level, half);
  const double panel_before = panel_max_advantage(panel, before, data.labels, boost.a_class);

  BoostResult result = product_class_mc(data, basis.functions, boost);
  Certificate cert;
  cert.alpha = options.alpha;
  cert.epsilon = options.epsilon;
  cert.lambda = basis.lambda;
  cert.bound = 4.0 * basis.lambda * options.alpha + 4.0 * options.epsilon;
  cert.panel_before = panel_before;
  cert.panel_after =
      panel_max_advantage(panel, result.final_views, data.labels, boost.a_class);
  cert.rounds = result.trace.rounds.size();
  cert.cap = result.trace.cap;
  cert.bound_holds = cert.panel_after <= cert.bound;
  cert.decreased = cert.panel_after < cert.panel_before;
  return {std::move(result), cert, std::move(panel), std::move(basis)};
}

}  // namespace losspred
