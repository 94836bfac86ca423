#ifndef LOSSPRED_TESTS_SUPPORT_INSTANCES_H_
#define LOSSPRED_TESTS_SUPPORT_INSTANCES_H_

// Small random instances shared by the property tests and the acceptance
// binary. Views are input-aware with one feature: phi = (p, x).

#include <cstdint>
#include <string>
#include <vector>

#include "losspred/dataset.h"
#include "losspred/loss_prediction.h"
#include "losspred/losses.h"
#include "losspred/predictors.h"
#include "losspred/rng.h"
#include "losspred/test_function.h"

namespace losspred::fixtures {

// A dataset from explicit rows; feature names f0, f1, ...
inline Dataset make_data(std::vector<double> features, std::size_t d, std::vector<int> labels) {
  Dataset data;
  data.n = labels.size();
  data.d = d;
  data.features = std::move(features);
  data.labels = std::move(labels);
  for (std::size_t j = 0; j < d; ++j) data.feature_names.push_back("f" + std::to_string(j));
  return data;
}

struct SmallInstance {
  ViewTable views;
  std::vector<int> labels;
  ProperLoss loss = ProperLoss::squared();
  std::vector<LossPredictor> family;
  std::vector<TestFunction> stumps;  // random stumps on x, range {-1, 0, 1}
};

inline ProperLoss pick_loss(std::uint64_t seed) {
  const auto builtins = builtin_losses();
  if (seed % 2 == 0) return builtins[(seed / 2) % builtins.size()];
  return sample_lipschitz_loss(seed, 1 + static_cast<int>(seed % 6));
}

inline TestFunction random_stump(Rng& rng) {
  const double t = rng.uniform();
  const bool below = rng.bernoulli(0.5);
  const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
  return TestFunction::stump(1, t, below, sign);
}

// Loss predictors of two shapes: a two-valued stump on x, or SEP shifted by a
// random stump.
inline LossPredictor random_loss_predictor(Rng& rng, const ProperLoss& loss) {
  if (rng.bernoulli(0.5)) {
    const double t = rng.uniform(), hi = rng.uniform(), lo = rng.uniform();
    return LossPredictor(
        LossPredictor::Custom{"stump-lp",
                              [=](std::span<const double> phi) { return phi[1] >= t ? hi : lo; }},
        loss, ViewLevel::kInputAware);
  }
  return LossPredictor(LossPredictor::Shifted{random_stump(rng), rng.uniform(0.0, 0.5)}, loss,
                       ViewLevel::kInputAware);
}

inline SmallInstance small_instance(std::uint64_t seed, std::size_t max_n = 16,
                                    std::size_t max_family = 4) {
  Rng rng(seed * 7919 + 17);
  SmallInstance inst;
  inst.loss = pick_loss(seed);
  const std::size_t n = 1 + rng.below(max_n);
  std::vector<double> preds(n), xs(n);
  // Predictions on a coarse grid so level sets repeat.
  for (std::size_t i = 0; i < n; ++i) {
    preds[i] = static_cast<double>(rng.below(9)) / 8.0;
    xs[i] = rng.uniform();
    const double p_true = rng.bernoulli(0.5) ? preds[i] : rng.uniform();
    inst.labels.push_back(rng.bernoulli(p_true) ? 1 : 0);
  }
  inst.views = ViewTable::from_columns(ViewLevel::kInputAware, preds, xs, 1);
  const std::size_t k = 1 + rng.below(max_family);
  for (std::size_t j = 0; j < k; ++j) inst.family.push_back(random_loss_predictor(rng, inst.loss));
  for (std::size_t j = 0; j < 4; ++j) inst.stumps.push_back(random_stump(rng));
  return inst;
}

}  // namespace losspred::fixtures

#endif  // LOSSPRED_TESTS_SUPPORT_INSTANCES_H_
