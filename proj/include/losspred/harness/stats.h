#ifndef LOSSPRED_HARNESS_STATS_H_
#define LOSSPRED_HARNESS_STATS_H_

#include <span>
#include <vector>

#include "json.hpp"

namespace losspred::harness {

// Ranks starting at 1, ties share their average rank.
std::vector<double> average_ranks(std::span<const double> values);

// Pearson correlation of the average ranks; 0 when either side is constant.
double spearman(std::span<const double> x, std::span<const double> y);

struct Concordance {
  std::size_t concordant = 0;
  std::size_t discordant = 0;
  std::size_t tied = 0;  // pairs with a zero difference on either side
  // concordant / (concordant + discordant); 0 when no pair is untied.
  double fraction = 0.0;

  nlohmann::json to_json() const;
};

Concordance sign_concordance(std::span<const double> x, std::span<const double> y);

double mean(std::span<const double> v);
// Sample standard deviation divided by sqrt(n); 0 for n < 2.
double standard_error(std::span<const double> v);

}  // namespace losspred::harness

#endif  // LOSSPRED_HARNESS_STATS_H_
