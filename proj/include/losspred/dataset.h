#ifndef LOSSPRED_DATASET_H_
#define LOSSPRED_DATASET_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace losspred {

using Mask = std::vector<std::uint8_t>;

// Binary-labelled tabular data. Features are stored row-major (n x d).
// Subgroups are named row masks kept in lexicographic name order. p_star is
// present only for synthetic data, where the Bayes-optimal predictor is
// known. An optional external representation (n x external_dim) feeds
// representation-aware views.
struct Dataset {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> features;
  std::vector<std::string> feature_names;
  std::vector<int> labels;
  std::map<std::string, Mask> subgroups;
  std::optional<std::vector<double>> p_star;
  std::size_t external_dim = 0;
  std::vector<double> external;
  nlohmann::json provenance = nlohmann::json::object();

  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * d, d};
  }
  std::span<const double> external_row(std::size_t i) const {
    return {external.data() + i * external_dim, external_dim};
  }
  bool empty() const { return n == 0; }
  double base_rate() const;

  // Throws DataError if any documented invariant is broken.
  void validate() const;

  // Rows in the given order; masks, p_star and external features follow.
  Dataset subset(std::span<const std::size_t> rows) const;
  // Rows where the mask is set.
  Dataset restrict_to(const Mask& mask) const;
};

// A subgroup definition over raw CSV values: column == value or column in
// {values}.
struct SubgroupSpec {
  std::string name;
  std::string column;
  std::vector<std::string> values;

  // Parses "col=value", "col in {a,b}" or "col∈{a,b}". The name defaults to
  // the text itself.
  static SubgroupSpec parse(const std::string& text);
};

struct CsvSchema {
  std::string label;
  // Empty means "every column except the label".
  std::vector<std::string> features;
  // Columns forced to be treated as categorical; any other feature column
  // is numeric when every cell parses as a number, categorical otherwise.
  std::vector<std::string> categorical;
  std::vector<SubgroupSpec> subgroups;

  static CsvSchema from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// RFC-4180 CSV, header row required. Categorical columns are one-hot encoded
// with categories in lexicographic order and named "column=category".
// Empty cells are rejected (no imputation).
Dataset load_csv(const std::string& path, const CsvSchema& schema);
Dataset parse_csv(const std::string& text, const CsvSchema& schema);

// Writes features, a "label" column, one 0/1 column "group:<name>" per
// subgroup and, when present, a "p_star" column. Numbers use the shortest
// round-trip representation.
std::string to_csv(const Dataset& data);
void write_csv(const Dataset& data, const std::string& path);
// Schema that reloads a file written by write_csv.
CsvSchema round_trip_schema(const Dataset& data);

struct SynthSpec {
  std::size_t n = 1000;
  std::size_t d = 4;
  // Miscalibration knob, recorded for the harness that degrades base
  // predictors; the generated labels do not depend on it.
  double theta = 0.0;
  // Standard deviation of the hidden logistic weights.
  double weight_scale = 1.0;

  static SynthSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// x ~ N(0, I_d), p*(x) = sigmoid(w . x) with w ~ N(0, weight_scale^2 I) drawn
// from the seed, y ~ Ber(p*(x)). Subgroups are the four sign patterns of the
// first two features ("x0+x1+", "x0+x1-", "x0-x1+", "x0-x1-").
Dataset synth_generate(const SynthSpec& spec, std::uint64_t seed);

// Seeded permutation split into (train, test). Fractions must be positive and
// sum to 1.
std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction,
                                  double test_fraction, std::uint64_t seed);

}  // namespace losspred

#endif  // LOSSPRED_DATASET_H_
