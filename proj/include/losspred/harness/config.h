#ifndef LOSSPRED_HARNESS_CONFIG_H_
#define LOSSPRED_HARNESS_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "losspred/dataset.h"

namespace losspred::harness {

nlohmann::json read_json_file(const std::filesystem::path& path);
// Creates parent directories. JSON is written with two-space indentation and
// a trailing newline.
void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

// Dataset kinds:
//   {"kind": "synthetic", "n", "d", "theta", "weight_scale"}
//   {"kind": "finite", "n", "d", "levels", "weight_scale"}: features uniform
//       on {0, .., levels - 1}, logistic p*, sign-pattern subgroups of the
//       first two centred features
//   {"kind": "constant-label", "n", "d", "label"}: normal features, one label
//   {"kind": "csv", "path", "schema"}
// Relative CSV paths resolve against `base_dir`.
Dataset make_dataset(const nlohmann::json& spec, std::uint64_t seed,
                     const std::filesystem::path& base_dir = {});

// A CSV table with string cells. Numbers should go through cell().
class Table {
 public:
  Table(std::string name, std::vector<std::string> columns,
        std::vector<std::string> descriptions);

  static std::string cell(double v);
  static std::string cell(std::size_t v);
  static std::string cell(const std::string& v) { return v; }

  void add_row(std::vector<std::string> row);
  const std::string& name() const { return name_; }
  std::size_t rows() const { return rows_.size(); }
  std::string to_csv() const;
  // {"file": "<name>.csv", "columns": [{"name", "description"}]}
  nlohmann::json schema() const;

 private:
  std::string name_;
  std::vector<std::string> columns_;
  std::vector<std::string> descriptions_;
  std::vector<std::vector<std::string>> rows_;
};

// Writes tables/<name>.csv for every table plus tables/schema.json.
void write_tables(const std::filesystem::path& out, const std::vector<Table>& tables);

}  // namespace losspred::harness

#endif  // LOSSPRED_HARNESS_CONFIG_H_
