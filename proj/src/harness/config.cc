#include "losspred/harness/config.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "losspred/error.h"
#include "losspred/rng.h"
#include "losspred/util.h"

namespace losspred::harness {
namespace {

void add_sign_subgroups(Dataset& data, double centre) {
  for (const char* s0 : {"+", "-"}) {
    for (const char* s1 : {"+", "-"}) {
      Mask mask(data.n);
      for (std::size_t i = 0; i < data.n; ++i) {
        const bool pos0 = data.features[i * data.d] >= centre;
        const bool pos1 = data.features[i * data.d + 1] >= centre;
        mask[i] = (pos0 == (*s0 == '+')) && (pos1 == (*s1 == '+'));
      }
      data.subgroups[std::string("x0") + s0 + "x1" + s1] = std::move(mask);
    }
  }
}

Dataset finite_dataset(const nlohmann::json& spec, std::uint64_t seed) {
  const std::size_t n = spec.value("n", std::size_t{1000});
  const std::size_t d = spec.value("d", std::size_t{2});
  const int levels = spec.value("levels", 3);
  const double scale = spec.value("weight_scale", 1.0);
  if (n < 1 || d < 2 || levels < 2) {
    throw ConfigError("finite dataset needs n >= 1, d >= 2, levels >= 2");
  }
  Rng rng(seed);
  std::vector<double> weights(d);
  for (double& w : weights) w = scale * rng.normal();
  Dataset data;
  data.n = n;
  data.d = d;
  for (std::size_t j = 0; j < d; ++j) data.feature_names.push_back("x" + std::to_string(j));
  data.features.resize(n * d);
  data.labels.resize(n);
  std::vector<double> p_star(n);
  const double centre = 0.5 * (levels - 1);
  for (std::size_t i = 0; i < n; ++i) {
    double margin = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double x = static_cast<double>(rng.below(static_cast<std::uint64_t>(levels)));
      data.features[i * d + j] = x;
      margin += weights[j] * (x - centre);
    }
    p_star[i] = 1.0 / (1.0 + std::exp(-margin));
    data.labels[i] = rng.bernoulli(p_star[i]) ? 1 : 0;
  }
  data.p_star = std::move(p_star);
  add_sign_subgroups(data, centre);
  data.provenance = {{"source", "finite"}, {"spec", spec}, {"seed", seed}, {"weights", weights}};
  return data;
}

Dataset constant_label_dataset(const nlohmann::json& spec, std::uint64_t seed) {
  const std::size_t n = spec.value("n", std::size_t{200});
  const std::size_t d = spec.value("d", std::size_t{2});
  const int label = spec.value("label", 0);
  if (n < 1 || d < 2) throw ConfigError("constant-label dataset needs n >= 1, d >= 2");
  if (label != 0 && label != 1) throw ConfigError("label must be 0 or 1");
  Rng rng(seed);
  Dataset data;
  data.n = n;
  data.d = d;
  for (std::size_t j = 0; j < d; ++j) data.feature_names.push_back("x" + std::to_string(j));
  data.features.resize(n * d);
  for (double& x : data.features) x = rng.normal();
  data.labels.assign(n, label);
  data.p_star = std::vector<double>(n, static_cast<double>(label));
  add_sign_subgroups(data, 0.0);
  data.provenance = {{"source", "constant-label"}, {"spec", spec}, {"seed", seed}};
  return data;
}

}  // namespace

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

Dataset make_dataset(const nlohmann::json& spec, std::uint64_t seed,
                     const std::filesystem::path& base_dir) {
  const std::string kind = spec.value("kind", std::string("synthetic"));
  if (kind == "synthetic") return synth_generate(SynthSpec::from_json(spec), seed);
  if (kind == "finite") return finite_dataset(spec, seed);
  if (kind == "constant-label") return constant_label_dataset(spec, seed);
  if (kind == "csv") {
    std::filesystem::path path = spec.at("path").get<std::string>();
    if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
    return load_csv(path.string(), CsvSchema::from_json(spec.at("schema")));
  }
  throw ConfigError("unknown dataset kind: " + kind);
}

Table::Table(std::string name, std::vector<std::string> columns,
             std::vector<std::string> descriptions)
    : name_(std::move(name)), columns_(std::move(columns)), descriptions_(std::move(descriptions)) {
  if (columns_.size() != descriptions_.size()) {
    throw ConfigError("every table column needs a description");
  }
}

std::string Table::cell(double v) { return format_number(v); }
std::string Table::cell(std::size_t v) { return std::to_string(v); }

void Table::add_row(std::vector<std::string> row) {
  if (row.size() != columns_.size()) throw ArityError("table row has the wrong width");
  rows_.push_back(std::move(row));
}

std::string Table::to_csv() const {
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (k) out << ',';
      const std::string& c = cells[k];
      if (c.find_first_of(",\"\n") == std::string::npos) {
        out << c;
      } else {
        out << '"';
        for (char ch : c) {
          if (ch == '"') out << '"';
          out << ch;
        }
        out << '"';
      }
    }
    out << '\n';
  };
  emit(columns_);
  for (const auto& r : rows_) emit(r);
  return out.str();
}

nlohmann::json Table::schema() const {
  nlohmann::json cols = nlohmann::json::array();
  for (std::size_t k = 0; k < columns_.size(); ++k) {
    cols.push_back({{"name", columns_[k]}, {"description", descriptions_[k]}});
  }
  return {{"file", name_ + ".csv"}, {"columns", cols}};
}

void write_tables(const std::filesystem::path& out, const std::vector<Table>& tables) {
  nlohmann::json schema = nlohmann::json::array();
  for (const auto& t : tables) {
    write_text(out / "tables" / (t.name() + ".csv"), t.to_csv());
    schema.push_back(t.schema());
  }
  write_json(out / "tables" / "schema.json", {{"tables", schema}});
}

}  // namespace losspred::harness
