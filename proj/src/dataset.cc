#include "losspred/dataset.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "losspred/error.h"
#include "losspred/rng.h"
#include "losspred/util.h"

namespace losspred {
namespace {

struct Record {
  long line = 0;
  std::vector<std::string> cells;
};

std::vector<Record> parse_records(const std::string& text) {
  std::vector<Record> records;
  Record current;
  std::string cell;
  bool in_quotes = false;
  bool cell_started = false;
  long line = 1;
  current.line = 1;
  auto finish_cell = [&] {
    current.cells.push_back(std::move(cell));
    cell.clear();
    cell_started = false;
  };
  auto finish_record = [&] {
    finish_cell();
    if (!(current.cells.size() == 1 && current.cells[0].empty())) {
      records.push_back(std::move(current));
    }
    current = Record{};
    current.line = line;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        cell.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      if (cell_started) {
        throw ParseError("unexpected quote inside unquoted field", line,
                         static_cast<long>(current.cells.size()) + 1);
      }
      in_quotes = true;
      cell_started = true;
    } else if (c == ',') {
      finish_cell();
    } else if (c == '\r') {
      // CRLF: the '\n' that follows terminates the record.
    } else if (c == '\n') {
      ++line;
      finish_record();
    } else {
      cell.push_back(c);
      cell_started = true;
    }
  }
  if (in_quotes) {
    throw ParseError("unterminated quoted field", line,
                     static_cast<long>(current.cells.size()) + 1);
  }
  if (cell_started || !current.cells.empty()) finish_record();
  return records;
}

std::optional<double> parse_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double value = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

}  // namespace

double Dataset::base_rate() const {
  if (n == 0) return 0.0;
  double sum = 0.0;
  for (int y : labels) sum += y;
  return sum / static_cast<double>(n);
}

void Dataset::validate() const {
  if (features.size() != n * d) throw DataError("feature matrix is not n x d");
  if (labels.size() != n) throw DataError("label count differs from n");
  if (!feature_names.empty() && feature_names.size() != d) {
    throw DataError("feature name count differs from d");
  }
  for (int y : labels) {
    if (y != 0 && y != 1) throw DataError("labels must be 0 or 1");
  }
  for (double x : features) {
    if (!std::isfinite(x)) throw DataError("features must be finite");
  }
  for (const auto& [name, mask] : subgroups) {
    if (mask.size() != n) throw DataError("subgroup mask " + name + " has wrong length");
  }
  if (p_star) {
    if (p_star->size() != n) throw DataError("p_star has wrong length");
    for (double p : *p_star) {
      if (!(p >= 0.0 && p <= 1.0)) throw DataError("p_star must lie in [0,1]");
    }
  }
  if (external.size() != n * external_dim) {
    throw DataError("external representation is not n x external_dim");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.n = rows.size();
  out.d = d;
  out.feature_names = feature_names;
  out.provenance = provenance;
  out.external_dim = external_dim;
  out.features.reserve(rows.size() * d);
  out.labels.reserve(rows.size());
  out.external.reserve(rows.size() * external_dim);
  for (std::size_t r : rows) {
    if (r >= n) throw DataError("subset row out of range");
    auto x = row(r);
    out.features.insert(out.features.end(), x.begin(), x.end());
    out.labels.push_back(labels[r]);
    auto e = external_row(r);
    out.external.insert(out.external.end(), e.begin(), e.end());
  }
  for (const auto& [name, mask] : subgroups) {
    Mask sliced(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) sliced[i] = mask[rows[i]];
    out.subgroups.emplace(name, std::move(sliced));
  }
  if (p_star) {
    std::vector<double> sliced(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) sliced[i] = (*p_star)[rows[i]];
    out.p_star = std::move(sliced);
  }
  return out;
}

Dataset Dataset::restrict_to(const Mask& mask) const {
  if (mask.size() != n) throw DataError("mask length differs from n");
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i]) rows.push_back(i);
  }
  return subset(rows);
}

SubgroupSpec SubgroupSpec::parse(const std::string& text) {
  SubgroupSpec spec;
  spec.name = text;
  std::string set_part;
  std::size_t pos;
  if ((pos = text.find("∈")) != std::string::npos) {
    spec.column = trim(text.substr(0, pos));
    set_part = trim(text.substr(pos + std::string("∈").size()));
  } else if ((pos = text.find(" in ")) != std::string::npos) {
    spec.column = trim(text.substr(0, pos));
    set_part = trim(text.substr(pos + 4));
  } else if ((pos = text.find('=')) != std::string::npos) {
    spec.column = trim(text.substr(0, pos));
    spec.values.push_back(trim(text.substr(pos + 1)));
    return spec;
  } else {
    throw SchemaError("cannot parse subgroup spec: " + text);
  }
  if (set_part.size() < 2 || set_part.front() != '{' || set_part.back() != '}') {
    throw SchemaError("subgroup set must be written {a,b,...}: " + text);
  }
  std::stringstream items(set_part.substr(1, set_part.size() - 2));
  std::string item;
  while (std::getline(items, item, ',')) spec.values.push_back(trim(item));
  return spec;
}

CsvSchema CsvSchema::from_json(const nlohmann::json& j) {
  CsvSchema schema;
  schema.label = j.at("label").get<std::string>();
  schema.features = j.value("features", std::vector<std::string>{});
  schema.categorical = j.value("categorical", std::vector<std::string>{});
  if (j.contains("subgroups")) {
    for (const auto& item : j.at("subgroups")) {
      if (item.is_string()) {
        schema.subgroups.push_back(SubgroupSpec::parse(item.get<std::string>()));
      } else {
        SubgroupSpec spec = SubgroupSpec::parse(item.at("where").get<std::string>());
        spec.name = item.value("name", spec.name);
        schema.subgroups.push_back(std::move(spec));
      }
    }
  }
  return schema;
}

nlohmann::json CsvSchema::to_json() const {
  nlohmann::json j;
  j["label"] = label;
  j["features"] = features;
  j["categorical"] = categorical;
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : subgroups) {
    std::string where = g.column;
    if (g.values.size() == 1) {
      where += "=" + g.values[0];
    } else {
      where += " in {";
      for (std::size_t i = 0; i < g.values.size(); ++i) {
        where += (i ? "," : "") + g.values[i];
      }
      where += "}";
    }
    groups.push_back({{"name", g.name}, {"where", where}});
  }
  j["subgroups"] = groups;
  return j;
}

Dataset parse_csv(const std::string& text, const CsvSchema& schema) {
  const std::vector<Record> records = parse_records(text);
  if (records.empty()) throw ParseError("missing header row", 1, 1);
  const std::vector<std::string>& header = records[0].cells;
  std::map<std::string, std::size_t> column_of;
  for (std::size_t c = 0; c < header.size(); ++c) column_of[header[c]] = c;
  auto require = [&](const std::string& name) {
    auto it = column_of.find(name);
    if (it == column_of.end()) throw SchemaError("missing column: " + name);
    return it->second;
  };

  const std::size_t label_col = require(schema.label);
  std::vector<std::string> feature_columns = schema.features;
  if (feature_columns.empty()) {
    for (const auto& name : header) {
      if (name != schema.label) feature_columns.push_back(name);
    }
  }
  std::vector<std::size_t> feature_idx;
  for (const auto& name : feature_columns) feature_idx.push_back(require(name));
  std::vector<std::size_t> group_idx;
  for (const auto& g : schema.subgroups) group_idx.push_back(require(g.column));

  const std::size_t rows = records.size() - 1;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.cells.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) +
                           " fields, found " + std::to_string(rec.cells.size()),
                       rec.line, static_cast<long>(rec.cells.size()));
    }
    for (std::size_t c = 0; c < rec.cells.size(); ++c) {
      if (rec.cells[c].empty()) {
        throw ParseError("missing value in column " + header[c], rec.line,
                         static_cast<long>(c) + 1);
      }
    }
  }

  Dataset data;
  data.n = rows;
  data.labels.resize(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto& rec = records[r + 1];
    const auto value = parse_number(rec.cells[label_col]);
    if (!value || (*value != 0.0 && *value != 1.0)) {
      throw LabelError("label must be 0 or 1, got '" + rec.cells[label_col] +
                       "' at row " + std::to_string(rec.line));
    }
    data.labels[r] = static_cast<int>(*value);
  }

  // Column-wise encoding; each feature column becomes one numeric column or
  // a block of one-hot columns.
  std::vector<std::vector<double>> columns;
  const std::set<std::string> forced(schema.categorical.begin(),
                                     schema.categorical.end());
  for (std::size_t f = 0; f < feature_idx.size(); ++f) {
    const std::size_t c = feature_idx[f];
    bool numeric = !forced.contains(feature_columns[f]);
    std::vector<double> parsed(rows);
    for (std::size_t r = 0; numeric && r < rows; ++r) {
      const auto value = parse_number(records[r + 1].cells[c]);
      if (!value) {
        numeric = false;
      } else {
        parsed[r] = *value;
      }
    }
    if (numeric) {
      columns.push_back(std::move(parsed));
      data.feature_names.push_back(feature_columns[f]);
      continue;
    }
    std::set<std::string> categories;
    for (std::size_t r = 0; r < rows; ++r) categories.insert(records[r + 1].cells[c]);
    for (const auto& category : categories) {
      std::vector<double> onehot(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        onehot[r] = records[r + 1].cells[c] == category ? 1.0 : 0.0;
      }
      columns.push_back(std::move(onehot));
      data.feature_names.push_back(feature_columns[f] + "=" + category);
    }
  }
  data.d = columns.size();
  data.features.resize(rows * data.d);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < data.d; ++j) data.features[r * data.d + j] = columns[j][r];
  }

  for (std::size_t g = 0; g < schema.subgroups.size(); ++g) {
    const auto& spec = schema.subgroups[g];
    const std::set<std::string> accepted(spec.values.begin(), spec.values.end());
    Mask mask(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      mask[r] = accepted.contains(records[r + 1].cells[group_idx[g]]) ? 1 : 0;
    }
    data.subgroups[spec.name] = std::move(mask);
  }
  if (column_of.contains("p_star") && schema.label != "p_star" &&
      std::find(feature_columns.begin(), feature_columns.end(), "p_star") ==
          feature_columns.end()) {
    std::vector<double> p(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      const auto value = parse_number(records[r + 1].cells[column_of["p_star"]]);
      if (!value) {
        throw ParseError("p_star is not numeric", records[r + 1].line,
                         static_cast<long>(column_of["p_star"]) + 1);
      }
      p[r] = *value;
    }
    data.p_star = std::move(p);
  }
  data.provenance = {{"source", "csv"}, {"schema", schema.to_json()}};
  data.validate();
  return data;
}

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  Dataset data = parse_csv(buffer.str(), schema);
  data.provenance["path"] = path;
  return data;
}

std::string to_csv(const Dataset& data) {
  std::ostringstream out;
  std::vector<std::string> header;
  for (std::size_t j = 0; j < data.d; ++j) {
    header.push_back(j < data.feature_names.size() ? data.feature_names[j]
                                                   : "x" + std::to_string(j));
  }
  header.push_back("label");
  for (const auto& [name, mask] : data.subgroups) header.push_back("group:" + name);
  if (data.p_star) header.push_back("p_star");
  for (std::size_t c = 0; c < header.size(); ++c) {
    out << (c ? "," : "") << quote_if_needed(header[c]);
  }
  out << "\n";
  for (std::size_t i = 0; i < data.n; ++i) {
    for (std::size_t j = 0; j < data.d; ++j) {
      out << format_number(data.features[i * data.d + j]) << ",";
    }
    out << data.labels[i];
    for (const auto& [name, mask] : data.subgroups) out << "," << int(mask[i]);
    if (data.p_star) out << "," << format_number((*data.p_star)[i]);
    out << "\n";
  }
  return out.str();
}

void write_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << to_csv(data);
}

CsvSchema round_trip_schema(const Dataset& data) {
  CsvSchema schema;
  schema.label = "label";
  for (std::size_t j = 0; j < data.d; ++j) {
    schema.features.push_back(j < data.feature_names.size()
                                  ? data.feature_names[j]
                                  : "x" + std::to_string(j));
  }
  for (const auto& [name, mask] : data.subgroups) {
    schema.subgroups.push_back({name, "group:" + name, {"1"}});
  }
  return schema;
}

SynthSpec SynthSpec::from_json(const nlohmann::json& j) {
  SynthSpec spec;
  spec.n = j.value("n", spec.n);
  spec.d = j.value("d", spec.d);
  spec.theta = j.value("theta", spec.theta);
  spec.weight_scale = j.value("weight_scale", spec.weight_scale);
  return spec;
}

nlohmann::json SynthSpec::to_json() const {
  return {{"n", n}, {"d", d}, {"theta", theta}, {"weight_scale", weight_scale}};
}

Dataset synth_generate(const SynthSpec& spec, std::uint64_t seed) {
  if (spec.n < 1) throw ConfigError("synthetic n must be >= 1");
  if (spec.d < 2) throw ConfigError("synthetic d must be >= 2 (subgroups use x0, x1)");
  if (!(spec.theta >= 0.0 && spec.theta <= 1.0)) {
    throw ConfigError("theta must lie in [0,1]");
  }
  Rng rng(seed);
  std::vector<double> weights(spec.d);
  for (double& w : weights) w = spec.weight_scale * rng.normal();

  Dataset data;
  data.n = spec.n;
  data.d = spec.d;
  for (std::size_t j = 0; j < spec.d; ++j) data.feature_names.push_back("x" + std::to_string(j));
  data.features.resize(spec.n * spec.d);
  data.labels.resize(spec.n);
  std::vector<double> p_star(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    double margin = 0.0;
    for (std::size_t j = 0; j < spec.d; ++j) {
      const double x = rng.normal();
      data.features[i * spec.d + j] = x;
      margin += weights[j] * x;
    }
    p_star[i] = 1.0 / (1.0 + std::exp(-margin));
    data.labels[i] = rng.bernoulli(p_star[i]) ? 1 : 0;
  }
  data.p_star = std::move(p_star);
  for (const char* s0 : {"+", "-"}) {
    for (const char* s1 : {"+", "-"}) {
      Mask mask(spec.n);
      for (std::size_t i = 0; i < spec.n; ++i) {
        const bool pos0 = data.features[i * spec.d] >= 0.0;
        const bool pos1 = data.features[i * spec.d + 1] >= 0.0;
        mask[i] = (pos0 == (*s0 == '+')) && (pos1 == (*s1 == '+'));
      }
      data.subgroups[std::string("x0") + s0 + "x1" + s1] = std::move(mask);
    }
  }
  data.provenance = {{"source", "synthetic"}, {"spec", spec.to_json()},
                     {"seed", seed}, {"weights", weights}};
  return data;
}

std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction,
                                  double test_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && test_fraction > 0.0) ||
      std::abs(train_fraction + test_fraction - 1.0) > 1e-9) {
    throw ConfigError("split fractions must be positive and sum to 1");
  }
  Rng rng(seed);
  const std::vector<std::size_t> order = rng.permutation(data.n);
  const std::size_t n_train = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(data.n)));
  std::span<const std::size_t> all(order);
  Dataset train = data.subset(all.first(n_train));
  Dataset test = data.subset(all.subspan(n_train));
  train.provenance["split"] = {{"part", "train"}, {"seed", seed}};
  test.provenance["split"] = {{"part", "test"}, {"seed", seed}};
  return {std::move(train), std::move(test)};
}

}  // namespace losspred
