#include <gtest/gtest.h>

#include <filesystem>

#include "losspred/dataset.h"
#include "losspred/error.h"

namespace losspred {
namespace {

CsvSchema schema(std::string label, std::vector<std::string> features = {}) {
  CsvSchema s;
  s.label = std::move(label);
  s.features = std::move(features);
  return s;
}

TEST(Csv, ThreeRows) {
  const auto data = parse_csv("x,y\n1.5,0\n2,1\n-3,0\n", schema("y"));
  EXPECT_EQ(data.n, 3u);
  EXPECT_EQ(data.labels, (std::vector<int>{0, 1, 0}));
  EXPECT_EQ(data.features, (std::vector<double>{1.5, 2.0, -3.0}));
}

TEST(Csv, CategoricalOneHotSorted) {
  const auto data = parse_csv("c,y\nb,0\na,1\nb,1\n", schema("y"));
  ASSERT_EQ(data.d, 2u);
  EXPECT_EQ(data.feature_names, (std::vector<std::string>{"c=a", "c=b"}));
  EXPECT_EQ(data.features, (std::vector<double>{0, 1, 1, 0, 0, 1}));
}

TEST(Csv, SubgroupMasks) {
  auto s = schema("y", {"age"});
  s.subgroups.push_back(SubgroupSpec::parse("education=primary"));
  s.subgroups.push_back(SubgroupSpec::parse("education in {primary,tertiary}"));
  const auto data = parse_csv(
      "age,education,y\n30,primary,1\n40,secondary,0\n50,\"primary\",0\n60,tertiary,1\n", s);
  EXPECT_EQ(data.subgroups.at("education=primary"), (Mask{1, 0, 1, 0}));
  EXPECT_EQ(data.subgroups.at("education in {primary,tertiary}"), (Mask{1, 0, 1, 1}));
  EXPECT_THROW(SubgroupSpec::parse("no operator"), SchemaError);
}

TEST(Csv, QuotedFieldsAndCrlf) {
  const auto data = parse_csv("\"name, with comma\",y\r\n\"1\",1\r\n2,0\r\n", schema("y"));
  EXPECT_EQ(data.feature_names[0], "name, with comma");
  EXPECT_EQ(data.n, 2u);
}

TEST(Csv, Errors) {
  EXPECT_THROW(parse_csv("", schema("y")), ParseError);
  EXPECT_THROW(parse_csv("x,z\n1,0\n", schema("y")), SchemaError);
  EXPECT_THROW(parse_csv("x,y\n1,2\n", schema("y")), LabelError);
  try {
    parse_csv("x,y\n1,0\n,1\n", schema("y"));
    FAIL() << "missing value accepted";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 3);
    EXPECT_EQ(e.column(), 1);
  }
  EXPECT_THROW(parse_csv("x,y\n1,0,3\n", schema("y")), ParseError);
  EXPECT_THROW(parse_csv("x,y\n\"1,0\n", schema("y")), ParseError);
  EXPECT_THROW(load_csv("/nonexistent/file.csv", schema("y")), DataError);
}

TEST(Csv, RoundTripIsLossless) {
  const auto data = synth_generate({.n = 50, .d = 3}, 7);
  const auto back = parse_csv(to_csv(data), round_trip_schema(data));
  EXPECT_EQ(back.features, data.features);
  EXPECT_EQ(back.labels, data.labels);
  EXPECT_EQ(back.subgroups, data.subgroups);
  ASSERT_TRUE(back.p_star);
  EXPECT_EQ(*back.p_star, *data.p_star);
  const auto path = std::filesystem::temp_directory_path() / "losspred_roundtrip.csv";
  write_csv(data, path.string());
  EXPECT_EQ(load_csv(path.string(), round_trip_schema(data)).features, data.features);
  std::filesystem::remove(path);
}

TEST(Synth, DeterministicWithSubgroups) {
  const SynthSpec spec{.n = 200, .d = 4, .theta = 0.5};
  const auto a = synth_generate(spec, 3);
  const auto b = synth_generate(spec, 3);
  EXPECT_EQ(a.features, b.features);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_NE(synth_generate(spec, 4).features, a.features);
  ASSERT_EQ(a.subgroups.size(), 4u);
  std::vector<int> cover(a.n, 0);
  for (const auto& [name, mask] : a.subgroups) {
    for (std::size_t i = 0; i < a.n; ++i) cover[i] += mask[i];
  }
  for (int c : cover) EXPECT_EQ(c, 1);
  EXPECT_THROW(synth_generate({.n = 10, .d = 1}, 0), ConfigError);
  EXPECT_THROW(synth_generate({.n = 10, .d = 2, .theta = 2.0}, 0), ConfigError);
}

TEST(Split, SizesAndDeterminism) {
  const auto data = synth_generate({.n = 10, .d = 2}, 1);
  const auto [a, b] = split(data, 0.5, 0.5, 9);
  EXPECT_EQ(a.n, 5u);
  EXPECT_EQ(b.n, 5u);
  const auto [c, d] = split(data, 0.5, 0.5, 9);
  EXPECT_EQ(a.features, c.features);
  EXPECT_EQ(b.labels, d.labels);
  EXPECT_THROW(split(data, 0.7, 0.7, 9), ConfigError);
}

TEST(Dataset, RestrictAndValidate) {
  auto data = synth_generate({.n = 40, .d = 2}, 2);
  const auto& mask = data.subgroups.at("x0+x1+");
  const auto sub = data.restrict_to(mask);
  std::size_t expected = 0;
  for (auto m : mask) expected += m;
  EXPECT_EQ(sub.n, expected);
  data.labels[0] = 3;
  EXPECT_THROW(data.validate(), DataError);
}

}  // namespace
}  // namespace losspred
