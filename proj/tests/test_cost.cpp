#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <sstream>
#include <vector>

#include "skd/cost.hpp"
#include "skd/ldc.hpp"
#include "skd/rng.hpp"

using namespace skd;
using namespace skd::cost;

TEST(Cost, FloatMlpCountsDenseMacs) {
  const auto r = count_ops(ArchSpec::mlp("mlp", {100, 10}));
  EXPECT_EQ(r.fpmacs, 1000u);
  EXPECT_EQ(r.bmacs, 0u);
  EXPECT_EQ(r.model_size_bytes, (1000u + 10u) * 4u);
  EXPECT_EQ(count_ops(ArchSpec::mlp("m", {4, 8})).model_size_bytes, 160u);
}

TEST(Cost, LdcHandValue) {
  const auto r = count_ops(ArchSpec::ldc("ldc", 10, 4, 8, 2, 2));
  EXPECT_EQ(r.bmacs, 10u * 8 + 2u * 8);
  EXPECT_EQ(r.bmacs, 96u);
  EXPECT_EQ(r.fpmacs, 0u);
  EXPECT_EQ(r.model_size_bytes, (80u + 8u + 16u) / 8);
}

TEST(Cost, LdcLinearInFeatureDim) {
  for (std::size_t df : {64, 128, 256}) {
    EXPECT_EQ(count_ops(ArchSpec::ldc("a", 32, 16, 2 * df, 4, 5)).bmacs,
              2 * count_ops(ArchSpec::ldc("b", 32, 16, df, 4, 5)).bmacs);
  }
}

TEST(Cost, TensorBytes) {
  EXPECT_EQ(tensor_bytes(128 * 4, true), 64u);
  EXPECT_EQ(tensor_bytes(40, false), 160u);
  EXPECT_EQ(tensor_bytes(9, true), 2u);
}

TEST(Cost, HdcToLdcRatio) {
  const auto hdc = count_ops(ArchSpec::hdc("hdc", 32, 4000, 5));
  const auto ldc = count_ops(ArchSpec::ldc("ldc", 32, 16, 128, 4, 5));
  EXPECT_EQ(double(hdc.bmacs) / double(ldc.bmacs), 31.25);
  EXPECT_EQ(hdc.fpmacs, 0u);
}

TEST(Cost, BinarizedMlpSplitsMacs) {
  const auto r = count_ops(ArchSpec::binarized_mlp("bnn", {32, 64, 5}));
  EXPECT_EQ(r.bmacs, 32u * 64);
  EXPECT_EQ(r.fpmacs, 64u * 5);
  EXPECT_EQ(r.model_size_bytes, 32u * 64 / 8 + 64 * 4 + 64 * 5 * 4 + 5 * 4);
  const auto all = count_ops(ArchSpec::binarized_mlp("b", {32, 64, 5}, {true, true}));
  EXPECT_EQ(all.fpmacs, 0u);
}

TEST(Cost, SizePlusFramingEqualsModelFile) {
  Rng rng(1);
  for (const auto [n, df, dv] : std::vector<std::array<std::size_t, 3>>{{32, 128, 4}, {7, 64, 2}, {10, 8, 8}}) {
    ldc::LDCConfig c;
    c.num_features = n;
    c.feature_dim = df;
    c.value_dim = dv;
    const auto p = ldc::export_inference(ldc::LDCModel::create(c, rng));
    std::ostringstream out;
    p.write(out);
    const auto r = count_ops(ArchSpec::ldc("ldc", n, c.num_levels, df, dv, c.num_classes));
    EXPECT_EQ(out.str().size(), r.model_size_bytes + r.header_bytes);
  }
}

TEST(Cost, InvalidSpecs) {
  EXPECT_THROW((void)count_ops(ArchSpec::ldc("x", 0, 4, 8, 2, 2)), std::invalid_argument);
  EXPECT_THROW((void)count_ops(ArchSpec::mlp("x", {4})), std::invalid_argument);
  EXPECT_THROW((void)report_table({}), std::invalid_argument);
}

TEST(Cost, TableAndCsv) {
  const std::vector<ArchSpec> specs{ArchSpec::ldc("first", 10, 4, 8, 2, 2),
                                    ArchSpec::mlp("second", {100, 10})};
  const auto table = report_table(specs);
  EXPECT_NE(table.find("0.000096"), std::string::npos);
  EXPECT_LT(table.find("first"), table.find("second"));
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 3);
  std::ostringstream csv;
  write_csv(csv, specs);
  EXPECT_EQ(csv.str(), "name,bmacs,fpmacs,size_bytes\nfirst,96,0,13\nsecond,0,1000,4040\n");
}
