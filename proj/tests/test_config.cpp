#include <gtest/gtest.h>

#include <string>

#include "skd/config.hpp"
#include "skd/error.hpp"

using namespace skd;
using namespace skd::config;

namespace {

std::string usage_error(std::string_view text) {
  try {
    (void)parse_config_text(text, "c.txt");
  } catch (const UsageError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Config, EmptyFileGivesDefaults) {
  const auto cfg = parse_config_text("", "empty");
  EXPECT_EQ(format_config(cfg), format_config(defaults(Profile::synthetic)));
  EXPECT_EQ(format_config(parse_config_text("# only a comment\n\n")), format_config(cfg));
}

TEST(Config, RangeChecks) {
  EXPECT_NE(usage_error("gamma = 1.5\n").find("gamma"), std::string::npos);
  EXPECT_FALSE(usage_error("gamma = 0\n").empty());
  EXPECT_TRUE(usage_error("gamma = 1\n").empty());
  EXPECT_FALSE(usage_error("alpha0 = -0.1\n").empty());
  EXPECT_FALSE(usage_error("k = 0\n").empty());
  EXPECT_FALSE(usage_error("mode = cosine\n").empty());
  EXPECT_FALSE(usage_error("pool_fractions = 0.9,0.5,1.0\n").empty());
  EXPECT_FALSE(usage_error("feature_dim = 130\n").empty());
  EXPECT_FALSE(usage_error("epochs = ten\n").empty());
  EXPECT_FALSE(usage_error("synth_label_noise = 0.5\n").empty());
}

TEST(Config, ProfileDefaults) {
  const auto cfg = parse_config_text("P = 100\nprofile = motor_imagery\n");
  EXPECT_EQ(cfg.profile, Profile::motor_imagery);
  EXPECT_EQ(cfg.alpha.change_point, 100);
  EXPECT_EQ(cfg.pool_fractions, (std::array<double, 3>{0.65, 0.80, 0.95}));
  const auto x = defaults(Profile::x11_s4b);
  EXPECT_EQ(x.alpha.change_point, 75);
  EXPECT_EQ(x.pool_fractions, (std::array<double, 3>{0.70, 0.90, 1.00}));
}

TEST(Config, ErrorsNameLineAndKey) {
  const auto msg = usage_error("seed = 3\n\nfoo = 1\n");
  EXPECT_NE(msg.find("c.txt:3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("foo"), std::string::npos);
  EXPECT_NE(usage_error("seed = 3\nseed = 4\n").find("c.txt:2"), std::string::npos);
  EXPECT_NE(usage_error("just words\n").find("c.txt:1"), std::string::npos);
}

TEST(Config, CsvSourceNeedsPath) {
  EXPECT_FALSE(usage_error("data_source = csv\n").empty());
  EXPECT_TRUE(usage_error("data_source = csv\ndata_path = x.csv\n").empty());
}

TEST(Config, FormatRoundTrip) {
  auto cfg = defaults(Profile::x11_s4b);
  set_value(cfg, "seed", "17");
  set_value(cfg, "tau", "2.5");
  set_value(cfg, "teacher_hidden", "64,32");
  set_value(cfg, "order_mode", "anti-curriculum");
  set_value(cfg, "lr", "0.1");
  const auto text = format_config(cfg);
  EXPECT_EQ(format_config(parse_config_text(text)), text);
  EXPECT_EQ(get_value(cfg, "seed"), "17");
  EXPECT_EQ(get_value(cfg, "teacher_hidden"), "64,32");
  for (const auto& k : keys()) {
    EXPECT_TRUE(is_key(k));
    EXPECT_NE(text.find(k + " = "), std::string::npos) << k;
  }
  EXPECT_FALSE(is_key("nope"));
  EXPECT_THROW(set_value(cfg, "nope", "1"), UsageError);
  EXPECT_THROW((void)get_value(cfg, "nope"), UsageError);
}

TEST(Config, DerivedSubconfigs) {
  const auto cfg = defaults(Profile::synthetic);
  const auto t = cfg.teacher_config(32, 5);
  EXPECT_EQ(t.layer_dims.front(), 32u);
  EXPECT_EQ(t.layer_dims.back(), 5u);
  EXPECT_EQ(t.layer_dims.size(), cfg.teacher_hidden.size() + 2);
  const auto l = cfg.ldc_config(32, 5);
  EXPECT_EQ(l.num_features, 32u);
  EXPECT_EQ(l.num_classes, 5u);
  EXPECT_EQ(l.num_levels, cfg.num_levels);
}
