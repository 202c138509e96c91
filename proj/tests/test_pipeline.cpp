#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "skd/config.hpp"
#include "skd/error.hpp"
#include "skd/pipeline.hpp"

using namespace skd;
using namespace skd::pipeline;
namespace fs = std::filesystem;

namespace {

config::RunConfig tiny_config(std::uint64_t seed = 1) {
  auto cfg = config::defaults(config::Profile::synthetic);
  for (const auto& [k, v] : std::initializer_list<std::pair<const char*, const char*>>{
           {"synth_samples_per_class", "60"},
           {"synth_features", "12"},
           {"synth_classes", "3"},
           {"feature_dim", "64"},
           {"epochs", "6"},
           {"batch_size", "32"},
           {"teacher_hidden", "24"},
           {"teacher_epochs", "3"},
           {"P", "2"}}) {
    config::set_value(cfg, k, v);
  }
  cfg.seed = seed;
  cfg.validate();
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / name;
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST(Pipeline, RepeatedRunsAreByteIdentical) {
  const auto a = fresh_dir("skd_pipe_a");
  const auto b = fresh_dir("skd_pipe_b");
  const auto sa = run_pipeline(tiny_config(), a);
  const auto sb = run_pipeline(tiny_config(), b);
  for (const char* f : {"metrics.csv", "model.ldc", "scores.csv", "teacher_logits.lgt", "config.txt",
                        "quant.csv", "cost.csv"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  EXPECT_EQ(sa.final_test_acc, sb.final_test_acc);
  (void)run_pipeline(tiny_config(2), b);
  EXPECT_NE(slurp(a / "metrics.csv"), slurp(b / "metrics.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Pipeline, PackedModelFileReproducesFinalAccuracy) {
  const auto d = fresh_dir("skd_pipe_packed");
  const auto s = run_pipeline(tiny_config(3), d);
  EXPECT_EQ(s.packed_test_acc, s.final_test_acc);
  EXPECT_EQ(s.epochs, 6u);
  EXPECT_GT(s.teacher_test_acc, 0.0);
  const auto metrics = slurp(d / "metrics.csv");
  EXPECT_EQ(metrics.substr(0, metrics.find('\n')),
            "epoch,alpha,pool_size,train_loss,kd_term,nll_term,train_acc,test_acc");
  fs::remove_all(d);
}

TEST(Pipeline, ZeroStaticAlphaEqualsNoTeacherRun) {
  auto cfg = tiny_config(4);
  config::set_value(cfg, "alpha0", "0");
  Pipeline p(cfg);
  const auto kd = p.distill(sched::AlphaMode::static_alpha, sched::OrderMode::random, true);
  const auto& ref = p.reference();
  EXPECT_EQ(kd.model.feature_shadow, ref.model.feature_shadow);
  std::ostringstream x, y;
  write_metrics_csv(x, kd.metrics);
  write_metrics_csv(y, ref.metrics);
  EXPECT_EQ(x.str(), y.str());
}

TEST(Pipeline, ModeOrderMatrixCompletes) {
  auto cfg = tiny_config(5);
  config::set_value(cfg, "epochs", "3");
  Pipeline p(cfg);
  for (const auto mode : {sched::AlphaMode::static_alpha, sched::AlphaMode::linear,
                          sched::AlphaMode::exponential, sched::AlphaMode::parameterized}) {
    for (const auto order : {sched::OrderMode::curriculum, sched::OrderMode::random,
                             sched::OrderMode::anti_curriculum}) {
      const auto r = p.distill(mode, order);
      ASSERT_EQ(r.metrics.size(), 3u);
      for (const auto& m : r.metrics) {
        EXPECT_GE(m.alpha, 0.0);
        EXPECT_LE(m.alpha, 1.0);
        EXPECT_GE(m.test_acc, 0.0);
      }
    }
  }
}

TEST(Pipeline, FailedRunLeavesNoPartialArtifacts) {
  auto cfg = tiny_config(6);
  config::set_value(cfg, "teacher_lr", "1e300");
  const auto d = fresh_dir("skd_pipe_fail");
  try {
    (void)run_pipeline(cfg, d);
    FAIL() << "expected a numeric failure";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("teacher"), std::string::npos) << e.what();
  }
  EXPECT_TRUE(!fs::exists(d) || fs::is_empty(d));
  fs::remove_all(d);

  auto csv = tiny_config(6);
  config::set_value(csv, "data_source", "csv");
  config::set_value(csv, "data_path", "/nonexistent/skd.csv");
  EXPECT_THROW((void)run_pipeline(csv, d), DataError);
  EXPECT_TRUE(!fs::exists(d) || fs::is_empty(d));
  fs::remove_all(d);
}

TEST(Pipeline, MetricsCsvAxisColumn) {
  sched::MetricsRow r;
  r.epoch = 2;
  r.alpha = 0.5;
  std::ostringstream out;
  write_metrics_csv(out, {r}, "tau", "2");
  const auto text = out.str();
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "tau,epoch,alpha,pool_size,train_loss,kd_term,nll_term,train_acc,test_acc");
  EXPECT_EQ(text.substr(text.find('\n') + 1, 8), "2,2,0.5,");
}
