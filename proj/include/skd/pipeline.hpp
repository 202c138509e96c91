#pragma once

// End-to-end run: data -> quantize -> teacher -> logit cache -> ranking ->
// pools -> distillation -> packed export -> evaluation and artifacts.
//
// Pipeline computes each stage lazily and keeps it, so several students
// (mode or order variants) can share one teacher and one ranking.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "skd/config.hpp"
#include "skd/cost.hpp"
#include "skd/data.hpp"
#include "skd/ldc.hpp"
#include "skd/schedule.hpp"
#include "skd/teacher.hpp"

namespace skd::pipeline {

struct Data {
  data::Dataset train;
  data::Dataset test;
  data::QuantSpec quant;  // fitted on train only
  data::QuantizedDataset qtrain;
  data::QuantizedDataset qtest;
};

class Pipeline {
 public:
  // Validates cfg (UsageError on failure).
  explicit Pipeline(config::RunConfig cfg);

  [[nodiscard]] const config::RunConfig& config() const noexcept { return cfg_; }

  const Data& data();
  const teacher::TeacherModel& teacher();
  const teacher::LogitCache& logits();
  double teacher_test_accuracy();

  // Supervised LDC from the shared init, random order: the no-KD baseline and
  // the student_loss reference ranker.
  const sched::TrainResult& reference();
  const std::vector<double>& student_scores();
  const std::vector<double>& teacher_scores();
  // Scores per cfg.train.ranking_source.
  const std::vector<double>& scores();

  [[nodiscard]] sched::CurriculumPlan plan(sched::OrderMode order);
  [[nodiscard]] ldc::LDCModel initial_student();
  [[nodiscard]] sched::TrainConfig train_config() const;

  // Student with the configured schedule except for mode and order.
  // use_teacher = false ignores mode.
  [[nodiscard]] sched::TrainResult distill(sched::AlphaMode mode, sched::OrderMode order,
                                           bool use_teacher = true);
  // Everything as configured.
  [[nodiscard]] sched::TrainResult distill();

 private:
  config::RunConfig cfg_;
  std::optional<Data> data_;
  std::optional<teacher::TeacherModel> teacher_;
  std::optional<teacher::LogitCache> logits_;
  std::optional<double> teacher_acc_;
  std::optional<sched::TrainResult> reference_;
  std::optional<std::vector<double>> student_scores_;
  std::optional<std::vector<double>> teacher_scores_;
};

struct RunSummary {
  double final_test_acc = 0.0;   // last metrics row
  double packed_test_acc = 0.0;  // re-evaluated from the saved model file
  double teacher_test_acc = 0.0;  // 0 without a teacher
  std::size_t epochs = 0;
};

// Header: epoch,alpha,pool_size,train_loss,kd_term,nll_term,train_acc,test_acc.
// With a non-empty axis_key the row gains a leading column named after it.
void write_metrics_csv(std::ostream& out, const std::vector<sched::MetricsRow>& rows,
                       const std::string& axis_key = {}, const std::string& axis_value = {},
                       bool header = true);

// LDC, HDC profile (D = 4000), teacher MLP and a binarized MLP of the
// teacher's shape, for cfg's data dimensions.
[[nodiscard]] std::vector<cost::ArchSpec> cost_specs(const config::RunConfig& cfg,
                                                     std::size_t num_features,
                                                     std::size_t num_classes);

// Full run into out_dir: config.txt, quant.csv, teacher_logits.lgt (with a
// teacher), scores.csv (ranked orders), metrics.csv, model.ldc, cost.txt,
// cost.csv, summary.txt. On failure the files written so far are removed and
// the error names the failing stage.
RunSummary run_pipeline(const config::RunConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace skd::pipeline
