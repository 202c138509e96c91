#pragma once

// Flat "key = value" run configuration covering every tunable of the
// pipeline. A profile key selects the default table; everything else
// overrides it.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "skd/data.hpp"
#include "skd/ldc.hpp"
#include "skd/schedule.hpp"
#include "skd/teacher.hpp"

namespace skd::config {

enum class Profile { synthetic, motor_imagery, x11_s4b };
enum class DataSource { synth, csv };

[[nodiscard]] std::string_view to_string(Profile p) noexcept;
[[nodiscard]] Profile parse_profile(std::string_view s);

struct RunConfig {
  Profile profile = Profile::synthetic;
  std::uint64_t seed = 0;
  std::string out_dir = "run";

  // Data.
  DataSource data_source = DataSource::synth;
  std::string data_path;
  std::size_t num_classes = 0;  // csv only; 0 infers from labels
  double train_fraction = 5000.0 / 6000.0;
  std::size_t num_levels = 16;
  data::SynthConfig synth;

  // Teacher: hidden widths between the input and class layers.
  std::vector<std::size_t> teacher_hidden{384, 256};
  teacher::Activation teacher_activation = teacher::Activation::relu;
  int teacher_epochs = 8;
  double teacher_lr = 0.02;
  double teacher_lr_decay = 0.1;
  int teacher_lr_step = 50;
  std::size_t teacher_batch = 64;

  // Student.
  ldc::LDCConfig ldc;

  // Distillation.
  bool use_teacher = true;  // false: supervised LDC, no teacher at all
  sched::AlphaSchedule alpha;
  sched::OrderMode order = sched::OrderMode::curriculum;
  std::array<double, 3> pool_fractions{0.65, 0.80, 0.95};
  sched::TrainConfig train;

  // Throws UsageError naming the offending key.
  void validate() const;

  [[nodiscard]] teacher::TeacherConfig teacher_config(std::size_t num_features,
                                                      std::size_t num_classes) const;
  [[nodiscard]] ldc::LDCConfig ldc_config(std::size_t num_features, std::size_t num_classes) const;
};

// Defaults for a profile. synthetic is the tuned desk benchmark; the two EEG
// profiles carry the published optimizer, change-point and pool settings.
[[nodiscard]] RunConfig defaults(Profile profile);

// Parses "key = value" lines; '#' starts a comment. The profile key, wherever
// it appears, is applied first. Errors are UsageError with "source:line: key".
[[nodiscard]] RunConfig parse_config_text(std::string_view text,
                                          std::string_view source = "<config>");
[[nodiscard]] RunConfig parse_config(const std::filesystem::path& path);

// Single-key override (CLI flags, sweep axes). Throws UsageError on an
// unknown key or bad value.
void set_value(RunConfig& cfg, std::string_view key, std::string_view value);
[[nodiscard]] std::string get_value(const RunConfig& cfg, std::string_view key);
[[nodiscard]] bool is_key(std::string_view key) noexcept;
[[nodiscard]] std::vector<std::string> keys();

// Every key as "key = value", in table order. Parsing the result reproduces
// cfg.
[[nodiscard]] std::string format_config(const RunConfig& cfg);

}  // namespace skd::config
