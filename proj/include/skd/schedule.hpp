#pragma once

// Scheduled knowledge distillation: the alpha scheduler family, loss-ranked
// curriculum ordering with nested pools, and the student training loop.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "skd/data.hpp"
#include "skd/ldc.hpp"
#include "skd/nn.hpp"
#include "skd/teacher.hpp"

namespace skd::sched {

enum class AlphaMode { static_alpha, linear, exponential, parameterized };
enum class OrderMode { curriculum, random, anti_curriculum };
enum class CurriculumMode { staged_pools, sorted_full };
enum class RankingSource { student_loss, teacher_loss };

[[nodiscard]] std::string_view to_string(AlphaMode m) noexcept;
[[nodiscard]] std::string_view to_string(OrderMode m) noexcept;
[[nodiscard]] std::string_view to_string(CurriculumMode m) noexcept;
[[nodiscard]] std::string_view to_string(RankingSource m) noexcept;
// Throw std::invalid_argument on unknown names.
[[nodiscard]] AlphaMode parse_alpha_mode(std::string_view s);
[[nodiscard]] OrderMode parse_order_mode(std::string_view s);
[[nodiscard]] CurriculumMode parse_curriculum_mode(std::string_view s);
[[nodiscard]] RankingSource parse_ranking_source(std::string_view s);

struct AlphaSchedule {
  AlphaMode mode = AlphaMode::exponential;
  double alpha0 = 0.8;
  int change_point = 0;  // P
  int decay_step = 1;    // k
  double decay_rate = 0.9;  // gamma
  int scaling_factor = 50;  // r
  double linear_end = 0.0;

  void validate() const;
};

// Mutable scheduler state threaded through successive alpha_at calls.
struct AlphaState {
  double alpha = 0.0;
  int next_epoch = 0;        // first epoch not yet folded into alpha (exponential)
  int total_epochs = 1;      // H, for the linear ramp
  double param_logit = 0.0;  // parameterized mode: alpha = sigmoid(param_logit)
};

[[nodiscard]] AlphaState init_alpha_state(const AlphaSchedule& schedule, int total_epochs);

// alpha for epoch h. Exponential mode compounds
//   alpha <- alpha * gamma^ceil(h / r)   for every epoch h >= P with h % k == 0
// over all epochs up to h, so calls must come in nondecreasing h.
[[nodiscard]] double alpha_at(const AlphaSchedule& schedule, int h, AlphaState& state);

// Per-sample difficulty: cross-entropy of a reference model's logits. Higher
// is harder.
[[nodiscard]] std::vector<double> score_difficulty(std::span<const double> logits,
                                                   std::size_t num_classes,
                                                   std::span<const std::uint32_t> labels);
[[nodiscard]] std::vector<double> score_difficulty(const ldc::LDCModel& ref,
                                                   const data::QuantizedDataset& ds);
[[nodiscard]] std::vector<double> score_difficulty(const teacher::LogitCache& ref,
                                                   const data::QuantizedDataset& ds);

// curriculum: stable ascending; anti_curriculum: stable descending; random:
// seeded shuffle.
[[nodiscard]] std::vector<std::size_t> order_dataset(std::span<const double> scores,
                                                     OrderMode mode, std::uint64_t seed);

struct CurriculumPlan {
  std::vector<std::size_t> permutation;
  OrderMode order_mode = OrderMode::random;
  std::array<double, 3> pool_fractions{1.0, 1.0, 1.0};
  std::array<std::size_t, 3> pool_sizes{0, 0, 0};
  std::array<int, 3> phase_epochs{0, 0, 0};
  std::vector<double> scores;

  // Pool index (0..2) in effect at epoch h.
  [[nodiscard]] std::size_t phase_of(int epoch) const noexcept;
};

// Pools are prefixes of the permutation of size floor(f_b * I). Phase lengths
// are floor(H * split_b) for the first two phases, the remainder for the last.
[[nodiscard]] CurriculumPlan build_pools(std::vector<std::size_t> permutation,
                                         std::array<double, 3> pool_fractions, int total_epochs,
                                         std::array<double, 3> phase_split = {1.0 / 3, 1.0 / 3,
                                                                              1.0 / 3});

// |hardest ceil(qI) by a  ∩  hardest ceil(qI) by b| / ceil(qI).
[[nodiscard]] double rank_overlap(std::span<const double> a, std::span<const double> b, double q);

struct TrainConfig {
  int epochs = 60;  // H
  std::size_t batch_size = 100;
  nn::StepDecay lr{0.5, 0.1, 50};
  double temperature = 4.0;
  std::uint64_t seed = 0;
  CurriculumMode curriculum_mode = CurriculumMode::staged_pools;
  RankingSource ranking_source = RankingSource::student_loss;

  void validate() const;
};

struct MetricsRow {
  int epoch = 0;
  double alpha = 0.0;
  std::size_t pool_size = 0;
  double train_loss = 0.0;  // kd_term + nll_term
  double kd_term = 0.0;     // mean alpha * L_KD over the epoch
  double nll_term = 0.0;    // mean (1 - alpha) * L_NLL over the epoch
  double train_acc = 0.0;   // packed model, full training split
  double test_acc = 0.0;    // packed model, test split

  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

struct TrainResult {
  ldc::LDCModel model;
  std::vector<MetricsRow> metrics;
};

// Packed-model accuracy on a quantized split.
[[nodiscard]] double packed_accuracy(const ldc::PackedLDCModel& model,
                                     const data::QuantizedDataset& ds);

// Trains the student epoch by epoch. teacher == nullptr runs plain supervised
// training (no distillation term, alpha reported as 0). test may be null, in
// which case test_acc is reported as 0.
[[nodiscard]] TrainResult train_student_scheduled(ldc::LDCModel student,
                                                  const data::QuantizedDataset& train,
                                                  const teacher::LogitCache* teacher,
                                                  const CurriculumPlan& plan,
                                                  const AlphaSchedule& schedule,
                                                  const TrainConfig& cfg,
                                                  const data::QuantizedDataset* test = nullptr);

}  // namespace skd::sched
