#pragma once

// Float MLP teacher and its cached per-sample logits.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "skd/data.hpp"
#include "skd/nn.hpp"

namespace skd::teacher {

enum class Activation { relu, tanh };

struct TeacherConfig {
  std::vector<std::size_t> layer_dims{32, 384, 256, 5};
  Activation activation = Activation::relu;
  int epochs = 15;
  double lr = 0.05;
  double lr_decay = 0.1;
  int lr_step = 50;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;

  void validate() const;
  // Hash of every field, seed included.
  [[nodiscard]] std::uint64_t fingerprint() const noexcept;
};

struct TeacherModel {
  std::vector<nn::DenseLayer> layers;
  Activation activation = Activation::relu;
  // Per-feature standardization fitted on the training split.
  std::vector<double> input_mean;
  std::vector<double> input_scale;
  std::uint64_t fingerprint = 0;

  [[nodiscard]] std::size_t input_dim() const noexcept { return layers.front().in_dim; }
  [[nodiscard]] std::size_t num_classes() const noexcept { return layers.back().out_dim; }
  [[nodiscard]] std::size_t param_count() const noexcept;

  [[nodiscard]] nn::Vector logits(std::span<const double> x) const;

  // Flat parameter vector (layer by layer: weights then bias) and its inverse,
  // used by the gradient checker.
  [[nodiscard]] std::vector<double> flat_params() const;
  void set_flat_params(std::span<const double> flat);
  // NLL loss of one sample with the gradient wrt flat_params().
  [[nodiscard]] nn::LossGrad loss_and_grad(std::span<const double> x, std::size_t label) const;
  // Summed loss and gradient over ds rows, computed as one matrix batch (the
  // training path).
  [[nodiscard]] nn::LossGrad batch_loss_and_grad(const data::Dataset& ds,
                                                 std::span<const std::size_t> rows) const;
};

[[nodiscard]] TeacherModel build_teacher(const TeacherConfig& cfg);

// Minibatch SGD on the cross-entropy. Appends the mean training loss of each
// epoch to epoch_losses when given.
[[nodiscard]] TeacherModel train_teacher(TeacherModel model, const data::Dataset& train,
                                         const TeacherConfig& cfg,
                                         std::vector<double>* epoch_losses = nullptr);

class LogitCache {
 public:
  LogitCache() = default;
  LogitCache(std::size_t num_classes, std::vector<double> values, std::uint64_t dataset_fingerprint,
             std::uint64_t teacher_fingerprint);

  [[nodiscard]] std::size_t size() const noexcept {
    return num_classes_ == 0 ? 0 : values_.size() / num_classes_;
  }
  [[nodiscard]] std::size_t num_classes() const noexcept { return num_classes_; }
  [[nodiscard]] std::span<const double> row(std::size_t i) const {
    return std::span<const double>(values_).subspan(i * num_classes_, num_classes_);
  }
  [[nodiscard]] std::uint64_t dataset_fingerprint() const noexcept { return dataset_fp_; }
  [[nodiscard]] std::uint64_t teacher_fingerprint() const noexcept { return teacher_fp_; }

  // Throws DataError when the cache was not computed on a dataset with this
  // fingerprint.
  void require_dataset(std::uint64_t dataset_fingerprint) const;

  void save(const std::filesystem::path& path) const;
  static LogitCache load(const std::filesystem::path& path);

  friend bool operator==(const LogitCache&, const LogitCache&) = default;

 private:
  std::size_t num_classes_ = 0;
  std::vector<double> values_;
  std::uint64_t dataset_fp_ = 0;
  std::uint64_t teacher_fp_ = 0;
};

[[nodiscard]] LogitCache teacher_logits(const TeacherModel& model, const data::Dataset& ds);

[[nodiscard]] double accuracy(const TeacherModel& model, const data::Dataset& ds);

}  // namespace skd::teacher
