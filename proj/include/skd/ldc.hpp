#pragma once

// Low-dimensional VSA classifier (the distillation student).
//
// Training form keeps real-valued shadow weights that are binarized on the
// forward pass; the packed form is what ships: N feature hypervectors, an
// M-entry value table produced by the ValueBox, and a class book.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "skd/nn.hpp"
#include "skd/rng.hpp"
#include "skd/vsa.hpp"

namespace skd::ldc {

using Level = std::uint32_t;

struct LDCConfig {
  std::size_t num_features = 32;    // N
  std::size_t num_levels = 16;      // M
  std::size_t feature_dim = 128;    // D_f
  std::size_t value_dim = 4;        // D_v
  std::size_t num_classes = 5;      // C
  std::size_t valuebox_hidden = 16;
  // Multiplier on the bundle accumulator before the sign STE; 0 means 1/N.
  double accumulator_scale = 0.0;
  double ste_clip = 1.0;
  // When set, the class layer uses sign(class_shadow) in training too, so the
  // training-time argmax is exactly the packed Hamming decision.
  bool binarize_class_in_training = true;
  // Clamp binarized shadow weights to [-ste_clip, ste_clip] after each step so
  // they never leave the band where the STE passes gradient.
  bool clip_shadow = true;
  // The logit scale starts at 1/sqrt(D_f); when not learned it stays there.
  bool learn_logit_scale = true;
  // Floor on the learned scale, as a fraction of its initial value. A scale
  // near zero also zeroes every upstream gradient, which training cannot
  // escape.
  double min_logit_scale_ratio = 0.25;

  void validate() const;
  [[nodiscard]] double effective_accumulator_scale() const noexcept {
    return accumulator_scale > 0.0 ? accumulator_scale : 1.0 / static_cast<double>(num_features);
  }
  [[nodiscard]] double initial_log_logit_scale() const noexcept {
    return -0.5 * std::log(static_cast<double>(feature_dim));
  }
  [[nodiscard]] double min_log_logit_scale() const noexcept {
    return initial_log_logit_scale() + std::log(min_logit_scale_ratio);
  }
  [[nodiscard]] std::size_t tile_factor() const noexcept { return feature_dim / value_dim; }
};

// Trainable student. Parameter tensors are public; LDCGrads mirrors them.
struct LDCModel {
  LDCConfig config;
  nn::Vector feature_shadow;  // N x D_f
  nn::DenseLayer value_in;    // 1 -> hidden, float, tanh
  nn::DenseLayer value_out;   // hidden -> D_v, binarized, sign output
  nn::Vector class_shadow;    // C x D_f
  double log_logit_scale = 0.0;

  static LDCModel create(const LDCConfig& config, Rng& rng);

  [[nodiscard]] double logit_scale() const;
  [[nodiscard]] std::size_t param_count() const noexcept;
  void validate() const;
};

struct LDCGrads {
  nn::Vector feature;
  nn::DenseGrads value_in;
  nn::DenseGrads value_out;
  nn::Vector class_w;
  double log_logit_scale = 0.0;

  LDCGrads() = default;
  explicit LDCGrads(const LDCModel& model);
  void zero() noexcept;
};

// ValueBox outputs for every level, with the intermediates backprop needs.
struct ValueTrace {
  std::vector<double> input;       // normalized level per m
  std::vector<nn::Vector> hidden;  // tanh activations, per m
  std::vector<nn::Vector> preact;  // scaled pre-sign output, per m
  std::vector<nn::Vector> output;  // +-1, per m
};

// Binarized parameters frozen at one optimizer step. Building it once per
// minibatch amortizes the sign() and ValueBox work over the batch.
struct Snapshot {
  nn::Vector feature_sign;  // N x D_f
  nn::Vector class_eff;     // C x D_f
  ValueTrace values;
  nn::Vector tiled_values;  // M x D_f, value output repeated across D_f
  nn::Vector feature_pass;  // N x D_f, 1 where the STE passes the shadow weight
  nn::Vector class_pass;    // C x D_f, likewise (all ones for a float class layer)
  double logit_scale = 1.0;
};

struct SampleTrace {
  nn::Vector scaled_acc;  // accumulator times scale, pre-sign
  nn::Vector encoding;    // +-1
  nn::Vector class_dot;   // class_eff . encoding, per class
};

// Value hypervector components of one level, exactly +-1.
[[nodiscard]] std::vector<int> valuebox_encode(Level level, const LDCModel& model);

[[nodiscard]] ValueTrace run_valuebox(const LDCModel& model);
[[nodiscard]] Snapshot snapshot(const LDCModel& model);

[[nodiscard]] nn::Vector forward(const LDCModel& model, const Snapshot& snap,
                                 std::span<const Level> x, SampleTrace* trace = nullptr);

// One-shot convenience: snapshot + forward.
[[nodiscard]] nn::Vector forward_train(std::span<const Level> x, const LDCModel& model);

// Accumulates parameter gradients for one sample. ValueBox gradients are
// staged per level in value_grad (M vectors of length D_f, see
// value_grad_buffer), folded to D_v and pushed through the ValueBox by
// finish_backward once per batch.
void backward(const LDCModel& model, const Snapshot& snap, std::span<const Level> x,
              const SampleTrace& trace, std::span<const double> dlogits, LDCGrads& grads,
              std::vector<nn::Vector>& value_grad);
[[nodiscard]] std::vector<nn::Vector> value_grad_buffer(const LDCConfig& config);
void finish_backward(const LDCModel& model, const Snapshot& snap,
                     const std::vector<nn::Vector>& value_grad, LDCGrads& grads);

// params -= lr * grads, all tensors; then the shadow clamp when configured.
void apply_sgd(LDCModel& model, const LDCGrads& grads, double lr);

class PackedLDCModel {
 public:
  PackedLDCModel(std::size_t num_features, std::size_t num_levels, std::size_t feature_dim,
                 std::size_t value_dim, std::size_t num_classes,
                 std::vector<vsa::Hypervector> features, std::vector<vsa::Hypervector> value_table,
                 vsa::ClassBook classbook);

  [[nodiscard]] std::size_t num_features() const noexcept { return num_features_; }
  [[nodiscard]] std::size_t num_levels() const noexcept { return num_levels_; }
  [[nodiscard]] std::size_t feature_dim() const noexcept { return feature_dim_; }
  [[nodiscard]] std::size_t value_dim() const noexcept { return value_dim_; }
  [[nodiscard]] std::size_t num_classes() const noexcept { return classbook_.num_classes(); }
  [[nodiscard]] std::span<const vsa::Hypervector> features() const noexcept { return features_; }
  [[nodiscard]] std::span<const vsa::Hypervector> value_table() const noexcept { return values_; }
  [[nodiscard]] const vsa::ClassBook& classbook() const noexcept { return classbook_; }

  // sgn(bundle_j F_j (x) tile(V[x_j])), ties to +1.
  [[nodiscard]] vsa::Hypervector encode(std::span<const Level> x) const;
  [[nodiscard]] std::size_t infer(std::span<const Level> x) const;

  void write(std::ostream& out) const;
  static PackedLDCModel read(std::istream& in);
  void save(const std::filesystem::path& path) const;
  static PackedLDCModel load(const std::filesystem::path& path);

  friend bool operator==(const PackedLDCModel& a, const PackedLDCModel& b);

 private:
  std::size_t num_features_;
  std::size_t num_levels_;
  std::size_t feature_dim_;
  std::size_t value_dim_;
  std::vector<vsa::Hypervector> features_;
  std::vector<vsa::Hypervector> values_;
  vsa::ClassBook classbook_;
  std::vector<vsa::Hypervector> tiled_values_;  // derived, D_f wide
};

[[nodiscard]] vsa::Hypervector tile(const vsa::Hypervector& value, std::size_t feature_dim);

[[nodiscard]] PackedLDCModel export_inference(const LDCModel& model);

// Bytes of the serialized model file for the given shape.
[[nodiscard]] std::size_t model_file_size(std::size_t num_features, std::size_t num_levels,
                                          std::size_t feature_dim, std::size_t value_dim,
                                          std::size_t num_classes) noexcept;

}  // namespace skd::ldc
