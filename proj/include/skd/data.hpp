#pragma once

// Datasets, quantization onto discrete levels, splitting, and the seeded
// synthetic benchmark generator.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "skd/ldc.hpp"

namespace skd::data {

class Dataset {
 public:
  Dataset() = default;
  // features is row-major, labels.size() rows of num_features each.
  Dataset(std::string name, std::size_t num_features, std::size_t num_classes,
          std::vector<double> features, std::vector<std::uint32_t> labels);

  [[nodiscard]] const std::string& name() const noexcept { return name_; }
  [[nodiscard]] std::size_t size() const noexcept { return labels_.size(); }
  [[nodiscard]] std::size_t num_features() const noexcept { return num_features_; }
  [[nodiscard]] std::size_t num_classes() const noexcept { return num_classes_; }
  [[nodiscard]] std::span<const double> row(std::size_t i) const {
    return std::span<const double>(features_).subspan(i * num_features_, num_features_);
  }
  [[nodiscard]] std::uint32_t label(std::size_t i) const { return labels_[i]; }
  [[nodiscard]] std::span<const std::uint32_t> labels() const noexcept { return labels_; }
  [[nodiscard]] std::span<const double> features() const noexcept { return features_; }
  [[nodiscard]] std::uint64_t fingerprint() const noexcept { return fingerprint_; }

  // Rows in the given order.
  [[nodiscard]] Dataset subset(std::span<const std::size_t> indices, std::string name) const;

 private:
  std::string name_;
  std::size_t num_features_ = 0;
  std::size_t num_classes_ = 0;
  std::vector<double> features_;
  std::vector<std::uint32_t> labels_;
  std::uint64_t fingerprint_ = 0;
};

// CSV: header "label,f0,...,f{N-1}", one sample per line. When num_classes is
// 0 it is inferred as max label + 1; otherwise labels >= num_classes are
// rejected with the offending line number.
[[nodiscard]] Dataset load_dataset(const std::filesystem::path& path, std::size_t num_classes = 0);
void save_dataset(const Dataset& ds, const std::filesystem::path& path);

struct QuantSpec {
  std::size_t num_levels = 16;
  std::vector<double> min;
  std::vector<double> max;

  // floor((x - min) / (max - min) * M), clamped to [0, M-1]; constant
  // features map to 0.
  [[nodiscard]] ldc::Level level(std::size_t feature, double x) const;
};

class QuantizedDataset {
 public:
  QuantizedDataset(QuantSpec spec, std::size_t num_features, std::size_t num_classes,
                   std::vector<ldc::Level> levels, std::vector<std::uint32_t> labels,
                   std::uint64_t source_fingerprint);

  [[nodiscard]] std::size_t size() const noexcept { return labels_.size(); }
  [[nodiscard]] std::size_t num_features() const noexcept { return num_features_; }
  [[nodiscard]] std::size_t num_classes() const noexcept { return num_classes_; }
  [[nodiscard]] std::span<const ldc::Level> row(std::size_t i) const {
    return std::span<const ldc::Level>(levels_).subspan(i * num_features_, num_features_);
  }
  [[nodiscard]] std::uint32_t label(std::size_t i) const { return labels_[i]; }
  [[nodiscard]] std::span<const std::uint32_t> labels() const noexcept { return labels_; }
  [[nodiscard]] const QuantSpec& spec() const noexcept { return spec_; }
  // Fingerprint of the real-valued dataset this was quantized from.
  [[nodiscard]] std::uint64_t source_fingerprint() const noexcept { return source_fingerprint_; }

 private:
  QuantSpec spec_;
  std::size_t num_features_;
  std::size_t num_classes_;
  std::vector<ldc::Level> levels_;
  std::vector<std::uint32_t> labels_;
  std::uint64_t source_fingerprint_;
};

// Per-feature bounds from ds.
[[nodiscard]] QuantSpec fit_quantizer(const Dataset& ds, std::size_t num_levels);
[[nodiscard]] QuantizedDataset apply_quantizer(const Dataset& ds, const QuantSpec& spec);
// Bounds fitted on ds itself.
[[nodiscard]] QuantizedDataset quantize(const Dataset& ds, std::size_t num_levels);

// Sidecar CSV: "feature,min,max" rows followed by a "levels,M" line.
void save_quant_spec(const QuantSpec& spec, const std::filesystem::path& path);
[[nodiscard]] QuantSpec load_quant_spec(const std::filesystem::path& path);

// Seeded stratified split. Each class contributes round-to-total of
// fraction * count samples to train, so per-class train counts are within one
// sample of the exact share and the train size is round(fraction * I).
[[nodiscard]] std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction,
                                               std::uint64_t seed);

struct SynthConfig {
  std::size_t num_classes = 5;
  std::size_t num_features = 32;
  std::size_t samples_per_class = 1200;
  double spread = 1.0;        // per-feature std-dev of each cluster
  double center_scale = 1.0;  // std-dev of the cluster means
  // Sub-clusters per class; > 1 makes class regions multi-modal.
  std::size_t modes_per_class = 1;
  double label_noise = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticData {
  Dataset dataset;
  std::vector<std::uint32_t> clean_labels;  // before label noise
};

[[nodiscard]] SyntheticData synth_generate_detailed(const SynthConfig& cfg);
[[nodiscard]] Dataset synth_generate(const SynthConfig& cfg);

}  // namespace skd::data
