#pragma once

// Inference cost accounting: binary vs floating-point multiply-accumulates and
// parameter storage.
//
// Conventions: one MAC per multiply-accumulate pair; a Hamming distance over D
// bits counts as D BMACs; value-table lookups and sign thresholds count as
// zero MACs.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace skd::cost {

enum class ArchKind { ldc_packed, hdc_profile, float_mlp, binarized_mlp };

struct ArchSpec {
  std::string name;
  ArchKind kind = ArchKind::ldc_packed;
  // ldc_packed: N, M, D_f, D_v, C. hdc_profile: N, D, C.
  std::size_t num_features = 0;
  std::size_t num_levels = 0;
  std::size_t feature_dim = 0;
  std::size_t value_dim = 0;
  std::size_t num_classes = 0;
  // float_mlp / binarized_mlp.
  std::vector<std::size_t> layer_dims;
  // binarized_mlp: per weight layer, true when binary. Empty means every layer
  // except the last is binary.
  std::vector<bool> binary_layers;

  static ArchSpec ldc(std::string name, std::size_t n, std::size_t m, std::size_t df,
                      std::size_t dv, std::size_t c);
  static ArchSpec hdc(std::string name, std::size_t n, std::size_t d, std::size_t c);
  static ArchSpec mlp(std::string name, std::vector<std::size_t> dims);
  static ArchSpec binarized_mlp(std::string name, std::vector<std::size_t> dims,
                                std::vector<bool> binary_layers = {});

  void validate() const;
};

struct CostReport {
  std::uint64_t bmacs = 0;
  std::uint64_t fpmacs = 0;
  std::uint64_t model_size_bytes = 0;
  // Serialization framing on top of model_size_bytes (ldc_packed only): file
  // header, per-vector dim fields and word padding.
  std::uint64_t header_bytes = 0;

  friend bool operator==(const CostReport&, const CostReport&) = default;
};

// Storage of one tensor: 1 bit per binary parameter, 32 bits per float one,
// rounded up to whole bytes.
[[nodiscard]] std::uint64_t tensor_bytes(std::uint64_t params, bool binary) noexcept;

[[nodiscard]] CostReport count_ops(const ArchSpec& spec);
[[nodiscard]] std::uint64_t model_size(const ArchSpec& spec);

// Table layout: name, BMACs (x1e-6), FPMACs (x1e-6), size (KB, 1 KB = 1024 B).
[[nodiscard]] std::string report_table(std::span<const ArchSpec> specs);
// CSV: name,bmacs,fpmacs,size_bytes
void write_csv(std::ostream& out, std::span<const ArchSpec> specs);

}  // namespace skd::cost
