#include "skd/cost.hpp"

#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "skd/ldc.hpp"

namespace skd::cost {
namespace {

std::uint64_t bits_to_bytes(std::uint64_t bits) { return (bits + 7) / 8; }

std::vector<bool> binary_mask(const ArchSpec& spec) {
  const auto layers = spec.layer_dims.size() - 1;
  if (spec.kind == ArchKind::float_mlp) return std::vector<bool>(layers, false);
  if (!spec.binary_layers.empty()) return spec.binary_layers;
  std::vector<bool> mask(layers, true);
  mask.back() = false;
  return mask;
}

}  // namespace

std::uint64_t tensor_bytes(std::uint64_t params, bool binary) noexcept {
  return binary ? bits_to_bytes(params) : params * 4;
}

ArchSpec ArchSpec::ldc(std::string name, std::size_t n, std::size_t m, std::size_t df,
                       std::size_t dv, std::size_t c) {
  ArchSpec s;
  s.name = std::move(name);
  s.kind = ArchKind::ldc_packed;
  s.num_features = n;
  s.num_levels = m;
  s.feature_dim = df;
  s.value_dim = dv;
  s.num_classes = c;
  return s;
}

ArchSpec ArchSpec::hdc(std::string name, std::size_t n, std::size_t d, std::size_t c) {
  ArchSpec s;
  s.name = std::move(name);
  s.kind = ArchKind::hdc_profile;
  s.num_features = n;
  s.feature_dim = d;
  s.num_classes = c;
  return s;
}

ArchSpec ArchSpec::mlp(std::string name, std::vector<std::size_t> dims) {
  ArchSpec s;
  s.name = std::move(name);
  s.kind = ArchKind::float_mlp;
  s.layer_dims = std::move(dims);
  return s;
}

ArchSpec ArchSpec::binarized_mlp(std::string name, std::vector<std::size_t> dims,
                                 std::vector<bool> binary_layers) {
  ArchSpec s;
  s.name = std::move(name);
  s.kind = ArchKind::binarized_mlp;
  s.layer_dims = std::move(dims);
  s.binary_layers = std::move(binary_layers);
  return s;
}

void ArchSpec::validate() const {
  switch (kind) {
    case ArchKind::ldc_packed:
      if (num_features == 0 || num_levels == 0 || feature_dim == 0 || value_dim == 0 ||
          num_classes == 0) {
        throw std::invalid_argument("arch " + name + ": ldc dims must be positive");
      }
      if (feature_dim % value_dim != 0) {
        throw std::invalid_argument("arch " + name + ": feature_dim not a multiple of value_dim");
      }
      break;
    case ArchKind::hdc_profile:
      if (num_features == 0 || feature_dim == 0 || num_classes == 0) {
        throw std::invalid_argument("arch " + name + ": hdc dims must be positive");
      }
      break;
    case ArchKind::float_mlp:
    case ArchKind::binarized_mlp:
      if (layer_dims.size() < 2) throw std::invalid_argument("arch " + name + ": need >= 2 dims");
      for (const auto d : layer_dims) {
        if (d == 0) throw std::invalid_argument("arch " + name + ": zero layer width");
      }
      if (kind == ArchKind::binarized_mlp && !binary_layers.empty() &&
          binary_layers.size() != layer_dims.size() - 1) {
        throw std::invalid_argument("arch " + name + ": binary_layers needs one flag per layer");
      }
      break;
  }
}

CostReport count_ops(const ArchSpec& spec) {
  spec.validate();
  CostReport r;
  switch (spec.kind) {
    case ArchKind::ldc_packed:
    case ArchKind::hdc_profile:
      // Binding + bundling: one BMAC per (feature, dimension); class search:
      // one per (class, dimension).
      r.bmacs = std::uint64_t(spec.num_features) * spec.feature_dim +
                std::uint64_t(spec.num_classes) * spec.feature_dim;
      break;
    case ArchKind::float_mlp:
    case ArchKind::binarized_mlp: {
      const auto mask = binary_mask(spec);
      for (std::size_t l = 0; l + 1 < spec.layer_dims.size(); ++l) {
        const auto macs = std::uint64_t(spec.layer_dims[l]) * spec.layer_dims[l + 1];
        (mask[l] ? r.bmacs : r.fpmacs) += macs;
      }
      break;
    }
  }
  r.model_size_bytes = model_size(spec);
  if (spec.kind == ArchKind::ldc_packed) {
    r.header_bytes = ldc::model_file_size(spec.num_features, spec.num_levels, spec.feature_dim,
                                          spec.value_dim, spec.num_classes) -
                     r.model_size_bytes;
  }
  return r;
}

std::uint64_t model_size(const ArchSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case ArchKind::ldc_packed:
      return bits_to_bytes(std::uint64_t(spec.num_features) * spec.feature_dim +
                           std::uint64_t(spec.num_levels) * spec.value_dim +
                           std::uint64_t(spec.num_classes) * spec.feature_dim);
    case ArchKind::hdc_profile:
      return bits_to_bytes(std::uint64_t(spec.num_features) * spec.feature_dim) +
             bits_to_bytes(std::uint64_t(spec.num_classes) * spec.feature_dim);
    case ArchKind::float_mlp:
    case ArchKind::binarized_mlp: {
      const auto mask = binary_mask(spec);
      std::uint64_t bytes = 0;
      for (std::size_t l = 0; l + 1 < spec.layer_dims.size(); ++l) {
        const auto weights = std::uint64_t(spec.layer_dims[l]) * spec.layer_dims[l + 1];
        bytes += tensor_bytes(weights, mask[l]);
        bytes += tensor_bytes(spec.layer_dims[l + 1], false);  // bias
      }
      return bytes;
    }
  }
  return 0;
}

std::string report_table(std::span<const ArchSpec> specs) {
  if (specs.empty()) throw std::invalid_argument("report_table: no architectures");
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-28s %14s %14s %12s\n", "Method", "BMACs(x1e6)",
                "FPMACs(x1e6)", "Size(KB)");
  out += line;
  for (const auto& s : specs) {
    const auto r = count_ops(s);
    std::snprintf(line, sizeof(line), "%-28s %14.6f %14.6f %12.2f\n", s.name.c_str(),
                  double(r.bmacs) * 1e-6, double(r.fpmacs) * 1e-6,
                  double(r.model_size_bytes) / 1024.0);
    out += line;
  }
  return out;
}

void write_csv(std::ostream& out, std::span<const ArchSpec> specs) {
  out << "name,bmacs,fpmacs,size_bytes\n";
  for (const auto& s : specs) {
    const auto r = count_ops(s);
    out << s.name << ',' << r.bmacs << ',' << r.fpmacs << ',' << r.model_size_bytes << '\n';
  }
}

}  // namespace skd::cost
