#include "skd/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "skd/error.hpp"
#include "skd/rng.hpp"

namespace skd::data {
namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  text = trim(text);
  if (text.empty()) return false;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t content_fingerprint(std::size_t num_features, std::span<const double> features,
                                  std::span<const std::uint32_t> labels) {
  Fnv1a h;
  h.update_value(static_cast<std::uint64_t>(num_features));
  h.update_value(static_cast<std::uint64_t>(labels.size()));
  h.update(labels.data(), labels.size_bytes());
  h.update(features.data(), features.size_bytes());
  return h.digest();
}

}  // namespace

Dataset::Dataset(std::string name, std::size_t num_features, std::size_t num_classes,
                 std::vector<double> features, std::vector<std::uint32_t> labels)
    : name_(std::move(name)),
      num_features_(num_features),
      num_classes_(num_classes),
      features_(std::move(features)),
      labels_(std::move(labels)) {
  if (num_features_ == 0) throw DataError("dataset: zero features");
  if (num_classes_ < 2) throw DataError("dataset: need at least 2 classes");
  if (features_.size() != labels_.size() * num_features_) {
    throw DataError("dataset: feature matrix size does not match label count");
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] >= num_classes_) {
      throw DataError("dataset: label " + std::to_string(labels_[i]) + " at row " +
                      std::to_string(i) + " out of range");
    }
  }
  fingerprint_ = content_fingerprint(num_features_, features_, labels_);
}

Dataset Dataset::subset(std::span<const std::size_t> indices, std::string name) const {
  std::vector<double> feats;
  feats.reserve(indices.size() * num_features_);
  std::vector<std::uint32_t> labels;
  labels.reserve(indices.size());
  for (const auto i : indices) {
    const auto r = row(i);
    feats.insert(feats.end(), r.begin(), r.end());
    labels.push_back(labels_[i]);
  }
  return Dataset(std::move(name), num_features_, num_classes_, std::move(feats), std::move(labels));
}

Dataset load_dataset(const std::filesystem::path& path, std::size_t num_classes) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
  const auto header = split_commas(trim(line));
  if (header.size() < 2 || trim(header[0]) != "label") {
    throw DataError(path.string() + ":1: header must start with 'label'");
  }
  const std::size_t n = header.size() - 1;
  for (std::size_t j = 0; j < n; ++j) {
    if (trim(header[j + 1]) != "f" + std::to_string(j)) {
      throw DataError(path.string() + ":1: expected column f" + std::to_string(j));
    }
  }

  std::vector<double> feats;
  std::vector<std::uint32_t> labels;
  std::size_t line_no = 1;
  std::uint32_t max_label = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_commas(line);
    const auto where = path.string() + ":" + std::to_string(line_no) + ": ";
    if (cells.size() != n + 1) {
      throw DataError(where + "expected " + std::to_string(n + 1) + " columns, got " +
                      std::to_string(cells.size()));
    }
    std::uint32_t label = 0;
    if (!parse_number(cells[0], label)) throw DataError(where + "bad label");
    if (num_classes != 0 && label >= num_classes) {
      throw DataError(where + "label " + std::to_string(label) + " >= class count " +
                      std::to_string(num_classes));
    }
    for (std::size_t j = 0; j < n; ++j) {
      double v = 0.0;
      if (!parse_number(cells[j + 1], v) || !std::isfinite(v)) {
        throw DataError(where + "bad value in column f" + std::to_string(j));
      }
      feats.push_back(v);
    }
    max_label = std::max(max_label, label);
    labels.push_back(label);
  }
  if (labels.empty()) throw DataError(path.string() + ": no samples");
  const std::size_t c = num_classes != 0 ? num_classes : std::max<std::size_t>(2, max_label + 1);
  return Dataset(path.stem().string(), n, c, std::move(feats), std::move(labels));
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << "label";
  for (std::size_t j = 0; j < ds.num_features(); ++j) out << ",f" << j;
  out << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << ds.label(i);
    for (const double v : ds.row(i)) out << ',' << format_double(v);
    out << '\n';
  }
  if (!out) throw DataError("failed writing " + path.string());
}

ldc::Level QuantSpec::level(std::size_t feature, double x) const {
  const double lo = min[feature];
  const double hi = max[feature];
  if (!(hi > lo)) return 0;
  const double scaled = std::floor((x - lo) / (hi - lo) * static_cast<double>(num_levels));
  const double top = static_cast<double>(num_levels - 1);
  return static_cast<ldc::Level>(std::clamp(scaled, 0.0, top));
}

QuantizedDataset::QuantizedDataset(QuantSpec spec, std::size_t num_features,
                                   std::size_t num_classes, std::vector<ldc::Level> levels,
                                   std::vector<std::uint32_t> labels,
                                   std::uint64_t source_fingerprint)
    : spec_(std::move(spec)),
      num_features_(num_features),
      num_classes_(num_classes),
      levels_(std::move(levels)),
      labels_(std::move(labels)),
      source_fingerprint_(source_fingerprint) {
  if (levels_.size() != labels_.size() * num_features_) {
    throw DataError("quantized dataset: level matrix size does not match label count");
  }
  for (const auto l : levels_) {
    if (l >= spec_.num_levels) throw DataError("quantized dataset: level out of range");
  }
}

QuantSpec fit_quantizer(const Dataset& ds, std::size_t num_levels) {
  if (num_levels < 2) throw std::invalid_argument("quantize: need at least 2 levels");
  if (ds.size() == 0) throw DataError("quantize: empty dataset");
  QuantSpec spec;
  spec.num_levels = num_levels;
  spec.min.assign(ds.num_features(), 0.0);
  spec.max.assign(ds.num_features(), 0.0);
  for (std::size_t j = 0; j < ds.num_features(); ++j) {
    spec.min[j] = spec.max[j] = ds.row(0)[j];
  }
  for (std::size_t i = 1; i < ds.size(); ++i) {
    const auto r = ds.row(i);
    for (std::size_t j = 0; j < ds.num_features(); ++j) {
      spec.min[j] = std::min(spec.min[j], r[j]);
      spec.max[j] = std::max(spec.max[j], r[j]);
    }
  }
  return spec;
}

QuantizedDataset apply_quantizer(const Dataset& ds, const QuantSpec& spec) {
  if (spec.min.size() != ds.num_features() || spec.max.size() != ds.num_features()) {
    throw DataError("quantize: spec has " + std::to_string(spec.min.size()) +
                    " features, dataset has " + std::to_string(ds.num_features()));
  }
  std::vector<ldc::Level> levels(ds.size() * ds.num_features());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto r = ds.row(i);
    for (std::size_t j = 0; j < ds.num_features(); ++j) {
      levels[i * ds.num_features() + j] = spec.level(j, r[j]);
    }
  }
  return QuantizedDataset(spec, ds.num_features(), ds.num_classes(), std::move(levels),
                          std::vector<std::uint32_t>(ds.labels().begin(), ds.labels().end()),
                          ds.fingerprint());
}

QuantizedDataset quantize(const Dataset& ds, std::size_t num_levels) {
  return apply_quantizer(ds, fit_quantizer(ds, num_levels));
}

void save_quant_spec(const QuantSpec& spec, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << "feature,min,max\n";
  for (std::size_t j = 0; j < spec.min.size(); ++j) {
    out << j << ',' << format_double(spec.min[j]) << ',' << format_double(spec.max[j]) << '\n';
  }
  out << "levels," << spec.num_levels << '\n';
}

QuantSpec load_quant_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open quantization spec " + path.string());
  std::string line;
  std::getline(in, line);
  if (trim(line) != "feature,min,max") throw DataError(path.string() + ":1: bad header");
  QuantSpec spec;
  bool have_levels = false;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_commas(line);
    const auto where = path.string() + ":" + std::to_string(line_no) + ": ";
    if (trim(cells[0]) == "levels") {
      if (cells.size() != 2 || !parse_number(cells[1], spec.num_levels) || spec.num_levels < 2) {
        throw DataError(where + "bad levels line");
      }
      have_levels = true;
      continue;
    }
    std::size_t j = 0;
    double lo = 0.0, hi = 0.0;
    if (cells.size() != 3 || !parse_number(cells[0], j) || j != spec.min.size() ||
        !parse_number(cells[1], lo) || !parse_number(cells[2], hi)) {
      throw DataError(where + "bad feature bounds row");
    }
    spec.min.push_back(lo);
    spec.max.push_back(hi);
  }
  if (!have_levels) throw DataError(path.string() + ": missing levels line");
  return spec;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("split: train fraction must be in (0, 1)");
  }
  const auto c = ds.num_classes();
  std::vector<std::vector<std::size_t>> by_class(c);
  for (std::size_t i = 0; i < ds.size(); ++i) by_class[ds.label(i)].push_back(i);

  const auto total = static_cast<std::size_t>(std::llround(train_fraction * double(ds.size())));
  std::vector<std::size_t> take(c);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < c; ++k) {
    const double exact = train_fraction * double(by_class[k].size());
    take[k] = static_cast<std::size_t>(std::floor(exact));
    assigned += take[k];
    remainders.emplace_back(exact - std::floor(exact), k);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < total && r < remainders.size(); ++r, ++assigned) {
    ++take[remainders[r].second];
  }

  Rng rng(seed);
  std::vector<std::size_t> train_idx, test_idx;
  for (std::size_t k = 0; k < c; ++k) {
    auto& idx = by_class[k];
    std::shuffle(idx.begin(), idx.end(), rng);
    train_idx.insert(train_idx.end(), idx.begin(), idx.begin() + std::ptrdiff_t(take[k]));
    test_idx.insert(test_idx.end(), idx.begin() + std::ptrdiff_t(take[k]), idx.end());
  }
  if (train_idx.empty() || test_idx.empty()) {
    throw DataError("split: fraction " + std::to_string(train_fraction) + " leaves an empty side");
  }
  std::shuffle(train_idx.begin(), train_idx.end(), rng);
  std::shuffle(test_idx.begin(), test_idx.end(), rng);
  return {ds.subset(train_idx, ds.name() + "-train"), ds.subset(test_idx, ds.name() + "-test")};
}

void SynthConfig::validate() const {
  if (num_classes < 2) throw std::invalid_argument("synth: need at least 2 classes");
  if (num_features == 0 || samples_per_class == 0 || modes_per_class == 0) {
    throw std::invalid_argument("synth: sizes must be positive");
  }
  if (!(spread > 0.0)) throw std::invalid_argument("synth: spread must be > 0");
  if (!(center_scale >= 0.0)) throw std::invalid_argument("synth: center_scale must be >= 0");
  if (!(label_noise >= 0.0 && label_noise < 0.5)) {
    throw std::invalid_argument("synth: label noise must be in [0, 0.5)");
  }
}

SyntheticData synth_generate_detailed(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  const auto n = cfg.num_features;
  const auto modes = cfg.num_classes * cfg.modes_per_class;
  std::vector<double> centers(modes * n);
  for (auto& v : centers) v = cfg.center_scale * unit(rng);

  const auto total = cfg.num_classes * cfg.samples_per_class;
  std::vector<double> feats(total * n);
  std::vector<std::uint32_t> clean(total);
  std::vector<std::uint32_t> noisy(total);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> other(1, cfg.num_classes - 1);
  std::size_t i = 0;
  for (std::size_t k = 0; k < cfg.num_classes; ++k) {
    for (std::size_t s = 0; s < cfg.samples_per_class; ++s, ++i) {
      const std::size_t mode = k * cfg.modes_per_class + s % cfg.modes_per_class;
      for (std::size_t j = 0; j < n; ++j) {
        feats[i * n + j] = centers[mode * n + j] + cfg.spread * unit(rng);
      }
      clean[i] = static_cast<std::uint32_t>(k);
      noisy[i] = clean[i];
      if (coin(rng) < cfg.label_noise) {
        noisy[i] = static_cast<std::uint32_t>((k + other(rng)) % cfg.num_classes);
      }
    }
  }
  Dataset ds("synthetic", n, cfg.num_classes, std::move(feats), std::move(noisy));
  return {std::move(ds), std::move(clean)};
}

Dataset synth_generate(const SynthConfig& cfg) { return synth_generate_detailed(cfg).dataset; }

}  // namespace skd::data
