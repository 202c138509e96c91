#include "skd/ldc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

#include "skd/binio.hpp"
#include "skd/error.hpp"

namespace skd::ldc {
namespace {

constexpr char kMagic[5] = "LDC1";

double normalized_level(Level level, std::size_t num_levels) {
  return 2.0 * static_cast<double>(level) / static_cast<double>(num_levels - 1) - 1.0;
}

void check_sample(std::span<const Level> x, std::size_t num_features, std::size_t num_levels) {
  if (x.size() != num_features) {
    throw std::invalid_argument("ldc: sample has " + std::to_string(x.size()) +
                                " features, model expects " + std::to_string(num_features));
  }
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j] >= num_levels) {
      throw std::invalid_argument("ldc: level " + std::to_string(x[j]) + " at feature " +
                                  std::to_string(j) + " out of range [0, " +
                                  std::to_string(num_levels) + ")");
    }
  }
}

}  // namespace

void LDCConfig::validate() const {
  if (num_features == 0 || feature_dim == 0 || value_dim == 0 || valuebox_hidden == 0) {
    throw std::invalid_argument("ldc config: dimensions must be positive");
  }
  if (num_levels < 2) throw std::invalid_argument("ldc config: need at least 2 levels");
  if (num_classes < 2) throw std::invalid_argument("ldc config: need at least 2 classes");
  if (feature_dim % value_dim != 0) {
    throw std::invalid_argument("ldc config: feature_dim " + std::to_string(feature_dim) +
                                " is not a multiple of value_dim " + std::to_string(value_dim));
  }
  if (!(ste_clip > 0.0)) throw std::invalid_argument("ldc config: ste_clip must be > 0");
  if (!(min_logit_scale_ratio > 0.0 && min_logit_scale_ratio <= 1.0)) {
    throw std::invalid_argument("ldc config: min_logit_scale_ratio must be in (0, 1]");
  }
  if (accumulator_scale < 0.0) {
    throw std::invalid_argument("ldc config: accumulator_scale must be >= 0");
  }
}

LDCModel LDCModel::create(const LDCConfig& config, Rng& rng) {
  config.validate();
  LDCModel m;
  m.config = config;
  const auto n = config.num_features;
  const auto df = config.feature_dim;

  std::uniform_real_distribution<double> feat(-1.0 / std::sqrt(double(n)), 1.0 / std::sqrt(double(n)));
  m.feature_shadow.resize(n * df);
  for (auto& w : m.feature_shadow) w = feat(rng);

  m.value_in = nn::DenseLayer::create(1, config.valuebox_hidden, true, false, rng);
  // Each hidden unit starts as a steep tanh step with its threshold inside the
  // level range, so every unit changes sign between the lowest and highest
  // level. Shallow units can leave the whole value table constant, and then
  // the encoding ignores the input.
  std::uniform_real_distribution<double> slope(2.0, 4.0);
  std::uniform_real_distribution<double> threshold(-0.75, 0.75);
  std::bernoulli_distribution flip(0.5);
  for (std::size_t i = 0; i < config.valuebox_hidden; ++i) {
    const double a = flip(rng) ? -slope(rng) : slope(rng);
    m.value_in.weights[i] = a;
    m.value_in.bias[i] = -a * threshold(rng);
  }
  m.value_out = nn::DenseLayer::create(config.valuebox_hidden, config.value_dim, false, true, rng);

  std::uniform_real_distribution<double> cls(-1.0 / std::sqrt(double(df)), 1.0 / std::sqrt(double(df)));
  m.class_shadow.resize(config.num_classes * df);
  for (auto& w : m.class_shadow) w = cls(rng);

  m.log_logit_scale = config.initial_log_logit_scale();
  return m;
}

double LDCModel::logit_scale() const { return std::exp(log_logit_scale); }

std::size_t LDCModel::param_count() const noexcept {
  return feature_shadow.size() + value_in.param_count() + value_out.param_count() +
         class_shadow.size() + 1;
}

void LDCModel::validate() const {
  config.validate();
  const auto n = config.num_features;
  const auto df = config.feature_dim;
  if (feature_shadow.size() != n * df || class_shadow.size() != config.num_classes * df ||
      value_in.in_dim != 1 || value_in.out_dim != config.valuebox_hidden ||
      value_out.in_dim != config.valuebox_hidden || value_out.out_dim != config.value_dim) {
    throw std::invalid_argument("ldc model: parameter shapes do not match config");
  }
  value_in.validate();
  value_out.validate();
  auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(feature_shadow.begin(), feature_shadow.end(), finite) ||
      !std::all_of(class_shadow.begin(), class_shadow.end(), finite) ||
      !std::isfinite(log_logit_scale)) {
    throw NumericError("ldc model: non-finite parameter");
  }
}

LDCGrads::LDCGrads(const LDCModel& model)
    : feature(model.feature_shadow.size(), 0.0),
      value_in(model.value_in),
      value_out(model.value_out),
      class_w(model.class_shadow.size(), 0.0) {}

void LDCGrads::zero() noexcept {
  std::fill(feature.begin(), feature.end(), 0.0);
  value_in.zero();
  value_out.zero();
  std::fill(class_w.begin(), class_w.end(), 0.0);
  log_logit_scale = 0.0;
}

ValueTrace run_valuebox(const LDCModel& model) {
  const auto& cfg = model.config;
  const double out_scale = 1.0 / static_cast<double>(cfg.valuebox_hidden);
  ValueTrace t;
  t.input.resize(cfg.num_levels);
  t.hidden.resize(cfg.num_levels);
  t.preact.resize(cfg.num_levels);
  t.output.resize(cfg.num_levels);
  for (std::size_t m = 0; m < cfg.num_levels; ++m) {
    t.input[m] = normalized_level(static_cast<Level>(m), cfg.num_levels);
    const double in[1] = {t.input[m]};
    auto h = nn::dense_forward(in, model.value_in);
    for (auto& v : h) v = std::tanh(v);
    auto u = nn::dense_forward(h, model.value_out);
    for (auto& v : u) v *= out_scale;
    nn::Vector out(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) out[k] = nn::sign(u[k]);
    t.hidden[m] = std::move(h);
    t.preact[m] = std::move(u);
    t.output[m] = std::move(out);
  }
  return t;
}

std::vector<int> valuebox_encode(Level level, const LDCModel& model) {
  const auto& cfg = model.config;
  if (level >= cfg.num_levels) {
    throw std::invalid_argument("valuebox: level " + std::to_string(level) + " out of range [0, " +
                                std::to_string(cfg.num_levels) + ")");
  }
  const double in[1] = {normalized_level(level, cfg.num_levels)};
  auto h = nn::dense_forward(in, model.value_in);
  for (auto& v : h) v = std::tanh(v);
  const auto u = nn::dense_forward(h, model.value_out);
  std::vector<int> out(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) out[k] = u[k] >= 0.0 ? 1 : -1;
  return out;
}

Snapshot snapshot(const LDCModel& model) {
  Snapshot s;
  s.feature_sign.resize(model.feature_shadow.size());
  std::transform(model.feature_shadow.begin(), model.feature_shadow.end(), s.feature_sign.begin(),
                 nn::sign);
  s.class_eff = model.class_shadow;
  if (model.config.binarize_class_in_training) {
    for (auto& w : s.class_eff) w = nn::sign(w);
  }
  s.values = run_valuebox(model);
  s.logit_scale = model.logit_scale();

  const auto& cfg = model.config;
  const auto df = cfg.feature_dim;
  s.tiled_values.resize(cfg.num_levels * df);
  for (std::size_t m = 0; m < cfg.num_levels; ++m) {
    for (std::size_t d = 0; d < df; ++d) {
      s.tiled_values[m * df + d] = s.values.output[m][d % cfg.value_dim];
    }
  }
  auto pass = [clip = cfg.ste_clip](double w) { return std::abs(w) <= clip ? 1.0 : 0.0; };
  s.feature_pass.resize(model.feature_shadow.size());
  std::transform(model.feature_shadow.begin(), model.feature_shadow.end(), s.feature_pass.begin(),
                 pass);
  if (cfg.binarize_class_in_training) {
    s.class_pass.resize(model.class_shadow.size());
    std::transform(model.class_shadow.begin(), model.class_shadow.end(), s.class_pass.begin(), pass);
  } else {
    s.class_pass.assign(model.class_shadow.size(), 1.0);
  }
  return s;
}

nn::Vector forward(const LDCModel& model, const Snapshot& snap, std::span<const Level> x,
                   SampleTrace* trace) {
  const auto& cfg = model.config;
  check_sample(x, cfg.num_features, cfg.num_levels);
  const auto df = cfg.feature_dim;

  nn::Vector acc(df, 0.0);
  for (std::size_t j = 0; j < cfg.num_features; ++j) {
    const double* f = snap.feature_sign.data() + j * df;
    const double* v = snap.tiled_values.data() + x[j] * df;
    for (std::size_t d = 0; d < df; ++d) acc[d] += f[d] * v[d];
  }
  const double scale = cfg.effective_accumulator_scale();
  nn::Vector enc(df);
  for (std::size_t d = 0; d < df; ++d) {
    acc[d] *= scale;
    enc[d] = nn::sign(acc[d]);
  }

  nn::Vector dots(cfg.num_classes, 0.0);
  nn::Vector logits(cfg.num_classes);
  for (std::size_t c = 0; c < cfg.num_classes; ++c) {
    const double* w = snap.class_eff.data() + c * df;
    double dot = 0.0;
    for (std::size_t d = 0; d < df; ++d) dot += w[d] * enc[d];
    dots[c] = dot;
    logits[c] = snap.logit_scale * dot;
  }
  if (trace != nullptr) {
    trace->scaled_acc = std::move(acc);
    trace->encoding = std::move(enc);
    trace->class_dot = std::move(dots);
  }
  return logits;
}

nn::Vector forward_train(std::span<const Level> x, const LDCModel& model) {
  return forward(model, snapshot(model), x);
}

void backward(const LDCModel& model, const Snapshot& snap, std::span<const Level> x,
              const SampleTrace& trace, std::span<const double> dlogits, LDCGrads& grads,
              std::vector<nn::Vector>& value_grad) {
  const auto& cfg = model.config;
  const auto df = cfg.feature_dim;
  const double clip = cfg.ste_clip;
  const double kappa = snap.logit_scale;
  if (dlogits.size() != cfg.num_classes) throw std::invalid_argument("ldc backward: bad dlogits");

  nn::Vector denc(df, 0.0);
  for (std::size_t c = 0; c < cfg.num_classes; ++c) {
    const double g = dlogits[c];
    grads.log_logit_scale += g * kappa * trace.class_dot[c];
    const double gk = g * kappa;
    const double* pass = snap.class_pass.data() + c * df;
    const double* w = snap.class_eff.data() + c * df;
    double* gw = grads.class_w.data() + c * df;
    for (std::size_t d = 0; d < df; ++d) {
      gw[d] += pass[d] * gk * trace.encoding[d];
      denc[d] += gk * w[d];
    }
  }

  // Through sign(scale * acc) with the hard-tanh STE.
  const double scale = cfg.effective_accumulator_scale();
  nn::Vector dacc(df);
  for (std::size_t d = 0; d < df; ++d) {
    dacc[d] = std::abs(trace.scaled_acc[d]) <= clip ? denc[d] * scale : 0.0;
  }

  for (std::size_t j = 0; j < cfg.num_features; ++j) {
    const double* pass = snap.feature_pass.data() + j * df;
    const double* f = snap.feature_sign.data() + j * df;
    const double* v = snap.tiled_values.data() + x[j] * df;
    double* gf = grads.feature.data() + j * df;
    double* gv = value_grad[x[j]].data();
    for (std::size_t d = 0; d < df; ++d) {
      gf[d] += pass[d] * dacc[d] * v[d];
      gv[d] += dacc[d] * f[d];
    }
  }
}

std::vector<nn::Vector> value_grad_buffer(const LDCConfig& config) {
  return std::vector<nn::Vector>(config.num_levels, nn::Vector(config.feature_dim, 0.0));
}

void finish_backward(const LDCModel& model, const Snapshot& snap,
                     const std::vector<nn::Vector>& value_grad, LDCGrads& grads) {
  const auto& cfg = model.config;
  const double out_scale = 1.0 / static_cast<double>(cfg.valuebox_hidden);
  if (value_grad.size() != cfg.num_levels) {
    throw std::invalid_argument("ldc finish_backward: value_grad needs one row per level");
  }
  nn::Vector gv(cfg.value_dim);
  for (std::size_t m = 0; m < cfg.num_levels; ++m) {
    const auto& staged = value_grad[m];
    if (staged.size() != cfg.feature_dim) {
      throw std::invalid_argument("ldc finish_backward: value_grad rows must have length D_f");
    }
    std::fill(gv.begin(), gv.end(), 0.0);
    for (std::size_t d = 0; d < staged.size(); ++d) gv[d % cfg.value_dim] += staged[d];
    if (std::all_of(gv.begin(), gv.end(), [](double g) { return g == 0.0; })) continue;
    auto du = nn::sign_ste_backward(gv, snap.values.preact[m], cfg.ste_clip);
    for (auto& g : du) g *= out_scale;
    auto dh = nn::dense_backward(snap.values.hidden[m], model.value_out, du, grads.value_out,
                                 cfg.ste_clip);
    for (std::size_t i = 0; i < dh.size(); ++i) {
      const double h = snap.values.hidden[m][i];
      dh[i] *= 1.0 - h * h;
    }
    const double in[1] = {snap.values.input[m]};
    nn::dense_backward(in, model.value_in, dh, grads.value_in, cfg.ste_clip);
  }
}

void apply_sgd(LDCModel& model, const LDCGrads& grads, double lr) {
  nn::sgd_step(model.feature_shadow, grads.feature, lr);
  nn::sgd_step(model.value_in.weights, grads.value_in.weights, lr);
  nn::sgd_step(model.value_in.bias, grads.value_in.bias, lr);
  nn::sgd_step(model.value_out.weights, grads.value_out.weights, lr);
  nn::sgd_step(model.class_shadow, grads.class_w, lr);
  if (model.config.learn_logit_scale) {
    model.log_logit_scale -= lr * grads.log_logit_scale;
    model.log_logit_scale = std::max(model.log_logit_scale, model.config.min_log_logit_scale());
  }
  if (!model.config.clip_shadow) return;
  const double c = model.config.ste_clip;
  auto clamp = [c](std::vector<double>& w) {
    for (auto& v : w) v = std::clamp(v, -c, c);
  };
  clamp(model.feature_shadow);
  clamp(model.value_out.weights);
  if (model.config.binarize_class_in_training) clamp(model.class_shadow);
}

vsa::Hypervector tile(const vsa::Hypervector& value, std::size_t feature_dim) {
  if (value.dim() == 0 || feature_dim % value.dim() != 0) {
    throw std::invalid_argument("tile: feature_dim " + std::to_string(feature_dim) +
                                " is not a multiple of " + std::to_string(value.dim()));
  }
  vsa::HypervectorBuilder b(feature_dim);
  for (std::size_t d = 0; d < feature_dim; ++d) b.set(d, value.at(d % value.dim()) > 0);
  return std::move(b).build();
}

PackedLDCModel::PackedLDCModel(std::size_t num_features, std::size_t num_levels,
                               std::size_t feature_dim, std::size_t value_dim,
                               std::size_t num_classes, std::vector<vsa::Hypervector> features,
                               std::vector<vsa::Hypervector> value_table, vsa::ClassBook classbook)
    : num_features_(num_features),
      num_levels_(num_levels),
      feature_dim_(feature_dim),
      value_dim_(value_dim),
      features_(std::move(features)),
      values_(std::move(value_table)),
      classbook_(std::move(classbook)) {
  if (num_features_ == 0 || num_levels_ < 2 || value_dim_ == 0 || feature_dim_ % value_dim_ != 0) {
    throw std::invalid_argument("packed ldc: invalid shape");
  }
  if (features_.size() != num_features_ || values_.size() != num_levels_ ||
      classbook_.num_classes() != num_classes) {
    throw std::invalid_argument("packed ldc: tensor counts do not match header");
  }
  for (const auto& f : features_) {
    if (f.dim() != feature_dim_) throw std::invalid_argument("packed ldc: feature dim mismatch");
  }
  for (const auto& v : values_) {
    if (v.dim() != value_dim_) throw std::invalid_argument("packed ldc: value dim mismatch");
  }
  if (classbook_.dim() != feature_dim_) throw std::invalid_argument("packed ldc: class dim mismatch");
  tiled_values_.reserve(values_.size());
  for (const auto& v : values_) tiled_values_.push_back(tile(v, feature_dim_));
}

vsa::Hypervector PackedLDCModel::encode(std::span<const Level> x) const {
  check_sample(x, num_features_, num_levels_);
  vsa::BundleCounter acc(feature_dim_);
  for (std::size_t j = 0; j < num_features_; ++j) acc.add_bound(features_[j], tiled_values_[x[j]]);
  return acc.threshold(vsa::TieRule::plus);
}

std::size_t PackedLDCModel::infer(std::span<const Level> x) const {
  return vsa::nearest_class(encode(x), classbook_);
}

void PackedLDCModel::write(std::ostream& out) const {
  binio::write_magic(out, kMagic);
  for (auto v : {num_features_, num_levels_, feature_dim_, value_dim_, num_classes()}) {
    binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(v));
  }
  for (const auto& f : features_) vsa::write_hypervector(out, f);
  for (const auto& v : values_) vsa::write_hypervector(out, v);
  for (const auto& c : classbook_.vectors()) vsa::write_hypervector(out, c);
}

PackedLDCModel PackedLDCModel::read(std::istream& in) {
  binio::expect_magic(in, kMagic);
  const std::size_t n = binio::read_le<std::uint32_t>(in);
  const std::size_t m = binio::read_le<std::uint32_t>(in);
  const std::size_t df = binio::read_le<std::uint32_t>(in);
  const std::size_t dv = binio::read_le<std::uint32_t>(in);
  const std::size_t c = binio::read_le<std::uint32_t>(in);
  auto read_n = [&](std::size_t count) {
    std::vector<vsa::Hypervector> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(vsa::read_hypervector(in));
    return out;
  };
  try {
    auto features = read_n(n);
    auto values = read_n(m);
    auto classes = read_n(c);
    return PackedLDCModel(n, m, df, dv, c, std::move(features), std::move(values),
                          vsa::ClassBook(std::move(classes)));
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("model file: ") + e.what());
  }
}

void PackedLDCModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  write(out);
  if (!out) throw DataError("failed writing " + path.string());
}

PackedLDCModel PackedLDCModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file " + path.string());
  auto model = read(in);
  if (in.peek() != std::char_traits<char>::eof()) {
    throw DataError("model file " + path.string() + " has trailing bytes");
  }
  return model;
}

bool operator==(const PackedLDCModel& a, const PackedLDCModel& b) {
  return a.num_features_ == b.num_features_ && a.num_levels_ == b.num_levels_ &&
         a.feature_dim_ == b.feature_dim_ && a.value_dim_ == b.value_dim_ &&
         a.features_ == b.features_ && a.values_ == b.values_ &&
         std::equal(a.classbook_.vectors().begin(), a.classbook_.vectors().end(),
                    b.classbook_.vectors().begin(), b.classbook_.vectors().end());
}

PackedLDCModel export_inference(const LDCModel& model) {
  const auto& cfg = model.config;
  const auto df = cfg.feature_dim;
  std::vector<vsa::Hypervector> features;
  features.reserve(cfg.num_features);
  for (std::size_t j = 0; j < cfg.num_features; ++j) {
    features.push_back(vsa::Hypervector::from_signs(
        std::span<const double>(model.feature_shadow).subspan(j * df, df)));
  }
  std::vector<vsa::Hypervector> values;
  values.reserve(cfg.num_levels);
  for (std::size_t m = 0; m < cfg.num_levels; ++m) {
    values.push_back(vsa::Hypervector::from_bipolar(valuebox_encode(static_cast<Level>(m), model)));
  }
  std::vector<vsa::Hypervector> classes;
  classes.reserve(cfg.num_classes);
  for (std::size_t c = 0; c < cfg.num_classes; ++c) {
    classes.push_back(vsa::Hypervector::from_signs(
        std::span<const double>(model.class_shadow).subspan(c * df, df)));
  }
  return PackedLDCModel(cfg.num_features, cfg.num_levels, df, cfg.value_dim, cfg.num_classes,
                        std::move(features), std::move(values), vsa::ClassBook(std::move(classes)));
}

std::size_t model_file_size(std::size_t num_features, std::size_t num_levels,
                            std::size_t feature_dim, std::size_t value_dim,
                            std::size_t num_classes) noexcept {
  return 4 + 5 * 4 + (num_features + num_classes) * vsa::serialized_size(feature_dim) +
         num_levels * vsa::serialized_size(value_dim);
}

}  // namespace skd::ldc
