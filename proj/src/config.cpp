#include "skd/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "skd/error.hpp"
#include "skd/rng.hpp"

namespace skd::config {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Value errors carry no key; the caller adds key and line.
struct BadValue : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename T>
T parse_integer(std::string_view s) {
  T v{};
  const auto* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) throw BadValue("expected an integer, got '" + std::string(s) + "'");
  return v;
}

double parse_real(std::string_view s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end || !std::isfinite(v)) {
    throw BadValue("expected a finite number, got '" + std::string(s) + "'");
  }
  return v;
}

bool parse_bool(std::string_view s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw BadValue("expected true/false, got '" + std::string(s) + "'");
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    const auto c = s.find(',');
    out.push_back(trim(s.substr(0, c)));
    if (c == std::string_view::npos) break;
    s.remove_prefix(c + 1);
  }
  return out;
}

std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <typename T>
std::string fmt_int(T v) {
  return std::to_string(v);
}

std::string fmt_bool(bool v) { return v ? "true" : "false"; }

template <typename Enum>
Enum parse_enum(std::string_view s, Enum (*parser)(std::string_view)) {
  try {
    return parser(s);
  } catch (const std::invalid_argument& e) {
    throw BadValue(e.what());
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw BadValue(what);
}

struct Key {
  std::string_view name;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

// Table order is also the order of format_config.
const std::vector<Key>& table() {
  static const std::vector<Key> t = [] {
    std::vector<Key> k;
    k.push_back({"profile",
                  [](RunConfig& c, std::string_view v) { c.profile = parse_enum(v, parse_profile); },
                  [](const RunConfig& c) { return std::string(to_string(c.profile)); }});
    k.push_back({"seed", [](RunConfig& c, std::string_view v) { c.seed = parse_integer<std::uint64_t>(v); },
                 [](const RunConfig& c) { return fmt_int(c.seed); }});
    k.push_back({"out_dir",
                 [](RunConfig& c, std::string_view v) {
                   require(!v.empty(), "out_dir must not be empty");
                   c.out_dir = std::string(v);
                 },
                 [](const RunConfig& c) { return c.out_dir; }});

    // Data.
    k.push_back({"data_source",
                 [](RunConfig& c, std::string_view v) {
                   if (v == "synth") c.data_source = DataSource::synth;
                   else if (v == "csv") c.data_source = DataSource::csv;
                   else throw BadValue("expected synth or csv, got '" + std::string(v) + "'");
                 },
                 [](const RunConfig& c) {
                   return std::string(c.data_source == DataSource::synth ? "synth" : "csv");
                 }});
    k.push_back({"data_path", [](RunConfig& c, std::string_view v) { c.data_path = std::string(v); },
                 [](const RunConfig& c) { return c.data_path; }});
    k.push_back({"num_classes",
                 [](RunConfig& c, std::string_view v) { c.num_classes = parse_integer<std::size_t>(v); },
                 [](const RunConfig& c) { return fmt_int(c.num_classes); }});
    k.push_back({"train_fraction",
                 [](RunConfig& c, std::string_view v) {
                   const double f = parse_real(v);
                   require(f > 0.0 && f < 1.0, "train_fraction must be in (0, 1)");
                   c.train_fraction = f;
                 },
                 [](const RunConfig& c) { return fmt_real(c.train_fraction); }});
    k.push_back({"num_levels",
                 [](RunConfig& c, std::string_view v) {
                   const auto m = parse_integer<std::size_t>(v);
                   require(m >= 2, "num_levels must be >= 2");
                   c.num_levels = m;
                 },
                 [](const RunConfig& c) { return fmt_int(c.num_levels); }});
    k.push_back({"synth_classes",
                 [](RunConfig& c, std::string_view v) { c.synth.num_classes = parse_integer<std::size_t>(v); },
                 [](const RunConfig& c) { return fmt_int(c.synth.num_classes); }});
    k.push_back({"synth_features",
                 [](RunConfig& c, std::string_view v) { c.synth.num_features = parse_integer<std::size_t>(v); },
                 [](const RunConfig& c) { return fmt_int(c.synth.num_features); }});
    k.push_back({"synth_samples_per_class",
                 [](RunConfig& c, std::string_view v) {
                   c.synth.samples_per_class = parse_integer<std::size_t>(v);
                 },
                 [](const RunConfig& c) { return fmt_int(c.synth.samples_per_class); }});
    k.push_back({"synth_spread",
                 [](RunConfig& c, std::string_view v) {
                   const double s = parse_real(v);
                   require(s > 0.0, "synth_spread must be > 0");
                   c.synth.spread = s;
                 },
                 [](const RunConfig& c) { return fmt_real(c.synth.spread); }});
    k.push_back({"synth_center_scale",
                 [](RunConfig& c, std::string_view v) {
                   const double s = parse_real(v);
                   require(s >= 0.0, "synth_center_scale must be >= 0");
                   c.synth.center_scale = s;
                 },
                 [](const RunConfig& c) { return fmt_real(c.synth.center_scale); }});
    k.push_back({"synth_modes",
                 [](RunConfig& c, std::string_view v) {
                   const auto m = parse_integer<std::size_t>(v);
                   require(m >= 1, "synth_modes must be >= 1");
                   c.synth.modes_per_class = m;
                 },
                 [](const RunConfig& c) { return fmt_int(c.synth.modes_per_class); }});
    k.push_back({"synth_label_noise",
                 [](RunConfig& c, std::string_view v) {
                   const double p = parse_real(v);
                   require(p >= 0.0 && p < 0.5, "synth_label_noise must be in [0, 0.5)");
                   c.synth.label_noise = p;
                 },
                 [](const RunConfig& c) { return fmt_real(c.synth.label_noise); }});

    // Teacher.
    k.push_back({"teacher_hidden",
                 [](RunConfig& c, std::string_view v) {
                   std::vector<std::size_t> dims;
                   for (const auto part : split_list(v)) {
                     const auto d = parse_integer<std::size_t>(part);
                     require(d > 0, "teacher_hidden widths must be > 0");
                     dims.push_back(d);
                   }
                   c.teacher_hidden = std::move(dims);
                 },
                 [](const RunConfig& c) {
                   std::string s;
                   for (std::size_t i = 0; i < c.teacher_hidden.size(); ++i) {
                     s += (i ? "," : "") + std::to_string(c.teacher_hidden[i]);
                   }
                   return s;
                 }});
    k.push_back({"teacher_activation",
                 [](RunConfig& c, std::string_view v) {
                   if (v == "relu") c.teacher_activation = teacher::Activation::relu;
                   else if (v == "tanh") c.teacher_activation = teacher::Activation::tanh;
                   else throw BadValue("expected relu or tanh, got '" + std::string(v) + "'");
                 },
                 [](const RunConfig& c) {
                   return std::string(c.teacher_activation == teacher::Activation::relu ? "relu" : "tanh");
                 }});
    k.push_back({"teacher_epochs",
                 [](RunConfig& c, std::string_view v) {
                   const int e = parse_integer<int>(v);
                   require(e >= 0, "teacher_epochs must be >= 0");
                   c.teacher_epochs = e;
                 },
                 [](const RunConfig& c) { return fmt_int(c.teacher_epochs); }});
    k.push_back({"teacher_lr",
                 [](RunConfig& c, std::string_view v) {
                   const double lr = parse_real(v);
                   require(lr >= 0.0, "teacher_lr must be >= 0");
                   c.teacher_lr = lr;
                 },
                 [](const RunConfig& c) { return fmt_real(c.teacher_lr); }});
    k.push_back({"teacher_lr_decay",
                 [](RunConfig& c, std::string_view v) {
                   const double f = parse_real(v);
                   require(f > 0.0 && f <= 1.0, "teacher_lr_decay must be in (0, 1]");
                   c.teacher_lr_decay = f;
                 },
                 [](const RunConfig& c) { return fmt_real(c.teacher_lr_decay); }});
    k.push_back({"teacher_lr_step",
                 [](RunConfig& c, std::string_view v) {
                   const int s = parse_integer<int>(v);
                   require(s >= 1, "teacher_lr_step must be >= 1");
                   c.teacher_lr_step = s;
                 },
                 [](const RunConfig& c) { return fmt_int(c.teacher_lr_step); }});
    k.push_back({"teacher_batch",
                 [](RunConfig& c, std::string_view v) {
                   const auto b = parse_integer<std::size_t>(v);
                   require(b >= 1, "teacher_batch must be >= 1");
                   c.teacher_batch = b;
                 },
                 [](const RunConfig& c) { return fmt_int(c.teacher_batch); }});

    // Student.
    k.push_back({"feature_dim",
                 [](RunConfig& c, std::string_view v) { c.ldc.feature_dim = parse_integer<std::size_t>(v); },
                 [](const RunConfig& c) { return fmt_int(c.ldc.feature_dim); }});
    k.push_back({"value_dim",
                 [](RunConfig& c, std::string_view v) { c.ldc.value_dim = parse_integer<std::size_t>(v); },
                 [](const RunConfig& c) { return fmt_int(c.ldc.value_dim); }});
    k.push_back({"valuebox_hidden",
                 [](RunConfig& c, std::string_view v) {
                   c.ldc.valuebox_hidden = parse_integer<std::size_t>(v);
                 },
                 [](const RunConfig& c) { return fmt_int(c.ldc.valuebox_hidden); }});
    k.push_back({"accumulator_scale",
                 [](RunConfig& c, std::string_view v) {
                   const double s = parse_real(v);
                   require(s >= 0.0, "accumulator_scale must be >= 0 (0 means 1/N)");
                   c.ldc.accumulator_scale = s;
                 },
                 [](const RunConfig& c) { return fmt_real(c.ldc.accumulator_scale); }});
    k.push_back({"ste_clip",
                 [](RunConfig& c, std::string_view v) {
                   const double s = parse_real(v);
                   require(s > 0.0, "ste_clip must be > 0");
                   c.ldc.ste_clip = s;
                 },
                 [](const RunConfig& c) { return fmt_real(c.ldc.ste_clip); }});
    k.push_back({"binarize_class_in_training",
                 [](RunConfig& c, std::string_view v) { c.ldc.binarize_class_in_training = parse_bool(v); },
                 [](const RunConfig& c) { return fmt_bool(c.ldc.binarize_class_in_training); }});
    k.push_back({"clip_shadow",
                 [](RunConfig& c, std::string_view v) { c.ldc.clip_shadow = parse_bool(v); },
                 [](const RunConfig& c) { return fmt_bool(c.ldc.clip_shadow); }});
    k.push_back({"learn_logit_scale",
                 [](RunConfig& c, std::string_view v) { c.ldc.learn_logit_scale = parse_bool(v); },
                 [](const RunConfig& c) { return fmt_bool(c.ldc.learn_logit_scale); }});
    k.push_back({"min_logit_scale_ratio",
                 [](RunConfig& c, std::string_view v) {
                   const double r = parse_real(v);
                   require(r > 0.0 && r <= 1.0, "min_logit_scale_ratio must be in (0, 1]");
                   c.ldc.min_logit_scale_ratio = r;
                 },
                 [](const RunConfig& c) { return fmt_real(c.ldc.min_logit_scale_ratio); }});

    // Distillation.
    k.push_back({"use_teacher",
                 [](RunConfig& c, std::string_view v) { c.use_teacher = parse_bool(v); },
                 [](const RunConfig& c) { return fmt_bool(c.use_teacher); }});
    k.push_back({"mode",
                 [](RunConfig& c, std::string_view v) { c.alpha.mode = parse_enum(v, sched::parse_alpha_mode); },
                 [](const RunConfig& c) { return std::string(sched::to_string(c.alpha.mode)); }});
    k.push_back({"alpha0",
                 [](RunConfig& c, std::string_view v) {
                   const double a = parse_real(v);
                   require(a >= 0.0 && a <= 1.0, "alpha0 must be in [0, 1]");
                   c.alpha.alpha0 = a;
                 },
                 [](const RunConfig& c) { return fmt_real(c.alpha.alpha0); }});
    k.push_back({"P",
                 [](RunConfig& c, std::string_view v) {
                   const int p = parse_integer<int>(v);
                   require(p >= 0, "P must be >= 0");
                   c.alpha.change_point = p;
                 },
                 [](const RunConfig& c) { return fmt_int(c.alpha.change_point); }});
    k.push_back({"k",
                 [](RunConfig& c, std::string_view v) {
                   const int s = parse_integer<int>(v);
                   require(s >= 1, "k must be >= 1");
                   c.alpha.decay_step = s;
                 },
                 [](const RunConfig& c) { return fmt_int(c.alpha.decay_step); }});
    k.push_back({"gamma",
                 [](RunConfig& c, std::string_view v) {
                   const double g = parse_real(v);
                   require(g > 0.0 && g <= 1.0, "gamma must be in (0, 1]");
                   c.alpha.decay_rate = g;
                 },
                 [](const RunConfig& c) { return fmt_real(c.alpha.decay_rate); }});
    k.push_back({"r",
                 [](RunConfig& c, std::string_view v) {
                   const int r = parse_integer<int>(v);
                   require(r >= 1, "r must be >= 1");
                   c.alpha.scaling_factor = r;
                 },
                 [](const RunConfig& c) { return fmt_int(c.alpha.scaling_factor); }});
    k.push_back({"linear_end",
                 [](RunConfig& c, std::string_view v) {
                   const double a = parse_real(v);
                   require(a >= 0.0 && a <= 1.0, "linear_end must be in [0, 1]");
                   c.alpha.linear_end = a;
                 },
                 [](const RunConfig& c) { return fmt_real(c.alpha.linear_end); }});
    k.push_back({"order_mode",
                 [](RunConfig& c, std::string_view v) { c.order = parse_enum(v, sched::parse_order_mode); },
                 [](const RunConfig& c) { return std::string(sched::to_string(c.order)); }});
    k.push_back({"curriculum_mode",
                 [](RunConfig& c, std::string_view v) {
                   c.train.curriculum_mode = parse_enum(v, sched::parse_curriculum_mode);
                 },
                 [](const RunConfig& c) { return std::string(sched::to_string(c.train.curriculum_mode)); }});
    k.push_back({"ranking_source",
                 [](RunConfig& c, std::string_view v) {
                   c.train.ranking_source = parse_enum(v, sched::parse_ranking_source);
                 },
                 [](const RunConfig& c) { return std::string(sched::to_string(c.train.ranking_source)); }});
    k.push_back({"pool_fractions",
                 [](RunConfig& c, std::string_view v) {
                   const auto parts = split_list(v);
                   require(parts.size() == 3, "pool_fractions needs three values");
                   std::array<double, 3> f{};
                   for (std::size_t i = 0; i < 3; ++i) f[i] = parse_real(parts[i]);
                   for (std::size_t i = 0; i < 3; ++i) {
                     require(f[i] > 0.0 && f[i] <= 1.0, "pool_fractions must be in (0, 1]");
                     require(i == 0 || f[i] >= f[i - 1], "pool_fractions must be nondecreasing");
                   }
                   c.pool_fractions = f;
                 },
                 [](const RunConfig& c) {
                   return fmt_real(c.pool_fractions[0]) + "," + fmt_real(c.pool_fractions[1]) + "," +
                          fmt_real(c.pool_fractions[2]);
                 }});

    // Student optimizer.
    k.push_back({"epochs",
                 [](RunConfig& c, std::string_view v) {
                   const int h = parse_integer<int>(v);
                   require(h >= 1, "epochs must be >= 1");
                   c.train.epochs = h;
                 },
                 [](const RunConfig& c) { return fmt_int(c.train.epochs); }});
    k.push_back({"batch_size",
                 [](RunConfig& c, std::string_view v) {
                   const auto b = parse_integer<std::size_t>(v);
                   require(b >= 1, "batch_size must be >= 1");
                   c.train.batch_size = b;
                 },
                 [](const RunConfig& c) { return fmt_int(c.train.batch_size); }});
    k.push_back({"lr",
                 [](RunConfig& c, std::string_view v) {
                   const double lr = parse_real(v);
                   require(lr >= 0.0, "lr must be >= 0");
                   c.train.lr.base_lr = lr;
                 },
                 [](const RunConfig& c) { return fmt_real(c.train.lr.base_lr); }});
    k.push_back({"lr_decay",
                 [](RunConfig& c, std::string_view v) {
                   const double f = parse_real(v);
                   require(f > 0.0 && f <= 1.0, "lr_decay must be in (0, 1]");
                   c.train.lr.factor = f;
                 },
                 [](const RunConfig& c) { return fmt_real(c.train.lr.factor); }});
    k.push_back({"lr_step",
                 [](RunConfig& c, std::string_view v) {
                   const int s = parse_integer<int>(v);
                   require(s >= 1, "lr_step must be >= 1");
                   c.train.lr.step_size = s;
                 },
                 [](const RunConfig& c) { return fmt_int(c.train.lr.step_size); }});
    k.push_back({"tau",
                 [](RunConfig& c, std::string_view v) {
                   const double t = parse_real(v);
                   require(t > 0.0, "tau must be > 0");
                   c.train.temperature = t;
                 },
                 [](const RunConfig& c) { return fmt_real(c.train.temperature); }});
    return k;
  }();
  return t;
}

const Key* find_key(std::string_view name) {
  for (const auto& k : table()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

}  // namespace

std::string_view to_string(Profile p) noexcept {
  switch (p) {
    case Profile::synthetic: return "synthetic";
    case Profile::motor_imagery: return "motor_imagery";
    case Profile::x11_s4b: return "x11_s4b";
  }
  return "?";
}

Profile parse_profile(std::string_view s) {
  if (s == "synthetic") return Profile::synthetic;
  if (s == "motor_imagery") return Profile::motor_imagery;
  if (s == "x11_s4b") return Profile::x11_s4b;
  throw std::invalid_argument("unknown profile '" + std::string(s) +
                              "' (synthetic, motor_imagery, x11_s4b)");
}

RunConfig defaults(Profile profile) {
  RunConfig c;
  c.profile = profile;
  c.synth.num_classes = 5;
  c.synth.num_features = 32;
  c.synth.samples_per_class = 1200;
  c.synth.spread = 1.0;
  c.synth.center_scale = 0.6;
  c.synth.label_noise = 0.1;

  c.alpha.mode = sched::AlphaMode::exponential;
  c.alpha.alpha0 = 0.8;
  c.alpha.decay_rate = 0.9;
  c.alpha.decay_step = 1;
  c.alpha.scaling_factor = 50;
  c.alpha.linear_end = 0.0;
  c.train.temperature = 4.0;
  c.train.curriculum_mode = sched::CurriculumMode::staged_pools;
  c.train.ranking_source = sched::RankingSource::student_loss;

  switch (profile) {
    case Profile::synthetic:
      // A deliberately under-trained teacher: it beats the student, but its soft
      // targets are noisy enough that leaning on them late in training hurts.
      c.teacher_epochs = 2;
      c.teacher_lr = 0.01;
      c.ldc.feature_dim = 512;
      c.train.temperature = 2.0;
      c.alpha.decay_rate = 0.8;
      c.alpha.change_point = 40;
      c.pool_fractions = {0.65, 0.80, 0.95};
      c.train.epochs = 60;
      c.train.batch_size = 100;
      c.train.lr = {0.5, 0.1, 50};
      break;
    case Profile::motor_imagery:
      c.alpha.change_point = 100;
      c.pool_fractions = {0.65, 0.80, 0.95};
      c.train.epochs = 200;
      c.train.batch_size = 1000;
      c.train.lr = {0.005, 0.1, 50};
      break;
    case Profile::x11_s4b:
      c.alpha.change_point = 75;
      c.pool_fractions = {0.70, 0.90, 1.00};
      c.train.epochs = 150;
      c.train.batch_size = 256;
      c.train.lr = {0.005, 0.1, 60};
      break;
  }
  return c;
}

void RunConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& msg) {
    throw UsageError("config key '" + key + "': " + msg);
  };
  if (data_source == DataSource::csv && data_path.empty()) {
    fail("data_path", "required when data_source = csv");
  }
  if (data_source == DataSource::synth) {
    try {
      synth.validate();
    } catch (const std::invalid_argument& e) {
      fail("synth_*", e.what());
    }
  }
  if (ldc.value_dim == 0 || ldc.feature_dim == 0 || ldc.feature_dim % ldc.value_dim != 0) {
    fail("feature_dim", "must be a positive multiple of value_dim");
  }
  if (ldc.valuebox_hidden == 0) fail("valuebox_hidden", "must be > 0");
}

teacher::TeacherConfig RunConfig::teacher_config(std::size_t num_features,
                                                  std::size_t num_classes_) const {
  teacher::TeacherConfig t;
  t.layer_dims.clear();
  t.layer_dims.push_back(num_features);
  t.layer_dims.insert(t.layer_dims.end(), teacher_hidden.begin(), teacher_hidden.end());
  t.layer_dims.push_back(num_classes_);
  t.activation = teacher_activation;
  t.epochs = teacher_epochs;
  t.lr = teacher_lr;
  t.lr_decay = teacher_lr_decay;
  t.lr_step = teacher_lr_step;
  t.batch_size = teacher_batch;
  t.seed = derive_seed(seed, "teacher");
  return t;
}

ldc::LDCConfig RunConfig::ldc_config(std::size_t num_features, std::size_t num_classes_) const {
  ldc::LDCConfig l = ldc;
  l.num_features = num_features;
  l.num_levels = num_levels;
  l.num_classes = num_classes_;
  return l;
}

void set_value(RunConfig& cfg, std::string_view key, std::string_view value) {
  const Key* k = find_key(key);
  if (k == nullptr) throw UsageError("unknown config key '" + std::string(key) + "'");
  try {
    k->set(cfg, trim(value));
  } catch (const BadValue& e) {
    throw UsageError("config key '" + std::string(key) + "': " + e.what());
  }
}

std::string get_value(const RunConfig& cfg, std::string_view key) {
  const Key* k = find_key(key);
  if (k == nullptr) throw UsageError("unknown config key '" + std::string(key) + "'");
  return k->get(cfg);
}

bool is_key(std::string_view key) noexcept { return find_key(key) != nullptr; }

std::vector<std::string> keys() {
  std::vector<std::string> out;
  for (const auto& k : table()) out.emplace_back(k.name);
  return out;
}

RunConfig parse_config_text(std::string_view text, std::string_view source) {
  struct Line {
    std::size_t number;
    std::string key;
    std::string value;
  };
  std::vector<Line> lines;
  std::optional<std::size_t> profile_line;
  std::size_t number = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  auto where = [&](std::size_t n) { return std::string(source) + ":" + std::to_string(n) + ": "; };

  while (std::getline(in, raw)) {
    ++number;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError(where(number) + "expected 'key = value', got '" + std::string(line) + "'");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw UsageError(where(number) + "missing key before '='");
    if (!is_key(key)) throw UsageError(where(number) + "unknown config key '" + std::string(key) + "'");
    for (const auto& prev : lines) {
      if (prev.key == key) {
        throw UsageError(where(number) + "key '" + std::string(key) + "' already set on line " +
                         std::to_string(prev.number));
      }
    }
    if (key == "profile") profile_line = lines.size();
    lines.push_back({number, std::string(key), std::string(value)});
  }

  RunConfig cfg;
  if (profile_line) {
    const auto& l = lines[*profile_line];
    try {
      cfg = defaults(parse_enum(l.value, parse_profile));
    } catch (const BadValue& e) {
      throw UsageError(where(l.number) + "config key 'profile': " + e.what());
    }
  } else {
    cfg = defaults(Profile::synthetic);
  }
  for (const auto& l : lines) {
    if (l.key == "profile") continue;
    try {
      set_value(cfg, l.key, l.value);
    } catch (const UsageError& e) {
      throw UsageError(where(l.number) + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

std::string format_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& k : table()) {
    out += std::string(k.name) + " = " + k.get(cfg) + "\n";
  }
  return out;
}

}  // namespace skd::config
