#include "skd/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "skd/error.hpp"
#include "skd/rng.hpp"

namespace skd::sched {
namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view s, const std::array<std::pair<std::string_view, E>, N>& table,
             const char* what) {
  for (const auto& [name, value] : table) {
    if (name == s) return value;
  }
  std::string msg = std::string("unknown ") + what + " '" + std::string(s) + "' (expected one of:";
  for (const auto& [name, value] : table) msg += " " + std::string(name);
  throw std::invalid_argument(msg + ")");
}

constexpr std::array<std::pair<std::string_view, AlphaMode>, 4> kAlphaModes{{
    {"static", AlphaMode::static_alpha},
    {"linear", AlphaMode::linear},
    {"exponential", AlphaMode::exponential},
    {"parameterized", AlphaMode::parameterized},
}};
constexpr std::array<std::pair<std::string_view, OrderMode>, 3> kOrderModes{{
    {"curriculum", OrderMode::curriculum},
    {"random", OrderMode::random},
    {"anti-curriculum", OrderMode::anti_curriculum},
}};
constexpr std::array<std::pair<std::string_view, CurriculumMode>, 2> kCurriculumModes{{
    {"staged_pools", CurriculumMode::staged_pools},
    {"sorted_full", CurriculumMode::sorted_full},
}};
constexpr std::array<std::pair<std::string_view, RankingSource>, 2> kRankingSources{{
    {"student_loss", RankingSource::student_loss},
    {"teacher_loss", RankingSource::teacher_loss},
}};

template <typename E, std::size_t N>
std::string_view enum_name(E v, const std::array<std::pair<std::string_view, E>, N>& table) {
  for (const auto& [name, value] : table) {
    if (value == v) return name;
  }
  return "?";
}

double clamp_unit(double a) { return std::clamp(a, 0.0, 1.0); }

}  // namespace

std::string_view to_string(AlphaMode m) noexcept { return enum_name(m, kAlphaModes); }
std::string_view to_string(OrderMode m) noexcept { return enum_name(m, kOrderModes); }
std::string_view to_string(CurriculumMode m) noexcept { return enum_name(m, kCurriculumModes); }
std::string_view to_string(RankingSource m) noexcept { return enum_name(m, kRankingSources); }

AlphaMode parse_alpha_mode(std::string_view s) { return parse_enum(s, kAlphaModes, "alpha mode"); }
OrderMode parse_order_mode(std::string_view s) {
  // Accept the underscore spelling of the enum too.
  std::string name(s);
  std::replace(name.begin(), name.end(), '_', '-');
  return parse_enum(std::string_view(name), kOrderModes, "order mode");
}
CurriculumMode parse_curriculum_mode(std::string_view s) {
  return parse_enum(s, kCurriculumModes, "curriculum mode");
}
RankingSource parse_ranking_source(std::string_view s) {
  return parse_enum(s, kRankingSources, "ranking source");
}

void AlphaSchedule::validate() const {
  if (!(alpha0 >= 0.0 && alpha0 <= 1.0)) throw std::invalid_argument("alpha0 must be in [0, 1]");
  if (!(decay_rate > 0.0 && decay_rate <= 1.0)) {
    throw std::invalid_argument("gamma (decay rate) must be in (0, 1]");
  }
  if (change_point < 0) throw std::invalid_argument("change point P must be >= 0");
  if (decay_step < 1) throw std::invalid_argument("decay step k must be >= 1");
  if (scaling_factor < 1) throw std::invalid_argument("scaling factor r must be >= 1");
  if (!(linear_end >= 0.0 && linear_end <= 1.0)) {
    throw std::invalid_argument("linear_end must be in [0, 1]");
  }
}

AlphaState init_alpha_state(const AlphaSchedule& schedule, int total_epochs) {
  schedule.validate();
  if (total_epochs < 1) throw std::invalid_argument("alpha schedule: total epochs must be >= 1");
  AlphaState s;
  s.alpha = schedule.alpha0;
  s.total_epochs = total_epochs;
  const double a = std::clamp(schedule.alpha0, 1e-6, 1.0 - 1e-6);
  s.param_logit = std::log(a / (1.0 - a));
  return s;
}

double alpha_at(const AlphaSchedule& schedule, int h, AlphaState& state) {
  if (h < 0) throw std::invalid_argument("alpha_at: negative epoch");
  switch (schedule.mode) {
    case AlphaMode::static_alpha:
      return schedule.alpha0;
    case AlphaMode::exponential: {
      if (h + 1 < state.next_epoch) {
        throw std::invalid_argument("alpha_at: exponential schedule cannot rewind to epoch " +
                                    std::to_string(h));
      }
      for (int e = state.next_epoch; e <= h; ++e) {
        if (e >= schedule.change_point && e % schedule.decay_step == 0) {
          const int exponent = (e + schedule.scaling_factor - 1) / schedule.scaling_factor;
          state.alpha = std::max(0.0, state.alpha * std::pow(schedule.decay_rate, exponent));
        }
      }
      state.next_epoch = std::max(state.next_epoch, h + 1);
      return state.alpha;
    }
    case AlphaMode::linear: {
      const int last = state.total_epochs - 1;
      if (h <= schedule.change_point || last <= schedule.change_point) return schedule.alpha0;
      const double t = std::min(1.0, double(h - schedule.change_point) /
                                         double(last - schedule.change_point));
      return clamp_unit(schedule.alpha0 + (schedule.linear_end - schedule.alpha0) * t);
    }
    case AlphaMode::parameterized:
      return nn::sigmoid(state.param_logit);
  }
  throw std::invalid_argument("alpha_at: invalid mode");
}

std::vector<double> score_difficulty(std::span<const double> logits, std::size_t num_classes,
                                     std::span<const std::uint32_t> labels) {
  if (num_classes < 2 || logits.size() != labels.size() * num_classes) {
    throw DataError("score_difficulty: logits do not match dataset size");
  }
  std::vector<double> scores(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    scores[i] = nn::nll_loss(logits.subspan(i * num_classes, num_classes), labels[i]).loss;
  }
  return scores;
}

std::vector<double> score_difficulty(const ldc::LDCModel& ref, const data::QuantizedDataset& ds) {
  if (ref.config.num_features != ds.num_features() || ref.config.num_classes < ds.num_classes()) {
    throw DataError("score_difficulty: reference model does not match dataset shape");
  }
  const auto snap = ldc::snapshot(ref);
  std::vector<double> logits;
  logits.reserve(ds.size() * ref.config.num_classes);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto z = ldc::forward(ref, snap, ds.row(i));
    logits.insert(logits.end(), z.begin(), z.end());
  }
  return score_difficulty(logits, ref.config.num_classes, ds.labels());
}

std::vector<double> score_difficulty(const teacher::LogitCache& ref,
                                     const data::QuantizedDataset& ds) {
  ref.require_dataset(ds.source_fingerprint());
  std::vector<double> logits;
  logits.reserve(ref.size() * ref.num_classes());
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const auto z = ref.row(i);
    logits.insert(logits.end(), z.begin(), z.end());
  }
  return score_difficulty(logits, ref.num_classes(), ds.labels());
}

std::vector<std::size_t> order_dataset(std::span<const double> scores, OrderMode mode,
                                       std::uint64_t seed) {
  if (scores.empty()) throw std::invalid_argument("order_dataset: empty scores");
  std::vector<std::size_t> perm(scores.size());
  std::iota(perm.begin(), perm.end(), 0);
  switch (mode) {
    case OrderMode::curriculum:
      std::stable_sort(perm.begin(), perm.end(),
                       [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
      break;
    case OrderMode::anti_curriculum:
      std::stable_sort(perm.begin(), perm.end(),
                       [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
      break;
    case OrderMode::random: {
      Rng rng(seed);
      std::shuffle(perm.begin(), perm.end(), rng);
      break;
    }
  }
  return perm;
}

std::size_t CurriculumPlan::phase_of(int epoch) const noexcept {
  int end = 0;
  for (std::size_t b = 0; b < 3; ++b) {
    end += phase_epochs[b];
    if (epoch < end) return b;
  }
  return 2;
}

CurriculumPlan build_pools(std::vector<std::size_t> permutation,
                           std::array<double, 3> pool_fractions, int total_epochs,
                           std::array<double, 3> phase_split) {
  if (total_epochs < 1) throw std::invalid_argument("build_pools: total epochs must be >= 1");
  for (std::size_t b = 0; b < 3; ++b) {
    if (!(pool_fractions[b] > 0.0 && pool_fractions[b] <= 1.0)) {
      throw std::invalid_argument("build_pools: pool fractions must be in (0, 1]");
    }
    if (b > 0 && pool_fractions[b] < pool_fractions[b - 1]) {
      throw std::invalid_argument("build_pools: pool fractions must be nondecreasing");
    }
    if (!(phase_split[b] >= 0.0)) throw std::invalid_argument("build_pools: negative phase split");
  }
  const auto total = permutation.size();
  CurriculumPlan plan;
  for (std::size_t b = 0; b < 3; ++b) {
    // The epsilon absorbs representation error, e.g. 0.7 * 10 = 7.000000000000001.
    plan.pool_sizes[b] =
        static_cast<std::size_t>(std::floor(pool_fractions[b] * double(total) + 1e-9));
  }
  if (plan.pool_sizes[0] == 0) {
    throw DataError("build_pools: easy pool is empty (fraction " +
                    std::to_string(pool_fractions[0]) + " of " + std::to_string(total) +
                    " samples)");
  }
  plan.pool_fractions = pool_fractions;
  plan.phase_epochs[0] = static_cast<int>(std::floor(phase_split[0] * total_epochs + 1e-9));
  plan.phase_epochs[1] = static_cast<int>(std::floor(phase_split[1] * total_epochs + 1e-9));
  plan.phase_epochs[2] = total_epochs - plan.phase_epochs[0] - plan.phase_epochs[1];
  if (plan.phase_epochs[2] < 0) throw std::invalid_argument("build_pools: phase split exceeds 1");
  plan.permutation = std::move(permutation);
  return plan;
}

double rank_overlap(std::span<const double> a, std::span<const double> b, double q) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("rank_overlap: length mismatch (" + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()) + ")");
  }
  if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("rank_overlap: q must be in (0, 1]");
  if (a.empty()) throw std::invalid_argument("rank_overlap: empty scores");
  const auto take = static_cast<std::size_t>(std::ceil(q * double(a.size()) - 1e-9));
  auto hardest = [&](std::span<const double> s) {
    auto perm = order_dataset(s, OrderMode::anti_curriculum, 0);
    perm.resize(take);
    std::vector<char> mask(s.size(), 0);
    for (const auto i : perm) mask[i] = 1;
    return mask;
  };
  const auto ma = hardest(a);
  const auto mb = hardest(b);
  std::size_t both = 0;
  for (std::size_t i = 0; i < ma.size(); ++i) both += (ma[i] && mb[i]) ? 1 : 0;
  return static_cast<double>(both) / static_cast<double>(take);
}

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("train config: batch size must be >= 1");
  if (!(temperature > 0.0)) throw std::invalid_argument("train config: temperature must be > 0");
  lr.validate();
}

double packed_accuracy(const ldc::PackedLDCModel& model, const data::QuantizedDataset& ds) {
  if (ds.size() == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) correct += model.infer(ds.row(i)) == ds.label(i);
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

TrainResult train_student_scheduled(ldc::LDCModel student, const data::QuantizedDataset& train,
                                    const teacher::LogitCache* teacher, const CurriculumPlan& plan,
                                    const AlphaSchedule& schedule, const TrainConfig& cfg,
                                    const data::QuantizedDataset* test) {
  cfg.validate();
  schedule.validate();
  student.validate();
  if (train.size() == 0) throw DataError("train_student: empty training set");
  if (plan.permutation.size() != train.size()) {
    throw DataError("train_student: curriculum permutation covers " +
                    std::to_string(plan.permutation.size()) + " samples, dataset has " +
                    std::to_string(train.size()));
  }
  if (teacher != nullptr) {
    teacher->require_dataset(train.source_fingerprint());
    if (teacher->size() != train.size() || teacher->num_classes() != student.config.num_classes) {
      throw DataError("train_student: logit cache shape does not match dataset/student");
    }
  }

  const bool ranked = plan.order_mode != OrderMode::random;
  Rng rng(derive_seed(cfg.seed, "train-order"));
  AlphaState alpha_state = init_alpha_state(schedule, cfg.epochs);
  const nn::DistillConfig base{0.0, cfg.temperature};

  ldc::LDCGrads grads(student);
  auto value_grad = ldc::value_grad_buffer(student.config);
  ldc::SampleTrace trace;
  std::vector<std::size_t> active;
  TrainResult result;

  for (int h = 0; h < cfg.epochs; ++h) {
    const double alpha = teacher != nullptr ? alpha_at(schedule, h, alpha_state) : 0.0;
    const double lr = cfg.lr.lr_at(h);

    std::size_t pool_size = train.size();
    if (ranked && cfg.curriculum_mode == CurriculumMode::staged_pools) {
      pool_size = plan.pool_sizes[plan.phase_of(h)];
    }
    if (pool_size == 0) throw DataError("train_student: empty pool at epoch " + std::to_string(h));
    active.assign(plan.permutation.begin(), plan.permutation.begin() + std::ptrdiff_t(pool_size));
    if (!ranked || cfg.curriculum_mode == CurriculumMode::staged_pools) {
      std::shuffle(active.begin(), active.end(), rng);
    }

    double kd_sum = 0.0;
    double nll_sum = 0.0;
    for (std::size_t start = 0; start < active.size(); start += cfg.batch_size) {
      const auto end = std::min(active.size(), start + cfg.batch_size);
      const auto snap = ldc::snapshot(student);
      grads.zero();
      for (auto& g : value_grad) std::fill(g.begin(), g.end(), 0.0);
      nn::DistillConfig dc = base;
      dc.alpha = schedule.mode == AlphaMode::parameterized && teacher != nullptr
                     ? nn::sigmoid(alpha_state.param_logit)
                     : alpha;
      double alpha_grad = 0.0;

      for (std::size_t b = start; b < end; ++b) {
        const auto i = active[b];
        const auto x = train.row(i);
        const auto z = ldc::forward(student, snap, x, &trace);
        nn::Vector dz;
        if (teacher != nullptr) {
          auto loss = nn::combined_loss(z, teacher->row(i), train.label(i), dc);
          kd_sum += dc.alpha * loss.kd;
          nll_sum += (1.0 - dc.alpha) * loss.nll;
          alpha_grad += loss.kd - loss.nll;
          dz = std::move(loss.grad);
        } else {
          auto loss = nn::nll_loss(z, train.label(i));
          nll_sum += loss.loss;
          dz = std::move(loss.grad);
        }
        ldc::backward(student, snap, x, trace, dz, grads, value_grad);
      }
      ldc::finish_backward(student, snap, value_grad, grads);
      const double count = static_cast<double>(end - start);
      ldc::apply_sgd(student, grads, lr / count);
      if (schedule.mode == AlphaMode::parameterized && teacher != nullptr) {
        const double s = dc.alpha;
        alpha_state.param_logit -= lr * (alpha_grad / count) * s * (1.0 - s);
      }
    }

    MetricsRow row;
    row.epoch = h;
    row.alpha = alpha;
    row.pool_size = pool_size;
    row.kd_term = kd_sum / double(pool_size);
    row.nll_term = nll_sum / double(pool_size);
    row.train_loss = row.kd_term + row.nll_term;
    if (!std::isfinite(row.train_loss)) {
      throw NumericError("train_student: non-finite loss at epoch " + std::to_string(h));
    }
    const auto packed = ldc::export_inference(student);
    row.train_acc = packed_accuracy(packed, train);
    row.test_acc = test != nullptr ? packed_accuracy(packed, *test) : 0.0;
    result.metrics.push_back(row);
  }
  student.validate();
  result.model = std::move(student);
  return result;
}

}  // namespace skd::sched
