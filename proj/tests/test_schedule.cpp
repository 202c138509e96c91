#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <tuple>
#include <vector>

#include "skd/data.hpp"
#include "skd/error.hpp"
#include "skd/ldc.hpp"
#include "skd/rng.hpp"
#include "skd/schedule.hpp"
#include "skd/teacher.hpp"

using namespace skd;
using namespace skd::sched;

namespace {

AlphaSchedule expo(double alpha0, int p, int k, int r, double gamma) {
  AlphaSchedule s;
  s.mode = AlphaMode::exponential;
  s.alpha0 = alpha0;
  s.change_point = p;
  s.decay_step = k;
  s.scaling_factor = r;
  s.decay_rate = gamma;
  return s;
}

std::vector<double> trace(const AlphaSchedule& s, int epochs) {
  auto st = init_alpha_state(s, epochs);
  std::vector<double> out;
  for (int h = 0; h < epochs; ++h) out.push_back(alpha_at(s, h, st));
  return out;
}

// Direct transcription of the compounding loop, kept separate from the
// library's state machine.
std::vector<double> expo_oracle(double alpha0, int p, int k, int r, double gamma, int epochs) {
  std::vector<double> out;
  double a = alpha0;
  for (int h = 0; h < epochs; ++h) {
    if (h >= p && h % k == 0) a *= std::pow(gamma, std::ceil(double(h) / double(r)));
    out.push_back(a);
  }
  return out;
}

struct Fixture {
  data::QuantizedDataset train;
  data::QuantizedDataset test;
  teacher::LogitCache cache;
  ldc::LDCConfig lc;
};

Fixture small_problem() {
  data::SynthConfig sc;
  sc.num_classes = 3;
  sc.num_features = 6;
  sc.samples_per_class = 40;
  sc.seed = 2;
  const auto [tr, te] = data::split(data::synth_generate(sc), 0.75, 3);
  const auto spec = data::fit_quantizer(tr, 8);
  teacher::TeacherConfig tc;
  tc.layer_dims = {6, 12, 3};
  tc.epochs = 3;
  const auto t = teacher::train_teacher(teacher::build_teacher(tc), tr, tc);
  ldc::LDCConfig lc;
  lc.num_features = 6;
  lc.num_levels = 8;
  lc.feature_dim = 32;
  lc.value_dim = 4;
  lc.num_classes = 3;
  lc.valuebox_hidden = 8;
  return {data::apply_quantizer(tr, spec), data::apply_quantizer(te, spec),
          teacher::teacher_logits(t, tr), lc};
}

TrainConfig quick(int epochs = 3) {
  TrainConfig c;
  c.epochs = epochs;
  c.batch_size = 16;
  c.lr = {0.2, 0.1, 50};
  c.seed = 4;
  return c;
}

CurriculumPlan random_plan(std::size_t n, int epochs) {
  return build_pools(order_dataset(std::vector<double>(n, 0.0), OrderMode::random, 9),
                     {1.0, 1.0, 1.0}, epochs);
}

}  // namespace

TEST(Alpha, HandSimulatedExponential) {
  const auto s = expo(0.8, 0, 5, 10, 0.5);
  auto st = init_alpha_state(s, 11);
  EXPECT_NEAR(alpha_at(s, 0, st), 0.8, 1e-12);
  EXPECT_NEAR(alpha_at(s, 5, st), 0.4, 1e-12);
  EXPECT_NEAR(alpha_at(s, 10, st), 0.2, 1e-12);
  const auto t = trace(s, 11);
  EXPECT_NEAR(t[4], 0.8, 1e-12);
  EXPECT_NEAR(t[9], 0.4, 1e-12);
}

TEST(Alpha, ExponentialMatchesLoopOracle) {
  for (const auto& [p, k, r, g] : std::vector<std::tuple<int, int, int, double>>{
           {0, 1, 50, 0.9}, {7, 3, 4, 0.8}, {20, 1, 50, 0.95}, {0, 2, 1, 0.99}}) {
    const auto got = trace(expo(0.8, p, k, r, g), 120);
    const auto want = expo_oracle(0.8, p, k, r, g, 120);
    for (std::size_t h = 0; h < got.size(); ++h) ASSERT_NEAR(got[h], want[h], 1e-12) << h;
  }
}

TEST(Alpha, BeforeChangePointAndUnitGamma) {
  const auto before = trace(expo(0.7, 30, 1, 5, 0.5), 30);
  for (double a : before) EXPECT_EQ(a, 0.7);
  for (double a : trace(expo(0.6, 0, 1, 1, 1.0), 200)) EXPECT_EQ(a, 0.6);
}

TEST(Alpha, MonotoneAndInRange) {
  auto lin = expo(0.9, 10, 1, 1, 1.0);
  lin.mode = AlphaMode::linear;
  lin.linear_end = 0.1;
  for (const auto& s : {expo(0.9, 5, 2, 3, 0.7), expo(1.0, 0, 1, 50, 0.9), lin}) {
    const auto t = trace(s, 150);
    for (std::size_t h = 0; h < t.size(); ++h) {
      ASSERT_GE(t[h], 0.0);
      ASSERT_LE(t[h], 1.0);
      if (h > 0) ASSERT_LE(t[h], t[h - 1]);
    }
  }
}

TEST(Alpha, LinearRampAndStatic) {
  AlphaSchedule s;
  s.mode = AlphaMode::linear;
  s.alpha0 = 0.8;
  s.linear_end = 0.2;
  s.change_point = 2;
  const auto t = trace(s, 8);  // ramp over epochs 2..7
  EXPECT_DOUBLE_EQ(t[0], 0.8);
  EXPECT_DOUBLE_EQ(t[2], 0.8);
  EXPECT_NEAR(t[7], 0.2, 1e-12);
  EXPECT_NEAR(t[4], 0.8 - 0.6 * 2.0 / 5.0, 1e-12);

  s.mode = AlphaMode::static_alpha;
  for (double a : trace(s, 20)) EXPECT_EQ(a, 0.8);
}

TEST(Alpha, ParameterizedStartsAtAlpha0) {
  AlphaSchedule s;
  s.mode = AlphaMode::parameterized;
  s.alpha0 = 0.3;
  auto st = init_alpha_state(s, 10);
  EXPECT_NEAR(alpha_at(s, 0, st), 0.3, 1e-12);
  st.param_logit = 2.0;
  EXPECT_NEAR(alpha_at(s, 1, st), 1.0 / (1.0 + std::exp(-2.0)), 1e-15);
}

TEST(Alpha, ScheduleValidation) {
  EXPECT_THROW(expo(1.2, 0, 1, 1, 0.9).validate(), std::invalid_argument);
  EXPECT_THROW(expo(0.5, 0, 0, 1, 0.9).validate(), std::invalid_argument);
  EXPECT_THROW(expo(0.5, 0, 1, 0, 0.9).validate(), std::invalid_argument);
  EXPECT_THROW(expo(0.5, 0, 1, 1, 1.5).validate(), std::invalid_argument);
  EXPECT_THROW(expo(0.5, 0, 1, 1, 0.0).validate(), std::invalid_argument);
  EXPECT_THROW((void)parse_alpha_mode("cosine"), std::invalid_argument);
  EXPECT_EQ(parse_order_mode(to_string(OrderMode::anti_curriculum)), OrderMode::anti_curriculum);
}

TEST(Difficulty, HandValues) {
  const std::vector<double> logits{2.0, 0.0, 0.0, 2.0, 1.0, 1.0};
  const std::vector<std::uint32_t> labels{0, 0, 0};
  const auto s = score_difficulty(logits, 2, labels);
  EXPECT_NEAR(s[0], std::log(1.0 + std::exp(-2.0)), 1e-12);
  EXPECT_NEAR(s[0], 0.1269, 1e-4);
  EXPECT_NEAR(s[1], 2.1269, 1e-4);
  EXPECT_NEAR(s[2], std::log(2.0), 1e-12);
  EXPECT_GT(s[1], s[0]);
}

TEST(Difficulty, FromStudentAndTeacher) {
  const auto f = small_problem();
  Rng rng(1);
  const auto m = ldc::LDCModel::create(f.lc, rng);
  const auto a = score_difficulty(m, f.train);
  ASSERT_EQ(a.size(), f.train.size());
  for (double v : a) EXPECT_GE(v, 0.0);
  EXPECT_EQ(a, score_difficulty(m, f.train));
  const auto b = score_difficulty(f.cache, f.train);
  ASSERT_EQ(b.size(), f.train.size());
  for (double v : b) EXPECT_GE(v, 0.0);
}

TEST(Order, Examples) {
  const std::vector<double> s{0.5, 0.1, 0.9};
  EXPECT_EQ(order_dataset(s, OrderMode::curriculum, 0), (std::vector<std::size_t>{1, 0, 2}));
  EXPECT_EQ(order_dataset(s, OrderMode::anti_curriculum, 0), (std::vector<std::size_t>{2, 0, 1}));
  const std::vector<double> ties{1.0, 0.0, 1.0, 0.0};
  EXPECT_EQ(order_dataset(ties, OrderMode::curriculum, 0), (std::vector<std::size_t>{1, 3, 0, 2}));
  EXPECT_EQ(order_dataset(ties, OrderMode::anti_curriculum, 0),
            (std::vector<std::size_t>{0, 2, 1, 3}));
}

TEST(Order, RandomIsSeededPermutation) {
  const std::vector<double> s(50, 0.0);
  const auto a = order_dataset(s, OrderMode::random, 5);
  EXPECT_EQ(a, order_dataset(s, OrderMode::random, 5));
  EXPECT_NE(a, order_dataset(s, OrderMode::random, 6));
  EXPECT_EQ(std::set<std::size_t>(a.begin(), a.end()).size(), 50u);
}

TEST(Order, AntiIsReverseForDistinctScores) {
  Rng rng(3);
  std::vector<double> s(300);
  for (auto& v : s) v = std::uniform_real_distribution<double>(0, 1)(rng);
  auto cur = order_dataset(s, OrderMode::curriculum, 0);
  std::reverse(cur.begin(), cur.end());
  EXPECT_EQ(cur, order_dataset(s, OrderMode::anti_curriculum, 0));
}

TEST(Pools, SizesNestingAndPhases) {
  std::vector<std::size_t> perm(20);
  std::iota(perm.begin(), perm.end(), 0);
  const auto a = build_pools(perm, {0.65, 0.80, 0.95}, 60);
  EXPECT_EQ(a.pool_sizes, (std::array<std::size_t, 3>{13, 16, 19}));
  EXPECT_EQ(a.phase_epochs, (std::array<int, 3>{20, 20, 20}));
  EXPECT_EQ(a.phase_of(19), 0u);
  EXPECT_EQ(a.phase_of(20), 1u);
  EXPECT_EQ(a.phase_of(59), 2u);

  perm.resize(10);
  const auto b = build_pools(perm, {0.70, 0.90, 1.00}, 10);
  EXPECT_EQ(b.pool_sizes, (std::array<std::size_t, 3>{7, 9, 10}));
  EXPECT_EQ(b.phase_epochs, (std::array<int, 3>{3, 3, 4}));
  const auto full = build_pools(perm, {1.0, 1.0, 1.0}, 5);
  EXPECT_EQ(full.pool_sizes, (std::array<std::size_t, 3>{10, 10, 10}));

  EXPECT_THROW((void)build_pools(perm, {0.05, 0.5, 1.0}, 5), DataError);
  EXPECT_THROW((void)build_pools(perm, {0.9, 0.5, 1.0}, 5), std::invalid_argument);
}

TEST(Overlap, Metric) {
  const std::vector<double> a{0.1, 0.5, 0.9, 0.3};
  const std::vector<double> b{0.9, 0.5, 0.1, 0.3};
  EXPECT_EQ(rank_overlap(a, a, 0.3), 1.0);
  EXPECT_EQ(rank_overlap(a, b, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(rank_overlap(a, b, 0.5), 0.5);  // {2,1} vs {0,1}
  EXPECT_THROW((void)rank_overlap(a, std::vector<double>{1.0}, 0.5), std::invalid_argument);

  Rng rng(4);
  std::vector<double> x(10000), y(10000);
  for (auto& v : x) v = std::uniform_real_distribution<double>(0, 1)(rng);
  for (auto& v : y) v = std::uniform_real_distribution<double>(0, 1)(rng);
  EXPECT_NEAR(rank_overlap(x, y, 0.3), 0.3, 0.02);
}

TEST(Train, SingleFullBatchEpoch) {
  const auto f = small_problem();
  Rng rng(5);
  const auto m = ldc::LDCModel::create(f.lc, rng);
  auto cfg = quick(1);
  cfg.batch_size = f.train.size();
  const auto plan = random_plan(f.train.size(), 1);
  const auto r = train_student_scheduled(m, f.train, &f.cache, plan, expo(0.8, 0, 1, 50, 0.9), cfg,
                                         &f.test);
  ASSERT_EQ(r.metrics.size(), 1u);
  EXPECT_EQ(r.metrics[0].pool_size, f.train.size());
  EXPECT_NE(r.model.feature_shadow, m.feature_shadow);
  EXPECT_NEAR(r.metrics[0].train_loss, r.metrics[0].kd_term + r.metrics[0].nll_term, 1e-12);
  EXPECT_EQ(r.metrics[0].test_acc, packed_accuracy(ldc::export_inference(r.model), f.test));
}

TEST(Train, StaticZeroAlphaEqualsNoTeacher) {
  const auto f = small_problem();
  Rng rng(6);
  const auto m = ldc::LDCModel::create(f.lc, rng);
  const auto plan = random_plan(f.train.size(), 4);
  AlphaSchedule zero;
  zero.mode = AlphaMode::static_alpha;
  zero.alpha0 = 0.0;
  const auto kd = train_student_scheduled(m, f.train, &f.cache, plan, zero, quick(4), &f.test);
  const auto plain = train_student_scheduled(m, f.train, nullptr, plan, zero, quick(4), &f.test);
  EXPECT_EQ(kd.model.feature_shadow, plain.model.feature_shadow);
  EXPECT_EQ(kd.model.class_shadow, plain.model.class_shadow);
  for (std::size_t i = 0; i < kd.metrics.size(); ++i) {
    EXPECT_EQ(kd.metrics[i].test_acc, plain.metrics[i].test_acc);
    EXPECT_EQ(kd.metrics[i].nll_term, plain.metrics[i].nll_term);
  }
}

TEST(Train, PoolsFollowPhasesAndRunIsDeterministic) {
  const auto f = small_problem();
  Rng rng(7);
  const auto m = ldc::LDCModel::create(f.lc, rng);
  const auto scores = score_difficulty(f.cache, f.train);
  auto plan = build_pools(order_dataset(scores, OrderMode::curriculum, 0), {0.5, 0.75, 1.0}, 6);
  plan.order_mode = OrderMode::curriculum;
  const auto a = train_student_scheduled(m, f.train, &f.cache, plan, expo(0.8, 0, 1, 2, 0.9), quick(6));
  const auto b = train_student_scheduled(m, f.train, &f.cache, plan, expo(0.8, 0, 1, 2, 0.9), quick(6));
  EXPECT_EQ(a.metrics, b.metrics);
  const std::size_t n = f.train.size();
  EXPECT_EQ(a.metrics[0].pool_size, n / 2);
  EXPECT_EQ(a.metrics[2].pool_size, n * 3 / 4);
  EXPECT_EQ(a.metrics[5].pool_size, n);
  EXPECT_EQ(a.metrics[0].test_acc, 0.0);
}

TEST(Train, RejectsMismatchedCache) {
  const auto f = small_problem();
  Rng rng(8);
  const auto m = ldc::LDCModel::create(f.lc, rng);
  const teacher::LogitCache wrong(3, std::vector<double>(3 * f.train.size(), 0.0), 1, 2);
  EXPECT_THROW((void)train_student_scheduled(m, f.train, &wrong, random_plan(f.train.size(), 1),
                                             expo(0.8, 0, 1, 50, 0.9), quick(1)),
               DataError);
}
