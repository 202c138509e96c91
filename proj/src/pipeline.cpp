#include "skd/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "skd/error.hpp"
#include "skd/rng.hpp"

namespace skd::pipeline {
namespace {

// Runs f, prefixing any error with the stage name. The library's own error
// types keep their type; module validation errors are usage errors.
template <typename F>
decltype(auto) stage(const char* name, F&& f) {
  const auto prefix = std::string(name) + ": ";
  try {
    return f();
  } catch (const UsageError& e) {
    throw UsageError(prefix + e.what());
  } catch (const DataError& e) {
    throw DataError(prefix + e.what());
  } catch (const NumericError& e) {
    throw NumericError(prefix + e.what());
  } catch (const std::invalid_argument& e) {
    throw UsageError(prefix + e.what());
  } catch (const std::exception& e) {
    throw DataError(prefix + e.what());
  }
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

bool ranked(sched::OrderMode order) { return order != sched::OrderMode::random; }

}  // namespace

Pipeline::Pipeline(config::RunConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

const Data& Pipeline::data() {
  if (data_) return *data_;
  return stage("data", [&]() -> const Data& {
    data::Dataset all;
    if (cfg_.data_source == config::DataSource::csv) {
      all = data::load_dataset(cfg_.data_path, cfg_.num_classes);
    } else {
      auto sc = cfg_.synth;
      sc.seed = derive_seed(cfg_.seed, "synth");
      all = data::synth_generate(sc);
    }
    auto [train, test] = data::split(all, cfg_.train_fraction, derive_seed(cfg_.seed, "split"));
    if (train.size() == 0 || test.size() == 0) throw DataError("split left an empty train or test set");
    auto quant = data::fit_quantizer(train, cfg_.num_levels);
    auto qtrain = data::apply_quantizer(train, quant);
    auto qtest = data::apply_quantizer(test, quant);
    data_.emplace(Data{std::move(train), std::move(test), std::move(quant), std::move(qtrain),
                       std::move(qtest)});
    return *data_;
  });
}

const teacher::TeacherModel& Pipeline::teacher() {
  if (teacher_) return *teacher_;
  const auto& d = data();
  return stage("teacher", [&]() -> const teacher::TeacherModel& {
    const auto tc = cfg_.teacher_config(d.train.num_features(), d.train.num_classes());
    teacher_.emplace(teacher::train_teacher(teacher::build_teacher(tc), d.train, tc));
    return *teacher_;
  });
}

const teacher::LogitCache& Pipeline::logits() {
  if (logits_) return *logits_;
  const auto& t = teacher();
  return stage("teacher", [&]() -> const teacher::LogitCache& {
    logits_.emplace(teacher::teacher_logits(t, data_->train));
    return *logits_;
  });
}

double Pipeline::teacher_test_accuracy() {
  if (!teacher_acc_) {
    const auto& t = teacher();
    teacher_acc_ = stage("teacher", [&] { return teacher::accuracy(t, data_->test); });
  }
  return *teacher_acc_;
}

ldc::LDCModel Pipeline::initial_student() {
  const auto& d = data();
  return stage("distill", [&] {
    Rng rng(derive_seed(cfg_.seed, "student-init"));
    return ldc::LDCModel::create(cfg_.ldc_config(d.qtrain.num_features(), d.qtrain.num_classes()),
                                 rng);
  });
}

sched::TrainConfig Pipeline::train_config() const {
  auto tc = cfg_.train;
  tc.seed = derive_seed(cfg_.seed, "distill");
  return tc;
}

sched::CurriculumPlan Pipeline::plan(sched::OrderMode order) {
  const auto& d = data();
  const std::vector<double>* s = ranked(order) ? &scores() : nullptr;
  return stage("rank", [&] {
    const auto seed = derive_seed(cfg_.seed, "order");
    if (s == nullptr) {
      auto p = sched::build_pools(
          sched::order_dataset(std::vector<double>(d.qtrain.size(), 0.0), order, seed), {1.0, 1.0, 1.0},
          cfg_.train.epochs);
      p.order_mode = order;
      return p;
    }
    auto p = sched::build_pools(sched::order_dataset(*s, order, seed), cfg_.pool_fractions,
                                cfg_.train.epochs);
    p.order_mode = order;
    p.scores = *s;
    return p;
  });
}

const sched::TrainResult& Pipeline::reference() {
  if (reference_) return *reference_;
  auto init = initial_student();
  auto p = plan(sched::OrderMode::random);
  const auto& d = data();
  return stage("reference", [&]() -> const sched::TrainResult& {
    reference_.emplace(sched::train_student_scheduled(std::move(init), d.qtrain, nullptr, p, cfg_.alpha,
                                                      train_config(), &d.qtest));
    return *reference_;
  });
}

const std::vector<double>& Pipeline::student_scores() {
  if (student_scores_) return *student_scores_;
  const auto& ref = reference();
  return stage("rank", [&]() -> const std::vector<double>& {
    student_scores_ = sched::score_difficulty(ref.model, data_->qtrain);
    return *student_scores_;
  });
}

const std::vector<double>& Pipeline::teacher_scores() {
  if (teacher_scores_) return *teacher_scores_;
  const auto& cache = logits();
  return stage("rank", [&]() -> const std::vector<double>& {
    teacher_scores_ = sched::score_difficulty(cache, data_->qtrain);
    return *teacher_scores_;
  });
}

const std::vector<double>& Pipeline::scores() {
  return cfg_.train.ranking_source == sched::RankingSource::student_loss ? student_scores()
                                                                         : teacher_scores();
}

sched::TrainResult Pipeline::distill(sched::AlphaMode mode, sched::OrderMode order, bool use_teacher) {
  if (!use_teacher && order == sched::OrderMode::random) return reference();
  const teacher::LogitCache* cache = use_teacher ? &logits() : nullptr;
  auto p = plan(order);
  auto init = initial_student();
  const auto& d = data();
  return stage("distill", [&] {
    auto schedule = cfg_.alpha;
    schedule.mode = mode;
    return sched::train_student_scheduled(std::move(init), d.qtrain, cache, p, schedule, train_config(),
                                          &d.qtest);
  });
}

sched::TrainResult Pipeline::distill() { return distill(cfg_.alpha.mode, cfg_.order, cfg_.use_teacher); }

void write_metrics_csv(std::ostream& out, const std::vector<sched::MetricsRow>& rows,
                       const std::string& axis_key, const std::string& axis_value, bool header) {
  const bool axis = !axis_key.empty();
  if (header) {
    if (axis) out << axis_key << ',';
    out << "epoch,alpha,pool_size,train_loss,kd_term,nll_term,train_acc,test_acc\n";
  }
  for (const auto& r : rows) {
    if (axis) out << axis_value << ',';
    out << r.epoch << ',' << fmt(r.alpha) << ',' << r.pool_size << ',' << fmt(r.train_loss) << ','
        << fmt(r.kd_term) << ',' << fmt(r.nll_term) << ',' << fmt(r.train_acc) << ','
        << fmt(r.test_acc) << '\n';
  }
}

std::vector<cost::ArchSpec> cost_specs(const config::RunConfig& cfg, std::size_t num_features,
                                       std::size_t num_classes) {
  const auto& l = cfg.ldc;
  std::vector<std::size_t> dims{num_features};
  dims.insert(dims.end(), cfg.teacher_hidden.begin(), cfg.teacher_hidden.end());
  dims.push_back(num_classes);
  return {
      cost::ArchSpec::ldc("LDC", num_features, cfg.num_levels, l.feature_dim, l.value_dim, num_classes),
      cost::ArchSpec::hdc("HDC", num_features, 4000, num_classes),
      cost::ArchSpec::mlp("teacher MLP", dims),
      cost::ArchSpec::binarized_mlp("binarized MLP", dims),
  };
}

RunSummary run_pipeline(const config::RunConfig& cfg, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  Pipeline p(cfg);
  std::vector<fs::path> written;

  auto emit = [&](const char* name, auto&& write_to) {
    const auto path = out_dir / name;
    written.push_back(path);
    write_to(path);
  };
  auto emit_text = [&](const char* name, const std::string& text) {
    emit(name, [&](const fs::path& path) {
      std::ofstream out(path, std::ios::binary);
      if (!out) throw DataError("cannot write " + path.string());
      out << text;
      if (!out) throw DataError("write failed: " + path.string());
    });
  };

  try {
    stage("setup", [&] { fs::create_directories(out_dir); });
    stage("setup", [&] { emit_text("config.txt", config::format_config(cfg)); });

    const auto& d = p.data();
    stage("data", [&] { emit("quant.csv", [&](const fs::path& f) { data::save_quant_spec(d.quant, f); }); });

    const bool ranked_run = ranked(cfg.order);
    const bool needs_teacher =
        cfg.use_teacher || (ranked_run && cfg.train.ranking_source == sched::RankingSource::teacher_loss);
    RunSummary summary;
    if (needs_teacher) {
      const auto& cache = p.logits();
      summary.teacher_test_acc = p.teacher_test_accuracy();
      stage("teacher", [&] { emit("teacher_logits.lgt", [&](const fs::path& f) { cache.save(f); }); });
    }
    if (ranked_run) {
      const auto& s = p.scores();
      stage("rank", [&] {
        std::ostringstream os;
        os << "index,score\n";
        for (std::size_t i = 0; i < s.size(); ++i) os << i << ',' << fmt(s[i]) << '\n';
        emit_text("scores.csv", os.str());
      });
    }

    const auto result = p.distill();
    summary.epochs = result.metrics.size();
    summary.final_test_acc = result.metrics.empty() ? 0.0 : result.metrics.back().test_acc;
    stage("distill", [&] {
      std::ostringstream os;
      write_metrics_csv(os, result.metrics);
      emit_text("metrics.csv", os.str());
    });

    stage("export", [&] {
      const auto packed = ldc::export_inference(result.model);
      emit("model.ldc", [&](const fs::path& f) { packed.save(f); });
    });
    summary.packed_test_acc = stage("eval", [&] {
      return sched::packed_accuracy(ldc::PackedLDCModel::load(out_dir / "model.ldc"), d.qtest);
    });

    stage("cost", [&] {
      const auto specs = cost_specs(cfg, d.qtrain.num_features(), d.qtrain.num_classes());
      emit_text("cost.txt", cost::report_table(specs));
      std::ostringstream os;
      cost::write_csv(os, specs);
      emit_text("cost.csv", os.str());
    });

    stage("summary", [&] {
      std::ostringstream os;
      os << "train_size = " << d.qtrain.size() << '\n'
         << "test_size = " << d.qtest.size() << '\n'
         << "teacher_test_acc = " << fmt(summary.teacher_test_acc) << '\n'
         << "final_test_acc = " << fmt(summary.final_test_acc) << '\n'
         << "packed_test_acc = " << fmt(summary.packed_test_acc) << '\n';
      emit_text("summary.txt", os.str());
    });
    return summary;
  } catch (...) {
    std::error_code ec;
    for (const auto& f : written) fs::remove(f, ec);
    throw;
  }
}

}  // namespace skd::pipeline
