// skd: command-line driver for scheduled distillation into an LDC student.
//
//   skd gen-data | train-teacher | rank | distill | eval | cost | sweep
//
// Every subcommand takes --config, --seed, --out and --set KEY=VALUE; the
// run is fully determined by the resulting config.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "skd/config.hpp"
#include "skd/cost.hpp"
#include "skd/error.hpp"
#include "skd/pipeline.hpp"
#include "skd/schedule.hpp"

namespace fs = std::filesystem;
using namespace skd;

namespace {

struct Common {
  std::string config_path;
  std::string seed;
  std::string out;
  std::string mode;
  std::string order;
  bool no_kd = false;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, Common& c, bool schedule_flags) {
  cmd->add_option("--config", c.config_path, "run config file (key = value lines)");
  cmd->add_option("--seed", c.seed, "root seed");
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--set", c.sets, "override one config key, KEY=VALUE (repeatable)");
  if (schedule_flags) {
    cmd->add_option("--mode", c.mode, "alpha schedule: static, linear, exponential, parameterized");
    cmd->add_option("--order", c.order, "training order: curriculum, random, anti-curriculum");
    cmd->add_flag("--no-kd", c.no_kd, "train the student without a teacher");
  }
}

config::RunConfig resolve(const Common& c) {
  auto cfg = c.config_path.empty() ? config::defaults(config::Profile::synthetic)
                                   : config::parse_config(c.config_path);
  for (const auto& kv : c.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects KEY=VALUE, got '" + kv + "'");
    config::set_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!c.seed.empty()) config::set_value(cfg, "seed", c.seed);
  if (!c.out.empty()) config::set_value(cfg, "out_dir", c.out);
  if (!c.mode.empty()) config::set_value(cfg, "mode", c.mode);
  if (!c.order.empty()) config::set_value(cfg, "order_mode", c.order);
  if (c.no_kd) cfg.use_teacher = false;
  cfg.validate();
  return cfg;
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f%%", 100.0 * v);
  return buf;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw DataError("cannot write " + path.string());
}

int gen_data(const config::RunConfig& cfg) {
  pipeline::Pipeline p(cfg);
  const auto& d = p.data();
  fs::create_directories(cfg.out_dir);
  data::save_dataset(d.train, fs::path(cfg.out_dir) / "train.csv");
  data::save_dataset(d.test, fs::path(cfg.out_dir) / "test.csv");
  data::save_quant_spec(d.quant, fs::path(cfg.out_dir) / "quant.csv");
  std::cout << "train " << d.train.size() << " / test " << d.test.size() << " samples, "
            << d.train.num_features() << " features, " << d.train.num_classes() << " classes -> "
            << cfg.out_dir << '\n';
  return 0;
}

int train_teacher(const config::RunConfig& cfg) {
  pipeline::Pipeline p(cfg);
  const auto& cache = p.logits();
  fs::create_directories(cfg.out_dir);
  cache.save(fs::path(cfg.out_dir) / "teacher_logits.lgt");
  std::cout << "teacher test accuracy " << pct(p.teacher_test_accuracy()) << ", "
            << p.teacher().param_count() << " params\n";
  return 0;
}

int rank(const config::RunConfig& cfg) {
  pipeline::Pipeline p(cfg);
  const auto& ts = p.teacher_scores();
  const auto& ss = p.student_scores();
  fs::create_directories(cfg.out_dir);
  std::ostringstream os;
  os.precision(17);
  os << "index,teacher_score,student_score\n";
  for (std::size_t i = 0; i < ts.size(); ++i) os << i << ',' << ts[i] << ',' << ss[i] << '\n';
  write_file(fs::path(cfg.out_dir) / "scores.csv", os.str());

  std::ostringstream ov;
  ov.precision(17);
  ov << "q,overlap\n";
  std::cout << "hardest-q overlap, teacher vs student ranking\n";
  for (const double q : {0.3, 0.5, 0.7}) {
    const double o = sched::rank_overlap(ts, ss, q);
    ov << q << ',' << o << '\n';
    std::printf("  q = %.1f  %s\n", q, pct(o).c_str());
  }
  write_file(fs::path(cfg.out_dir) / "overlap.csv", ov.str());
  return 0;
}

int distill(const config::RunConfig& cfg) {
  const auto s = pipeline::run_pipeline(cfg, cfg.out_dir);
  if (cfg.use_teacher) std::cout << "teacher test accuracy  " << pct(s.teacher_test_acc) << '\n';
  std::cout << "student test accuracy  " << pct(s.final_test_acc) << " after " << s.epochs
            << " epochs\npacked model accuracy  " << pct(s.packed_test_acc) << "  (" << cfg.out_dir
            << "/model.ldc)\n";
  return 0;
}

int eval(const config::RunConfig& cfg, const std::string& model_path) {
  if (model_path.empty()) throw UsageError("eval: --model is required");
  const auto model = ldc::PackedLDCModel::load(model_path);
  pipeline::Pipeline p(cfg);
  const auto& d = p.data();
  if (model.num_features() != d.qtest.num_features() || model.num_classes() != d.qtest.num_classes() ||
      model.num_levels() != d.qtest.spec().num_levels) {
    throw DataError("eval: model shape does not match the configured data");
  }
  std::cout << "test accuracy " << pct(sched::packed_accuracy(model, d.qtest)) << " on "
            << d.qtest.size() << " samples\n";
  return 0;
}

int cost_cmd(const config::RunConfig& cfg, bool write) {
  std::size_t n = cfg.synth.num_features;
  std::size_t c = cfg.synth.num_classes;
  if (cfg.data_source == config::DataSource::csv) {
    pipeline::Pipeline p(cfg);
    n = p.data().train.num_features();
    c = p.data().train.num_classes();
  }
  const auto specs = pipeline::cost_specs(cfg, n, c);
  std::cout << cost::report_table(specs);
  if (write) {
    fs::create_directories(cfg.out_dir);
    std::ostringstream os;
    cost::write_csv(os, specs);
    write_file(fs::path(cfg.out_dir) / "cost.csv", os.str());
  }
  return 0;
}

int sweep(const config::RunConfig& base, const std::string& axis, const std::vector<std::string>& values) {
  if (!config::is_key(axis)) throw UsageError("sweep: unknown axis key '" + axis + "'");
  if (axis == "out_dir") throw UsageError("sweep: out_dir cannot be an axis");
  if (values.empty()) throw UsageError("sweep: --values is empty");
  fs::create_directories(base.out_dir);
  std::ostringstream merged;
  bool header = true;
  for (const auto& v : values) {
    auto cfg = base;
    config::set_value(cfg, axis, v);
    cfg.validate();
    const auto dir = fs::path(base.out_dir) / (axis + "=" + v);
    const auto s = pipeline::run_pipeline(cfg, dir);
    std::printf("%s = %-12s test %s  packed %s\n", axis.c_str(), v.c_str(), pct(s.final_test_acc).c_str(),
                pct(s.packed_test_acc).c_str());

    std::ifstream in(dir / "metrics.csv", std::ios::binary);
    std::string line;
    std::getline(in, line);
    if (header) merged << axis << ',' << line << '\n';
    header = false;
    while (std::getline(in, line)) merged << v << ',' << line << '\n';
  }
  write_file(fs::path(base.out_dir) / "sweep.csv", merged.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scheduled knowledge distillation into a low-dimensional VSA classifier"};
  app.require_subcommand(1);

  Common common;
  std::string model_path;
  bool cost_write = false;
  std::string axis;
  std::vector<std::string> values;

  auto* gen = app.add_subcommand("gen-data", "generate or load data, split, fit the quantizer");
  auto* teach = app.add_subcommand("train-teacher", "train the teacher and cache its logits");
  auto* rnk = app.add_subcommand("rank", "difficulty scores and teacher/student ranking overlap");
  auto* dist = app.add_subcommand("distill", "full run: teacher, ranking, scheduled distillation, export");
  auto* ev = app.add_subcommand("eval", "accuracy of a saved model on the configured test split");
  auto* cst = app.add_subcommand("cost", "BMAC / FPMAC / size report");
  auto* swp = app.add_subcommand("sweep", "one distill run per value of a config key");

  for (auto* cmd : {gen, teach, rnk, cst}) add_common(cmd, common, false);
  for (auto* cmd : {dist, ev, swp}) add_common(cmd, common, true);
  ev->add_option("--model", model_path, "packed model file")->required();
  cst->add_flag("--write", cost_write, "also write cost.csv into --out");
  swp->add_option("--axis", axis, "config key to vary")->required();
  swp->add_option("--values", values, "comma-separated values")->required()->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const auto cfg = resolve(common);
    if (gen->parsed()) return gen_data(cfg);
    if (teach->parsed()) return train_teacher(cfg);
    if (rnk->parsed()) return rank(cfg);
    if (dist->parsed()) return distill(cfg);
    if (ev->parsed()) return eval(cfg, model_path);
    if (cst->parsed()) return cost_cmd(cfg, cost_write);
    if (swp->parsed()) return sweep(cfg, axis, values);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
