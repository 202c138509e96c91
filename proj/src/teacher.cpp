#include "skd/teacher.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "skd/binio.hpp"
#include "skd/error.hpp"
#include "skd/rng.hpp"

namespace skd::teacher {
namespace {

constexpr char kMagic[5] = "LGT1";

void activate(nn::Vector& v, Activation a) {
  for (auto& x : v) x = a == Activation::relu ? std::max(x, 0.0) : std::tanh(x);
}

// d act / d pre, expressed through the activation output.
double activation_slope(double out, Activation a) {
  return a == Activation::relu ? (out > 0.0 ? 1.0 : 0.0) : 1.0 - out * out;
}

struct Activations {
  std::vector<nn::Vector> inputs;  // input to each layer; inputs[0] is the standardized sample
  nn::Vector logits;
};

Activations run_forward(const TeacherModel& m, std::span<const double> x) {
  if (x.size() != m.input_dim()) {
    throw std::invalid_argument("teacher: sample has " + std::to_string(x.size()) +
                                " features, model expects " + std::to_string(m.input_dim()));
  }
  Activations act;
  nn::Vector h(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) h[j] = (x[j] - m.input_mean[j]) * m.input_scale[j];
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    auto y = nn::dense_forward(h, m.layers[l]);
    act.inputs.push_back(std::move(h));
    if (l + 1 < m.layers.size()) activate(y, m.activation);
    h = std::move(y);
  }
  act.logits = std::move(h);
  return act;
}

void run_backward(const TeacherModel& m, const Activations& act, nn::Vector upstream,
                  std::vector<nn::DenseGrads>& grads) {
  for (std::size_t l = m.layers.size(); l-- > 0;) {
    auto dx = nn::dense_backward(act.inputs[l], m.layers[l], upstream, grads[l]);
    if (l == 0) break;
    const auto& out = act.inputs[l];
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= activation_slope(out[i], m.activation);
    upstream = std::move(dx);
  }
}

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void check_batch(const TeacherModel& m, const data::Dataset& ds, std::span<const std::size_t> rows) {
  if (ds.num_features() != m.input_dim()) {
    throw DataError("teacher: dataset has " + std::to_string(ds.num_features()) +
                    " features, teacher expects " + std::to_string(m.input_dim()));
  }
  for (const auto i : rows) {
    if (i >= ds.size()) throw std::out_of_range("teacher: batch row out of range");
  }
}

// Standardized rows -> logits as dense matrix products. When inputs is given
// it receives the input of every layer.
RowMat batch_forward(const TeacherModel& m, const data::Dataset& ds,
                     std::span<const std::size_t> rows, std::vector<RowMat>* inputs) {
  const auto b = static_cast<Eigen::Index>(rows.size());
  const auto n = static_cast<Eigen::Index>(m.input_dim());
  RowMat h(b, n);
  for (Eigen::Index r = 0; r < b; ++r) {
    const auto x = ds.row(rows[std::size_t(r)]);
    for (Eigen::Index j = 0; j < n; ++j) {
      h(r, j) = (x[std::size_t(j)] - m.input_mean[std::size_t(j)]) * m.input_scale[std::size_t(j)];
    }
  }
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const auto& layer = m.layers[l];
    Eigen::Map<const RowMat> w(layer.weights.data(), Eigen::Index(layer.out_dim),
                               Eigen::Index(layer.in_dim));
    RowMat y = h * w.transpose();
    if (!layer.bias.empty()) {
      Eigen::Map<const Eigen::RowVectorXd> bias(layer.bias.data(), Eigen::Index(layer.out_dim));
      y.rowwise() += bias;
    }
    if (l + 1 < m.layers.size()) {
      y = m.activation == Activation::relu ? RowMat(y.cwiseMax(0.0)) : RowMat(y.array().tanh());
    }
    if (inputs != nullptr) inputs->push_back(std::move(h));
    h = std::move(y);
  }
  return h;
}

// Mini-batch forward/backward. Returns the summed loss and adds summed
// parameter gradients into grads.
double batch_step(const TeacherModel& m, const data::Dataset& ds,
                  std::span<const std::size_t> rows, std::vector<nn::DenseGrads>& grads) {
  const auto b = static_cast<Eigen::Index>(rows.size());
  std::vector<RowMat> inputs;
  inputs.reserve(m.layers.size());
  const RowMat h = batch_forward(m, ds, rows, &inputs);

  // h holds the logits; dL/dz = softmax(z) - onehot per row.
  double loss = 0.0;
  RowMat up(h.rows(), h.cols());
  for (Eigen::Index r = 0; r < b; ++r) {
    const auto label = ds.label(rows[std::size_t(r)]);
    auto lg = nn::nll_loss(std::span<const double>(h.row(r).data(), std::size_t(h.cols())), label);
    loss += lg.loss;
    for (Eigen::Index c = 0; c < h.cols(); ++c) up(r, c) = lg.grad[std::size_t(c)];
  }

  for (std::size_t l = m.layers.size(); l-- > 0;) {
    const auto& layer = m.layers[l];
    Eigen::Map<const RowMat> w(layer.weights.data(), Eigen::Index(layer.out_dim),
                               Eigen::Index(layer.in_dim));
    Eigen::Map<RowMat> gw(grads[l].weights.data(), Eigen::Index(layer.out_dim),
                          Eigen::Index(layer.in_dim));
    gw.noalias() += up.transpose() * inputs[l];
    if (!layer.bias.empty()) {
      Eigen::Map<Eigen::RowVectorXd> gb(grads[l].bias.data(), Eigen::Index(layer.out_dim));
      gb += up.colwise().sum();
    }
    if (l == 0) break;
    RowMat dx = up * w;
    const auto& out = inputs[l];
    if (m.activation == Activation::relu) {
      dx = (out.array() > 0.0).select(dx, 0.0);
    } else {
      dx.array() *= 1.0 - out.array().square();
    }
    up = std::move(dx);
  }
  return loss;
}

}  // namespace

void TeacherConfig::validate() const {
  if (layer_dims.size() < 2) throw std::invalid_argument("teacher config: need at least 2 dims");
  for (const auto d : layer_dims) {
    if (d == 0) throw std::invalid_argument("teacher config: zero layer width");
  }
  if (layer_dims.back() < 2) throw std::invalid_argument("teacher config: need at least 2 classes");
  if (epochs < 0) throw std::invalid_argument("teacher config: negative epochs");
  if (!(lr >= 0.0)) throw std::invalid_argument("teacher config: lr must be >= 0");
  if (batch_size == 0) throw std::invalid_argument("teacher config: batch size must be >= 1");
  nn::StepDecay{lr, lr_decay, lr_step}.validate();
}

std::uint64_t TeacherConfig::fingerprint() const noexcept {
  Fnv1a h;
  for (const auto d : layer_dims) h.update_value(static_cast<std::uint64_t>(d));
  h.update_value(static_cast<int>(activation));
  h.update_value(epochs);
  h.update_value(lr);
  h.update_value(lr_decay);
  h.update_value(lr_step);
  h.update_value(static_cast<std::uint64_t>(batch_size));
  h.update_value(seed);
  return h.digest();
}

std::size_t TeacherModel::param_count() const noexcept {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.param_count();
  return n;
}

nn::Vector TeacherModel::logits(std::span<const double> x) const {
  return run_forward(*this, x).logits;
}

std::vector<double> TeacherModel::flat_params() const {
  std::vector<double> out;
  out.reserve(param_count());
  for (const auto& l : layers) {
    out.insert(out.end(), l.weights.begin(), l.weights.end());
    out.insert(out.end(), l.bias.begin(), l.bias.end());
  }
  return out;
}

void TeacherModel::set_flat_params(std::span<const double> flat) {
  if (flat.size() != param_count()) throw std::invalid_argument("teacher: flat parameter size");
  std::size_t off = 0;
  for (auto& l : layers) {
    std::copy_n(flat.begin() + std::ptrdiff_t(off), l.weights.size(), l.weights.begin());
    off += l.weights.size();
    std::copy_n(flat.begin() + std::ptrdiff_t(off), l.bias.size(), l.bias.begin());
    off += l.bias.size();
  }
}

nn::LossGrad TeacherModel::loss_and_grad(std::span<const double> x, std::size_t label) const {
  const auto act = run_forward(*this, x);
  auto loss = nn::nll_loss(act.logits, label);
  std::vector<nn::DenseGrads> grads;
  for (const auto& l : layers) grads.emplace_back(l);
  run_backward(*this, act, loss.grad, grads);
  nn::LossGrad out;
  out.loss = loss.loss;
  out.grad.reserve(param_count());
  for (const auto& g : grads) {
    out.grad.insert(out.grad.end(), g.weights.begin(), g.weights.end());
    out.grad.insert(out.grad.end(), g.bias.begin(), g.bias.end());
  }
  return out;
}

nn::LossGrad TeacherModel::batch_loss_and_grad(const data::Dataset& ds,
                                               std::span<const std::size_t> rows) const {
  check_batch(*this, ds, rows);
  std::vector<nn::DenseGrads> grads;
  for (const auto& l : layers) grads.emplace_back(l);
  nn::LossGrad out;
  out.loss = rows.empty() ? 0.0 : batch_step(*this, ds, rows, grads);
  out.grad.reserve(param_count());
  for (const auto& g : grads) {
    out.grad.insert(out.grad.end(), g.weights.begin(), g.weights.end());
    out.grad.insert(out.grad.end(), g.bias.begin(), g.bias.end());
  }
  return out;
}

TeacherModel build_teacher(const TeacherConfig& cfg) {
  cfg.validate();
  TeacherModel m;
  m.activation = cfg.activation;
  Rng rng(derive_seed(cfg.seed, "teacher-init"));
  for (std::size_t l = 0; l + 1 < cfg.layer_dims.size(); ++l) {
    m.layers.push_back(nn::DenseLayer::create(cfg.layer_dims[l], cfg.layer_dims[l + 1], true,
                                              false, rng));
  }
  m.input_mean.assign(cfg.layer_dims.front(), 0.0);
  m.input_scale.assign(cfg.layer_dims.front(), 1.0);
  m.fingerprint = cfg.fingerprint();
  return m;
}

TeacherModel train_teacher(TeacherModel model, const data::Dataset& train,
                           const TeacherConfig& cfg, std::vector<double>* epoch_losses) {
  cfg.validate();
  if (train.size() == 0) throw DataError("train_teacher: empty dataset");
  if (train.num_features() != model.input_dim()) {
    throw DataError("train_teacher: dataset has " + std::to_string(train.num_features()) +
                    " features, teacher expects " + std::to_string(model.input_dim()));
  }
  if (train.num_classes() > model.num_classes()) {
    throw DataError("train_teacher: dataset has more classes than the teacher outputs");
  }

  const auto n = train.num_features();
  const auto count = static_cast<double>(train.size());
  for (std::size_t j = 0; j < n; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < train.size(); ++i) mean += train.row(i)[j];
    mean /= count;
    double var = 0.0;
    for (std::size_t i = 0; i < train.size(); ++i) {
      const double d = train.row(i)[j] - mean;
      var += d * d;
    }
    var /= count;
    model.input_mean[j] = mean;
    model.input_scale[j] = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
  }

  const nn::StepDecay schedule{cfg.lr, cfg.lr_decay, cfg.lr_step};
  Rng rng(derive_seed(cfg.seed, "teacher-order"));
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<nn::DenseGrads> grads;
  for (const auto& l : model.layers) grads.emplace_back(l);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = schedule.lr_at(epoch);
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const auto end = std::min(order.size(), start + cfg.batch_size);
      for (auto& g : grads) g.zero();
      loss_sum += batch_step(model, train, std::span(order).subspan(start, end - start), grads);
      const double step = lr / static_cast<double>(end - start);
      for (std::size_t l = 0; l < model.layers.size(); ++l) {
        nn::sgd_step(model.layers[l].weights, grads[l].weights, step);
        nn::sgd_step(model.layers[l].bias, grads[l].bias, step);
      }
    }
    const double mean_loss = loss_sum / count;
    if (!std::isfinite(mean_loss)) {
      throw NumericError("train_teacher: non-finite loss at epoch " + std::to_string(epoch));
    }
    if (epoch_losses != nullptr) epoch_losses->push_back(mean_loss);
  }
  return model;
}

LogitCache::LogitCache(std::size_t num_classes, std::vector<double> values,
                       std::uint64_t dataset_fingerprint, std::uint64_t teacher_fingerprint)
    : num_classes_(num_classes),
      values_(std::move(values)),
      dataset_fp_(dataset_fingerprint),
      teacher_fp_(teacher_fingerprint) {
  if (num_classes_ < 2 || values_.size() % num_classes_ != 0) {
    throw DataError("logit cache: size is not a multiple of the class count");
  }
}

void LogitCache::require_dataset(std::uint64_t dataset_fingerprint) const {
  if (dataset_fingerprint != dataset_fp_) {
    throw DataError("logit cache: dataset fingerprint mismatch (cache was built for a different "
                    "dataset; recompute teacher logits)");
  }
}

void LogitCache::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  binio::write_magic(out, kMagic);
  binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(size()));
  binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(num_classes_));
  binio::write_le<std::uint64_t>(out, dataset_fp_);
  binio::write_le<std::uint64_t>(out, teacher_fp_);
  for (const double v : values_) binio::write_f64(out, v);
  if (!out) throw DataError("failed writing " + path.string());
}

LogitCache LogitCache::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open logit cache " + path.string());
  binio::expect_magic(in, kMagic);
  const std::size_t samples = binio::read_le<std::uint32_t>(in);
  const std::size_t classes = binio::read_le<std::uint32_t>(in);
  const auto dataset_fp = binio::read_le<std::uint64_t>(in);
  const auto teacher_fp = binio::read_le<std::uint64_t>(in);
  std::vector<double> values(samples * classes);
  for (auto& v : values) v = binio::read_f64(in);
  if (in.peek() != std::char_traits<char>::eof()) {
    throw DataError("logit cache " + path.string() + " has trailing bytes");
  }
  return LogitCache(classes, std::move(values), dataset_fp, teacher_fp);
}

LogitCache teacher_logits(const TeacherModel& model, const data::Dataset& ds) {
  if (ds.num_features() != model.input_dim()) {
    throw DataError("teacher_logits: dataset has " + std::to_string(ds.num_features()) +
                    " features, teacher expects " + std::to_string(model.input_dim()));
  }
  std::vector<std::size_t> rows(ds.size());
  std::iota(rows.begin(), rows.end(), 0);
  const RowMat z = batch_forward(model, ds, rows, nullptr);
  std::vector<double> values(z.data(), z.data() + z.size());
  return LogitCache(model.num_classes(), std::move(values), ds.fingerprint(), model.fingerprint);
}

double accuracy(const TeacherModel& model, const data::Dataset& ds) {
  if (ds.size() == 0) return 0.0;
  if (ds.num_features() != model.input_dim()) {
    throw DataError("accuracy: dataset has " + std::to_string(ds.num_features()) +
                    " features, teacher expects " + std::to_string(model.input_dim()));
  }
  std::vector<std::size_t> rows(ds.size());
  std::iota(rows.begin(), rows.end(), 0);
  const RowMat z = batch_forward(model, ds, rows, nullptr);
  std::size_t correct = 0;
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    Eigen::Index pred = 0;
    z.row(r).maxCoeff(&pred);
    correct += std::size_t(pred) == ds.label(std::size_t(r));
  }
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

}  // namespace skd::teacher
