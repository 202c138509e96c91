#include "skd/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace skd::nn {
namespace {

void require_len(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw std::invalid_argument(std::string(what) + ": length mismatch (" + std::to_string(got) +
                                " vs " + std::to_string(want) + ")");
  }
}

// log softmax(z / t) computed with max subtraction.
Vector log_softmax_scaled(std::span<const double> z, double t) {
  Vector out(z.size());
  const double zmax = *std::max_element(z.begin(), z.end()) / t;
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = z[i] / t - zmax;
    sum += std::exp(out[i]);
  }
  const double lse = std::log(sum);
  for (auto& v : out) v -= lse;
  return out;
}

}  // namespace

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

DenseLayer DenseLayer::create(std::size_t in_dim, std::size_t out_dim, bool with_bias,
                              bool binarized, Rng& rng) {
  if (in_dim == 0 || out_dim == 0) throw std::invalid_argument("dense layer: zero dimension");
  DenseLayer layer;
  layer.in_dim = in_dim;
  layer.out_dim = out_dim;
  layer.binarized = binarized;
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
  std::uniform_real_distribution<double> dist(-bound, bound);
  layer.weights.resize(in_dim * out_dim);
  for (auto& w : layer.weights) w = dist(rng);
  if (with_bias) layer.bias.assign(out_dim, 0.0);
  return layer;
}

void DenseLayer::validate() const {
  if (in_dim == 0 || out_dim == 0) throw std::invalid_argument("dense layer: zero dimension");
  require_len(weights.size(), in_dim * out_dim, "dense layer weights");
  if (!bias.empty()) require_len(bias.size(), out_dim, "dense layer bias");
  auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(weights.begin(), weights.end(), finite) ||
      !std::all_of(bias.begin(), bias.end(), finite)) {
    throw std::invalid_argument("dense layer: non-finite parameter");
  }
}

void DenseGrads::zero() noexcept {
  std::fill(weights.begin(), weights.end(), 0.0);
  std::fill(bias.begin(), bias.end(), 0.0);
}

Vector dense_forward(std::span<const double> x, const DenseLayer& layer) {
  require_len(x.size(), layer.in_dim, "dense_forward input");
  Vector y(layer.out_dim);
  for (std::size_t o = 0; o < layer.out_dim; ++o) {
    const double* row = layer.weights.data() + o * layer.in_dim;
    double acc = layer.has_bias() ? layer.bias[o] : 0.0;
    if (layer.binarized) {
      for (std::size_t i = 0; i < layer.in_dim; ++i) acc += sign(row[i]) * x[i];
    } else {
      for (std::size_t i = 0; i < layer.in_dim; ++i) acc += row[i] * x[i];
    }
    y[o] = acc;
  }
  return y;
}

Vector dense_backward(std::span<const double> x, const DenseLayer& layer,
                      std::span<const double> upstream, DenseGrads& grads, double clip) {
  require_len(x.size(), layer.in_dim, "dense_backward input");
  require_len(upstream.size(), layer.out_dim, "dense_backward upstream");
  require_len(grads.weights.size(), layer.weights.size(), "dense_backward grads");
  Vector dx(layer.in_dim, 0.0);
  for (std::size_t o = 0; o < layer.out_dim; ++o) {
    const double g = upstream[o];
    if (g == 0.0) continue;
    const double* row = layer.weights.data() + o * layer.in_dim;
    double* grow = grads.weights.data() + o * layer.in_dim;
    if (layer.binarized) {
      for (std::size_t i = 0; i < layer.in_dim; ++i) {
        if (std::abs(row[i]) <= clip) grow[i] += g * x[i];
        dx[i] += g * sign(row[i]);
      }
    } else {
      for (std::size_t i = 0; i < layer.in_dim; ++i) {
        grow[i] += g * x[i];
        dx[i] += g * row[i];
      }
    }
    if (layer.has_bias()) grads.bias[o] += g;
  }
  return dx;
}

Vector sign_ste_backward(std::span<const double> upstream, std::span<const double> preactivation,
                         double clip) {
  require_len(upstream.size(), preactivation.size(), "sign_ste_backward");
  Vector out(upstream.size());
  for (std::size_t i = 0; i < upstream.size(); ++i) {
    out[i] = std::abs(preactivation[i]) <= clip ? upstream[i] : 0.0;
  }
  return out;
}

Vector softmax(std::span<const double> z) {
  if (z.empty()) throw std::invalid_argument("softmax: empty logits");
  Vector p(z.size());
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(z[i] - zmax);
    sum += p[i];
  }
  for (auto& v : p) v /= sum;
  return p;
}

LossGrad nll_loss(std::span<const double> z, std::size_t label) {
  if (label >= z.size()) {
    throw std::invalid_argument("nll_loss: label " + std::to_string(label) + " out of range for " +
                                std::to_string(z.size()) + " classes");
  }
  const Vector logp = log_softmax_scaled(z, 1.0);
  LossGrad out;
  out.loss = -logp[label];
  out.grad.resize(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out.grad[i] = std::exp(logp[i]);
  out.grad[label] -= 1.0;
  return out;
}

LossGrad kd_loss(std::span<const double> z_s, std::span<const double> z_t, double temperature) {
  require_len(z_s.size(), z_t.size(), "kd_loss logits");
  if (!(temperature > 0.0)) throw std::invalid_argument("kd_loss: temperature must be > 0");
  if (z_s.empty()) throw std::invalid_argument("kd_loss: empty logits");
  const Vector logp_s = log_softmax_scaled(z_s, temperature);
  const Vector logp_t = log_softmax_scaled(z_t, temperature);
  LossGrad out;
  out.grad.resize(z_s.size());
  double kl = 0.0;
  for (std::size_t i = 0; i < z_s.size(); ++i) {
    const double p_t = std::exp(logp_t[i]);
    kl += p_t * (logp_t[i] - logp_s[i]);
    out.grad[i] = temperature * (std::exp(logp_s[i]) - p_t);
  }
  // Rounding can push an exact-zero divergence slightly negative.
  out.loss = temperature * temperature * std::max(kl, 0.0);
  return out;
}

void DistillConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("distill config: alpha " + std::to_string(alpha) +
                                " outside [0, 1]");
  }
  if (!(temperature > 0.0)) throw std::invalid_argument("distill config: temperature must be > 0");
}

CombinedLoss combined_loss(std::span<const double> z_s, std::span<const double> z_t,
                           std::size_t label, const DistillConfig& cfg) {
  cfg.validate();
  const LossGrad kd = kd_loss(z_s, z_t, cfg.temperature);
  const LossGrad nll = nll_loss(z_s, label);
  CombinedLoss out;
  out.kd = kd.loss;
  out.nll = nll.loss;
  out.loss = cfg.alpha * kd.loss + (1.0 - cfg.alpha) * nll.loss;
  out.grad.resize(z_s.size());
  for (std::size_t i = 0; i < z_s.size(); ++i) {
    out.grad[i] = cfg.alpha * kd.grad[i] + (1.0 - cfg.alpha) * nll.grad[i];
  }
  return out;
}

void sgd_step(std::span<double> params, std::span<const double> grads, double lr) {
  require_len(params.size(), grads.size(), "sgd_step");
  if (!(lr >= 0.0)) throw std::invalid_argument("sgd_step: negative learning rate");
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grads[i];
}

double StepDecay::lr_at(int epoch) const {
  if (epoch < 0) throw std::invalid_argument("lr schedule: negative epoch");
  return base_lr * std::pow(factor, epoch / step_size);
}

void StepDecay::validate() const {
  if (!(base_lr >= 0.0)) throw std::invalid_argument("lr schedule: base lr must be >= 0");
  if (!(factor > 0.0 && factor <= 1.0)) {
    throw std::invalid_argument("lr schedule: decay factor must be in (0, 1]");
  }
  if (step_size < 1) throw std::invalid_argument("lr schedule: step size must be >= 1");
}

double finite_diff_check(const LossFn& loss_fn, std::span<const double> params, double epsilon,
                         std::size_t max_coords, std::uint64_t seed) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("finite_diff_check: epsilon must be > 0");
  const Vector analytic = loss_fn(params).grad;
  require_len(analytic.size(), params.size(), "finite_diff_check gradient");

  std::vector<std::size_t> coords(params.size());
  std::iota(coords.begin(), coords.end(), 0);
  if (max_coords != 0 && max_coords < coords.size()) {
    Rng rng(seed);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(max_coords);
  }

  Vector probe(params.begin(), params.end());
  double worst = 0.0;
  for (const auto i : coords) {
    const double saved = probe[i];
    probe[i] = saved + epsilon;
    const double up = loss_fn(probe).loss;
    probe[i] = saved - epsilon;
    const double down = loss_fn(probe).loss;
    probe[i] = saved;
    const double fd = (up - down) / (2.0 * epsilon);
    const double err =
        std::abs(fd - analytic[i]) / std::max(1e-8, std::abs(fd) + std::abs(analytic[i]));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace skd::nn
