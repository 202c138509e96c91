#pragma once

// Dense-layer math, losses for distillation, and plain SGD.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "skd/rng.hpp"

namespace skd::nn {

using Vector = std::vector<double>;

// sign with sign(0) = +1.
[[nodiscard]] inline double sign(double x) noexcept { return x >= 0.0 ? 1.0 : -1.0; }

[[nodiscard]] double sigmoid(double x) noexcept;

struct DenseLayer {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  Vector weights;  // row-major, out_dim x in_dim
  Vector bias;     // empty when the layer has no bias
  bool binarized = false;

  // Uniform in [-1/sqrt(in), 1/sqrt(in)] for weights; bias starts at zero.
  static DenseLayer create(std::size_t in_dim, std::size_t out_dim, bool with_bias, bool binarized,
                           Rng& rng);

  [[nodiscard]] bool has_bias() const noexcept { return !bias.empty(); }
  [[nodiscard]] std::size_t param_count() const noexcept { return weights.size() + bias.size(); }
  [[nodiscard]] double effective_weight(std::size_t row, std::size_t col) const noexcept {
    const double w = weights[row * in_dim + col];
    return binarized ? sign(w) : w;
  }
  void validate() const;
};

struct DenseGrads {
  Vector weights;
  Vector bias;

  DenseGrads() = default;
  explicit DenseGrads(const DenseLayer& layer)
      : weights(layer.weights.size(), 0.0), bias(layer.bias.size(), 0.0) {}
  void zero() noexcept;
};

// y = W'x + b, W' = sign(W) when binarized.
[[nodiscard]] Vector dense_forward(std::span<const double> x, const DenseLayer& layer);

// Accumulates dL/dW and dL/db into grads and returns dL/dx. For binarized
// layers the weight gradient is the straight-through estimate, zeroed where
// |w| > clip.
Vector dense_backward(std::span<const double> x, const DenseLayer& layer,
                      std::span<const double> upstream, DenseGrads& grads, double clip = 1.0);

// Hard-tanh straight-through estimator for sign().
[[nodiscard]] Vector sign_ste_backward(std::span<const double> upstream,
                                       std::span<const double> preactivation, double clip);

[[nodiscard]] Vector softmax(std::span<const double> z);

struct LossGrad {
  double loss = 0.0;
  Vector grad;
};

// -log softmax(z)[label]; grad = softmax(z) - onehot(label).
[[nodiscard]] LossGrad nll_loss(std::span<const double> z, std::size_t label);

// tau^2 * KL(softmax(z_t/tau) || softmax(z_s/tau)); grad wrt z_s is
// tau * (softmax(z_s/tau) - softmax(z_t/tau)).
[[nodiscard]] LossGrad kd_loss(std::span<const double> z_s, std::span<const double> z_t,
                               double temperature);

struct DistillConfig {
  double alpha = 0.0;
  double temperature = 1.0;

  void validate() const;
};

struct CombinedLoss {
  double loss = 0.0;
  double kd = 0.0;   // unweighted L_KD
  double nll = 0.0;  // unweighted L_NLL
  Vector grad;
};

// alpha * L_KD + (1 - alpha) * L_NLL, with the same mix of gradients.
[[nodiscard]] CombinedLoss combined_loss(std::span<const double> z_s, std::span<const double> z_t,
                                         std::size_t label, const DistillConfig& cfg);

// p -= lr * g
void sgd_step(std::span<double> params, std::span<const double> grads, double lr);

// lr(h) = base * factor^floor(h / step)
struct StepDecay {
  double base_lr = 0.005;
  double factor = 0.1;
  int step_size = 50;

  [[nodiscard]] double lr_at(int epoch) const;
  void validate() const;
};

using LossFn = std::function<LossGrad(std::span<const double>)>;

// Central differences against the analytic gradient returned by loss_fn.
// Checks every coordinate when max_coords == 0, otherwise a seeded sample of
// max_coords coordinates. Returns max |g_fd - g| / max(1e-8, |g_fd| + |g|).
[[nodiscard]] double finite_diff_check(const LossFn& loss_fn, std::span<const double> params,
                                       double epsilon, std::size_t max_coords = 0,
                                       std::uint64_t seed = 0);

}  // namespace skd::nn
