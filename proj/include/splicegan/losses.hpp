#pragma once

#include <cmath>
#include <string>

#include "splicegan/errors.hpp"
#include "splicegan/tensor.hpp"

namespace splicegan {

enum class ReconMode { bce, l1 };

inline const char* to_string(ReconMode m) { return m == ReconMode::bce ? "bce" : "l1"; }

inline ReconMode recon_mode_from_string(const std::string& s) {
  if (s == "bce") return ReconMode::bce;
  if (s == "l1") return ReconMode::l1;
  throw ConfigError("unknown reconstruction mode: " + s);
}

struct LossConfig {
  ReconMode recon_mode = ReconMode::bce;
  double lambda = 100.0;   // reconstruction weight
  double epsilon = 1e-7;   // log clamp; 1e-12 in 64-bit gradient-check mode

  void validate() const {
    if (lambda < 0.0) throw ConfigError("lambda must be >= 0");
    if (!(epsilon > 0.0 && epsilon < 0.5)) throw ConfigError("epsilon must be in (0, 0.5)");
  }
};

namespace detail {

template <typename T>
inline T clamp01(T v, T eps) {
  return v < eps ? eps : (v > T(1) - eps ? T(1) - eps : v);
}

// d(log(clamp(v)))/dv is 1/v inside the clamp window and 0 outside.
template <typename T>
inline bool inside_clamp(T v, T eps) {
  return v > eps && v < T(1) - eps;
}

}  // namespace detail

// Discriminator objective: -mean(log(clamp(real))) - mean(log(clamp(1 - fake))).
// Minimizing it is the discriminator's ascent on the min-max value function.
template <typename T>
T adversarial_loss_d(const Tensor<T>& real_scores, const Tensor<T>& fake_scores, T eps,
                     Tensor<T>* grad_real = nullptr, Tensor<T>* grad_fake = nullptr) {
  if (real_scores.empty() || fake_scores.empty())
    throw ShapeError("adversarial_loss_d: empty score grid");
  const T nr = static_cast<T>(real_scores.size());
  const T nf = static_cast<T>(fake_scores.size());
  double loss = 0.0;
  for (int64_t i = 0; i < real_scores.size(); ++i) {
    const T v = real_scores[i];
    loss -= std::log(detail::clamp01(v, eps)) / nr;
    if (grad_real)
      (*grad_real)[i] = detail::inside_clamp(v, eps) ? -T(1) / (v * nr) : T(0);
  }
  for (int64_t i = 0; i < fake_scores.size(); ++i) {
    const T v = fake_scores[i];
    loss -= std::log(detail::clamp01(T(1) - v, eps)) / nf;
    if (grad_fake)
      (*grad_fake)[i] = detail::inside_clamp(T(1) - v, eps) ? T(1) / ((T(1) - v) * nf) : T(0);
  }
  return static_cast<T>(loss);
}

// Non-saturating generator form: -mean(log(clamp(fake))).
template <typename T>
T adversarial_loss_g(const Tensor<T>& fake_scores, T eps, Tensor<T>* grad = nullptr) {
  if (fake_scores.empty()) throw ShapeError("adversarial_loss_g: empty score grid");
  const T n = static_cast<T>(fake_scores.size());
  double loss = 0.0;
  for (int64_t i = 0; i < fake_scores.size(); ++i) {
    const T v = fake_scores[i];
    loss -= std::log(detail::clamp01(v, eps)) / n;
    if (grad) (*grad)[i] = detail::inside_clamp(v, eps) ? -T(1) / (v * n) : T(0);
  }
  return static_cast<T>(loss);
}

// BCE (the paper's choice) or L1 (the classic pix2pix term, kept for the
// ablation), reduced by mean over batch and spatial dims.
template <typename T>
T reconstruction_loss(const Tensor<T>& estimate, const Tensor<T>& target, ReconMode mode,
                      T eps, Tensor<T>* grad = nullptr) {
  if (!estimate.same_shape(target))
    throw ShapeError("reconstruction_loss: estimate/target shape mismatch");
  if (estimate.empty()) throw ShapeError("reconstruction_loss: empty tensors");
  const T n = static_cast<T>(estimate.size());
  double loss = 0.0;
  if (mode == ReconMode::bce) {
    for (int64_t i = 0; i < estimate.size(); ++i) {
      const T y = estimate[i], t = target[i];
      loss -= (static_cast<double>(t) * std::log(detail::clamp01(y, eps)) +
               (1.0 - static_cast<double>(t)) * std::log(detail::clamp01(T(1) - y, eps))) /
              static_cast<double>(n);
      if (grad) {
        T g = T(0);
        if (detail::inside_clamp(y, eps)) g -= t / y;
        if (detail::inside_clamp(T(1) - y, eps)) g += (T(1) - t) / (T(1) - y);
        (*grad)[i] = g / n;
      }
    }
  } else {
    for (int64_t i = 0; i < estimate.size(); ++i) {
      const T d = estimate[i] - target[i];
      loss += std::abs(static_cast<double>(d)) / static_cast<double>(n);
      if (grad) (*grad)[i] = (d > T(0) ? T(1) : (d < T(0) ? -T(1) : T(0))) / n;
    }
  }
  return static_cast<T>(loss);
}

template <typename T>
struct GeneratorLossTerms {
  T total = T(0);
  T adversarial = T(0);
  T reconstruction = T(0);
};

// Total generator objective: adversarial term + lambda * reconstruction term.
template <typename T>
GeneratorLossTerms<T> total_generator_loss(const Tensor<T>& fake_scores,
                                           const Tensor<T>& estimate, const Tensor<T>& target,
                                           const LossConfig& config,
                                           Tensor<T>* grad_scores = nullptr,
                                           Tensor<T>* grad_estimate = nullptr) {
  config.validate();
  const T eps = static_cast<T>(config.epsilon);
  GeneratorLossTerms<T> terms;
  terms.adversarial = adversarial_loss_g(fake_scores, eps, grad_scores);
  terms.reconstruction =
      reconstruction_loss(estimate, target, config.recon_mode, eps, grad_estimate);
  if (grad_estimate) {
    const T lambda = static_cast<T>(config.lambda);
    for (int64_t i = 0; i < grad_estimate->size(); ++i) (*grad_estimate)[i] *= lambda;
  }
  terms.total = terms.adversarial + static_cast<T>(config.lambda) * terms.reconstruction;
  return terms;
}

}  // namespace splicegan
