#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "splicegan/nn/ops.hpp"
#include "splicegan/rng.hpp"
#include "splicegan/tensor.hpp"

namespace splicegan {

inline constexpr int kNetworkResolution = 256;

// U-Net generator: 8 downsampling stages, 8 upsampling stages, skip
// connections between mirrored stages. The saturating output nonlinearity is
// a sigmoid; decoder dropout carries the model's stochastic input.
struct GeneratorSpec {
  int in_channels = 3;
  int out_channels = 1;
  std::vector<int> encoder_widths;  // 8 entries
  std::vector<int> decoder_widths;  // 7 entries; the 8th stage maps to out_channels
  double dropout_p = 0.5;
  int dropout_stages = 3;  // applied to the first decoder stages in train mode
  int input_size = kNetworkResolution;

  static GeneratorSpec full();
  static GeneratorSpec tiny();  // reduced widths for desk-scale experiments
  void validate() const;
  int encoder_stage_input_channels(int stage) const;
  int decoder_stage_input_channels(int stage) const;  // stage 0..7
};

// PatchGAN discriminator: 5 conv stages, kernel 4, strides (2,2,2,1,1),
// per-patch sigmoid scores on a spatial grid.
struct DiscriminatorSpec {
  int image_channels = 3;
  int mask_channels = 1;
  int kernel = 4;
  int pad = 1;
  std::vector<int> widths = {64, 128, 256, 512, 1};
  std::vector<int> strides = {2, 2, 2, 1, 1};
  int input_size = kNetworkResolution;

  static DiscriminatorSpec full();
  static DiscriminatorSpec tiny();
  void validate() const;
  int stage_input_channels(int stage) const;
  int output_grid_size() const;  // 30 for 256 input
};

// Theoretical receptive field of one output element, folded backward through
// the stride/kernel recurrence r_{i-1} = r_i * s_i + (k_i - s_i).
int receptive_field(const DiscriminatorSpec& spec);

// Ordered, named parameter collection. Order is the draw/serialization order.
template <typename T>
struct ModelParams {
  std::vector<std::pair<std::string, Tensor<T>>> items;

  Tensor<T>& at(const std::string& name) {
    for (auto& [k, v] : items)
      if (k == name) return v;
    throw ShapeError("unknown parameter: " + name);
  }
  const Tensor<T>& at(const std::string& name) const {
    for (const auto& [k, v] : items)
      if (k == name) return v;
    throw ShapeError("unknown parameter: " + name);
  }
  bool has(const std::string& name) const {
    for (const auto& [k, v] : items)
      if (k == name) return true;
    return false;
  }
  void add(std::string name, Tensor<T> tensor) {
    items.emplace_back(std::move(name), std::move(tensor));
  }
  size_t count() const { return items.size(); }
  int64_t total_elements() const {
    int64_t n = 0;
    for (const auto& [k, v] : items) n += v.size();
    return n;
  }
  std::vector<std::string> keys() const {
    std::vector<std::string> out;
    out.reserve(items.size());
    for (const auto& [k, v] : items) out.push_back(k);
    return out;
  }
  void zero_all() {
    for (auto& [k, v] : items) v.zero();
  }
  static ModelParams zeros_like(const ModelParams& other) {
    ModelParams out;
    out.items.reserve(other.items.size());
    for (const auto& [k, v] : other.items) out.add(k, Tensor<T>(v.shape, T(0)));
    return out;
  }
  template <typename U>
  ModelParams<U> cast() const {
    ModelParams<U> out;
    for (const auto& [k, v] : items) out.add(k, v.template cast<U>());
    return out;
  }
};

using ModelParamsF = ModelParams<float>;

// Parameter names and shapes, in draw/serialization order. Weight layout is
// (out, in, k, k) for convs and (in, out, k, k) for transposed convs.
using ParamShapes = std::vector<std::pair<std::string, std::vector<int>>>;
ParamShapes generator_param_shapes(const GeneratorSpec& spec);
ParamShapes discriminator_param_shapes(const DiscriminatorSpec& spec);

template <typename T>
ModelParams<T> init_params_from_shapes(const ParamShapes& shapes, Rng& rng) {
  ModelParams<T> params;
  for (const auto& [name, shape] : shapes) {
    Tensor<T> t(shape, T(0));
    // Weights ~ N(0, 0.02); norm scales ~ N(1, 0.02); biases and shifts zero.
    if (name.ends_with(".w")) {
      for (int64_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(rng.normal(0.0, 0.02));
    } else if (name.ends_with(".gamma")) {
      for (int64_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(rng.normal(1.0, 0.02));
    }
    params.add(name, std::move(t));
  }
  return params;
}

template <typename T>
ModelParams<T> init_generator_params(const GeneratorSpec& spec, uint64_t seed) {
  Rng rng(stream_key(seed, "generator"));
  return init_params_from_shapes<T>(generator_param_shapes(spec), rng);
}

template <typename T>
ModelParams<T> init_discriminator_params(const DiscriminatorSpec& spec, uint64_t seed) {
  Rng rng(stream_key(seed, "discriminator"));
  return init_params_from_shapes<T>(discriminator_param_shapes(spec), rng);
}

// ---------------------------------------------------------------------------
// Generator forward/backward
// ---------------------------------------------------------------------------

template <typename T>
struct GeneratorCache {
  Tensor<T> input;
  std::vector<Tensor<T>> enc_act;                    // a_0..a_7 (post-activation)
  std::vector<nn::InstanceNormCache<T>> enc_norm;    // indexed by stage
  std::vector<Tensor<T>> dec_in;                     // input of each up-conv
  std::vector<Tensor<T>> dec_relu;                   // post-relu decoder outputs
  std::vector<nn::InstanceNormCache<T>> dec_norm;
  std::vector<std::vector<uint8_t>> dec_dropout;
  Tensor<T> output;                                  // post-sigmoid
};

template <typename T>
class GeneratorNet {
 public:
  explicit GeneratorNet(GeneratorSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

  const GeneratorSpec& spec() const { return spec_; }

  // x: NxCx(input_size)x(input_size) in [0,1]. In infer mode (train=false)
  // the pass is deterministic: dropout is disabled.
  Tensor<T> forward(const ModelParams<T>& params, const Tensor<T>& x, bool train,
                    Rng* dropout_rng, GeneratorCache<T>* cache) const {
    if (x.ndim() != 4 || x.dim(1) != spec_.in_channels)
      throw ShapeError("generator_forward: expected NxCxHxW input with C=" +
                       std::to_string(spec_.in_channels));
    if (x.dim(2) != spec_.input_size || x.dim(3) != spec_.input_size)
      throw ShapeError("generator_forward: input must be " + std::to_string(spec_.input_size) +
                       "x" + std::to_string(spec_.input_size));
    const T eps = norm_eps();
    const int n_enc = 8, n_dec = 8;
    if (cache) {
      cache->input = x;
      cache->enc_act.resize(n_enc);
      cache->enc_norm.resize(n_enc);
      cache->dec_in.resize(n_dec);
      cache->dec_relu.resize(n_dec - 1);
      cache->dec_norm.resize(n_dec - 1);
      cache->dec_dropout.assign(n_dec - 1, {});
    }

    Tensor<T> cur = x;
    std::vector<Tensor<T>> skips(n_enc);
    for (int i = 0; i < n_enc; ++i) {
      const std::string p = "enc" + std::to_string(i + 1);
      Tensor<T> h = nn::conv2d(cur, params.at(p + ".w"), &params.at(p + ".b"), 2, 1);
      if (encoder_norm(i)) {
        nn::InstanceNormCache<T> local;
        h = nn::instance_norm(h, params.at(p + ".gamma"), params.at(p + ".beta"), eps,
                              cache ? &cache->enc_norm[static_cast<size_t>(i)] : &local);
      }
      cur = nn::leaky_relu(h, T(0.2));
      skips[static_cast<size_t>(i)] = cur;
      if (cache) cache->enc_act[static_cast<size_t>(i)] = cur;
    }

    for (int j = 0; j < n_dec - 1; ++j) {
      const std::string p = "dec" + std::to_string(j + 1);
      if (cache) cache->dec_in[static_cast<size_t>(j)] = cur;
      Tensor<T> h = nn::conv_transpose2d(cur, params.at(p + ".w"), &params.at(p + ".b"), 2, 1);
      nn::InstanceNormCache<T> local;
      h = nn::instance_norm(h, params.at(p + ".gamma"), params.at(p + ".beta"), eps,
                            cache ? &cache->dec_norm[static_cast<size_t>(j)] : &local);
      if (train && j < spec_.dropout_stages && spec_.dropout_p > 0.0) {
        if (!dropout_rng)
          throw ConfigError("generator_forward: train mode with dropout needs an rng");
        std::vector<uint8_t> scratch;
        std::vector<uint8_t>* mask =
            cache ? &cache->dec_dropout[static_cast<size_t>(j)] : &scratch;
        h = nn::dropout(h, static_cast<T>(spec_.dropout_p), *dropout_rng, mask);
      }
      Tensor<T> r = nn::relu(h);
      if (cache) cache->dec_relu[static_cast<size_t>(j)] = r;
      cur = nn::concat_channels(r, skips[static_cast<size_t>(6 - j)]);
    }
    if (cache) cache->dec_in[n_dec - 1] = cur;
    Tensor<T> h = nn::conv_transpose2d(cur, params.at("dec8.w"), &params.at("dec8.b"), 2, 1);
    Tensor<T> y = nn::sigmoid(h);
    if (cache) cache->output = y;
    return y;
  }

  // Accumulates parameter gradients into grads (same key set as params) and
  // returns nothing; gradients w.r.t. the image input are not needed.
  void backward(const ModelParams<T>& params, const GeneratorCache<T>& cache,
                const Tensor<T>& grad_output, ModelParams<T>& grads) const {
    const T eps = norm_eps();
    const int n_enc = 8;
    // Sigmoid + final up-conv.
    Tensor<T> g(cache.output.shape, T(0));
    nn::sigmoid_backward(cache.output, grad_output, &g);
    std::vector<Tensor<T>> grad_act(n_enc);  // accumulated skip gradients
    for (int i = 0; i < n_enc; ++i)
      grad_act[static_cast<size_t>(i)] = Tensor<T>(cache.enc_act[static_cast<size_t>(i)].shape, T(0));

    Tensor<T> grad_cur(cache.dec_in[7].shape, T(0));
    nn::conv_transpose2d_backward(cache.dec_in[7], params.at("dec8.w"), g, 2, 1, &grad_cur,
                                  &grads.at("dec8.w"), &grads.at("dec8.b"));

    for (int j = 6; j >= 0; --j) {
      const std::string p = "dec" + std::to_string(j + 1);
      // grad_cur is w.r.t. concat(r_j, skip_{6-j}).
      Tensor<T> grad_r(cache.dec_relu[static_cast<size_t>(j)].shape, T(0));
      nn::split_channels_add(grad_cur, grad_r.dim(1), &grad_r,
                             &grad_act[static_cast<size_t>(6 - j)]);
      Tensor<T> grad_h(grad_r.shape, T(0));
      nn::relu_backward(cache.dec_relu[static_cast<size_t>(j)], grad_r, &grad_h);
      if (!cache.dec_dropout[static_cast<size_t>(j)].empty()) {
        Tensor<T> grad_pre(grad_h.shape, T(0));
        nn::dropout_backward(cache.dec_dropout[static_cast<size_t>(j)],
                             static_cast<T>(spec_.dropout_p), grad_h, &grad_pre);
        grad_h = std::move(grad_pre);
      }
      Tensor<T> grad_conv(grad_h.shape, T(0));
      nn::instance_norm_backward(cache.dec_norm[static_cast<size_t>(j)], params.at(p + ".gamma"),
                                 grad_h, &grad_conv, &grads.at(p + ".gamma"),
                                 &grads.at(p + ".beta"));
      Tensor<T> grad_in(cache.dec_in[static_cast<size_t>(j)].shape, T(0));
      nn::conv_transpose2d_backward(cache.dec_in[static_cast<size_t>(j)], params.at(p + ".w"),
                                    grad_conv, 2, 1, &grad_in, &grads.at(p + ".w"),
                                    &grads.at(p + ".b"));
      grad_cur = std::move(grad_in);
    }
    // grad_cur now targets the bottleneck activation a_7.
    for (int64_t i = 0; i < grad_cur.size(); ++i) grad_act[7][i] += grad_cur[i];

    for (int i = n_enc - 1; i >= 0; --i) {
      const std::string p = "enc" + std::to_string(i + 1);
      Tensor<T> grad_h(grad_act[static_cast<size_t>(i)].shape, T(0));
      nn::leaky_relu_backward(cache.enc_act[static_cast<size_t>(i)],
                              grad_act[static_cast<size_t>(i)], T(0.2), &grad_h);
      if (encoder_norm(i)) {
        Tensor<T> grad_conv(grad_h.shape, T(0));
        nn::instance_norm_backward(cache.enc_norm[static_cast<size_t>(i)],
                                   params.at(p + ".gamma"), grad_h, &grad_conv,
                                   &grads.at(p + ".gamma"), &grads.at(p + ".beta"));
        grad_h = std::move(grad_conv);
      }
      const Tensor<T>& input = i == 0 ? cache.input : cache.enc_act[static_cast<size_t>(i - 1)];
      Tensor<T>* grad_input = i == 0 ? nullptr : &grad_act[static_cast<size_t>(i - 1)];
      nn::conv2d_backward(input, params.at(p + ".w"), grad_h, 2, 1, grad_input,
                          &grads.at(p + ".w"), &grads.at(p + ".b"));
    }
  }

 private:
  bool encoder_norm(int i) const { return i > 0 && i < 7; }
  static T norm_eps() { return static_cast<T>(1e-5); }

  GeneratorSpec spec_;
};

// ---------------------------------------------------------------------------
// Discriminator forward/backward
// ---------------------------------------------------------------------------

template <typename T>
struct DiscriminatorCache {
  Tensor<T> input;                                  // channel-concatenated (image, mask)
  std::vector<Tensor<T>> act;                       // post-activation per stage
  std::vector<nn::InstanceNormCache<T>> norm;
};

template <typename T>
class DiscriminatorNet {
 public:
  explicit DiscriminatorNet(DiscriminatorSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
  }

  const DiscriminatorSpec& spec() const { return spec_; }

  // Image and mask are concatenated internally (4 input channels); the output
  // is a grid of per-patch scores in [0,1].
  Tensor<T> forward(const ModelParams<T>& params, const Tensor<T>& image,
                    const Tensor<T>& mask, DiscriminatorCache<T>* cache) const {
    if (image.ndim() != 4 || mask.ndim() != 4)
      throw ShapeError("discriminator_forward: expected NxCxHxW inputs");
    if (image.dim(1) != spec_.image_channels || mask.dim(1) != spec_.mask_channels)
      throw ShapeError("discriminator_forward: channel mismatch");
    if (image.dim(2) != spec_.input_size || image.dim(3) != spec_.input_size)
      throw ShapeError("discriminator_forward: input must be " +
                       std::to_string(spec_.input_size) + " px square");
    Tensor<T> cur = nn::concat_channels(image, mask);
    const int n = static_cast<int>(spec_.widths.size());
    if (cache) {
      cache->input = cur;
      cache->act.resize(static_cast<size_t>(n));
      cache->norm.resize(static_cast<size_t>(n));
    }
    for (int t = 0; t < n; ++t) {
      const std::string p = "d" + std::to_string(t + 1);
      Tensor<T> h = nn::conv2d(cur, params.at(p + ".w"), &params.at(p + ".b"),
                               spec_.strides[static_cast<size_t>(t)], spec_.pad);
      if (stage_norm(t)) {
        nn::InstanceNormCache<T> local;
        h = nn::instance_norm(h, params.at(p + ".gamma"), params.at(p + ".beta"),
                              static_cast<T>(1e-5),
                              cache ? &cache->norm[static_cast<size_t>(t)] : &local);
      }
      cur = t == n - 1 ? nn::sigmoid(h) : nn::leaky_relu(h, T(0.2));
      if (cache) cache->act[static_cast<size_t>(t)] = cur;
    }
    return cur;
  }

  // Accumulates parameter gradients (when accumulate_param_grads) and the
  // gradient w.r.t. the mask input (when grad_mask != nullptr). The generator
  // update needs only the latter with the discriminator held fixed.
  void backward(const ModelParams<T>& params, const DiscriminatorCache<T>& cache,
                const Tensor<T>& grad_scores, ModelParams<T>* grads,
                Tensor<T>* grad_mask) const {
    const int n = static_cast<int>(spec_.widths.size());
    Tensor<T> grad_cur(cache.act[static_cast<size_t>(n - 1)].shape, T(0));
    nn::sigmoid_backward(cache.act[static_cast<size_t>(n - 1)], grad_scores, &grad_cur);
    for (int t = n - 1; t >= 0; --t) {
      const std::string p = "d" + std::to_string(t + 1);
      if (t < n - 1) {
        Tensor<T> g(cache.act[static_cast<size_t>(t)].shape, T(0));
        nn::leaky_relu_backward(cache.act[static_cast<size_t>(t)], grad_cur, T(0.2), &g);
        grad_cur = std::move(g);
      }
      if (stage_norm(t)) {
        Tensor<T> g(grad_cur.shape, T(0));
        nn::instance_norm_backward(cache.norm[static_cast<size_t>(t)], params.at(p + ".gamma"),
                                   grad_cur, &g, grads ? &grads->at(p + ".gamma") : nullptr,
                                   grads ? &grads->at(p + ".beta") : nullptr);
        grad_cur = std::move(g);
      }
      const Tensor<T>& input = t == 0 ? cache.input : cache.act[static_cast<size_t>(t - 1)];
      const bool need_input = t > 0 || grad_mask != nullptr;
      Tensor<T> grad_in;
      if (need_input) grad_in = Tensor<T>(input.shape, T(0));
      nn::conv2d_backward(input, params.at(p + ".w"), grad_cur,
                          spec_.strides[static_cast<size_t>(t)], spec_.pad,
                          need_input ? &grad_in : nullptr, grads ? &grads->at(p + ".w") : nullptr,
                          grads ? &grads->at(p + ".b") : nullptr);
      grad_cur = std::move(grad_in);
    }
    if (grad_mask) {
      // grad_cur targets the concatenated (image, mask) input.
      nn::split_channels_add(grad_cur, spec_.image_channels, static_cast<Tensor<T>*>(nullptr),
                             grad_mask);
    }
  }

 private:
  bool stage_norm(int t) const {
    return t > 0 && t < static_cast<int>(spec_.widths.size()) - 1;
  }

  DiscriminatorSpec spec_;
};

}  // namespace splicegan
