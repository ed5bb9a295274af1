#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "splicegan/checkpoint.hpp"
#include "splicegan/image.hpp"
#include "splicegan/losses.hpp"
#include "splicegan/manifest.hpp"
#include "splicegan/models.hpp"

namespace splicegan {

enum class ValidationMetric { pixel_auc, recon_loss };

inline const char* to_string(ValidationMetric m) {
  return m == ValidationMetric::pixel_auc ? "pixel_auc" : "recon_loss";
}

inline ValidationMetric validation_metric_from_string(const std::string& s) {
  if (s == "pixel_auc") return ValidationMetric::pixel_auc;
  if (s == "recon_loss") return ValidationMetric::recon_loss;
  throw ConfigError("unknown validation metric: " + s);
}

struct TrainConfig {
  int epochs = 200;
  double learning_rate = 0.0002;
  double beta1 = 0.5;
  double beta2 = 0.999;
  int batch_size = 1;
  LossConfig loss;
  uint64_t seed = 0;
  int checkpoint_every = 10;
  std::string preset = "full";  // "full" or "tiny"
  ValidationMetric validation_metric = ValidationMetric::pixel_auc;

  void validate() const;
  uint64_t hash() const;  // stable digest of every field, stored in checkpoints
};

GeneratorSpec preset_generator_spec(const std::string& preset);
DiscriminatorSpec preset_discriminator_spec(const std::string& preset);

struct StepMetrics {
  double loss_d = 0.0;
  double loss_adv_g = 0.0;
  double loss_recon = 0.0;
  double loss_total = 0.0;
};

struct TrainState {
  GeneratorSpec gen_spec;
  DiscriminatorSpec disc_spec;
  TrainConfig config;
  ModelParamsF gen;
  ModelParamsF disc;
  OptState adam_gen;
  OptState adam_disc;
  int64_t step = 0;
  int epoch = 0;
};

TrainState init_train_state(const TrainConfig& config);
TrainState train_state_from_checkpoint(const TrainConfig& config, const Checkpoint& ckpt);
Checkpoint make_checkpoint(const TrainState& state, bool with_optimizer,
                           std::optional<double> val_metric);

// Bias-corrected Adam.
void adam_step(ModelParamsF& params, const ModelParamsF& grads, OptState& state, double lr,
               double beta1, double beta2, double eps = 1e-8);

// One discriminator update (real pair + detached fake pair) followed by one
// generator update against the refreshed discriminator. Throws
// NonFiniteLossError with diagnostics if any term goes non-finite.
StepMetrics train_step(TrainState& state, const TensorF& images, const TensorF& masks);

// Network-resolution training sample.
struct TrainSample {
  std::string id;
  TensorF image;  // 3 x net x net, [0, 1]
  TensorF mask;   // 1 x net x net, {0, 1}
};

struct ValSample {
  std::string id;
  TensorF image;           // 3 x net x net
  TensorF mask_net;        // 1 x net x net (for reconstruction-loss validation)
  ForgeryMask mask_full;   // corpus resolution (for pixel-AUC validation)
};

std::vector<TrainSample> load_train_samples(const DatasetManifest& manifest, Split split,
                                            const std::string& data_root, int net_size);
std::vector<ValSample> load_val_samples(const DatasetManifest& manifest, Split split,
                                        const std::string& data_root, int net_size);

// Batch assembly in index order.
void make_batch(const std::vector<TrainSample>& samples, const std::vector<size_t>& order,
                size_t begin, size_t end, TensorF* images, TensorF* masks);

// Pixel-level localization AUC of the generator over the validation samples
// (estimates upsampled to the ground-truth resolution, pixels pooled).
double validation_pixel_auc(const GeneratorSpec& spec, const ModelParamsF& gen,
                            const std::vector<ValSample>& samples);
// Mean reconstruction loss over the validation samples (infer mode).
double validation_recon_loss(const GeneratorSpec& spec, const ModelParamsF& gen,
                             const std::vector<ValSample>& samples, const LossConfig& loss);

// Index of the best checkpoint: argmax of the metric, ties broken by the
// earliest entry.
size_t select_best_index(const std::vector<double>& metrics);

struct TrainResult {
  std::vector<std::string> checkpoint_paths;
  std::string best_checkpoint_path;
  std::string metrics_csv_path;
  int best_epoch = 0;
  double best_metric = 0.0;
  bool has_best_metric = false;
};

// Full training loop over the manifest's train split with per-epoch
// validation, scheduled checkpoints and best-so-far retention. resume_from,
// when set, restarts from a checkpoint that carries optimizer state.
TrainResult train(const TrainConfig& config, const DatasetManifest& manifest,
                  const std::string& data_root, const std::string& out_dir,
                  const std::string& resume_from = "");

}  // namespace splicegan
