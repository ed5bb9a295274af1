#include "splicegan/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "splicegan/evaluation.hpp"
#include "splicegan/rng.hpp"

namespace splicegan {

namespace fs = std::filesystem;

void TrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (learning_rate <= 0.0) throw ConfigError("learning rate must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (checkpoint_every < 1) throw ConfigError("checkpoint_every must be >= 1");
  if (preset != "full" && preset != "tiny") throw ConfigError("preset must be full or tiny");
  loss.validate();
}

uint64_t TrainConfig::hash() const {
  nlohmann::ordered_json j;
  j["epochs"] = epochs;
  j["learning_rate"] = learning_rate;
  j["beta1"] = beta1;
  j["beta2"] = beta2;
  j["batch_size"] = batch_size;
  j["recon_mode"] = to_string(loss.recon_mode);
  j["lambda"] = loss.lambda;
  j["epsilon"] = loss.epsilon;
  j["seed"] = seed;
  j["checkpoint_every"] = checkpoint_every;
  j["preset"] = preset;
  j["validation_metric"] = to_string(validation_metric);
  const std::string text = j.dump();
  uint64_t h = 0xcbf29ce484222325ull;
  for (char c : text) h = (h ^ static_cast<uint64_t>(static_cast<uint8_t>(c))) * 0x100000001b3ull;
  return h;
}

GeneratorSpec preset_generator_spec(const std::string& preset) {
  if (preset == "full") return GeneratorSpec::full();
  if (preset == "tiny") return GeneratorSpec::tiny();
  throw ConfigError("unknown preset: " + preset);
}

DiscriminatorSpec preset_discriminator_spec(const std::string& preset) {
  if (preset == "full") return DiscriminatorSpec::full();
  if (preset == "tiny") return DiscriminatorSpec::tiny();
  throw ConfigError("unknown preset: " + preset);
}

TrainState init_train_state(const TrainConfig& config) {
  config.validate();
  TrainState state;
  state.gen_spec = preset_generator_spec(config.preset);
  state.disc_spec = preset_discriminator_spec(config.preset);
  state.config = config;
  state.gen = init_generator_params<float>(state.gen_spec, config.seed);
  state.disc = init_discriminator_params<float>(state.disc_spec, config.seed);
  state.adam_gen = OptState::zeros_like(state.gen);
  state.adam_disc = OptState::zeros_like(state.disc);
  return state;
}

TrainState train_state_from_checkpoint(const TrainConfig& config, const Checkpoint& ckpt) {
  config.validate();
  if (!ckpt.has_optimizer)
    throw BadCheckpointError("cannot resume: checkpoint carries no optimizer state");
  TrainState state;
  state.gen_spec = ckpt.gen_spec;
  state.disc_spec = ckpt.disc_spec;
  state.config = config;
  state.config.loss.recon_mode = ckpt.recon_mode;
  state.gen = ckpt.gen;
  state.disc = ckpt.disc;
  state.adam_gen = ckpt.adam_gen;
  state.adam_disc = ckpt.adam_disc;
  state.epoch = ckpt.epoch;
  state.step = std::max(ckpt.adam_gen.t, ckpt.adam_disc.t);
  return state;
}

Checkpoint make_checkpoint(const TrainState& state, bool with_optimizer,
                           std::optional<double> val_metric) {
  Checkpoint ckpt;
  ckpt.epoch = state.epoch;
  ckpt.gen_spec = state.gen_spec;
  ckpt.disc_spec = state.disc_spec;
  ckpt.gen = state.gen;
  ckpt.disc = state.disc;
  ckpt.recon_mode = state.config.loss.recon_mode;
  ckpt.config_hash = state.config.hash();
  if (val_metric) {
    ckpt.val_metric = *val_metric;
    ckpt.has_val_metric = true;
  }
  if (with_optimizer) {
    ckpt.has_optimizer = true;
    ckpt.adam_gen = state.adam_gen;
    ckpt.adam_disc = state.adam_disc;
  }
  return ckpt;
}

void adam_step(ModelParamsF& params, const ModelParamsF& grads, OptState& state, double lr,
               double beta1, double beta2, double eps) {
  state.t += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (size_t p = 0; p < params.items.size(); ++p) {
    TensorF& theta = params.items[p].second;
    const TensorF& g = grads.items[p].second;
    TensorF& m = state.m.items[p].second;
    TensorF& v = state.v.items[p].second;
    for (int64_t i = 0; i < theta.size(); ++i) {
      const double gi = static_cast<double>(g[i]);
      const double mi = beta1 * m[i] + (1.0 - beta1) * gi;
      const double vi = beta2 * v[i] + (1.0 - beta2) * gi * gi;
      m[i] = static_cast<float>(mi);
      v[i] = static_cast<float>(vi);
      theta[i] -= static_cast<float>(lr * (mi / bc1) / (std::sqrt(vi / bc2) + eps));
    }
  }
}

StepMetrics train_step(TrainState& state, const TensorF& images, const TensorF& masks) {
  const GeneratorNet<float> gen_net(state.gen_spec);
  const DiscriminatorNet<float> disc_net(state.disc_spec);
  const float eps = static_cast<float>(state.config.loss.epsilon);

  Rng dropout_rng(stream_key(state.config.seed, "dropout", static_cast<uint64_t>(state.step)));
  GeneratorCache<float> gen_cache;
  const TensorF fake = gen_net.forward(state.gen, images, /*train=*/true, &dropout_rng,
                                       &gen_cache);

  // Discriminator update: real pair scored against 1, detached fake against 0.
  DiscriminatorCache<float> cache_real, cache_fake;
  const TensorF real_scores = disc_net.forward(state.disc, images, masks, &cache_real);
  const TensorF fake_scores = disc_net.forward(state.disc, images, fake, &cache_fake);
  TensorF grad_real(real_scores.shape, 0.0f), grad_fake(fake_scores.shape, 0.0f);
  const float loss_d =
      adversarial_loss_d(real_scores, fake_scores, eps, &grad_real, &grad_fake);
  ModelParamsF disc_grads = ModelParamsF::zeros_like(state.disc);
  disc_net.backward(state.disc, cache_real, grad_real, &disc_grads, nullptr);
  disc_net.backward(state.disc, cache_fake, grad_fake, &disc_grads, nullptr);
  adam_step(state.disc, disc_grads, state.adam_disc, state.config.learning_rate,
            state.config.beta1, state.config.beta2);

  // Generator update against the refreshed discriminator; its parameters stay
  // fixed, only the mask-input gradient flows back.
  DiscriminatorCache<float> cache_gen;
  const TensorF gen_scores = disc_net.forward(state.disc, images, fake, &cache_gen);
  TensorF grad_scores(gen_scores.shape, 0.0f);
  TensorF grad_estimate(fake.shape, 0.0f);
  const GeneratorLossTerms<float> terms = total_generator_loss(
      gen_scores, fake, masks, state.config.loss, &grad_scores, &grad_estimate);
  disc_net.backward(state.disc, cache_gen, grad_scores, nullptr, &grad_estimate);
  ModelParamsF gen_grads = ModelParamsF::zeros_like(state.gen);
  gen_net.backward(state.gen, gen_cache, grad_estimate, gen_grads);
  adam_step(state.gen, gen_grads, state.adam_gen, state.config.learning_rate,
            state.config.beta1, state.config.beta2);

  StepMetrics metrics;
  metrics.loss_d = loss_d;
  metrics.loss_adv_g = terms.adversarial;
  metrics.loss_recon = terms.reconstruction;
  metrics.loss_total = terms.total;
  if (!std::isfinite(metrics.loss_d) || !std::isfinite(metrics.loss_total)) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "non-finite loss at step %lld (L_D=%g, L_adv_G=%g, L_R=%g, L_total=%g)",
                  static_cast<long long>(state.step), metrics.loss_d, metrics.loss_adv_g,
                  metrics.loss_recon, metrics.loss_total);
    throw NonFiniteLossError(buf);
  }
  state.step += 1;
  return metrics;
}

// ---------------------------------------------------------------------------
// Data loading
// ---------------------------------------------------------------------------

namespace {

TensorF load_image_net(const std::string& path, int net_size) {
  return resize_bilinear_chw(image_to_chw(load_image_png(path)), net_size, net_size);
}

TensorF load_mask_net(const ForgeryMask& mask, int net_size) {
  return mask_to_chw(resize_nearest(mask, net_size, net_size));
}

}  // namespace

std::vector<TrainSample> load_train_samples(const DatasetManifest& manifest, Split split,
                                            const std::string& data_root, int net_size) {
  std::vector<TrainSample> samples;
  for (const PairRecord* rec : manifest.split_records(split)) {
    TrainSample s;
    s.id = rec->id;
    s.image = load_image_net((fs::path(data_root) / rec->image_path).string(), net_size);
    s.mask = load_mask_net(load_mask_png((fs::path(data_root) / rec->mask_path).string()),
                           net_size);
    samples.push_back(std::move(s));
  }
  return samples;
}

std::vector<ValSample> load_val_samples(const DatasetManifest& manifest, Split split,
                                        const std::string& data_root, int net_size) {
  std::vector<ValSample> samples;
  for (const PairRecord* rec : manifest.split_records(split)) {
    ValSample s;
    s.id = rec->id;
    s.image = load_image_net((fs::path(data_root) / rec->image_path).string(), net_size);
    s.mask_full = load_mask_png((fs::path(data_root) / rec->mask_path).string());
    s.mask_net = load_mask_net(s.mask_full, net_size);
    samples.push_back(std::move(s));
  }
  return samples;
}

void make_batch(const std::vector<TrainSample>& samples, const std::vector<size_t>& order,
                size_t begin, size_t end, TensorF* images, TensorF* masks) {
  const int b = static_cast<int>(end - begin);
  const int net = samples.front().image.dim(1);
  *images = TensorF({b, 3, net, net});
  *masks = TensorF({b, 1, net, net});
  for (int i = 0; i < b; ++i) {
    const TrainSample& s = samples[order[begin + static_cast<size_t>(i)]];
    std::copy(s.image.data.begin(), s.image.data.end(),
              images->data.begin() + static_cast<int64_t>(i) * s.image.size());
    std::copy(s.mask.data.begin(), s.mask.data.end(),
              masks->data.begin() + static_cast<int64_t>(i) * s.mask.size());
  }
}

namespace {

TensorF infer_single(const GeneratorNet<float>& net, const ModelParamsF& gen,
                     const TensorF& image) {
  TensorF batch({1, image.dim(0), image.dim(1), image.dim(2)});
  std::copy(image.data.begin(), image.data.end(), batch.data.begin());
  return net.forward(gen, batch, /*train=*/false, nullptr, nullptr);
}

}  // namespace

double validation_pixel_auc(const GeneratorSpec& spec, const ModelParamsF& gen,
                            const std::vector<ValSample>& samples) {
  const GeneratorNet<float> net(spec);
  std::vector<ScoredSample> pixels;
  for (const ValSample& s : samples) {
    TensorF out = infer_single(net, gen, s.image);
    TensorF chw({1, out.dim(2), out.dim(3)});
    std::copy(out.data.begin(), out.data.end(), chw.data.begin());
    const TensorF up = resize_bilinear_chw(chw, s.mask_full.height, s.mask_full.width);
    const size_t base = pixels.size();
    pixels.resize(base + up.data.size());
    for (size_t i = 0; i < up.data.size(); ++i)
      pixels[base + i] = {static_cast<double>(up.data[i]), s.mask_full.data[i] ? 1 : 0};
  }
  return roc_curve(std::move(pixels)).auc;
}

double validation_recon_loss(const GeneratorSpec& spec, const ModelParamsF& gen,
                             const std::vector<ValSample>& samples, const LossConfig& loss) {
  const GeneratorNet<float> net(spec);
  double total = 0.0;
  for (const ValSample& s : samples) {
    TensorF out = infer_single(net, gen, s.image);
    TensorF target({1, 1, s.mask_net.dim(1), s.mask_net.dim(2)});
    std::copy(s.mask_net.data.begin(), s.mask_net.data.end(), target.data.begin());
    total += reconstruction_loss<float>(out, target, loss.recon_mode,
                                        static_cast<float>(loss.epsilon), nullptr);
  }
  return total / static_cast<double>(samples.size());
}

size_t select_best_index(const std::vector<double>& metrics) {
  if (metrics.empty()) throw EmptyListError("select_best over an empty checkpoint list");
  size_t best = 0;
  for (size_t i = 1; i < metrics.size(); ++i)
    if (metrics[i] > metrics[best]) best = i;
  return best;
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

namespace {

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string checkpoint_name(int epoch) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "ckpt_epoch_%04d.spgc", epoch);
  return buf;
}

}  // namespace

TrainResult train(const TrainConfig& config, const DatasetManifest& manifest,
                  const std::string& data_root, const std::string& out_dir,
                  const std::string& resume_from) {
  config.validate();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (!fs::is_directory(out_dir)) throw IoError("cannot create output directory " + out_dir);

  TrainState state = resume_from.empty()
                         ? init_train_state(config)
                         : train_state_from_checkpoint(config, load_checkpoint(resume_from));
  const int net_size = state.gen_spec.input_size;

  const auto train_samples = load_train_samples(manifest, Split::train, data_root, net_size);
  const auto val_samples = load_val_samples(manifest, Split::validation, data_root, net_size);
  if (train_samples.empty()) throw ConfigError("train split is empty");

  const std::string csv_path = (fs::path(out_dir) / "metrics.csv").string();
  const bool append = !resume_from.empty() && fs::exists(csv_path);
  std::ofstream csv(csv_path, append ? std::ios::app | std::ios::binary : std::ios::binary);
  if (!csv) throw IoError("cannot write metric log: " + csv_path);
  const std::string recon_tag = to_string(config.loss.recon_mode);
  const std::string metric_tag = to_string(config.validation_metric);
  if (!append)
    csv << "epoch,step,L_D,L_adv_G,L_R_" << recon_tag << ",L_total,val_" << metric_tag << "\n";

  TrainResult result;
  result.metrics_csv_path = csv_path;

  auto evaluate_validation = [&]() -> std::optional<double> {
    if (val_samples.empty()) return std::nullopt;
    if (config.validation_metric == ValidationMetric::pixel_auc) {
      try {
        return validation_pixel_auc(state.gen_spec, state.gen, val_samples);
      } catch (const DegenerateLabelsError&) {
        return std::nullopt;  // single-class validation split
      }
    }
    // Reconstruction loss: lower is better, negate so selection stays argmax.
    return -validation_recon_loss(state.gen_spec, state.gen, val_samples, config.loss);
  };

  auto save_epoch_checkpoint = [&](std::optional<double> metric) {
    const std::string path = (fs::path(out_dir) / checkpoint_name(state.epoch)).string();
    save_checkpoint(path, make_checkpoint(state, /*with_optimizer=*/true, metric));
    result.checkpoint_paths.push_back(path);
    return path;
  };

  const std::string best_path = (fs::path(out_dir) / "best.spgc").string();
  std::optional<double> best_metric;
  int best_epoch = state.epoch;

  auto consider_best = [&](std::optional<double> metric) {
    // Strict improvement only: ties keep the earliest epoch.
    const bool better = metric && (!best_metric || *metric > *best_metric);
    const bool unmetriced_latest = !metric && !best_metric;
    if (better || unmetriced_latest) {
      if (metric) best_metric = metric;
      best_epoch = state.epoch;
      save_checkpoint(best_path, make_checkpoint(state, /*with_optimizer=*/true, metric));
    }
  };

  if (config.epochs == 0 || state.epoch >= config.epochs) {
    const auto metric = evaluate_validation();
    save_epoch_checkpoint(metric);
    consider_best(metric);
  }

  // Rows of the running epoch are buffered so the validation value can be
  // attached to the epoch's last step; on abort they flush as-is.
  std::vector<std::string> pending_rows;
  try {
    while (state.epoch < config.epochs) {
      state.epoch += 1;
      std::vector<size_t> order(train_samples.size());
      for (size_t i = 0; i < order.size(); ++i) order[i] = i;
      Rng shuffle_rng(stream_key(config.seed, "epoch_shuffle",
                                 static_cast<uint64_t>(state.epoch)));
      shuffle_rng.shuffle(order.begin(), order.end());

      pending_rows.clear();
      for (size_t begin = 0; begin < order.size();
           begin += static_cast<size_t>(config.batch_size)) {
        const size_t end = std::min(order.size(), begin + static_cast<size_t>(config.batch_size));
        TensorF images, masks;
        make_batch(train_samples, order, begin, end, &images, &masks);
        const StepMetrics m = train_step(state, images, masks);
        pending_rows.push_back(std::to_string(state.epoch) + "," + std::to_string(state.step) +
                               "," + format_value(m.loss_d) + "," + format_value(m.loss_adv_g) +
                               "," + format_value(m.loss_recon) + "," +
                               format_value(m.loss_total));
      }

      const auto metric = evaluate_validation();
      for (size_t i = 0; i < pending_rows.size(); ++i) {
        csv << pending_rows[i] << ",";
        if (metric && i + 1 == pending_rows.size()) csv << format_value(*metric);
        csv << "\n";
      }
      pending_rows.clear();
      csv.flush();

      consider_best(metric);
      if (state.epoch % config.checkpoint_every == 0 || state.epoch == config.epochs)
        save_epoch_checkpoint(metric);
    }
  } catch (...) {
    for (const std::string& row : pending_rows) csv << row << ",\n";
    csv.flush();
    throw;
  }

  if (!fs::exists(best_path))
    save_checkpoint(best_path, make_checkpoint(state, true, std::nullopt));
  result.best_checkpoint_path = best_path;
  result.best_epoch = best_epoch;
  if (best_metric) {
    result.best_metric = *best_metric;
    result.has_best_metric = true;
  }

  // Marker for operators and downstream tooling.
  {
    nlohmann::ordered_json marker;
    marker["best_epoch"] = best_epoch;
    marker["metric"] = to_string(config.validation_metric);
    if (best_metric) marker["value"] = *best_metric;
    marker["path"] = fs::path(best_path).filename().string();
    std::ofstream out((fs::path(out_dir) / "best.json").string(), std::ios::binary);
    out << marker.dump(2) << "\n";
  }
  return result;
}

}  // namespace splicegan
