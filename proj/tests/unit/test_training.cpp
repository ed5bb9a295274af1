#include <doctest.h>

#include "splicegan/training.hpp"

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "splicegan/dataset_forge.hpp"
#include "splicegan/evaluation.hpp"
#include "splicegan/inference.hpp"

using namespace splicegan;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

// Synthesizes a miniature corpus with splits and returns (root, manifest).
std::pair<fs::path, DatasetManifest> mini_corpus(const char* tag, uint64_t seed) {
  const fs::path root = fs::temp_directory_path() / (std::string("splicegan_train_") + tag);
  fs::remove_all(root);
  SynthesisOptions options;
  options.scale = 0.05;
  options.workers = 2;
  DatasetManifest manifest = synthesize_corpus(root.string(), seed, options);
  build_splits(manifest, seed);
  save_manifest((root / "manifest.json").string(), manifest);
  return {root, manifest};
}

TrainConfig tiny_config(uint64_t seed) {
  TrainConfig config;
  config.preset = "tiny";
  config.seed = seed;
  config.epochs = 2;
  config.checkpoint_every = 1;
  return config;
}

}  // namespace

TEST_CASE("adam drives a quadratic to its minimum") {
  ModelParamsF params;
  params.add("x", TensorF({4}, 5.0f));
  OptState state = OptState::zeros_like(params);
  for (int i = 0; i < 400; ++i) {
    ModelParamsF grads = ModelParamsF::zeros_like(params);
    for (int64_t j = 0; j < 4; ++j) grads.at("x")[j] = 2.0f * params.at("x")[j];
    adam_step(params, grads, state, 0.05, 0.5, 0.999);
  }
  for (int64_t j = 0; j < 4; ++j) CHECK(std::abs(params.at("x")[j]) < 1e-2);
  CHECK(state.t == 400);
}

TEST_CASE("select_best takes the argmax with earliest-epoch tie break") {
  CHECK(select_best_index({0.7}) == 0);
  CHECK(select_best_index({0.7, 0.9, 0.9}) == 1);
  CHECK(select_best_index({0.1, 0.2, 0.3}) == 2);
  CHECK_THROWS_AS(select_best_index({}), EmptyListError);
}

TEST_CASE("train_step is deterministic across fresh runs") {
  TrainConfig config = tiny_config(77);
  Rng rng(5);
  TensorF images({1, 3, 256, 256});
  TensorF masks({1, 1, 256, 256}, 0.0f);
  for (auto& v : images.data) v = static_cast<float>(rng.uniform());
  for (int y = 60; y < 120; ++y)
    for (int x = 40; x < 100; ++x) masks[static_cast<int64_t>(y) * 256 + x] = 1.0f;

  TrainState a = init_train_state(config);
  TrainState b = init_train_state(config);
  const StepMetrics ma = train_step(a, images, masks);
  const StepMetrics mb = train_step(b, images, masks);
  CHECK(ma.loss_d == mb.loss_d);
  CHECK(ma.loss_adv_g == mb.loss_adv_g);
  CHECK(ma.loss_recon == mb.loss_recon);
  CHECK(ma.loss_total == mb.loss_total);
  const StepMetrics ma2 = train_step(a, images, masks);
  const StepMetrics mb2 = train_step(b, images, masks);
  CHECK(ma2.loss_total == mb2.loss_total);
  for (size_t i = 0; i < a.gen.items.size(); ++i)
    CHECK(a.gen.items[i].second.data == b.gen.items[i].second.data);
}

TEST_CASE("the discriminator update alone drives its loss down on a separable batch") {
  const DiscriminatorSpec spec = DiscriminatorSpec::tiny();
  const DiscriminatorNet<float> net(spec);
  ModelParamsF params = init_discriminator_params<float>(spec, 3);
  OptState adam = OptState::zeros_like(params);

  Rng rng(9);
  TensorF image({1, 3, 256, 256});
  for (auto& v : image.data) v = static_cast<float>(rng.uniform());
  TensorF real_mask({1, 1, 256, 256}, 0.0f);
  for (int y = 64; y < 192; ++y)
    for (int x = 64; x < 192; ++x) real_mask[static_cast<int64_t>(y) * 256 + x] = 1.0f;
  TensorF fake_mask({1, 1, 256, 256}, 0.5f);  // obviously synthetic

  std::vector<float> losses;
  for (int step = 0; step < 50; ++step) {
    DiscriminatorCache<float> cache_real, cache_fake;
    const TensorF real_scores = net.forward(params, image, real_mask, &cache_real);
    const TensorF fake_scores = net.forward(params, image, fake_mask, &cache_fake);
    TensorF grad_real(real_scores.shape, 0.0f), grad_fake(fake_scores.shape, 0.0f);
    losses.push_back(
        adversarial_loss_d(real_scores, fake_scores, 1e-7f, &grad_real, &grad_fake));
    ModelParamsF grads = ModelParamsF::zeros_like(params);
    net.backward(params, cache_real, grad_real, &grads, nullptr);
    net.backward(params, cache_fake, grad_fake, &grads, nullptr);
    adam_step(params, grads, adam, 2e-4, 0.5, 0.999);
  }
  for (size_t i = 1; i < losses.size(); ++i) CHECK(losses[i] < losses[i - 1]);
  CHECK(losses.back() < 0.5f * losses.front());
}

TEST_CASE("overfit smoke: reconstruction loss falls fast on a fixed batch") {
  TrainConfig config = tiny_config(13);
  TrainState state = init_train_state(config);

  const ImageRGB base = make_base_image(stream_key(1, "base", 0), 650);
  const SpriteAsset sprite = make_sprite(stream_key(1, "sprite", 0), 128);
  const ImageMaskPair pair = splice(base, sprite, 200, 180, 128, "overfit");
  TensorF image({1, 3, 256, 256});
  TensorF mask({1, 1, 256, 256});
  {
    const TensorF chw = resize_bilinear_chw(image_to_chw(pair.image), 256, 256);
    std::copy(chw.data.begin(), chw.data.end(), image.data.begin());
    const TensorF m = mask_to_chw(resize_nearest(pair.mask, 256, 256));
    std::copy(m.data.begin(), m.data.end(), mask.data.begin());
  }

  double first = 0.0, last = 0.0;
  for (int step = 0; step < 30; ++step) {
    const StepMetrics m = train_step(state, image, mask);
    if (step == 0) first = m.loss_recon;
    last = m.loss_recon;
  }
  CHECK(last < 0.5 * first);
}

TEST_CASE("the training loop persists logs, checkpoints and the best marker") {
  const auto [root, manifest] = mini_corpus("loop", 4242);
  const TrainConfig config = tiny_config(4242);
  const std::string out = (root / "run").string();
  const TrainResult result = train(config, manifest, root.string(), out);

  CHECK(fs::exists(result.metrics_csv_path));
  CHECK(fs::exists(result.best_checkpoint_path));
  CHECK(fs::exists(fs::path(out) / "best.json"));
  CHECK(result.checkpoint_paths.size() == 2);  // checkpoint_every = 1, epochs = 2

  const std::string csv = read_file(result.metrics_csv_path);
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "epoch,step,L_D,L_adv_G,L_R_bce,L_total,val_pixel_auc");
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  const int train_size = static_cast<int>(manifest.split_records(Split::train).size());
  CHECK(rows == 2 * train_size);  // one row per step

  SUBCASE("reruns with the same seed produce byte-identical logs") {
    const std::string out2 = (root / "run2").string();
    const TrainResult result2 = train(config, manifest, root.string(), out2);
    CHECK(read_file(result2.metrics_csv_path) == csv);
  }
  SUBCASE("a checkpointed model reproduces its in-memory forward pass") {
    const Checkpoint best = load_checkpoint(result.best_checkpoint_path);
    const ImageRGB image =
        load_image_png((root / manifest.pairs.front().image_path).string());
    const SoftMask a = estimate_mask(best, image);
    const SoftMask b = estimate_mask(best, image);
    CHECK(a.data == b.data);
  }
  fs::remove_all(root);
}

TEST_CASE("epochs = 0 produces only the initial checkpoint") {
  const auto [root, manifest] = mini_corpus("zero", 99);
  TrainConfig config = tiny_config(99);
  config.epochs = 0;
  const TrainResult result = train(config, manifest, root.string(), (root / "run").string());
  CHECK(result.checkpoint_paths.size() == 1);
  const Checkpoint initial = load_checkpoint(result.checkpoint_paths.front());
  CHECK(initial.epoch == 0);
  const std::string csv = read_file(result.metrics_csv_path);
  CHECK(csv.find('\n') == csv.size() - 1);  // header only
  fs::remove_all(root);
}

TEST_CASE("resume continues the metric log at the saved epoch") {
  const auto [root, manifest] = mini_corpus("resume", 1234);
  TrainConfig config = tiny_config(1234);
  const std::string out = (root / "run").string();
  const TrainResult first = train(config, manifest, root.string(), out);

  TrainConfig longer = config;
  longer.epochs = 4;
  const TrainResult resumed =
      train(longer, manifest, root.string(), out, first.checkpoint_paths.back());
  const std::string csv = read_file(resumed.metrics_csv_path);
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);  // header
  int max_epoch = 0, rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
    max_epoch = std::max(max_epoch, std::stoi(line.substr(0, line.find(','))));
  }
  const int train_size = static_cast<int>(manifest.split_records(Split::train).size());
  CHECK(max_epoch == 4);
  CHECK(rows == 4 * train_size);
  fs::remove_all(root);
}

TEST_CASE("epoch shuffling visits exactly the train split each epoch") {
  const auto [root, manifest] = mini_corpus("shuffle", 31);
  // Two epochs of a batch-size-1 run visit train_size steps per epoch; the
  // CSV row count per epoch equals the split size, which pins the multiset.
  TrainConfig config = tiny_config(31);
  config.epochs = 1;
  const TrainResult result = train(config, manifest, root.string(), (root / "run").string());
  const std::string csv = read_file(result.metrics_csv_path);
  int rows = 0;
  for (char c : csv) rows += c == '\n';
  CHECK(rows - 1 == static_cast<int>(manifest.split_records(Split::train).size()));
  fs::remove_all(root);
}
