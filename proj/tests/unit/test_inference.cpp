#include <doctest.h>

#include "splicegan/inference.hpp"

#include "splicegan/dataset_forge.hpp"
#include "splicegan/errors.hpp"
#include "splicegan/rng.hpp"
#include "splicegan/training.hpp"

using namespace splicegan;

namespace {

SoftMask block_mask(int size, int block, float value) {
  SoftMask mask;
  mask.width = mask.height = size;
  mask.data.assign(static_cast<size_t>(size) * size, 0.0f);
  for (int y = 0; y < block; ++y)
    for (int x = 0; x < block; ++x) mask.at(x, y) = value;
  return mask;
}

}  // namespace

TEST_CASE("detection_score follows the pixel-average on the 0..255 scale") {
  SoftMask zero = block_mask(650, 0, 0.0f);
  CHECK(detection_score(zero) == doctest::Approx(0.0));

  SoftMask ones = block_mask(650, 650, 1.0f);
  CHECK(detection_score(ones) == doctest::Approx(255.0));

  SoftMask block = block_mask(650, 128, 1.0f);
  // Direct summation oracle.
  double oracle = 0.0;
  for (float v : block.data) oracle += 255.0 * v;
  oracle /= static_cast<double>(block.data.size());
  CHECK(detection_score(block) == oracle);  // exact match with direct summation
  CHECK(detection_score(block) == doctest::Approx(255.0 * 16384.0 / 422500.0).epsilon(1e-12));
  CHECK(detection_score(block) == doctest::Approx(9.888).epsilon(1e-3));
}

TEST_CASE("detection_score is linear in the mask") {
  Rng rng(3);
  SoftMask mask = block_mask(64, 64, 0.0f);
  for (auto& v : mask.data) v = static_cast<float>(rng.uniform());
  const double full = detection_score(mask);
  for (float alpha : {0.25f, 0.5f, 0.75f}) {
    SoftMask scaled = mask;
    for (auto& v : scaled.data) v *= alpha;
    CHECK(detection_score(scaled) == doctest::Approx(alpha * full).epsilon(1e-5));
  }
}

TEST_CASE("classify applies the strict-pristine rule") {
  CHECK(classify(0.0, 0.5).label == Label::pristine);
  CHECK(classify(9.888, 0.5).label == Label::forged);
  // Boundary convention: score exactly equal to T is forged.
  CHECK(classify(0.5, 0.5).label == Label::forged);
  CHECK_THROWS_AS(classify(1.0, -0.1), ConfigError);
  CHECK_THROWS_AS(classify(1.0, 255.5), ConfigError);

  SUBCASE("classification is monotone in the score") {
    bool forged_seen = false;
    for (double score : {0.0, 0.2, 0.5, 0.7, 200.0}) {
      const bool forged = classify(score, 0.5).label == Label::forged;
      if (forged_seen) CHECK(forged);
      forged_seen = forged_seen || forged;
    }
  }
}

TEST_CASE("localize thresholds pixels with a nesting property") {
  SoftMask mask = block_mask(4, 4, 0.0f);
  mask.data = {0.2f, 0.7f, 0.0f, 1.0f, 0.5f, 0.49f, 0.51f, 0.5f,
               0.1f, 0.9f, 0.3f, 0.6f, 0.0f, 1.0f, 0.25f, 0.75f};

  const ForgeryMask at_half = localize(mask, 0.5);
  CHECK(at_half.data[0] == 0);    // 0.2
  CHECK(at_half.data[1] == 255);  // 0.7
  CHECK(at_half.data[4] == 255);  // 0.5 boundary: >= tau

  CHECK(mask_forged_pixel_count(localize(mask, 0.0)) == 16);  // tau 0 -> all forged
  CHECK_THROWS_AS(localize(mask, 1.0000001), ConfigError);
  CHECK_THROWS_AS(localize(mask, -0.1), ConfigError);

  int64_t prev = 17;
  for (double tau : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const int64_t count = mask_forged_pixel_count(localize(mask, tau));
    CHECK(count <= prev);
    prev = count;
  }
}

TEST_CASE("estimate_mask returns a full-resolution deterministic estimate") {
  TrainConfig config;
  config.preset = "tiny";
  config.seed = 21;
  const TrainState state = init_train_state(config);
  const Checkpoint ckpt = make_checkpoint(state, false, std::nullopt);

  const ImageRGB image = make_base_image(stream_key(5, "base", 0), 650);
  const SoftMask mask = estimate_mask(ckpt, image);
  CHECK(mask.width == 650);
  CHECK(mask.height == 650);
  for (float v : mask.data) {
    REQUIRE(v >= 0.0f);
    REQUIRE(v <= 1.0f);
  }
  const SoftMask again = estimate_mask(ckpt, image);
  CHECK(mask.data == again.data);
}
