#include <doctest.h>

#include "splicegan/dataset_forge.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>

#include "splicegan/errors.hpp"
#include "splicegan/rng.hpp"

using namespace splicegan;
namespace fs = std::filesystem;

namespace {

ImageRGB flat_base(int size, uint8_t r, uint8_t g, uint8_t b) {
  ImageRGB image;
  image.width = image.height = size;
  image.data.resize(static_cast<size_t>(size) * size * 3);
  for (size_t i = 0; i < image.data.size(); i += 3) {
    image.data[i] = r;
    image.data[i + 1] = g;
    image.data[i + 2] = b;
  }
  return image;
}

SpriteAsset opaque_sprite(int size, uint8_t tone) {
  SpriteAsset sprite;
  sprite.width = sprite.height = size;
  sprite.category = "fixture";
  sprite.rgba.assign(static_cast<size_t>(size) * size * 4, tone);
  for (size_t i = 3; i < sprite.rgba.size(); i += 4) sprite.rgba[i] = 255;
  return sprite;
}

// Fixture sprite with exactly `target` opaque pixels, built from an inscribed
// ellipse trimmed from the inside (edge rows/columns stay opaque).
SpriteAsset fixture_sprite_with_count(int size, int64_t target) {
  SpriteAsset sprite;
  sprite.width = sprite.height = size;
  sprite.category = "fixture";
  sprite.rgba.assign(static_cast<size_t>(size) * size * 4, 0);
  const double c = (size - 1) / 2.0, full = size / 2.0;
  int64_t count = 0;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double dx = (x - c) / full, dy = (y - c) / full;
      if (dx * dx + dy * dy > 1.0) continue;
      uint8_t* px = sprite.rgba.data() + (static_cast<size_t>(y) * size + x) * 4;
      px[0] = px[1] = px[2] = 200;
      px[3] = 255;
      ++count;
    }
  REQUIRE(count >= target);
  for (int y = 1; y < size - 1 && count > target; ++y)
    for (int x = 1; x < size - 1 && count > target; ++x) {
      uint8_t* px = sprite.rgba.data() + (static_cast<size_t>(y) * size + x) * 4;
      if (px[3] == 255) {
        px[3] = 0;
        --count;
      }
    }
  REQUIRE(sprite_opaque_pixel_count(sprite) == target);
  return sprite;
}

}  // namespace

TEST_CASE("splice replaces exactly the opaque sprite pixels") {
  const ImageRGB base = flat_base(650, 10, 20, 30);
  const SpriteAsset sprite = opaque_sprite(32, 200);
  const ImageMaskPair pair = splice(base, sprite, 0, 0, 32, "p");
  CHECK(pair.size_class == SizeClass::small);
  CHECK(mask_forged_pixel_count(pair.mask) == 1024);

  SUBCASE("the emitted mask equals the pixel-difference mask exactly") {
    for (int y = 0; y < 650; ++y)
      for (int x = 0; x < 650; ++x) {
        const bool differs = std::memcmp(pair.image.pixel(x, y), base.pixel(x, y), 3) != 0;
        CHECK(differs == (pair.mask.at(x, y) == 255));
      }
  }
}

TEST_CASE("splice guarantees a pixel difference even for base-colored sprites") {
  const ImageRGB base = flat_base(64, 200, 200, 200);
  const SpriteAsset sprite = opaque_sprite(32, 200);  // identical RGB to base
  const ImageMaskPair pair = splice(base, sprite, 8, 8, 32, "clash");
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      const bool differs = std::memcmp(pair.image.pixel(x, y), base.pixel(x, y), 3) != 0;
      CHECK(differs == (pair.mask.at(x, y) == 255));
    }
}

TEST_CASE("splice rejects empty sprites and out-of-bounds placements") {
  const ImageRGB base = flat_base(650, 10, 20, 30);
  SpriteAsset empty = opaque_sprite(32, 100);
  for (size_t i = 3; i < empty.rgba.size(); i += 4) empty.rgba[i] = 0;
  CHECK_THROWS_AS(splice(base, empty, 0, 0, 32, "x"), EmptySpriteError);

  const SpriteAsset sprite = opaque_sprite(32, 100);
  CHECK_THROWS_AS(splice(base, sprite, 650 - 31, 0, 32, "x"), OutOfBoundsError);
  CHECK_THROWS_AS(splice(base, sprite, -1, 0, 32, "x"), OutOfBoundsError);
}

TEST_CASE("splice fixture with 9000 opaque pixels lands inside the stated window") {
  const ImageRGB base = make_base_image(stream_key(7, "base", 0), 650);
  const SpriteAsset sprite = fixture_sprite_with_count(128, 9000);
  const ImageMaskPair pair = splice(base, sprite, 100, 200, 128, "fix");
  CHECK(pair.size_class == SizeClass::large);
  CHECK(mask_forged_pixel_count(pair.mask) == 9000);
  for (int y = 0; y < 650; ++y)
    for (int x = 0; x < 650; ++x)
      if (pair.mask.at(x, y) == 255) {
        REQUIRE(x >= 100);
        REQUIRE(x <= 227);
        REQUIRE(y >= 200);
        REQUIRE(y <= 327);
      }
}

TEST_CASE("augmentation transforms image and mask identically") {
  const ImageRGB base = make_base_image(stream_key(3, "base", 1), 650);
  const SpriteAsset sprite = make_sprite(stream_key(3, "sprite", 1), 64);
  const ImageMaskPair pair = splice(base, sprite, 123, 456, 64, "orig");

  SUBCASE("four rot90 applications are the identity, bit-exact") {
    ImageMaskPair cur = pair;
    for (int i = 0; i < 4; ++i) cur = augment(cur, Transform::rot90);
    CHECK(cur.image.data == pair.image.data);
    CHECK(cur.mask.data == pair.mask.data);
  }
  SUBCASE("flip_h twice is the identity") {
    const ImageMaskPair once = augment(pair, Transform::flip_h);
    const ImageMaskPair twice = augment(once, Transform::flip_h);
    CHECK(twice.image.data == pair.image.data);
    CHECK(twice.mask.data == pair.mask.data);
  }
  SUBCASE("rot90 moves (x, y) to (y, n-1-x)") {
    ForgeryMask point;
    point.width = point.height = 650;
    point.data.assign(650 * 650, 0);
    point.at(10, 20) = 255;
    const auto turned = transform_raster(point.data, 650, 1, Transform::rot90);
    CHECK(turned[static_cast<size_t>(650 - 1 - 10) * 650 + 20] == 255);
    int64_t total = 0;
    for (auto v : turned) total += v == 255;
    CHECK(total == 1);
  }
  SUBCASE("transforming components separately matches augmenting the pair") {
    for (Transform t : {Transform::rot90, Transform::rot180, Transform::rot270,
                        Transform::flip_h, Transform::flip_v}) {
      const ImageMaskPair whole = augment(pair, t);
      CHECK(whole.image.data == transform_raster(pair.image.data, 650, 3, t));
      CHECK(whole.mask.data == transform_raster(pair.mask.data, 650, 1, t));
      CHECK(whole.size_class == pair.size_class);
      CHECK(whole.id == pair.id + "_" + to_string(t));
    }
  }
}

TEST_CASE("procedural sprites span their canvas and classify correctly") {
  for (int size : {32, 64, 128}) {
    for (uint64_t k = 0; k < 6; ++k) {
      const SpriteAsset sprite = make_sprite(stream_key(11, "sprite", k * 3 + size), size);
      CHECK(sprite.width == size);
      CHECK(sprite_opaque_pixel_count(sprite) > 0);
      CHECK((sprite.category == "airplane" || sprite.category == "cloud"));
      // alpha strictly binary
      for (size_t i = 3; i < sprite.rgba.size(); i += 4)
        CHECK((sprite.rgba[i] == 0 || sprite.rgba[i] == 255));
    }
  }
}

TEST_CASE("scaled corpus counts follow the reference composition") {
  const ClassCounts ref = scaled_counts(1.0);
  CHECK(ref.small == 158);
  CHECK(ref.medium == 32);
  CHECK(ref.large == 31);
  CHECK(ref.pristine == 123);
  CHECK(ref.total() == 344);

  const ClassCounts desk = scaled_counts(0.25);
  // Oracle: round(count * scale) for each class.
  CHECK(desk.small == std::llround(158 * 0.25));
  CHECK(desk.medium == std::llround(32 * 0.25));
  CHECK(desk.large == std::llround(31 * 0.25));
  CHECK(desk.pristine == std::llround(123 * 0.25));
  CHECK(desk.small == 40);
  CHECK(desk.medium == 8);
  CHECK(desk.large == 8);
  CHECK(desk.pristine == 31);
}

TEST_CASE("the synthesis plan meets quotas and augments only small/pristine") {
  const auto plan = make_synthesis_plan(99, 0.25);
  ClassCounts counts;
  int augmented_medium_large = 0;
  std::set<std::string> ids;
  for (const auto& e : plan) {
    ids.insert(e.id);
    switch (e.size_class) {
      case SizeClass::small: counts.small++; break;
      case SizeClass::medium: counts.medium++; break;
      case SizeClass::large: counts.large++; break;
      case SizeClass::pristine: counts.pristine++; break;
    }
    if (e.transform &&
        (e.size_class == SizeClass::medium || e.size_class == SizeClass::large))
      ++augmented_medium_large;
  }
  CHECK(counts.small == 40);
  CHECK(counts.medium == 8);
  CHECK(counts.large == 8);
  CHECK(counts.pristine == 31);
  CHECK(augmented_medium_large == 0);
  CHECK(ids.size() == plan.size());  // unique ids
}

TEST_CASE("synthesized corpora are byte-identical across reruns and worker counts") {
  const auto root = fs::temp_directory_path() / "splicegan_synth_test";
  fs::remove_all(root);
  SynthesisOptions options;
  options.scale = 0.05;  // 8 small / 2 medium / 2 large / 6 pristine
  options.workers = 1;
  const DatasetManifest m1 = synthesize_corpus((root / "a").string(), 31, options);
  options.workers = 4;
  const DatasetManifest m2 = synthesize_corpus((root / "b").string(), 31, options);
  REQUIRE(m1.pairs.size() == m2.pairs.size());
  for (size_t i = 0; i < m1.pairs.size(); ++i) {
    CHECK(m1.pairs[i].id == m2.pairs[i].id);
    std::ifstream f1(root / "a" / m1.pairs[i].image_path, std::ios::binary);
    std::ifstream f2(root / "b" / m2.pairs[i].image_path, std::ios::binary);
    const std::string b1((std::istreambuf_iterator<char>(f1)), {});
    const std::string b2((std::istreambuf_iterator<char>(f2)), {});
    REQUIRE(!b1.empty());
    CHECK(b1 == b2);
  }
  const ClassCounts counts = m1.counts();
  CHECK(counts.small == 8);
  CHECK(counts.medium == 2);
  CHECK(counts.large == 2);
  CHECK(counts.pristine == 6);
  fs::remove_all(root);
}

namespace {

DatasetManifest manifest_with_counts(int64_t small, int64_t medium, int64_t large,
                                     int64_t pristine) {
  DatasetManifest manifest;
  manifest.seed = 1;
  auto add = [&](SizeClass cls, int64_t n, const char* prefix) {
    for (int64_t i = 0; i < n; ++i) {
      PairRecord rec;
      rec.id = std::string(prefix) + "_" + std::to_string(i);
      rec.image_path = "images/" + rec.id + ".png";
      rec.mask_path = "masks/" + rec.id + ".png";
      rec.size_class = cls;
      manifest.pairs.push_back(std::move(rec));
    }
  };
  add(SizeClass::small, small, "small");
  add(SizeClass::medium, medium, "medium");
  add(SizeClass::large, large, "large");
  add(SizeClass::pristine, pristine, "pristine");
  return manifest;
}

}  // namespace

TEST_CASE("build_splits hits the reference quotas on the reference composition") {
  // Train 128 small + 90 pristine, validation 32 + 18, test 32 + 31 + 15.
  DatasetManifest manifest = manifest_with_counts(160, 32, 31, 123);
  build_splits(manifest, 7);
  CHECK(manifest.split_records(Split::train).size() == 218);
  CHECK(manifest.split_records(Split::validation).size() == 50);
  CHECK(manifest.split_records(Split::test).size() == 78);
  const ClassCounts train = manifest.counts(Split::train);
  CHECK(train.small == 128);
  CHECK(train.pristine == 90);
  const ClassCounts val = manifest.counts(Split::validation);
  CHECK(val.small == 32);
  CHECK(val.pristine == 18);
  const ClassCounts test = manifest.counts(Split::test);
  CHECK(test.medium == 32);
  CHECK(test.large == 31);
  CHECK(test.pristine == 15);

  SUBCASE("assignment is disjoint and exhaustive") {
    int assigned = 0;
    for (const auto& p : manifest.pairs) assigned += p.split.has_value();
    CHECK(assigned == static_cast<int>(manifest.pairs.size()));
  }
  SUBCASE("the generalization protocol holds") {
    CHECK(manifest.counts(Split::test).small == 0);
    CHECK(manifest.counts(Split::train).medium == 0);
    CHECK(manifest.counts(Split::train).large == 0);
    CHECK(manifest.counts(Split::validation).medium == 0);
    CHECK(manifest.counts(Split::validation).large == 0);
  }
  SUBCASE("the same seed reproduces the same assignment") {
    DatasetManifest again = manifest_with_counts(160, 32, 31, 123);
    build_splits(again, 7);
    for (size_t i = 0; i < manifest.pairs.size(); ++i)
      CHECK(manifest.pairs[i].split == again.pairs[i].split);
  }
  SUBCASE("a different seed moves at least one pair") {
    DatasetManifest other = manifest_with_counts(160, 32, 31, 123);
    build_splits(other, 8);
    bool any_diff = false;
    for (size_t i = 0; i < manifest.pairs.size(); ++i)
      any_diff = any_diff || manifest.pairs[i].split != other.pairs[i].split;
    CHECK(any_diff);
  }
}

TEST_CASE("build_splits rejects unsatisfiable compositions") {
  DatasetManifest no_test = manifest_with_counts(10, 0, 0, 10);
  CHECK_THROWS_AS(build_splits(no_test, 1), QuotaUnsatisfiableError);
  DatasetManifest no_small = manifest_with_counts(1, 4, 4, 10);
  CHECK_THROWS_AS(build_splits(no_small, 1), QuotaUnsatisfiableError);
  DatasetManifest no_pristine = manifest_with_counts(10, 4, 4, 2);
  CHECK_THROWS_AS(build_splits(no_pristine, 1), QuotaUnsatisfiableError);
}

TEST_CASE("user-supplied bases must cover the original pairs") {
  SynthesisOptions options;
  options.scale = 0.05;
  options.user_bases.push_back(flat_base(650, 9, 9, 9));  // far too few
  const auto root = fs::temp_directory_path() / "splicegan_synth_userbase";
  fs::remove_all(root);
  CHECK_THROWS_AS(synthesize_corpus(root.string(), 3, options), InsufficientBasesError);
  fs::remove_all(root);
}

TEST_CASE("manifest JSON round-trips") {
  DatasetManifest manifest = manifest_with_counts(4, 2, 2, 3);
  build_splits(manifest, 3);
  const auto root = fs::temp_directory_path() / "splicegan_manifest_test";
  fs::create_directories(root);
  const std::string path = (root / "manifest.json").string();
  save_manifest(path, manifest);
  const DatasetManifest back = load_manifest(path);
  REQUIRE(back.pairs.size() == manifest.pairs.size());
  CHECK(back.seed == manifest.seed);
  for (size_t i = 0; i < back.pairs.size(); ++i) {
    CHECK(back.pairs[i].id == manifest.pairs[i].id);
    CHECK(back.pairs[i].image_path == manifest.pairs[i].image_path);
    CHECK(back.pairs[i].size_class == manifest.pairs[i].size_class);
    CHECK(back.pairs[i].split == manifest.pairs[i].split);
  }
  fs::remove_all(root);
}
