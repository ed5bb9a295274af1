#include <doctest.h>

#include "splicegan/image.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "splicegan/errors.hpp"
#include "splicegan/rng.hpp"

using namespace splicegan;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() / "splicegan_core_types_test";
  fs::create_directories(dir);
  return dir;
}

ForgeryMask uniform_mask(int size, uint8_t value) {
  ForgeryMask mask;
  mask.width = mask.height = size;
  mask.data.assign(static_cast<size_t>(size) * size, value);
  return mask;
}

}  // namespace

TEST_CASE("mask_forged_pixel_count counts exactly the 255 pixels") {
  CHECK(mask_forged_pixel_count(uniform_mask(650, 0)) == 0);
  CHECK(mask_forged_pixel_count(uniform_mask(650, 255)) == 422500);

  ForgeryMask block = uniform_mask(650, 0);
  for (int y = 100; y < 228; ++y)
    for (int x = 300; x < 428; ++x) block.at(x, y) = 255;
  CHECK(mask_forged_pixel_count(block) == 128 * 128);
}

TEST_CASE("forgery mask validation rejects intermediate values") {
  ForgeryMask mask = uniform_mask(8, 0);
  CHECK_NOTHROW(validate(mask));
  mask.data[3] = 128;
  CHECK_THROWS_AS(validate(mask), ShapeError);
}

TEST_CASE("size classes map to target edge lengths") {
  CHECK(size_class_for_target(32) == SizeClass::small);
  CHECK(size_class_for_target(64) == SizeClass::medium);
  CHECK(size_class_for_target(128) == SizeClass::large);
  CHECK_THROWS_AS(size_class_for_target(48), ConfigError);
  CHECK(size_class_from_string("large") == SizeClass::large);
  CHECK(std::string(to_string(SizeClass::pristine)) == "pristine");
}

TEST_CASE("pairs round-trip through PNG without any pixel change") {
  const auto dir = temp_dir();
  Rng rng(12345);
  ImageRGB image;
  image.width = image.height = 64;
  image.data.resize(64 * 64 * 3);
  for (auto& v : image.data) v = static_cast<uint8_t>(rng.below(256));
  ForgeryMask mask = uniform_mask(64, 0);
  for (int i = 0; i < 64 * 64; ++i) mask.data[static_cast<size_t>(i)] = rng.bernoulli(0.2) ? 255 : 0;

  const std::string ipath = (dir / "image.png").string();
  const std::string mpath = (dir / "mask.png").string();
  save_image_png(ipath, image);
  save_mask_png(mpath, mask);
  const ImageRGB image2 = load_image_png(ipath);
  const ForgeryMask mask2 = load_mask_png(mpath);
  CHECK(image2.width == image.width);
  CHECK(image2.data == image.data);
  CHECK(mask2.data == mask.data);

  SUBCASE("writing the same pixels twice produces identical bytes") {
    const std::string again = (dir / "image_again.png").string();
    save_image_png(again, image);
    std::ifstream f1(ipath, std::ios::binary), f2(again, std::ios::binary);
    const std::string b1((std::istreambuf_iterator<char>(f1)), {});
    const std::string b2((std::istreambuf_iterator<char>(f2)), {});
    CHECK(b1 == b2);
  }
}

TEST_CASE("soft masks serialize as round(255 * p)") {
  const auto dir = temp_dir();
  SoftMask soft;
  soft.width = 3;
  soft.height = 1;
  soft.data = {0.0f, 0.5f, 1.0f};
  const std::string path = (dir / "soft.png").string();
  save_soft_mask_png(path, soft);
  const SoftMask back = load_soft_mask_png(path);
  CHECK(back.data[0] == doctest::Approx(0.0));
  CHECK(back.data[1] == doctest::Approx(128.0 / 255.0));
  CHECK(back.data[2] == doctest::Approx(1.0));
}

TEST_CASE("bilinear resize preserves constant fields and value range") {
  TensorF chw({1, 13, 13}, 0.37f);
  const TensorF up = resize_bilinear_chw(chw, 650, 650);
  CHECK(up.shape == std::vector<int>({1, 650, 650}));
  for (float v : up.data) CHECK(v == doctest::Approx(0.37f));
}

TEST_CASE("nearest resize keeps masks binary") {
  Rng rng(5);
  ForgeryMask mask = uniform_mask(650, 0);
  for (auto& v : mask.data) v = rng.bernoulli(0.3) ? 255 : 0;
  const ForgeryMask small = resize_nearest(mask, 256, 256);
  CHECK(small.width == 256);
  CHECK_NOTHROW(validate(small));
}

TEST_CASE("image/chw conversion scales to [0,1] channel-major") {
  ImageRGB image;
  image.width = 2;
  image.height = 1;
  image.data = {255, 0, 0, 0, 255, 0};  // red, green
  const TensorF chw = image_to_chw(image);
  CHECK(chw.shape == std::vector<int>({3, 1, 2}));
  CHECK(chw[0] == doctest::Approx(1.0f));  // R plane: red pixel
  CHECK(chw[1] == doctest::Approx(0.0f));
  CHECK(chw[2] == doctest::Approx(0.0f));  // G plane: red pixel
  CHECK(chw[3] == doctest::Approx(1.0f));
}
