#include "splicegan/dataset_forge.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>

#include "splicegan/errors.hpp"
#include "splicegan/rng.hpp"
#include "splicegan/threading.hpp"

namespace splicegan {

namespace fs = std::filesystem;

int64_t sprite_opaque_pixel_count(const SpriteAsset& sprite) {
  int64_t n = 0;
  for (size_t i = 3; i < sprite.rgba.size(); i += 4) n += (sprite.rgba[i] == 255);
  return n;
}

SpriteAsset rescale_sprite_nearest(const SpriteAsset& sprite, int target_size) {
  if (sprite.width == target_size && sprite.height == target_size) return sprite;
  SpriteAsset out;
  out.width = out.height = target_size;
  out.category = sprite.category;
  out.rgba.resize(static_cast<size_t>(target_size) * target_size * 4);
  const double sy = static_cast<double>(sprite.height) / target_size;
  const double sx = static_cast<double>(sprite.width) / target_size;
  for (int y = 0; y < target_size; ++y) {
    const int iy = std::min(static_cast<int>((y + 0.5) * sy), sprite.height - 1);
    for (int x = 0; x < target_size; ++x) {
      const int ix = std::min(static_cast<int>((x + 0.5) * sx), sprite.width - 1);
      const uint8_t* src = sprite.pixel(ix, iy);
      uint8_t* dst = out.rgba.data() + (static_cast<size_t>(y) * target_size + x) * 4;
      std::copy(src, src + 4, dst);
    }
  }
  return out;
}

ImageMaskPair splice(const ImageRGB& base, const SpriteAsset& sprite, int x, int y,
                     int target_size, const std::string& id) {
  validate(base);
  if (sprite_opaque_pixel_count(sprite) == 0)
    throw EmptySpriteError("sprite has an all-zero alpha channel");
  const SpriteAsset scaled = rescale_sprite_nearest(sprite, target_size);
  if (sprite_opaque_pixel_count(scaled) == 0)
    throw EmptySpriteError("sprite alpha vanished after rescaling to " +
                           std::to_string(target_size));
  if (x < 0 || y < 0 || x + target_size > base.width || y + target_size > base.height)
    throw OutOfBoundsError("sprite placement clips the image edge");

  ImageMaskPair pair;
  pair.id = id;
  pair.size_class = size_class_for_target(target_size);
  pair.image = base;
  pair.mask.width = base.width;
  pair.mask.height = base.height;
  pair.mask.data.assign(static_cast<size_t>(base.width) * base.height, 0);

  for (int j = 0; j < target_size; ++j) {
    for (int i = 0; i < target_size; ++i) {
      const uint8_t* src = scaled.pixel(i, j);
      if (src[3] != 255) continue;
      uint8_t* dst = pair.image.pixel(x + i, y + j);
      const uint8_t* orig = base.pixel(x + i, y + j);
      dst[0] = src[0];
      dst[1] = src[1];
      dst[2] = src[2];
      if (dst[0] == orig[0] && dst[1] == orig[1] && dst[2] == orig[2]) dst[0] ^= 1;
      pair.mask.at(x + i, y + j) = 255;
    }
  }
  return pair;
}

const char* to_string(Transform t) {
  switch (t) {
    case Transform::rot90: return "rot90";
    case Transform::rot180: return "rot180";
    case Transform::rot270: return "rot270";
    case Transform::flip_h: return "flip_h";
    case Transform::flip_v: return "flip_v";
  }
  return "rot90";
}

Transform transform_from_string(const std::string& s) {
  if (s == "rot90") return Transform::rot90;
  if (s == "rot180") return Transform::rot180;
  if (s == "rot270") return Transform::rot270;
  if (s == "flip_h") return Transform::flip_h;
  if (s == "flip_v") return Transform::flip_v;
  throw ConfigError("unknown transform: " + s);
}

std::vector<uint8_t> transform_raster(const std::vector<uint8_t>& data, int size,
                                      int channels, Transform t) {
  if (data.size() != static_cast<size_t>(size) * size * channels)
    throw ShapeError("transform_raster expects a square raster");
  std::vector<uint8_t> out(data.size());
  const int n = size;
  auto src = [&](int x, int y) {
    return data.data() + (static_cast<size_t>(y) * n + x) * channels;
  };
  for (int yo = 0; yo < n; ++yo) {
    for (int xo = 0; xo < n; ++xo) {
      int xi = xo, yi = yo;
      switch (t) {
        case Transform::rot90: xi = n - 1 - yo; yi = xo; break;   // (x,y) -> (y, n-1-x)
        case Transform::rot180: xi = n - 1 - xo; yi = n - 1 - yo; break;
        case Transform::rot270: xi = yo; yi = n - 1 - xo; break;
        case Transform::flip_h: xi = n - 1 - xo; yi = yo; break;
        case Transform::flip_v: xi = xo; yi = n - 1 - yo; break;
      }
      const uint8_t* s = src(xi, yi);
      uint8_t* d = out.data() + (static_cast<size_t>(yo) * n + xo) * channels;
      std::copy(s, s + channels, d);
    }
  }
  return out;
}

ImageMaskPair augment(const ImageMaskPair& pair, Transform t) {
  validate(pair);
  if (pair.image.width != pair.image.height)
    throw ShapeError("augment requires a square image");
  ImageMaskPair out;
  out.id = pair.id + "_" + to_string(t);
  out.size_class = pair.size_class;
  out.image.width = pair.image.width;
  out.image.height = pair.image.height;
  out.image.data = transform_raster(pair.image.data, pair.image.width, 3, t);
  out.mask.width = pair.mask.width;
  out.mask.height = pair.mask.height;
  out.mask.data = transform_raster(pair.mask.data, pair.mask.width, 1, t);
  return out;
}

// ---------------------------------------------------------------------------
// Procedural assets
// ---------------------------------------------------------------------------

namespace {

// Lattice value noise, bilinearly interpolated with smoothstep fractions.
std::vector<float> fractal_noise(Rng& rng, int size, int base_grid, int octaves) {
  std::vector<float> field(static_cast<size_t>(size) * size, 0.0f);
  float amplitude = 1.0f, total = 0.0f;
  for (int o = 0; o < octaves; ++o) {
    const int grid = base_grid << o;
    std::vector<float> lattice(static_cast<size_t>(grid + 1) * (grid + 1));
    for (auto& v : lattice) v = static_cast<float>(rng.uniform());
    const double step = static_cast<double>(grid) / size;
    for (int y = 0; y < size; ++y) {
      const double gy = y * step;
      const int y0 = std::min(static_cast<int>(gy), grid - 1);
      float fy = static_cast<float>(gy - y0);
      fy = fy * fy * (3.0f - 2.0f * fy);
      const float* row0 = lattice.data() + static_cast<size_t>(y0) * (grid + 1);
      const float* row1 = row0 + (grid + 1);
      for (int x = 0; x < size; ++x) {
        const double gx = x * step;
        const int x0 = std::min(static_cast<int>(gx), grid - 1);
        float fx = static_cast<float>(gx - x0);
        fx = fx * fx * (3.0f - 2.0f * fx);
        const float top = row0[x0] + (row0[x0 + 1] - row0[x0]) * fx;
        const float bot = row1[x0] + (row1[x0 + 1] - row1[x0]) * fx;
        field[static_cast<size_t>(y) * size + x] += amplitude * (top + (bot - top) * fy);
      }
    }
    total += amplitude;
    amplitude *= 0.5f;
  }
  for (auto& v : field) v /= total;
  return field;
}

struct Color {
  float r, g, b;
};

Color lerp(const Color& a, const Color& b, float t) {
  return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

uint8_t quantize(float v) {
  return static_cast<uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace

ImageRGB make_base_image(uint64_t key, int size) {
  Rng rng(key);
  const auto elevation = fractal_noise(rng, size, 4, 5);
  const auto moisture = fractal_noise(rng, size, 8, 3);
  Rng grain(stream_key(key, "grain"));

  ImageRGB image;
  image.width = image.height = size;
  image.data.resize(static_cast<size_t>(size) * size * 3);

  const Color water{38, 70, 92}, shore{150, 142, 106}, dry{128, 110, 72},
      lush{52, 94, 48}, rock{120, 116, 108}, ridge{168, 166, 160};
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const size_t i = static_cast<size_t>(y) * size + x;
      const float e = elevation[i], m = moisture[i];
      Color c{};
      if (e < 0.38f) {
        c = lerp(water, shore, std::clamp((e - 0.30f) / 0.08f, 0.0f, 1.0f));
      } else if (e < 0.70f) {
        const Color ground = lerp(dry, lush, m);
        c = lerp(shore, ground, std::clamp((e - 0.38f) / 0.10f, 0.0f, 1.0f));
      } else {
        c = lerp(rock, ridge, std::clamp((e - 0.70f) / 0.30f, 0.0f, 1.0f));
      }
      const float grain_v = static_cast<float>(grain.range(-5, 5));
      uint8_t* px = image.data.data() + i * 3;
      px[0] = quantize(c.r + grain_v);
      px[1] = quantize(c.g + grain_v);
      px[2] = quantize(c.b + grain_v);
    }
  }
  return image;
}

namespace {

struct Ellipse {
  double cx, cy, ax, ay;
  bool contains(int x, int y) const {
    const double dx = (x - cx) / ax, dy = (y - cy) / ay;
    return dx * dx + dy * dy <= 1.0;
  }
};

void assert_full_bbox(const SpriteAsset& sprite) {
  int min_x = sprite.width, max_x = -1, min_y = sprite.height, max_y = -1;
  for (int y = 0; y < sprite.height; ++y)
    for (int x = 0; x < sprite.width; ++x)
      if (sprite.pixel(x, y)[3] == 255) {
        min_x = std::min(min_x, x);
        max_x = std::max(max_x, x);
        min_y = std::min(min_y, y);
        max_y = std::max(max_y, y);
      }
  if (min_x != 0 || min_y != 0 || max_x != sprite.width - 1 || max_y != sprite.height - 1)
    throw Error("procedural sprite does not span its canvas");
}

SpriteAsset make_airplane(Rng& rng, int size) {
  SpriteAsset sprite;
  sprite.width = sprite.height = size;
  sprite.category = "airplane";
  sprite.rgba.assign(static_cast<size_t>(size) * size * 4, 0);

  const double c = (size - 1) / 2.0;
  const double full = size / 2.0;  // touches the canvas edge at the midline
  const int wing_row = static_cast<int>(std::llround(0.44 * (size - 1)));
  const int tail_row = static_cast<int>(std::llround(0.88 * (size - 1)));
  const Ellipse fuselage{c, c, std::max(1.5, 0.13 * size), full};
  const Ellipse wings{c, static_cast<double>(wing_row), full, std::max(1.2, 0.09 * size)};
  const Ellipse tail{c, static_cast<double>(tail_row), std::max(1.2, 0.24 * size),
                     std::max(1.0, 0.05 * size)};

  const float body_tone = static_cast<float>(rng.range(190, 225));
  const float wing_tone = body_tone - static_cast<float>(rng.range(25, 45));
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const bool in_fuselage = fuselage.contains(x, y);
      const bool in_wing = wings.contains(x, y) || tail.contains(x, y);
      if (!in_fuselage && !in_wing) continue;
      const float tone = in_fuselage ? body_tone : wing_tone;
      const float shade = 1.0f - 0.15f * static_cast<float>(std::abs(x - c) / full);
      uint8_t* px = sprite.rgba.data() + (static_cast<size_t>(y) * size + x) * 4;
      px[0] = quantize(tone * shade);
      px[1] = quantize(tone * shade);
      px[2] = quantize((tone + 8.0f) * shade);
      px[3] = 255;
    }
  }
  return sprite;
}

SpriteAsset make_cloud(Rng& rng, int size) {
  SpriteAsset sprite;
  sprite.width = sprite.height = size;
  sprite.category = "cloud";
  sprite.rgba.assign(static_cast<size_t>(size) * size * 4, 0);

  const double c = (size - 1) / 2.0;
  const double full = size / 2.0;
  std::vector<Ellipse> puffs;
  puffs.push_back({c, c, full, 0.34 * size});  // spans left-right
  puffs.push_back({c, c, 0.22 * size, full});  // spans top-bottom
  const int extra = static_cast<int>(rng.range(4, 7));
  for (int i = 0; i < extra; ++i) {
    const double px = rng.uniform(0.25, 0.75) * (size - 1);
    const double py = rng.uniform(0.25, 0.75) * (size - 1);
    const double r = rng.uniform(0.10, 0.22) * size;
    puffs.push_back({px, py, r, r});
  }

  Rng shade(stream_key(0x9d2c5680, "cloud_shade", size));
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      bool inside = false;
      for (const auto& p : puffs)
        if (p.contains(x, y)) {
          inside = true;
          break;
        }
      if (!inside) continue;
      const float tone = 232.0f + static_cast<float>(shade.range(-10, 10));
      uint8_t* px = sprite.rgba.data() + (static_cast<size_t>(y) * size + x) * 4;
      px[0] = quantize(tone);
      px[1] = quantize(tone);
      px[2] = quantize(tone + 4.0f);
      px[3] = 255;
    }
  }
  return sprite;
}

}  // namespace

SpriteAsset make_sprite(uint64_t key, int size) {
  if (size < 8) throw ConfigError("sprite size too small: " + std::to_string(size));
  Rng rng(key);
  SpriteAsset sprite = rng.bernoulli(0.5) ? make_airplane(rng, size) : make_cloud(rng, size);
  assert_full_bbox(sprite);
  return sprite;
}

// ---------------------------------------------------------------------------
// Synthesis plan
// ---------------------------------------------------------------------------

ClassCounts reference_counts() { return ClassCounts{158, 32, 31, 123}; }

ClassCounts scaled_counts(double scale) {
  if (scale <= 0.0) throw ConfigError("scale must be positive");
  const ClassCounts ref = reference_counts();
  return ClassCounts{std::llround(ref.small * scale), std::llround(ref.medium * scale),
                     std::llround(ref.large * scale), std::llround(ref.pristine * scale)};
}

namespace {

constexpr std::array<SizeClass, 4> kClassOrder = {SizeClass::small, SizeClass::medium,
                                                  SizeClass::large, SizeClass::pristine};

bool augmentable(SizeClass c) {
  return c == SizeClass::small || c == SizeClass::pristine;
}

int target_size_for(SizeClass c) {
  switch (c) {
    case SizeClass::small: return 32;
    case SizeClass::medium: return 64;
    case SizeClass::large: return 128;
    case SizeClass::pristine: return 0;
  }
  return 0;
}

}  // namespace

std::vector<SynthesisPlanEntry> make_synthesis_plan(uint64_t seed, double scale) {
  const ClassCounts want = scaled_counts(scale);
  std::vector<SynthesisPlanEntry> plan;
  int orig_global = 0;
  for (SizeClass cls : kClassOrder) {
    const int64_t n = want.of(cls);
    // Augmentation (identity + 5 transforms) stretches each original into up
    // to 6 pairs for the augmentable classes.
    const int64_t per_original = augmentable(cls) ? 6 : 1;
    const int64_t originals = (n + per_original - 1) / per_original;
    std::vector<SynthesisPlanEntry> base_entries;
    for (int64_t i = 0; i < originals; ++i) {
      SynthesisPlanEntry e;
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%s_%04d", to_string(cls), static_cast<int>(i));
      e.id = buf;
      e.size_class = cls;
      e.orig_global = orig_global++;
      e.orig_in_class = static_cast<int>(i);
      plan.push_back(e);
      base_entries.push_back(e);
    }
    // Remaining quota is filled with augmented variants, cycling round-robin
    // over originals; the transform order per original is a seeded shuffle.
    std::vector<std::array<Transform, kTransformCount>> orders(base_entries.size());
    for (size_t i = 0; i < base_entries.size(); ++i) {
      std::array<Transform, kTransformCount> order = {Transform::rot90, Transform::rot180,
                                                      Transform::rot270, Transform::flip_h,
                                                      Transform::flip_v};
      Rng rng(stream_key(seed, "augment_order", static_cast<uint64_t>(base_entries[i].orig_global)));
      rng.shuffle(order.begin(), order.end());
      orders[i] = order;
    }
    const int64_t variants = n - originals;
    for (int64_t k = 0; k < variants; ++k) {
      const size_t orig = static_cast<size_t>(k % originals);
      const size_t depth = static_cast<size_t>(k / originals);
      SynthesisPlanEntry e = base_entries[orig];
      e.transform = orders[orig][depth];
      e.id = base_entries[orig].id + "_" + to_string(*e.transform);
      plan.push_back(e);
    }
  }
  return plan;
}

int count_plan_originals(const std::vector<SynthesisPlanEntry>& plan) {
  int n = 0;
  for (const auto& e : plan) n += !e.transform.has_value();
  return n;
}

ImageMaskPair materialize_pair(const SynthesisPlanEntry& entry, uint64_t seed,
                               const std::vector<ImageRGB>* user_bases,
                               const std::vector<SpriteAsset>* user_sprites,
                               int image_size) {
  const uint64_t idx = static_cast<uint64_t>(entry.orig_global);
  std::string orig_id = entry.id;
  if (entry.transform) {
    const std::string suffix = std::string("_") + to_string(*entry.transform);
    orig_id = entry.id.substr(0, entry.id.size() - suffix.size());
  }
  ImageRGB base;
  if (user_bases && !user_bases->empty()) {
    if (idx >= user_bases->size())
      throw InsufficientBasesError("not enough base images for the requested corpus");
    base = (*user_bases)[idx];
    validate(base);
    if (base.width != image_size || base.height != image_size)
      throw ConfigError("user base image is not " + std::to_string(image_size) + " px square");
  } else {
    base = make_base_image(stream_key(seed, "base", idx), image_size);
  }

  ImageMaskPair pair;
  if (entry.size_class == SizeClass::pristine) {
    pair.id = orig_id;
    pair.image = std::move(base);
    pair.mask.width = pair.image.width;
    pair.mask.height = pair.image.height;
    pair.mask.data.assign(static_cast<size_t>(pair.image.width) * pair.image.height, 0);
    pair.size_class = SizeClass::pristine;
  } else {
    const int target = target_size_for(entry.size_class);
    SpriteAsset sprite;
    if (user_sprites && !user_sprites->empty()) {
      Rng pick(stream_key(seed, "sprite_pick", idx));
      sprite = (*user_sprites)[pick.below(user_sprites->size())];
    } else {
      sprite = make_sprite(stream_key(seed, "sprite", idx), target);
    }
    Rng place(stream_key(seed, "place", idx));
    const int x = static_cast<int>(place.range(0, image_size - target));
    const int y = static_cast<int>(place.range(0, image_size - target));
    pair = splice(base, sprite, x, y, target, orig_id);
  }

  if (entry.transform) pair = augment(pair, *entry.transform);
  return pair;
}

DatasetManifest synthesize_corpus(const std::string& out_dir, uint64_t seed,
                                  const SynthesisOptions& options) {
  const auto plan = make_synthesis_plan(seed, options.scale);
  const int originals = count_plan_originals(plan);
  if (!options.user_bases.empty() &&
      static_cast<int>(options.user_bases.size()) < originals)
    throw InsufficientBasesError("need " + std::to_string(originals) + " base images, got " +
                                 std::to_string(options.user_bases.size()));

  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "images", ec);
  fs::create_directories(fs::path(out_dir) / "masks", ec);
  if (!fs::is_directory(fs::path(out_dir) / "images") ||
      !fs::is_directory(fs::path(out_dir) / "masks"))
    throw IoError("cannot create output directories under " + out_dir);

  DatasetManifest manifest;
  manifest.seed = seed;
  manifest.pairs.resize(plan.size());

  const std::vector<ImageRGB>* bases = options.user_bases.empty() ? nullptr : &options.user_bases;
  const std::vector<SpriteAsset>* sprites =
      options.user_sprites.empty() ? nullptr : &options.user_sprites;

  parallel_for(static_cast<int64_t>(plan.size()), options.workers, [&](int64_t i) {
    const auto& entry = plan[static_cast<size_t>(i)];
    ImageMaskPair pair = materialize_pair(entry, seed, bases, sprites, options.image_size);
    const std::string image_rel = "images/" + pair.id + ".png";
    const std::string mask_rel = "masks/" + pair.id + ".png";
    save_image_png((fs::path(out_dir) / image_rel).string(), pair.image);
    save_mask_png((fs::path(out_dir) / mask_rel).string(), pair.mask);
    PairRecord rec;
    rec.id = pair.id;
    rec.image_path = image_rel;
    rec.mask_path = mask_rel;
    rec.size_class = pair.size_class;
    manifest.pairs[static_cast<size_t>(i)] = std::move(rec);
  });
  return manifest;
}

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

namespace {

// Largest-remainder apportionment of n into three split quotas with the given
// reference weights; ties broken by split order (train, validation, test).
std::array<int64_t, 3> apportion(int64_t n, const std::array<int64_t, 3>& weights) {
  const int64_t total = weights[0] + weights[1] + weights[2];
  std::array<int64_t, 3> quota{};
  std::array<double, 3> frac{};
  int64_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = static_cast<double>(n) * weights[i] / total;
    quota[i] = static_cast<int64_t>(exact);
    frac[i] = exact - static_cast<double>(quota[i]);
    assigned += quota[i];
  }
  std::array<int, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return frac[a] > frac[b]; });
  for (int64_t left = n - assigned, i = 0; left > 0; --left, ++i) quota[order[i % 3]] += 1;
  // Splits with a positive reference weight must not starve when the class
  // has enough members to cover them.
  int positive = 0;
  for (int i = 0; i < 3; ++i) positive += weights[i] > 0;
  if (n >= positive) {
    for (int i = 0; i < 3; ++i) {
      while (weights[i] > 0 && quota[i] == 0) {
        int largest = 0;
        for (int j = 1; j < 3; ++j)
          if (quota[j] > quota[largest]) largest = j;
        quota[largest] -= 1;
        quota[i] += 1;
      }
    }
  }
  return quota;
}

}  // namespace

void build_splits(DatasetManifest& manifest, uint64_t seed) {
  const ClassCounts counts = manifest.counts();
  if (counts.small < 2)
    throw QuotaUnsatisfiableError("need at least 2 small-forgery pairs for train/validation");
  if (counts.medium + counts.large < 1)
    throw QuotaUnsatisfiableError("need medium or large pairs to populate the test split");
  if (counts.pristine < 3)
    throw QuotaUnsatisfiableError("need at least 3 pristine pairs across the splits");

  // Reference composition: train = 128 small + 90 pristine, validation =
  // 32 small + 18 pristine, test = 32 medium + 31 large + 15 pristine.
  const std::array<std::array<int64_t, 3>, 4> weights = {{
      {128, 32, 0},  // small
      {0, 0, 32},    // medium
      {0, 0, 31},    // large
      {90, 18, 15},  // pristine
  }};
  const std::array<SizeClass, 4> classes = {SizeClass::small, SizeClass::medium,
                                            SizeClass::large, SizeClass::pristine};

  for (size_t ci = 0; ci < classes.size(); ++ci) {
    std::vector<size_t> members;
    for (size_t i = 0; i < manifest.pairs.size(); ++i)
      if (manifest.pairs[i].size_class == classes[ci]) members.push_back(i);
    if (members.empty()) continue;
    const auto quota = apportion(static_cast<int64_t>(members.size()), weights[ci]);
    Rng rng(stream_key(seed, "split", ci));
    rng.shuffle(members.begin(), members.end());
    size_t cursor = 0;
    const std::array<Split, 3> splits = {Split::train, Split::validation, Split::test};
    for (int si = 0; si < 3; ++si)
      for (int64_t k = 0; k < quota[static_cast<size_t>(si)]; ++k)
        manifest.pairs[members[cursor++]].split = splits[static_cast<size_t>(si)];
  }
}

}  // namespace splicegan
