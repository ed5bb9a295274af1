#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "splicegan/image.hpp"
#include "splicegan/manifest.hpp"

namespace splicegan {

// 4-channel sprite with a binary alpha channel ({0, 255}).
struct SpriteAsset {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> rgba;
  std::string category;

  const uint8_t* pixel(int x, int y) const {
    return rgba.data() + (static_cast<size_t>(y) * width + x) * 4;
  }
};

int64_t sprite_opaque_pixel_count(const SpriteAsset& sprite);
SpriteAsset rescale_sprite_nearest(const SpriteAsset& sprite, int target_size);

// Replaces base pixels under the rescaled sprite's opaque alpha and emits the
// matching ground-truth mask. Spliced pixels are guaranteed to differ from the
// base (least-significant-bit nudge on collisions) so the mask is exactly
// recoverable by pixel comparison.
ImageMaskPair splice(const ImageRGB& base, const SpriteAsset& sprite, int x, int y,
                     int target_size, const std::string& id);

enum class Transform { rot90, rot180, rot270, flip_h, flip_v };
inline constexpr int kTransformCount = 5;

const char* to_string(Transform t);
Transform transform_from_string(const std::string& s);

// Geometric transform of a square raster; rotations are counterclockwise.
std::vector<uint8_t> transform_raster(const std::vector<uint8_t>& data, int size,
                                      int channels, Transform t);

// Applies the identical transform to image and mask; the new id is derived
// from (old id, transform).
ImageMaskPair augment(const ImageMaskPair& pair, Transform t);

// Procedural stand-ins for the satellite corpus: textured terrain bases and
// airplane/cloud sprites whose opaque bounding box spans the full canvas.
ImageRGB make_base_image(uint64_t key, int size = kCorpusResolution);
SpriteAsset make_sprite(uint64_t key, int size);

// Reference corpus composition and the scaled variant (counts rounded half
// away from zero).
ClassCounts reference_counts();
ClassCounts scaled_counts(double scale);

struct SynthesisPlanEntry {
  std::string id;
  SizeClass size_class = SizeClass::pristine;
  int orig_global = 0;    // index into the pool of original (non-augmented) pairs
  int orig_in_class = 0;  // index among this class's originals
  std::optional<Transform> transform;  // set for augmented variants
};

// Deterministic synthesis plan: which originals exist, and which augmented
// variants fill the per-class quotas. Augmentation covers the pristine and
// small classes only.
std::vector<SynthesisPlanEntry> make_synthesis_plan(uint64_t seed, double scale);
int count_plan_originals(const std::vector<SynthesisPlanEntry>& plan);

// Builds the pair for one plan entry. Pure function of (entry, seed, bases,
// sprites), so materialization parallelizes with no effect on the output.
ImageMaskPair materialize_pair(const SynthesisPlanEntry& entry, uint64_t seed,
                               const std::vector<ImageRGB>* user_bases,
                               const std::vector<SpriteAsset>* user_sprites,
                               int image_size);

struct SynthesisOptions {
  double scale = 1.0;
  int image_size = kCorpusResolution;
  int workers = 1;
  std::vector<ImageRGB> user_bases;      // optional; procedural when empty
  std::vector<SpriteAsset> user_sprites; // optional; procedural when empty
};

// Synthesizes the corpus under out_dir (images/, masks/) and returns the
// manifest (splits unassigned).
DatasetManifest synthesize_corpus(const std::string& out_dir, uint64_t seed,
                                  const SynthesisOptions& options);

// Populates manifest splits: small+pristine fill train/validation,
// medium+large+pristine fill test, quotas proportional to the reference
// composition, assignment seeded, disjoint and exhaustive.
void build_splits(DatasetManifest& manifest, uint64_t seed);

}  // namespace splicegan
