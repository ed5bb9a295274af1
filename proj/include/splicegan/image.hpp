#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "splicegan/tensor.hpp"

namespace splicegan {

// Pixel coordinates are (x, y) = (column, row) with the origin at the top
// left, matching raster file order.

inline constexpr int kCorpusResolution = 650;

// 3-channel 8-bit raster, row-major interleaved RGB.
struct ImageRGB {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> data;

  uint8_t* pixel(int x, int y) { return data.data() + (static_cast<size_t>(y) * width + x) * 3; }
  const uint8_t* pixel(int x, int y) const {
    return data.data() + (static_cast<size_t>(y) * width + x) * 3;
  }
};

// Binary ground-truth mask: 255 exactly where the paired image pixel was
// replaced by splicing, 0 elsewhere.
struct ForgeryMask {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> data;

  uint8_t& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
  uint8_t at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
};

// Generator output: per-pixel reals in [0, 1].
struct SoftMask {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  float& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
  float at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
};

enum class SizeClass { pristine, small, medium, large };

const char* to_string(SizeClass c);
SizeClass size_class_from_string(const std::string& s);
// Target edge length in pixels -> size class; only {32, 64, 128} are valid.
SizeClass size_class_for_target(int target_size);

struct ImageMaskPair {
  std::string id;
  ImageRGB image;
  ForgeryMask mask;
  SizeClass size_class = SizeClass::pristine;
};

enum class Label { pristine, forged };

struct DetectionResult {
  double score = 0.0;      // mask-estimate average on the 0..255 scale
  double threshold = 0.0;  // T
  Label label = Label::pristine;
};

int64_t mask_forged_pixel_count(const ForgeryMask& mask);

void validate(const ImageRGB& image);
void validate(const ForgeryMask& mask);   // enforces values in {0, 255}
void validate(const SoftMask& mask);      // enforces values in [0, 1]
void validate(const ImageMaskPair& pair); // dimensions + size_class/mask coherence

// PNG round trips (bit-exact).
ImageRGB load_image_png(const std::string& path);
void save_image_png(const std::string& path, const ImageRGB& image);
ForgeryMask load_mask_png(const std::string& path);
void save_mask_png(const std::string& path, const ForgeryMask& mask);
SoftMask load_soft_mask_png(const std::string& path);
// Stored as 8-bit gray with value = round(255 * p).
void save_soft_mask_png(const std::string& path, const SoftMask& mask);

// Conversions between rasters and CHW float tensors in [0, 1].
TensorF image_to_chw(const ImageRGB& image);
TensorF mask_to_chw(const ForgeryMask& mask);  // 1xHxW with values in {0, 1}
SoftMask chw_to_soft_mask(const TensorF& chw); // expects 1xHxW or HxW

// Bilinear resize of a CHW tensor (half-pixel center convention).
TensorF resize_bilinear_chw(const TensorF& chw, int out_h, int out_w);
SoftMask resize_bilinear(const SoftMask& mask, int out_h, int out_w);
// Nearest-neighbor resize keeps masks binary.
ForgeryMask resize_nearest(const ForgeryMask& mask, int out_h, int out_w);

}  // namespace splicegan
