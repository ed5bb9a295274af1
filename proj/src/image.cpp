#include "splicegan/image.hpp"

#include <algorithm>
#include <cmath>

#include "splicegan/errors.hpp"
#include "splicegan/png_io.hpp"

namespace splicegan {

const char* to_string(SizeClass c) {
  switch (c) {
    case SizeClass::pristine: return "pristine";
    case SizeClass::small: return "small";
    case SizeClass::medium: return "medium";
    case SizeClass::large: return "large";
  }
  return "pristine";
}

SizeClass size_class_from_string(const std::string& s) {
  if (s == "pristine") return SizeClass::pristine;
  if (s == "small") return SizeClass::small;
  if (s == "medium") return SizeClass::medium;
  if (s == "large") return SizeClass::large;
  throw ConfigError("unknown size class: " + s);
}

SizeClass size_class_for_target(int target_size) {
  switch (target_size) {
    case 32: return SizeClass::small;
    case 64: return SizeClass::medium;
    case 128: return SizeClass::large;
    default: throw ConfigError("target size must be one of 32/64/128, got " + std::to_string(target_size));
  }
}

int64_t mask_forged_pixel_count(const ForgeryMask& mask) {
  int64_t n = 0;
  for (uint8_t v : mask.data) n += (v == 255);
  return n;
}

void validate(const ImageRGB& image) {
  if (image.width <= 0 || image.height <= 0)
    throw ShapeError("image has non-positive dimensions");
  if (image.data.size() != static_cast<size_t>(image.width) * image.height * 3)
    throw ShapeError("image data length does not match width*height*3");
}

void validate(const ForgeryMask& mask) {
  if (mask.data.size() != static_cast<size_t>(mask.width) * mask.height)
    throw ShapeError("mask data length does not match width*height");
  for (uint8_t v : mask.data)
    if (v != 0 && v != 255) throw ShapeError("forgery mask value outside {0, 255}");
}

void validate(const SoftMask& mask) {
  if (mask.data.size() != static_cast<size_t>(mask.width) * mask.height)
    throw ShapeError("soft mask data length does not match width*height");
  for (float v : mask.data)
    if (!(v >= 0.0f && v <= 1.0f)) throw ShapeError("soft mask value outside [0, 1]");
}

void validate(const ImageMaskPair& pair) {
  validate(pair.image);
  validate(pair.mask);
  if (pair.image.width != pair.mask.width || pair.image.height != pair.mask.height)
    throw ShapeError("image and mask dimensions differ for pair " + pair.id);
  const bool empty_mask = mask_forged_pixel_count(pair.mask) == 0;
  if ((pair.size_class == SizeClass::pristine) != empty_mask)
    throw ShapeError("size_class pristine must coincide with an all-zero mask: " + pair.id);
}

ImageRGB load_image_png(const std::string& path) {
  RasterU8 raster = read_png(path);
  if (raster.channels != 3) throw IoError("expected 8-bit RGB PNG: " + path);
  ImageRGB image{raster.width, raster.height, std::move(raster.data)};
  validate(image);
  return image;
}

void save_image_png(const std::string& path, const ImageRGB& image) {
  validate(image);
  write_png(path, image.width, image.height, 3, image.data.data());
}

ForgeryMask load_mask_png(const std::string& path) {
  RasterU8 raster = read_png(path);
  if (raster.channels != 1) throw IoError("expected 8-bit grayscale PNG: " + path);
  ForgeryMask mask{raster.width, raster.height, std::move(raster.data)};
  validate(mask);
  return mask;
}

void save_mask_png(const std::string& path, const ForgeryMask& mask) {
  validate(mask);
  write_png(path, mask.width, mask.height, 1, mask.data.data());
}

SoftMask load_soft_mask_png(const std::string& path) {
  RasterU8 raster = read_png(path);
  if (raster.channels != 1) throw IoError("expected 8-bit grayscale PNG: " + path);
  SoftMask mask;
  mask.width = raster.width;
  mask.height = raster.height;
  mask.data.resize(raster.data.size());
  for (size_t i = 0; i < raster.data.size(); ++i)
    mask.data[i] = static_cast<float>(raster.data[i]) / 255.0f;
  return mask;
}

void save_soft_mask_png(const std::string& path, const SoftMask& mask) {
  validate(mask);
  std::vector<uint8_t> bytes(mask.data.size());
  for (size_t i = 0; i < mask.data.size(); ++i)
    bytes[i] = static_cast<uint8_t>(std::lround(255.0f * mask.data[i]));
  write_png(path, mask.width, mask.height, 1, bytes.data());
}

TensorF image_to_chw(const ImageRGB& image) {
  validate(image);
  TensorF out({3, image.height, image.width});
  const int hw = image.height * image.width;
  for (int c = 0; c < 3; ++c) {
    float* dst = out.ptr() + static_cast<int64_t>(c) * hw;
    const uint8_t* src = image.data.data() + c;
    for (int i = 0; i < hw; ++i) dst[i] = static_cast<float>(src[static_cast<size_t>(i) * 3]) / 255.0f;
  }
  return out;
}

TensorF mask_to_chw(const ForgeryMask& mask) {
  validate(mask);
  TensorF out({1, mask.height, mask.width});
  for (int64_t i = 0; i < out.size(); ++i) out[i] = mask.data[static_cast<size_t>(i)] ? 1.0f : 0.0f;
  return out;
}

SoftMask chw_to_soft_mask(const TensorF& chw) {
  int h = 0, w = 0;
  if (chw.ndim() == 3 && chw.dim(0) == 1) {
    h = chw.dim(1);
    w = chw.dim(2);
  } else if (chw.ndim() == 2) {
    h = chw.dim(0);
    w = chw.dim(1);
  } else {
    throw ShapeError("expected 1xHxW or HxW tensor for soft mask");
  }
  SoftMask mask;
  mask.width = w;
  mask.height = h;
  mask.data.assign(chw.data.begin(), chw.data.end());
  for (float& v : mask.data) v = std::clamp(v, 0.0f, 1.0f);
  return mask;
}

namespace {

// Half-pixel center mapping with edge clamp.
inline void bilinear_coeffs(int out_size, int in_size, std::vector<int>& lo,
                            std::vector<int>& hi, std::vector<float>& frac) {
  lo.resize(static_cast<size_t>(out_size));
  hi.resize(static_cast<size_t>(out_size));
  frac.resize(static_cast<size_t>(out_size));
  const double scale = static_cast<double>(in_size) / out_size;
  for (int o = 0; o < out_size; ++o) {
    double src = (o + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in_size - 1));
    const int l = static_cast<int>(src);
    lo[static_cast<size_t>(o)] = l;
    hi[static_cast<size_t>(o)] = std::min(l + 1, in_size - 1);
    frac[static_cast<size_t>(o)] = static_cast<float>(src - l);
  }
}

}  // namespace

TensorF resize_bilinear_chw(const TensorF& chw, int out_h, int out_w) {
  if (chw.ndim() != 3) throw ShapeError("resize_bilinear_chw expects CxHxW");
  const int channels = chw.dim(0), in_h = chw.dim(1), in_w = chw.dim(2);
  if (in_h == out_h && in_w == out_w) return chw;
  std::vector<int> ylo, yhi, xlo, xhi;
  std::vector<float> yf, xf;
  bilinear_coeffs(out_h, in_h, ylo, yhi, yf);
  bilinear_coeffs(out_w, in_w, xlo, xhi, xf);
  TensorF out({channels, out_h, out_w});
  for (int c = 0; c < channels; ++c) {
    const float* src = chw.ptr() + static_cast<int64_t>(c) * in_h * in_w;
    float* dst = out.ptr() + static_cast<int64_t>(c) * out_h * out_w;
    for (int y = 0; y < out_h; ++y) {
      const float* row0 = src + static_cast<int64_t>(ylo[static_cast<size_t>(y)]) * in_w;
      const float* row1 = src + static_cast<int64_t>(yhi[static_cast<size_t>(y)]) * in_w;
      const float fy = yf[static_cast<size_t>(y)];
      for (int x = 0; x < out_w; ++x) {
        const int x0 = xlo[static_cast<size_t>(x)], x1 = xhi[static_cast<size_t>(x)];
        const float fx = xf[static_cast<size_t>(x)];
        const float top = row0[x0] + (row0[x1] - row0[x0]) * fx;
        const float bot = row1[x0] + (row1[x1] - row1[x0]) * fx;
        dst[static_cast<int64_t>(y) * out_w + x] = top + (bot - top) * fy;
      }
    }
  }
  return out;
}

SoftMask resize_bilinear(const SoftMask& mask, int out_h, int out_w) {
  TensorF chw({1, mask.height, mask.width});
  std::copy(mask.data.begin(), mask.data.end(), chw.data.begin());
  return chw_to_soft_mask(resize_bilinear_chw(chw, out_h, out_w));
}

ForgeryMask resize_nearest(const ForgeryMask& mask, int out_h, int out_w) {
  ForgeryMask out;
  out.width = out_w;
  out.height = out_h;
  out.data.resize(static_cast<size_t>(out_w) * out_h);
  const double sy = static_cast<double>(mask.height) / out_h;
  const double sx = static_cast<double>(mask.width) / out_w;
  for (int y = 0; y < out_h; ++y) {
    const int iy = std::min(static_cast<int>((y + 0.5) * sy), mask.height - 1);
    for (int x = 0; x < out_w; ++x) {
      const int ix = std::min(static_cast<int>((x + 0.5) * sx), mask.width - 1);
      out.data[static_cast<size_t>(y) * out_w + x] = mask.at(ix, iy);
    }
  }
  return out;
}

}  // namespace splicegan
