#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace splicegan {

// 8-bit raster as decoded from / encoded to PNG. channels is 1 (gray),
// 3 (RGB) or 4 (RGBA); data is row-major, interleaved.
struct RasterU8 {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<uint8_t> data;
};

RasterU8 read_png(const std::string& path);

// Lossless write with fixed encoder settings, so identical pixels always
// produce identical bytes on disk.
void write_png(const std::string& path, int width, int height, int channels,
               const uint8_t* data);

}  // namespace splicegan
