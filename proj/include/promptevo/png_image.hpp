#pragma once

#include <cstdint>
#include <span>

#include "promptevo/digest.hpp"

namespace promptevo {

/// 8-bit RGB raster.
struct RgbImage {
  int width = 0;
  int height = 0;
  Bytes pixels;  // row-major, 3 bytes per pixel
};

/// Deterministic PNG encoding (fixed filter and compression settings, no
/// timestamp chunks).
Bytes encode_png(const RgbImage& image);
RgbImage decode_png(std::span<const std::uint8_t> data);

bool is_png(std::span<const std::uint8_t> data);
bool is_jpeg(std::span<const std::uint8_t> data);

/// Returns PNG bytes unchanged and transcodes JPEG; any other encoding raises
/// Error(backend_error).
Bytes ensure_png(std::span<const std::uint8_t> data);

/// For tests and tooling.
Bytes encode_jpeg(const RgbImage& image, int quality = 90);

}  // namespace promptevo
