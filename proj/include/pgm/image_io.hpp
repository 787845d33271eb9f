#pragma once

#include "pgm/image.hpp"

#include <filesystem>

namespace pgm {

/// Reads an 8-bit PNG, binary PPM (P6) or binary PGM (P5) by content sniffing. Values land in
/// [0, 255]; gray inputs give 1 channel, colour inputs 3 (alpha dropped).
RasterImage read_image(const std::filesystem::path& path);

/// 8-bit PNG; values are rounded and clamped to [0, 255]. Accepts 1 or 3 channels.
void write_png(const RasterImage& img, const std::filesystem::path& path);

/// Binary PGM/PPM depending on channel count.
void write_pnm(const RasterImage& img, const std::filesystem::path& path);

/// Dispatches on extension: .png -> PNG, otherwise PNM.
void write_image(const RasterImage& img, const std::filesystem::path& path);

}  // namespace pgm
