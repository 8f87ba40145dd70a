#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "progdf/types.hpp"

namespace progdf {

// 8-bit RGB PNG; each channel is clamped to [0, 1] and rounded to the
// nearest of 256 levels.
std::vector<std::uint8_t> encode_png(const ImageBuffer& img);
ImageBuffer decode_png(std::span<const std::uint8_t> bytes);

// 1-bit grayscale PNG (white = set). Decoding accepts any PNG and treats a
// pixel as set when its first channel is at least half intensity.
std::vector<std::uint8_t> encode_mask_png(const Mask2D& mask);
Mask2D decode_mask_png(std::span<const std::uint8_t> bytes);

}  // namespace progdf
