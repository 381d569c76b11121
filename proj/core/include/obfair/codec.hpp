#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "obfair/image.hpp"

namespace obfair {

/// Decode a PNG or JPEG byte stream (sniffed by magic) to an 8-bit buffer.
/// Palette/16-bit/alpha inputs are normalized to plain gray or RGB.
ImageBuffer decode_image(const std::vector<std::uint8_t>& bytes);

/// Encode as non-progressive 8-bit PNG (gray or RGB).
std::vector<std::uint8_t> encode_png(const ImageBuffer& img);

ImageBuffer read_image_file(const std::string& path);
void write_png_file(const std::string& path, const ImageBuffer& img);

/// Standard-alphabet base64 with padding.
std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

} // namespace obfair
