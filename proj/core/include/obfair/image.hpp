#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "obfair/errors.hpp"

namespace obfair {

/// Raw 8-bit interleaved pixel grid, row-major. channels is 1 (gray) or 3 (RGB).
struct ImageBuffer {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<std::uint8_t> data;

    ImageBuffer() = default;
    ImageBuffer(int w, int h, int c, std::uint8_t fill = 0)
        : width(w), height(h), channels(c),
          data(static_cast<std::size_t>(w) * h * c, fill) {
        validate();
    }

    std::uint8_t& at(int x, int y, int c) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::uint8_t at(int x, int y, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }

    void validate() const {
        if (width < 1 || height < 1)
            throw ImageError("image dimensions must be >= 1");
        if (channels != 1 && channels != 3)
            throw ImageError("image must have 1 or 3 channels");
        if (data.size() != static_cast<std::size_t>(width) * height * channels)
            throw ImageError("image data length does not match width*height*channels");
    }

    bool operator==(const ImageBuffer& o) const = default;
};

/// Axis-aligned face bounding box; the region all obfuscation applies to.
struct FaceBox {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    /// Linear ROI size used to normalize obfuscation levels.
    int roi_size() const { return w > h ? w : h; }

    bool valid_for(const ImageBuffer& img) const {
        return w >= 1 && h >= 1 && x >= 0 && y >= 0 && x + w <= img.width &&
               y + h <= img.height;
    }

    bool operator==(const FaceBox& o) const = default;
};

enum class ObfuscationMethod { gaussian_blur, pixelation };

inline std::string to_string(ObfuscationMethod m) {
    return m == ObfuscationMethod::gaussian_blur ? "gaussian_blur" : "pixelation";
}

inline ObfuscationMethod obfuscation_method_from_string(const std::string& s) {
    if (s == "gaussian_blur" || s == "blur") return ObfuscationMethod::gaussian_blur;
    if (s == "pixelation" || s == "pixelate") return ObfuscationMethod::pixelation;
    throw ConfigError("unknown obfuscation method: " + s);
}

/// 8-bit luma (ITU-R BT.601 weights), rounded half up. Gray images pass through.
inline std::uint8_t luma(const ImageBuffer& img, int x, int y) {
    if (img.channels == 1) return img.at(x, y, 0);
    double v = 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) +
               0.114 * img.at(x, y, 2);
    return static_cast<std::uint8_t>(v + 0.5);
}

} // namespace obfair
