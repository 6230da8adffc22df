#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "obbtable/geometry.hpp"

namespace obbtable::raster {

struct DecodeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EncodeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct WarpError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

enum class ImageFormat { Png, Jpeg };

/// Guess from magic bytes; falls back to the hint when ambiguous.
ImageFormat sniff_format(const std::vector<std::uint8_t>& bytes, ImageFormat hint);

/// Row-major 8-bit pixel grid, 1 (gray) or 3 (RGB) channels.
struct Raster {
    int width{0};
    int height{0};
    int channels{0};
    std::vector<std::uint8_t> pixels;

    Raster() = default;
    Raster(int w, int h, int c, std::uint8_t fill = 0)
        : width(w), height(h), channels(c),
          pixels(static_cast<std::size_t>(w) * h * c, fill) {}

    std::uint8_t* row(int y) {
        return pixels.data() + static_cast<std::size_t>(y) * width * channels;
    }
    const std::uint8_t* row(int y) const {
        return pixels.data() + static_cast<std::size_t>(y) * width * channels;
    }
    std::uint8_t at(int x, int y, int c) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    void set(int x, int y, int c, std::uint8_t v) {
        pixels[(static_cast<std::size_t>(y) * width + x) * channels + c] = v;
    }

    friend bool operator==(const Raster&, const Raster&) = default;
};

enum class Interpolation { Nearest, Bilinear };

struct WarpOptions {
    Interpolation interpolation{Interpolation::Bilinear};
    std::vector<std::uint8_t> fill;  // per-channel border value; empty means all-zero
};

/// Decode a PNG or JPEG stream. Grayscale stays 1-channel, anything with
/// color becomes 3-channel RGB.
Raster decode(const std::vector<std::uint8_t>& bytes, ImageFormat hint);

/// Encode to PNG (lossless) or JPEG (quality 90).
std::vector<std::uint8_t> encode(const Raster& r, ImageFormat format);

/// Inverse-mapping affine warp: output pixel (u,v) samples the source at
/// m^-1 * (u,v), at integer coordinates (no half-pixel offset, matching
/// the coordinate mapping applied to annotations). Samples outside the
/// source take the fill value.
Raster warp_affine(const Raster& r, const geometry::AffineMap& m,
                   int out_width, int out_height, const WarpOptions& opts = {});

Raster load(const std::string& path);
void save(const Raster& r, const std::string& path);

}  // namespace obbtable::raster
