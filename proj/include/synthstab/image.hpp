#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace synthstab {

/// Single-channel raster, row-major, intensities in [0, 255].
struct Frame {
    int width = 0;
    int height = 0;
    std::vector<float> pixels;

    Frame() = default;
    Frame(int w, int h, float fill = 0.0f)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

    bool empty() const { return width <= 0 || height <= 0; }
    std::size_t size() const { return pixels.size(); }

    float at(int x, int y) const { return pixels[index(x, y)]; }
    float& at(int x, int y) { return pixels[index(x, y)]; }

    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x);
    }

    bool operator==(const Frame&) const = default;
};

/// True when (x, y) lies inside the pixel-centre grid [0, w-1] x [0, h-1].
inline bool inside_grid(double x, double y, int w, int h) {
    constexpr double eps = 1e-9;
    return x >= -eps && y >= -eps && x <= (w - 1) + eps && y <= (h - 1) + eps;
}

/// Bilinear sample; returns `fill` outside the pixel-centre grid. Exact
/// (no blending) when a coordinate falls on an integer.
float sample_bilinear(const Frame& f, double x, double y, float fill, bool* inside = nullptr);

/// Sample without the inside test: coordinates are clamped to the grid.
float sample_bilinear_clamped(const Frame& f, double x, double y);

/// Rounds to integers in [0, 255], matching what an 8-bit sensor stores.
void quantize(Frame& f);

/// 2x2 box-filter downsample (odd trailing row/column dropped).
Frame downsample2(const Frame& f);

/// Axis-aligned sub-image starting at (x0, y0).
Frame sub_image(const Frame& f, int x0, int y0, int w, int h);

/// Centred window of ratio*W x ratio*H, each side floored to an even number
/// of pixels; ratio 1 keeps the full frame.
struct CropRect {
    int x0 = 0;
    int y0 = 0;
    int width = 0;
    int height = 0;
};

/// Throws InvalidSpec unless 0 < ratio <= 1.
CropRect centered_crop(int width, int height, double ratio);

/// Centre-crop to a square of side min(w, h), then bilinear-resize to `side`.
/// `scale_out` receives side / crop_side.
Frame center_square(const Frame& f, int side, double* scale_out = nullptr);

// Binary PGM (P5, maxval 255). Values are rounded and clamped on write.
void write_pgm(const std::string& path, const Frame& f);
Frame read_pgm(const std::string& path);

}  // namespace synthstab
