#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "forge/colorspace.hpp"
#include "forge/error.hpp"

namespace forge {

/// Float RGB raster, interleaved row-major. Channels are kept in [0, 1] at
/// API boundaries; transformation intermediates may leave the gamut before
/// they are clamped back.
class Image {
public:
    Image() = default;
    Image(int width, int height, float fill = 0.0f)
        : width_(width), height_(height) {
        if (width <= 0 || height <= 0) throw ShapeError("image dimensions must be positive");
        data_.assign(static_cast<size_t>(width) * height * 3, fill);
    }

    int width() const { return width_; }
    int height() const { return height_; }
    size_t pixel_count() const { return static_cast<size_t>(width_) * height_; }
    bool empty() const { return data_.empty(); }

    float* row(int y) { return data_.data() + static_cast<size_t>(y) * width_ * 3; }
    const float* row(int y) const { return data_.data() + static_cast<size_t>(y) * width_ * 3; }

    RgbPixel pixel(int x, int y) const {
        const float* p = row(y) + static_cast<size_t>(x) * 3;
        return {p[0], p[1], p[2]};
    }
    void set_pixel(int x, int y, const RgbPixel& px) {
        float* p = row(y) + static_cast<size_t>(x) * 3;
        p[0] = static_cast<float>(px.r);
        p[1] = static_cast<float>(px.g);
        p[2] = static_cast<float>(px.b);
    }

    std::vector<float>& data() { return data_; }
    const std::vector<float>& data() const { return data_; }

    /// Adopts the given shape, reusing storage where possible. Newly grown
    /// cells are zero until overwritten.
    void reset_shape(int width, int height) {
        if (width <= 0 || height <= 0) throw ShapeError("image dimensions must be positive");
        width_ = width;
        height_ = height;
        data_.resize(static_cast<size_t>(width) * height * 3);
    }

    bool same_shape(const Image& other) const {
        return width_ == other.width_ && height_ == other.height_;
    }

    bool operator==(const Image& other) const {
        return width_ == other.width_ && height_ == other.height_ && data_ == other.data_;
    }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<float> data_;
};

inline float clamp01(float v) { return v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v); }
inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// Mean Rec.601 luminance; double accumulation keeps the contrast
// mean-preservation invariant inside 1e-6 for large rasters.
inline double mean_luminance(const Image& img) {
    double sum = 0.0;
    const std::vector<float>& d = img.data();
    for (size_t i = 0; i < d.size(); i += 3) {
        sum += luminance(d[i], d[i + 1], d[i + 2]);
    }
    return sum / static_cast<double>(img.pixel_count());
}

// 8-bit quantization: round half away from zero.
inline uint8_t quantize_channel(float v) {
    double scaled = clamp01(static_cast<double>(v)) * 255.0;
    return static_cast<uint8_t>(std::lround(scaled));
}

inline float dequantize_channel(uint8_t v) { return static_cast<float>(v) / 255.0f; }

// Largest per-channel absolute difference; shape mismatch is reported as
// infinity rather than an error so tests can use it freely.
inline double max_channel_difference(const Image& a, const Image& b) {
    if (!a.same_shape(b)) return std::numeric_limits<double>::infinity();
    double worst = 0.0;
    for (size_t i = 0; i < a.data().size(); ++i) {
        worst = std::max(worst, std::abs(static_cast<double>(a.data()[i]) - b.data()[i]));
    }
    return worst;
}

}  // namespace forge
