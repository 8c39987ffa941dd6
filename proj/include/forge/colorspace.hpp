#pragma once

#include <algorithm>
#include <cmath>

namespace forge {

// Unit-interval RGB intensities.
struct RgbPixel {
    double r = 0.0;
    double g = 0.0;
    double b = 0.0;
};

// Hexcone HSV; h in degrees [0, 360), s and v in [0, 1]. Achromatic pixels
// (s == 0) are canonicalized to h == 0 so every gray has one representation.
struct HsvPixel {
    double h = 0.0;
    double s = 0.0;
    double v = 0.0;
};

constexpr double kLumaR = 0.299;
constexpr double kLumaG = 0.587;
constexpr double kLumaB = 0.114;

inline double luminance(double r, double g, double b) {
    return kLumaR * r + kLumaG * g + kLumaB * b;
}

// Reduces any real hue angle into [0, 360).
inline double wrap_hue(double degrees) {
    double h = std::fmod(degrees, 360.0);
    if (h < 0.0) h += 360.0;
    if (h >= 360.0) h = 0.0;  // fmod can round up to 360 for tiny negatives
    return h;
}

inline HsvPixel rgb_to_hsv(const RgbPixel& p) {
    const double v = std::max({p.r, p.g, p.b});
    const double mn = std::min({p.r, p.g, p.b});
    const double delta = v - mn;

    HsvPixel out;
    out.v = v;
    if (v <= 0.0 || delta <= 0.0) {
        // Black or gray: s = 0, hue canonicalized to 0.
        out.s = 0.0;
        out.h = 0.0;
        return out;
    }
    out.s = delta / v;

    double h;
    if (p.r >= v) {
        h = (p.g - p.b) / delta;
    } else if (p.g >= v) {
        h = 2.0 + (p.b - p.r) / delta;
    } else {
        h = 4.0 + (p.r - p.g) / delta;
    }
    out.h = wrap_hue(h * 60.0);
    return out;
}

inline RgbPixel hsv_to_rgb(const HsvPixel& p) {
    if (p.s <= 0.0) return {p.v, p.v, p.v};

    const double h = wrap_hue(p.h) / 60.0;
    const int sector = std::min(5, static_cast<int>(h));
    const double f = h - sector;
    const double v = p.v;
    const double a = v * (1.0 - p.s);
    const double b = v * (1.0 - p.s * f);
    const double c = v * (1.0 - p.s * (1.0 - f));

    switch (sector) {
        case 0: return {v, c, a};
        case 1: return {b, v, a};
        case 2: return {a, v, c};
        case 3: return {a, b, v};
        case 4: return {c, a, v};
        default: return {v, a, b};
    }
}

}  // namespace forge
