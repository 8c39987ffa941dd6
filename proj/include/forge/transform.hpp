#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "forge/image.hpp"
#include "forge/rng.hpp"

namespace forge {

/// One sampled appearance transformation: a hue rotation plus saturation,
/// lightness and contrast interpolation factors. (0, 1, 1, 1) is the
/// identity.
struct TransformParams {
    double hue_shift = 0.0;
    double saturation = 1.0;
    double lightness = 1.0;
    double contrast = 1.0;

    bool is_identity() const {
        return hue_shift == 0.0 && saturation == 1.0 && lightness == 1.0 && contrast == 1.0;
    }
    bool operator==(const TransformParams&) const = default;
};

enum class Factor { Hue = 0, Saturation = 1, Lightness = 2, Contrast = 3 };

constexpr const char* factor_name(Factor f) {
    switch (f) {
        case Factor::Hue: return "H";
        case Factor::Saturation: return "S";
        case Factor::Lightness: return "L";
        case Factor::Contrast: return "C";
    }
    return "?";
}

/// The sampling space: per-factor enable flags and closed ranges. Defaults
/// are hue degrees in [-18, 18] on the 0-360 circle and factors in
/// [0.6, 1.4]. Disabled factors always sample their identity value.
struct TransformSpace {
    struct Range {
        bool enabled = true;
        double min = 0.0;
        double max = 0.0;
    };

    Range hue{true, -18.0, 18.0};
    Range saturation{true, 0.6, 1.4};
    Range lightness{true, 0.6, 1.4};
    Range contrast{true, 0.6, 1.4};

    Range& factor(Factor f) {
        switch (f) {
            case Factor::Hue: return hue;
            case Factor::Saturation: return saturation;
            case Factor::Lightness: return lightness;
            default: return contrast;
        }
    }
    const Range& factor(Factor f) const {
        return const_cast<TransformSpace*>(this)->factor(f);
    }

    void validate() const;

    static TransformSpace all_disabled() {
        TransformSpace s;
        s.hue.enabled = s.saturation.enabled = s.lightness.enabled = s.contrast.enabled = false;
        return s;
    }

    /// Copy with exactly one factor enabled (its default or current range);
    /// everything else pinned at identity.
    TransformSpace single_factor(Factor f) const {
        TransformSpace s = *this;
        s.hue.enabled = f == Factor::Hue;
        s.saturation.enabled = f == Factor::Saturation;
        s.lightness.enabled = f == Factor::Lightness;
        s.contrast.enabled = f == Factor::Contrast;
        return s;
    }
};

// Per-factor primitives. Each clamps its own output to [0, 1].
Image shift_hue(const Image& img, double degrees);
Image interpolate(const Image& degenerate, const Image& original, double alpha);
Image adjust_saturation(const Image& img, double factor);
Image adjust_lightness(const Image& img, double factor);
Image adjust_contrast(const Image& img, double factor);

Image grayscale(const Image& img);

/// Draws one parameter per enabled factor, uniformly from its range, in the
/// fixed order hue, saturation, lightness, contrast. Disabled factors do not
/// consume a draw.
TransformParams sample_params(const TransformSpace& space, Rng& rng);

/// Composition in fixed order hue -> saturation -> lightness -> contrast.
/// Identity params return the input bit-identically.
Image apply_transform(const Image& img, const TransformParams& t);

/// Same transform writing into `dst`, reusing its buffer when the capacity
/// already fits. Steady-state pipelines stay allocation-free this way.
void apply_transform_into(const Image& img, const TransformParams& t, Image& dst);

/// The parameter vector each batch entry receives: substream (seed, index).
std::vector<TransformParams> sample_batch_params(const TransformSpace& space, uint64_t seed,
                                                 size_t count);

/// One independently sampled transform per image, derived from (seed, index)
/// so the result is bit-identical for any thread count.
std::vector<Image> augment_batch(std::span<const Image> images, const TransformSpace& space,
                                 uint64_t seed, int threads = 1);

/// Buffer-reusing form of augment_batch; `out` is resized to the batch and
/// its existing image storage is recycled.
void augment_batch_into(std::span<const Image> images, const TransformSpace& space,
                        uint64_t seed, int threads, std::vector<Image>& out);

}  // namespace forge
