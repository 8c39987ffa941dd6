#include "forge/transform.hpp"

#include <cfloat>

#if defined(__SSE2__)
#include <emmintrin.h>
#endif

#include "forge/parallel.hpp"

namespace forge {

void TransformSpace::validate() const {
    for (Factor f : {Factor::Hue, Factor::Saturation, Factor::Lightness, Factor::Contrast}) {
        const Range& r = factor(f);
        if (r.min > r.max) {
            throw InputError(std::string("transform range for ") + factor_name(f) +
                             " has min > max");
        }
    }
}

namespace {

inline float unit_interval(float x) { return std::min(std::max(x, 0.0f), 1.0f); }

inline float luminance_f(float r, float g, float b) {
    return 0.299f * r + 0.587f * g + 0.114f * b;
}

// Hue rotation without trigonometry or sector branches. Value and chroma are
// invariant under rotation, so only the sector coordinate moves:
//   x = hue/60 + 1 in [0, 6), shifted into [0, 12).
// Each output channel is the periodic trapezoid wave of x (copies six apart
// cover the extended domain), reconstructed as mn + delta * clamp(wave).
// Achromatic pixels keep delta = 0, which zeroes the wave term; the
// FLT_MIN floor only guards the 0/0 division.
inline void rotate_hue_pixel(float& r, float& g, float& b, float shift_sectors) {
    const float v = std::max(r, std::max(g, b));
    const float mn = std::min(r, std::min(g, b));
    const float delta = v - mn;

    const float mr = static_cast<float>(r >= v);
    const float sg = static_cast<float>(g >= v);
    const float mg = (1.0f - mr) * sg;
    const float mb = (1.0f - mr) * (1.0f - sg);
    const float num = mr * (g - b) + mg * (b - r) + mb * (r - g);
    const float x =
        1.0f + 2.0f * mg + 4.0f * mb + num / std::max(delta, FLT_MIN) + shift_sectors;

    const float wave_r =
        std::min(std::min(std::abs(x - 4.0f), std::abs(x - 10.0f)), std::abs(x + 2.0f)) - 1.0f;
    const float wave_g =
        2.0f - std::min(std::min(std::abs(x - 3.0f), std::abs(x - 9.0f)), std::abs(x + 3.0f));
    const float wave_b =
        2.0f - std::min(std::min(std::abs(x - 5.0f), std::abs(x - 11.0f)), std::abs(x + 1.0f));
    r = mn + delta * unit_interval(wave_r);
    g = mn + delta * unit_interval(wave_g);
    b = mn + delta * unit_interval(wave_b);
}

#if defined(__SSE2__)

// Four pixels per iteration in SoA registers. Same formulas as the scalar
// kernel; comparisons become lane masks, so the loop has no data-dependent
// branches at all.
template <bool DoHue, bool DoSat, bool DoLight, bool DoContrast>
void transform_pass_simd(const float* src, float* dst, size_t n_values, float shift_sectors,
                         float sat, float light, double& lum_sum) {
    const __m128 zero = _mm_setzero_ps();
    const __m128 one = _mm_set1_ps(1.0f);
    const __m128 abs_mask = _mm_castsi128_ps(_mm_set1_epi32(0x7fffffff));
    const __m128 shift_v = _mm_set1_ps(shift_sectors);
    const __m128 sat_v = _mm_set1_ps(sat);
    const __m128 sat_beta_v = _mm_set1_ps(1.0f - sat);
    const __m128 light_v = _mm_set1_ps(light);
    const __m128 lum_r = _mm_set1_ps(0.299f);
    const __m128 lum_g = _mm_set1_ps(0.587f);
    const __m128 lum_b = _mm_set1_ps(0.114f);

    auto clamp01v = [&](__m128 x) { return _mm_min_ps(_mm_max_ps(x, zero), one); };
    auto abs_v = [&](__m128 x) { return _mm_and_ps(x, abs_mask); };
    auto lum_v = [&](__m128 r, __m128 g, __m128 b) {
        return _mm_add_ps(_mm_add_ps(_mm_mul_ps(lum_r, r), _mm_mul_ps(lum_g, g)),
                          _mm_mul_ps(lum_b, b));
    };

    double acc = 0.0;
    alignas(16) float ra[4], ga[4], ba[4], la[4];
    size_t i = 0;
    for (; i + 12 <= n_values; i += 12) {
        for (int k = 0; k < 4; ++k) {
            ra[k] = src[i + 3 * k];
            ga[k] = src[i + 3 * k + 1];
            ba[k] = src[i + 3 * k + 2];
        }
        __m128 r = _mm_load_ps(ra);
        __m128 g = _mm_load_ps(ga);
        __m128 b = _mm_load_ps(ba);

        if constexpr (DoHue) {
            const __m128 v = _mm_max_ps(r, _mm_max_ps(g, b));
            const __m128 mn = _mm_min_ps(r, _mm_min_ps(g, b));
            const __m128 delta = _mm_sub_ps(v, mn);
            const __m128 rmask = _mm_cmpge_ps(r, v);
            const __m128 gmask = _mm_andnot_ps(rmask, _mm_cmpge_ps(g, v));
            const __m128 bmask = _mm_andnot_ps(rmask, _mm_cmplt_ps(g, v));
            const __m128 num = _mm_or_ps(
                _mm_or_ps(_mm_and_ps(rmask, _mm_sub_ps(g, b)),
                          _mm_and_ps(gmask, _mm_sub_ps(b, r))),
                _mm_and_ps(bmask, _mm_sub_ps(r, g)));
            const __m128 off = _mm_or_ps(_mm_and_ps(gmask, _mm_set1_ps(2.0f)),
                                         _mm_and_ps(bmask, _mm_set1_ps(4.0f)));
            const __m128 frac =
                _mm_div_ps(num, _mm_max_ps(delta, _mm_set1_ps(FLT_MIN)));
            const __m128 x =
                _mm_add_ps(_mm_add_ps(_mm_add_ps(one, off), frac), shift_v);

            auto wave = [&](float c0, float c1, float c2) {
                return _mm_min_ps(
                    _mm_min_ps(abs_v(_mm_sub_ps(x, _mm_set1_ps(c0))),
                               abs_v(_mm_sub_ps(x, _mm_set1_ps(c1)))),
                    abs_v(_mm_sub_ps(x, _mm_set1_ps(c2))));
            };
            const __m128 wr = _mm_sub_ps(wave(4.0f, 10.0f, -2.0f), one);
            const __m128 wg = _mm_sub_ps(_mm_set1_ps(2.0f), wave(3.0f, 9.0f, -3.0f));
            const __m128 wb = _mm_sub_ps(_mm_set1_ps(2.0f), wave(5.0f, 11.0f, -1.0f));
            r = clamp01v(_mm_add_ps(mn, _mm_mul_ps(delta, clamp01v(wr))));
            g = clamp01v(_mm_add_ps(mn, _mm_mul_ps(delta, clamp01v(wg))));
            b = clamp01v(_mm_add_ps(mn, _mm_mul_ps(delta, clamp01v(wb))));
        }
        if constexpr (DoSat) {
            const __m128 base = _mm_mul_ps(sat_beta_v, lum_v(r, g, b));
            r = clamp01v(_mm_add_ps(base, _mm_mul_ps(sat_v, r)));
            g = clamp01v(_mm_add_ps(base, _mm_mul_ps(sat_v, g)));
            b = clamp01v(_mm_add_ps(base, _mm_mul_ps(sat_v, b)));
        }
        if constexpr (DoLight) {
            r = clamp01v(_mm_mul_ps(light_v, r));
            g = clamp01v(_mm_mul_ps(light_v, g));
            b = clamp01v(_mm_mul_ps(light_v, b));
        }
        if constexpr (DoContrast) {
            _mm_store_ps(la, lum_v(r, g, b));
            acc += (static_cast<double>(la[0]) + la[1]) + (static_cast<double>(la[2]) + la[3]);
        }
        _mm_store_ps(ra, r);
        _mm_store_ps(ga, g);
        _mm_store_ps(ba, b);
        for (int k = 0; k < 4; ++k) {
            dst[i + 3 * k] = ra[k];
            dst[i + 3 * k + 1] = ga[k];
            dst[i + 3 * k + 2] = ba[k];
        }
    }
    // Remainder pixels go through the scalar kernel.
    for (; i < n_values; i += 3) {
        float r = src[i], g = src[i + 1], b = src[i + 2];
        if constexpr (DoHue) {
            rotate_hue_pixel(r, g, b, shift_sectors);
            r = unit_interval(r);
            g = unit_interval(g);
            b = unit_interval(b);
        }
        if constexpr (DoSat) {
            const float base = (1.0f - sat) * luminance_f(r, g, b);
            r = unit_interval(base + sat * r);
            g = unit_interval(base + sat * g);
            b = unit_interval(base + sat * b);
        }
        if constexpr (DoLight) {
            r = unit_interval(light * r);
            g = unit_interval(light * g);
            b = unit_interval(light * b);
        }
        if constexpr (DoContrast) acc += luminance_f(r, g, b);
        dst[i] = r;
        dst[i + 1] = g;
        dst[i + 2] = b;
    }
    if constexpr (DoContrast) lum_sum = acc;
}

#endif  // __SSE2__

// One fused pass over the raster. Each enabled stage applies exactly the
// same arithmetic as its standalone primitive, in the fixed order hue ->
// saturation -> lightness; the contrast stage only accumulates the mean
// luminance here and rescales in a second pass.
template <bool DoHue, bool DoSat, bool DoLight, bool DoContrast>
void transform_pass(const float* src, float* dst, size_t n_values, float shift_sectors,
                    float sat, float light, double& lum_sum) {
#if defined(__SSE2__)
    transform_pass_simd<DoHue, DoSat, DoLight, DoContrast>(src, dst, n_values, shift_sectors,
                                                           sat, light, lum_sum);
#else
    const float sat_beta = 1.0f - sat;
    double acc = 0.0;
    for (size_t i = 0; i < n_values; i += 3) {
        float r = src[i], g = src[i + 1], b = src[i + 2];
        if constexpr (DoHue) {
            rotate_hue_pixel(r, g, b, shift_sectors);
            r = unit_interval(r);
            g = unit_interval(g);
            b = unit_interval(b);
        }
        if constexpr (DoSat) {
            const float base = sat_beta * luminance_f(r, g, b);
            r = unit_interval(base + sat * r);
            g = unit_interval(base + sat * g);
            b = unit_interval(base + sat * b);
        }
        if constexpr (DoLight) {
            r = unit_interval(light * r);
            g = unit_interval(light * g);
            b = unit_interval(light * b);
        }
        if constexpr (DoContrast) acc += luminance_f(r, g, b);
        dst[i] = r;
        dst[i + 1] = g;
        dst[i + 2] = b;
    }
    if constexpr (DoContrast) lum_sum = acc;
#endif
}

void contrast_apply(std::vector<float>& d, double factor, double lum_sum, size_t pixel_count) {
    const float mean = static_cast<float>(lum_sum / static_cast<double>(pixel_count));
    const float alpha = static_cast<float>(factor);
    const float base = (1.0f - alpha) * mean;
    for (float& v : d) v = unit_interval(base + alpha * v);
}

using PassFn = void (*)(const float*, float*, size_t, float, float, float, double&);

constexpr PassFn kPassTable[16] = {
    &transform_pass<false, false, false, false>, &transform_pass<false, false, false, true>,
    &transform_pass<false, false, true, false>,  &transform_pass<false, false, true, true>,
    &transform_pass<false, true, false, false>,  &transform_pass<false, true, false, true>,
    &transform_pass<false, true, true, false>,   &transform_pass<false, true, true, true>,
    &transform_pass<true, false, false, false>,  &transform_pass<true, false, false, true>,
    &transform_pass<true, false, true, false>,   &transform_pass<true, false, true, true>,
    &transform_pass<true, true, false, false>,   &transform_pass<true, true, false, true>,
    &transform_pass<true, true, true, false>,    &transform_pass<true, true, true, true>,
};

// Runs the enabled stages reading `src` and writing `dst`; the two may
// alias for in-place operation. Identity masks must be handled by callers.
void apply_stages(const float* src, std::vector<float>& dst, size_t pixel_count,
                  const TransformParams& t) {
    const bool do_hue = t.hue_shift != 0.0;
    const bool do_sat = t.saturation != 1.0;
    const bool do_light = t.lightness != 1.0;
    const bool do_contrast = t.contrast != 1.0;
    const unsigned mask = (do_hue ? 8u : 0u) | (do_sat ? 4u : 0u) | (do_light ? 2u : 0u) |
                          (do_contrast ? 1u : 0u);
    if (mask == 0) {
        if (src != dst.data()) std::copy(src, src + dst.size(), dst.data());
        return;
    }
    const float shift_sectors =
        do_hue ? static_cast<float>(wrap_hue(t.hue_shift) / 60.0) : 0.0f;
    double lum_sum = 0.0;
    kPassTable[mask](src, dst.data(), dst.size(), shift_sectors,
                     static_cast<float>(t.saturation), static_cast<float>(t.lightness), lum_sum);
    if (do_contrast) contrast_apply(dst, t.contrast, lum_sum, pixel_count);
}

}  // namespace

Image shift_hue(const Image& img, double degrees) {
    if (degrees == 0.0) return img;
    Image out(img.width(), img.height());
    apply_stages(img.data().data(), out.data(), out.pixel_count(), {degrees, 1.0, 1.0, 1.0});
    return out;
}

Image interpolate(const Image& degenerate, const Image& original, double alpha) {
    if (!degenerate.same_shape(original)) {
        throw ShapeError("interpolate: image dimensions differ");
    }
    Image out = original;
    const std::vector<float>& deg = degenerate.data();
    const std::vector<float>& org = original.data();
    std::vector<float>& d = out.data();
    const double beta = 1.0 - alpha;
    for (size_t i = 0; i < d.size(); ++i) {
        d[i] = static_cast<float>(clamp01(beta * deg[i] + alpha * org[i]));
    }
    return out;
}

Image grayscale(const Image& img) {
    Image out = img;
    std::vector<float>& d = out.data();
    for (size_t i = 0; i < d.size(); i += 3) {
        const float y = luminance_f(d[i], d[i + 1], d[i + 2]);
        d[i] = d[i + 1] = d[i + 2] = y;
    }
    return out;
}

Image adjust_saturation(const Image& img, double factor) {
    if (factor == 1.0) return img;
    Image out(img.width(), img.height());
    apply_stages(img.data().data(), out.data(), out.pixel_count(), {0.0, factor, 1.0, 1.0});
    return out;
}

Image adjust_lightness(const Image& img, double factor) {
    if (factor == 1.0) return img;
    Image out(img.width(), img.height());
    apply_stages(img.data().data(), out.data(), out.pixel_count(), {0.0, 1.0, factor, 1.0});
    return out;
}

Image adjust_contrast(const Image& img, double factor) {
    if (factor == 1.0) return img;
    Image out(img.width(), img.height());
    apply_stages(img.data().data(), out.data(), out.pixel_count(), {0.0, 1.0, 1.0, factor});
    return out;
}

TransformParams sample_params(const TransformSpace& space, Rng& rng) {
    TransformParams t;
    if (space.hue.enabled) t.hue_shift = rng.uniform(space.hue.min, space.hue.max);
    if (space.saturation.enabled) {
        t.saturation = rng.uniform(space.saturation.min, space.saturation.max);
    }
    if (space.lightness.enabled) {
        t.lightness = rng.uniform(space.lightness.min, space.lightness.max);
    }
    if (space.contrast.enabled) t.contrast = rng.uniform(space.contrast.min, space.contrast.max);
    return t;
}

// Composition in fixed order on a single working buffer; every stage is the
// exact primitive kernel, so a hand-chained sequence of primitives
// reproduces this result.
Image apply_transform(const Image& img, const TransformParams& t) {
    if (t.is_identity()) return img;
    Image out(img.width(), img.height());
    apply_stages(img.data().data(), out.data(), out.pixel_count(), t);
    return out;
}

std::vector<TransformParams> sample_batch_params(const TransformSpace& space, uint64_t seed,
                                                 size_t count) {
    std::vector<TransformParams> params(count);
    for (size_t i = 0; i < count; ++i) {
        Rng rng(derive_seed(seed, i));
        params[i] = sample_params(space, rng);
    }
    return params;
}

void apply_transform_into(const Image& img, const TransformParams& t, Image& dst) {
    if (t.is_identity()) {
        dst = img;  // vector copy-assign reuses capacity when it fits
        return;
    }
    dst.reset_shape(img.width(), img.height());
    apply_stages(img.data().data(), dst.data(), dst.pixel_count(), t);
}

void augment_batch_into(std::span<const Image> images, const TransformSpace& space,
                        uint64_t seed, int threads, std::vector<Image>& out) {
    if (images.empty()) throw InputError("augment_batch: empty batch");
    std::vector<TransformParams> params = sample_batch_params(space, seed, images.size());
    out.resize(images.size());
    parallel_for(images.size(), threads,
                 [&](size_t i) { apply_transform_into(images[i], params[i], out[i]); });
}

std::vector<Image> augment_batch(std::span<const Image> images, const TransformSpace& space,
                                 uint64_t seed, int threads) {
    std::vector<Image> out;
    augment_batch_into(images, space, seed, threads, out);
    return out;
}

}  // namespace forge
