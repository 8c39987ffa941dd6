#include <doctest.h>

#include "forge/colorspace.hpp"
#include "forge/rng.hpp"

using namespace forge;

TEST_SUITE("colorspace") {

TEST_CASE("rgb_to_hsv hits the hexcone axes") {
    const HsvPixel red = rgb_to_hsv({1.0, 0.0, 0.0});
    CHECK(red.h == doctest::Approx(0.0));
    CHECK(red.s == doctest::Approx(1.0));
    CHECK(red.v == doctest::Approx(1.0));

    const HsvPixel gray = rgb_to_hsv({0.5, 0.5, 0.5});
    CHECK(gray.h == 0.0);
    CHECK(gray.s == 0.0);
    CHECK(gray.v == doctest::Approx(0.5));
}

TEST_CASE("rgb_to_hsv matches the reference conversion") {
    // (0.2, 0.4, 0.6): max = b, h = 60*(4 + (r-g)/delta) = 210, s = 2/3.
    const HsvPixel p = rgb_to_hsv({0.2, 0.4, 0.6});
    CHECK(p.h == doctest::Approx(210.0).epsilon(1e-12));
    CHECK(p.s == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(p.v == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("hsv_to_rgb basics") {
    const RgbPixel gray = hsv_to_rgb({0.0, 0.0, 0.7});
    CHECK(gray.r == doctest::Approx(0.7));
    CHECK(gray.g == doctest::Approx(0.7));
    CHECK(gray.b == doctest::Approx(0.7));

    const RgbPixel green = hsv_to_rgb({120.0, 1.0, 1.0});
    CHECK(green.r == doctest::Approx(0.0));
    CHECK(green.g == doctest::Approx(1.0));
    CHECK(green.b == doctest::Approx(0.0));

    const RgbPixel back = hsv_to_rgb({210.0, 2.0 / 3.0, 0.6});
    CHECK(back.r == doctest::Approx(0.2).epsilon(1e-9));
    CHECK(back.g == doctest::Approx(0.4).epsilon(1e-9));
    CHECK(back.b == doctest::Approx(0.6).epsilon(1e-9));
}

TEST_CASE("round-trip within 1e-6 per channel") {
    Rng rng(0xC0105);
    for (int i = 0; i < 200000; ++i) {
        const RgbPixel p{rng.next_double(), rng.next_double(), rng.next_double()};
        const RgbPixel q = hsv_to_rgb(rgb_to_hsv(p));
        CHECK(std::abs(p.r - q.r) < 1e-6);
        CHECK(std::abs(p.g - q.g) < 1e-6);
        CHECK(std::abs(p.b - q.b) < 1e-6);
    }
}

TEST_CASE("hue periodicity: h and h+360 give identical RGB") {
    Rng rng(0x9e1);
    // On a 1/1024-degree grid both h and h+360 are exactly representable, so
    // the wrap must reproduce bit-identical RGB.
    for (int i = 0; i < 1000; ++i) {
        const double h = static_cast<double>(rng.next_below(360 * 1024)) / 1024.0;
        const HsvPixel p{h, rng.next_double(), rng.next_double()};
        const RgbPixel a = hsv_to_rgb(p);
        const RgbPixel b = hsv_to_rgb({p.h + 360.0, p.s, p.v});
        CHECK(a.r == b.r);
        CHECK(a.g == b.g);
        CHECK(a.b == b.b);
    }
    // Arbitrary hues only round in the caller's h+360 addition itself.
    for (int i = 0; i < 1000; ++i) {
        const HsvPixel p{rng.uniform(0.0, 360.0), rng.next_double(), rng.next_double()};
        const RgbPixel a = hsv_to_rgb(p);
        const RgbPixel b = hsv_to_rgb({p.h + 360.0, p.s, p.v});
        CHECK(std::abs(a.r - b.r) < 1e-9);
        CHECK(std::abs(a.g - b.g) < 1e-9);
        CHECK(std::abs(a.b - b.b) < 1e-9);
    }
}

TEST_CASE("grayscale pixels survive the round trip exactly") {
    Rng rng(0x62a7);
    for (int i = 0; i < 1000; ++i) {
        const double v = rng.next_double();
        const HsvPixel hsv = rgb_to_hsv({v, v, v});
        CHECK(hsv.s == 0.0);
        CHECK(hsv.h == 0.0);  // achromatic canonicalization
        const RgbPixel back = hsv_to_rgb(hsv);
        CHECK(back.r == v);
        CHECK(back.g == v);
        CHECK(back.b == v);
    }
}

TEST_CASE("wrap_hue reduces into [0, 360)") {
    CHECK(wrap_hue(0.0) == 0.0);
    CHECK(wrap_hue(360.0) == 0.0);
    CHECK(wrap_hue(-15.0) == doctest::Approx(345.0));
    CHECK(wrap_hue(725.0) == doctest::Approx(5.0));
    Rng rng(0x3aa);
    for (int i = 0; i < 1000; ++i) {
        const double h = wrap_hue(rng.uniform(-1e4, 1e4));
        CHECK(h >= 0.0);
        CHECK(h < 360.0);
    }
}

}  // TEST_SUITE
