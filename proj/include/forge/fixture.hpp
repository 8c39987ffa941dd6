#pragma once

#include <cstdint>
#include <filesystem>

#include "forge/dataset.hpp"
#include "forge/transform.hpp"

namespace forge {

/// Fixed appearance transformation applied to a whole split, simulating a
/// target domain with different viewing conditions.
struct DomainOffset {
    double hue_shift = 0.0;
    double saturation = 1.0;
    double lightness = 1.0;
    double contrast = 1.0;

    bool is_identity() const {
        return hue_shift == 0.0 && saturation == 1.0 && lightness == 1.0 && contrast == 1.0;
    }
    TransformParams as_params() const { return {hue_shift, saturation, lightness, contrast}; }
};

/// Synthetic colored-rectangle "person" generator. Every identity gets a
/// stable clothing signature (torso/leg hue, saturation, value); samples add
/// camera gain and tint, band-boundary jitter and pixel noise. The test
/// splits draw fresh samples of the same identities, optionally pushed
/// through a domain offset.
struct FixtureConfig {
    int n_identities = 20;
    int train_samples_per_id_per_camera = 4;
    int test_samples_per_id_per_camera = 2;
    int n_cameras = 2;
    int width = 32;
    int height = 96;
    uint64_t seed = 7;
    double pixel_noise = 0.02;
    DomainOffset test_offset;

    void validate() const;
};

struct FixtureBundle {
    LabeledDataset train;
    LabeledDataset query;    // camera 1 test samples
    LabeledDataset gallery;  // cameras >= 2 test samples
};

FixtureBundle generate_fixture(const FixtureConfig& cfg);

/// Writes train/, query/ and gallery/ subdirectories with Market-style
/// `<id>_c<cam>_<n>.png` files, a manifest.jsonl per split and a summary
/// JSON per split.
void write_fixture(const FixtureBundle& bundle, const std::filesystem::path& dir);

}  // namespace forge
