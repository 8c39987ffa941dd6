#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "forge/image.hpp"
#include "forge/rng.hpp"

namespace forge {

/// One identity-labelled, camera-tagged person image.
struct LabeledSample {
    Image image;
    int identity = 0;        // contiguous internal index in [0, n_identities)
    int original_label = 0;  // label as found on disk
    int camera = 0;
    std::string source_path;
};

enum class Split { Train, Query, Gallery };

const char* split_name(Split s);

struct LabeledDataset {
    std::vector<LabeledSample> samples;
    int n_identities = 0;
    Split split = Split::Train;
    std::vector<int> label_registry;  // internal index -> original label
    std::vector<std::string> skipped; // unreadable files recorded at ingest

    size_t size() const { return samples.size(); }
};

struct IngestOptions {
    // When set, labels come from a JSON-lines manifest (path/identity/camera
    // per line) instead of the <id>_c<cam>_<suffix> filename convention.
    std::optional<std::filesystem::path> manifest;
    int threads = 1;
};

/// Scans a directory (or manifest) for PNG/JPEG samples, decodes them in
/// deterministic lexicographic order and re-indexes identities contiguously.
/// Unreadable images are skipped with a warning; zero readable samples or a
/// malformed filename without a manifest is fatal.
LabeledDataset ingest_directory(const std::filesystem::path& dir, Split split,
                                const IngestOptions& options = {});

/// Counts per identity and camera, serialized as JSON text.
std::string dataset_summary_json(const LabeledDataset& ds);

/// Half-pixel-center bilinear resample with edge clamping.
Image bilinear_resize(const Image& img, int target_w, int target_h);

Image horizontal_flip(const Image& img);

/// Zero-pads by `pad` pixels on every side, then crops back to the original
/// size at a random offset.
Image pad_random_crop(const Image& img, int pad, Rng& rng);

struct PreprocessOptions {
    bool enable_crop = true;
    int crop_pad = 10;
    bool enable_flip = true;
    double flip_prob = 0.5;
};

/// Resize to (target_w, target_h); in train mode first applies the random
/// pad-crop and a coin-flip horizontal flip. Eval mode is a pure function of
/// the image and target dims.
Image preprocess(const Image& img, int target_w, int target_h, bool train_mode, Rng& rng,
                 const PreprocessOptions& options = {});

}  // namespace forge
