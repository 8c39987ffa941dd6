#include "forge/fixture.hpp"

#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "forge/error.hpp"
#include "forge/image_io.hpp"

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace forge {

void FixtureConfig::validate() const {
    if (n_identities < 2) throw InputError("fixture: need at least 2 identities");
    if (n_cameras < 2) throw InputError("fixture: need at least 2 cameras");
    if (width < 8 || height < 24) throw InputError("fixture: image too small");
    if (train_samples_per_id_per_camera < 1 || test_samples_per_id_per_camera < 1) {
        throw InputError("fixture: samples per identity must be >= 1");
    }
    if (pixel_noise < 0.0 || pixel_noise > 0.5) throw InputError("fixture: noise out of range");
}

namespace {

struct Band {
    double hue;
    double sat;
    double val;
};

struct IdentitySignature {
    Band torso;
    Band legs;
    double head_val;
};

// Each identity carries two decoupled codes: the torso is a saturated color
// patch whose stratified hue is the chromatic signature, the legs are a
// near-gray patch whose stratified value is the achromatic signature. Hue
// offsets disturb the former, contrast offsets the latter.
IdentitySignature identity_signature(const FixtureConfig& cfg, int id) {
    Rng rng(derive_seed(cfg.seed, {0x1DULL, static_cast<uint64_t>(id)}));
    const int n = cfg.n_identities;
    const double hue_slot = 360.0 / n;
    IdentitySignature sig;
    // Slot centers, so the roster sits mid-bin for any histogram whose bin
    // count matches the identity count.
    sig.torso.hue = wrap_hue((id + 0.5) * hue_slot + rng.uniform(-0.08, 0.08) * hue_slot);
    sig.torso.sat = rng.uniform(0.75, 0.85);
    sig.torso.val = rng.uniform(0.6, 0.7);
    const int value_slot = (id * 7 + 3) % n;
    sig.legs.hue = rng.uniform(0.0, 360.0);  // irrelevant at this saturation
    sig.legs.sat = rng.uniform(0.0, 0.06);
    sig.legs.val = (value_slot + 0.5 + rng.uniform(-0.1, 0.1)) / n;
    sig.head_val = rng.uniform(0.6, 0.9);
    return sig;
}

RgbPixel noisy(const RgbPixel& p, double noise, Rng& rng) {
    return {clamp01(p.r + rng.uniform(-noise, noise)),
            clamp01(p.g + rng.uniform(-noise, noise)),
            clamp01(p.b + rng.uniform(-noise, noise))};
}

Image render_sample(const FixtureConfig& cfg, const IdentitySignature& sig, int camera,
                    Rng& rng) {
    // Cameras differ in gain and a slight tint, the usual cross-view gap.
    const double cam_gain = 1.0 - 0.08 * (camera - 1);
    const double cam_tint = 4.0 * (camera - 1);
    const double background = rng.uniform(0.78, 0.88) * cam_gain;

    const int h = cfg.height;
    const int w = cfg.width;
    // Body band boundaries with per-sample jitter.
    const int head_top = static_cast<int>(h * (0.05 + rng.uniform(-0.01, 0.01)));
    const int torso_top = static_cast<int>(h * (0.18 + rng.uniform(-0.03, 0.03)));
    const int legs_top = static_cast<int>(h * (0.52 + rng.uniform(-0.03, 0.03)));
    const int legs_bottom = static_cast<int>(h * (0.93 + rng.uniform(-0.02, 0.02)));
    const int body_left = static_cast<int>(w * 0.22) + static_cast<int>(rng.next_below(5)) - 2;
    const int body_right = body_left + static_cast<int>(w * 0.56);

    const RgbPixel head_rgb = hsv_to_rgb({wrap_hue(30.0 + cam_tint), 0.35, sig.head_val * cam_gain});
    const RgbPixel torso_rgb =
        hsv_to_rgb({wrap_hue(sig.torso.hue + cam_tint), sig.torso.sat, sig.torso.val * cam_gain});
    const RgbPixel legs_rgb =
        hsv_to_rgb({wrap_hue(sig.legs.hue + cam_tint), sig.legs.sat, sig.legs.val * cam_gain});

    Image img(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            RgbPixel px{background, background, background};
            if (x >= body_left && x < body_right) {
                if (y >= head_top && y < torso_top) {
                    px = head_rgb;
                } else if (y >= torso_top && y < legs_top) {
                    px = torso_rgb;
                } else if (y >= legs_top && y < legs_bottom) {
                    px = legs_rgb;
                }
            }
            img.set_pixel(x, y, noisy(px, cfg.pixel_noise, rng));
        }
    }
    return img;
}

LabeledSample make_sample(const FixtureConfig& cfg, int id, int camera, int index, uint64_t tag,
                          const DomainOffset& offset) {
    const IdentitySignature sig = identity_signature(cfg, id);
    Rng rng(derive_seed(cfg.seed, {tag, static_cast<uint64_t>(id),
                                   static_cast<uint64_t>(camera),
                                   static_cast<uint64_t>(index)}));
    Image img = render_sample(cfg, sig, camera, rng);
    if (!offset.is_identity()) img = apply_transform(img, offset.as_params());

    LabeledSample s;
    s.image = std::move(img);
    s.identity = id;
    s.original_label = id + 1;
    s.camera = camera;
    char name[64];
    std::snprintf(name, sizeof(name), "%04d_c%d_%04d.png", id + 1, camera, index);
    s.source_path = name;
    return s;
}

void finalize(LabeledDataset& ds, const FixtureConfig& cfg, Split split) {
    ds.split = split;
    ds.n_identities = cfg.n_identities;
    ds.label_registry.clear();
    for (int id = 0; id < cfg.n_identities; ++id) ds.label_registry.push_back(id + 1);
}

}  // namespace

FixtureBundle generate_fixture(const FixtureConfig& cfg) {
    cfg.validate();
    FixtureBundle bundle;
    constexpr uint64_t kTrainTag = 0x7217ULL;
    constexpr uint64_t kTestTag = 0x7E57ULL;

    for (int id = 0; id < cfg.n_identities; ++id) {
        for (int cam = 1; cam <= cfg.n_cameras; ++cam) {
            for (int k = 0; k < cfg.train_samples_per_id_per_camera; ++k) {
                bundle.train.samples.push_back(make_sample(cfg, id, cam, k, kTrainTag, {}));
            }
            for (int k = 0; k < cfg.test_samples_per_id_per_camera; ++k) {
                LabeledSample s = make_sample(cfg, id, cam, k, kTestTag, cfg.test_offset);
                if (cam == 1) {
                    bundle.query.samples.push_back(std::move(s));
                } else {
                    bundle.gallery.samples.push_back(std::move(s));
                }
            }
        }
    }
    finalize(bundle.train, cfg, Split::Train);
    finalize(bundle.query, cfg, Split::Query);
    finalize(bundle.gallery, cfg, Split::Gallery);
    return bundle;
}

void write_fixture(const FixtureBundle& bundle, const fs::path& dir) {
    const LabeledDataset* splits[] = {&bundle.train, &bundle.query, &bundle.gallery};
    for (const LabeledDataset* ds : splits) {
        const fs::path split_dir = dir / split_name(ds->split);
        std::error_code ec;
        fs::create_directories(split_dir, ec);
        if (ec) throw IoError("cannot create fixture directory: " + split_dir.string());

        std::ofstream manifest(split_dir / "manifest.jsonl", std::ios::trunc);
        if (!manifest) throw IoError("cannot write fixture manifest");
        for (const LabeledSample& s : ds->samples) {
            save_png(s.image, split_dir / s.source_path);
            json row = {{"path", s.source_path},
                        {"identity", s.original_label},
                        {"camera", s.camera}};
            manifest << row.dump() << '\n';
        }

        std::ofstream summary(split_dir / "summary.json", std::ios::trunc);
        if (!summary) throw IoError("cannot write fixture summary");
        summary << dataset_summary_json(*ds) << '\n';
    }
}

}  // namespace forge
