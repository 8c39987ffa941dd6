#include <doctest.h>

#include <fstream>
#include <set>

#include "forge/error.hpp"
#include "forge/universality.hpp"
#include "testutil.hpp"

using namespace forge;
using forge::test::random_gray_image;
using forge::test::random_image;

namespace {

std::vector<Image> analysis_images(Rng& rng, int count) {
    std::vector<Image> images;
    for (int i = 0; i < count; ++i) images.push_back(random_image(rng, 8, 12));
    return images;
}

TransformSpace collapsed_to_identity() {
    TransformSpace space;
    space.hue.min = space.hue.max = 0.0;
    space.saturation.min = space.saturation.max = 1.0;
    space.lightness.min = space.lightness.max = 1.0;
    space.contrast.min = space.contrast.max = 1.0;
    return space;
}

}  // namespace

TEST_SUITE("universality") {

TEST_CASE("identity-collapsed ranges give zero distance") {
    Rng rng(0xB1);
    const std::vector<Image> images = analysis_images(rng, 12);
    const DescriptorConfig cfg;
    const FactorStats stats = feature_invariance(nullptr, cfg, images, Factor::Hue,
                                                 collapsed_to_identity(), 3);
    CHECK(stats.mean == 0.0);
    CHECK(stats.stddev == 0.0);
    for (double d : stats.draws) CHECK(d == 0.0);
}

TEST_CASE("grayscale images are hue-invariant") {
    Rng rng(0xB2);
    std::vector<Image> images;
    for (int i = 0; i < 10; ++i) images.push_back(random_gray_image(rng, 8, 12));
    const FactorStats stats = feature_invariance(nullptr, DescriptorConfig{}, images,
                                                 Factor::Hue, TransformSpace{}, 5);
    CHECK(stats.mean < 1e-6);
}

TEST_CASE("analysis is deterministic and thread-count invariant") {
    Rng rng(0xB3);
    const std::vector<Image> images = analysis_images(rng, 16);
    const DescriptorConfig cfg;
    const TransformSpace space;
    const FactorStats a = feature_invariance(nullptr, cfg, images, Factor::Saturation, space, 9, 1);
    const FactorStats b = feature_invariance(nullptr, cfg, images, Factor::Saturation, space, 9, 1);
    const FactorStats c = feature_invariance(nullptr, cfg, images, Factor::Saturation, space, 9, 4);
    CHECK(a.mean == b.mean);
    CHECK(a.draws == b.draws);
    CHECK(a.mean == c.mean);
    CHECK(a.stddev == c.stddev);
    CHECK(a.draws == c.draws);
}

TEST_CASE("single-factor spaces leave the other factors at identity") {
    const TransformSpace space;
    for (Factor f : {Factor::Hue, Factor::Saturation, Factor::Lightness, Factor::Contrast}) {
        const TransformSpace single = space.single_factor(f);
        Rng rng(0xB4);
        for (int i = 0; i < 200; ++i) {
            const TransformParams t = sample_params(single, rng);
            int non_identity = 0;
            if (t.hue_shift != 0.0) ++non_identity;
            if (t.saturation != 1.0) ++non_identity;
            if (t.lightness != 1.0) ++non_identity;
            if (t.contrast != 1.0) ++non_identity;
            CHECK(non_identity <= 1);
            if (f == Factor::Hue) {
                CHECK(t.saturation == 1.0);
                CHECK(t.lightness == 1.0);
                CHECK(t.contrast == 1.0);
            }
        }
    }
}

TEST_CASE("uniform zero model has zero prediction distance") {
    Rng rng(0xB5);
    const std::vector<Image> images = analysis_images(rng, 8);
    const DescriptorConfig cfg;
    const LinearModel model(cfg.m, 5, cfg.part_dim());
    for (Factor f : {Factor::Hue, Factor::Saturation, Factor::Lightness, Factor::Contrast}) {
        const FactorStats stats =
            prediction_invariance(model, cfg, images, f, TransformSpace{}, 4);
        CHECK(stats.mean == doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("sample_analysis_set contracts") {
    LabeledDataset ds;
    ds.n_identities = 1;
    ds.label_registry = {1};
    for (int i = 0; i < 40; ++i) {
        LabeledSample s;
        s.image = Image(4, 6, 0.5f);
        ds.samples.push_back(std::move(s));
    }

    const std::vector<size_t> all = sample_analysis_set(ds, 100, 1);
    CHECK(all.size() == 40);

    const std::vector<size_t> a = sample_analysis_set(ds, 10, 2);
    const std::vector<size_t> b = sample_analysis_set(ds, 10, 2);
    CHECK(a == b);
    CHECK(a.size() == 10);
    std::set<size_t> distinct(a.begin(), a.end());
    CHECK(distinct.size() == 10);

    LabeledDataset empty;
    CHECK_THROWS_AS((void)sample_analysis_set(empty, 5, 1), InputError);
}

TEST_CASE("full report carries both levels and serializes") {
    Rng rng(0xB6);
    const std::vector<Image> images = analysis_images(rng, 6);
    const DescriptorConfig cfg;
    LinearModel model(cfg.m, 3, cfg.part_dim());
    // Non-trivial weights so predictions respond to the transforms.
    Rng wrng(0xB7);
    for (auto& head : model.heads()) {
        for (double& w : head.weights) w = wrng.uniform(-0.5, 0.5);
    }

    const InvarianceReport report =
        analyze_universality(&model, cfg, images, TransformSpace{}, 11);
    REQUIRE(report.feature.size() == 4);
    REQUIRE(report.prediction.size() == 4);
    CHECK(report.sample_count == 6);
    for (const FactorStats& s : report.feature) {
        CHECK(s.mean >= 0.0);
        CHECK(s.draws.size() == 6);
    }

    const std::string json_text = invariance_report_json(report);
    CHECK(json_text.find("\"H\"") != std::string::npos);
    CHECK(json_text.find("model-embedding") != std::string::npos);

    forge::test::TempDir tmp("invariance");
    write_invariance_csv(report, tmp.path() / "inv.csv");
    std::ifstream in(tmp.path() / "inv.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "factor,level,mean,std");
    size_t rows = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) ++rows;
    }
    CHECK(rows == 8);  // 4 factors x {F, P}
}

TEST_CASE("empty image set is an input error") {
    const std::vector<Image> empty;
    CHECK_THROWS_AS((void)feature_invariance(nullptr, DescriptorConfig{}, empty, Factor::Hue,
                                             TransformSpace{}, 1),
                    InputError);
}

}  // TEST_SUITE
