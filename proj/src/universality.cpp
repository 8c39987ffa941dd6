#include "forge/universality.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "forge/error.hpp"
#include "forge/parallel.hpp"

using json = nlohmann::ordered_json;

namespace forge {

namespace {

constexpr Factor kFactors[] = {Factor::Hue, Factor::Saturation, Factor::Lightness,
                               Factor::Contrast};

double factor_value(const TransformParams& t, Factor f) {
    switch (f) {
        case Factor::Hue: return t.hue_shift;
        case Factor::Saturation: return t.saturation;
        case Factor::Lightness: return t.lightness;
        default: return t.contrast;
    }
}

struct DistanceRun {
    std::vector<double> distances;
    std::vector<double> draws;
};

// Shared sampling for both analysis levels: one single-factor transform per
// image from the (seed, index) substream, distance computed by `measure`.
template <typename Measure>
DistanceRun run_factor(std::span<const Image> images, Factor factor, const TransformSpace& space,
                       uint64_t seed, int threads, Measure&& measure) {
    if (images.empty()) throw InputError("invariance analysis: empty image set");
    const TransformSpace single = space.single_factor(factor);
    single.validate();

    DistanceRun run;
    run.distances.assign(images.size(), 0.0);
    run.draws.assign(images.size(), 0.0);
    parallel_for(images.size(), threads, [&](size_t i) {
        Rng rng(derive_seed(seed, i));
        const TransformParams t = sample_params(single, rng);
        run.draws[i] = factor_value(t, factor);
        run.distances[i] = measure(images[i], apply_transform(images[i], t));
    });
    return run;
}

FactorStats to_stats(DistanceRun&& run) {
    FactorStats stats;
    const size_t n = run.distances.size();
    stats.mean = kahan_sum(run.distances) / static_cast<double>(n);
    std::vector<double> sq(n);
    for (size_t i = 0; i < n; ++i) {
        const double d = run.distances[i] - stats.mean;
        sq[i] = d * d;
    }
    stats.stddev = n > 1 ? std::sqrt(kahan_sum(sq) / static_cast<double>(n - 1)) : 0.0;
    stats.draws = std::move(run.draws);
    return stats;
}

}  // namespace

std::vector<size_t> sample_analysis_set(const LabeledDataset& ds, size_t n, uint64_t seed) {
    if (ds.samples.empty()) throw InputError("sample_analysis_set: empty dataset");
    Rng rng(derive_seed(seed, 0x57ULL));
    return sample_without_replacement(ds.samples.size(), n, rng);
}

FactorStats feature_invariance(const LinearModel* model, const DescriptorConfig& cfg,
                               std::span<const Image> images, Factor factor,
                               const TransformSpace& space, uint64_t seed, int threads) {
    auto measure = [&](const Image& original, const Image& transformed) {
        const Descriptor a = extract(original, cfg);
        const Descriptor b = extract(transformed, cfg);
        if (model == nullptr) return distance(a, b);
        const std::vector<float> va = model->embed(a);
        const std::vector<float> vb = model->embed(b);
        return euclidean_distance(std::span<const float>(va), std::span<const float>(vb));
    };
    return to_stats(run_factor(images, factor, space, seed, threads, measure));
}

FactorStats prediction_invariance(const LinearModel& model, const DescriptorConfig& cfg,
                                  std::span<const Image> images, Factor factor,
                                  const TransformSpace& space, uint64_t seed, int threads) {
    auto measure = [&](const Image& original, const Image& transformed) {
        const std::vector<double> pa = model.predict(extract(original, cfg)).concatenated();
        const std::vector<double> pb = model.predict(extract(transformed, cfg)).concatenated();
        return euclidean_distance(std::span<const double>(pa), std::span<const double>(pb));
    };
    return to_stats(run_factor(images, factor, space, seed, threads, measure));
}

InvarianceReport analyze_universality(const LinearModel* model, const DescriptorConfig& cfg,
                                      std::span<const Image> images, const TransformSpace& space,
                                      uint64_t seed, int threads) {
    if (images.empty()) throw InputError("invariance analysis: empty image set");
    InvarianceReport report;
    report.sample_count = images.size();
    report.used_model_features = model != nullptr;
    for (Factor f : kFactors) {
        report.feature.push_back(
            feature_invariance(model, cfg, images, f, space, seed, threads));
        if (model != nullptr) {
            report.prediction.push_back(
                prediction_invariance(*model, cfg, images, f, space, seed, threads));
        }
    }
    return report;
}

std::string invariance_report_json(const InvarianceReport& report) {
    json out;
    out["sample_count"] = report.sample_count;
    out["distance"] = "euclidean-raw";
    out["feature_space"] = report.used_model_features ? "model-embedding" : "descriptor";
    json factors = json::object();
    for (size_t i = 0; i < report.feature.size(); ++i) {
        const char* name = factor_name(kFactors[i]);
        json entry;
        entry["feature"] = {{"mean", report.feature[i].mean},
                            {"std", report.feature[i].stddev}};
        if (i < report.prediction.size()) {
            entry["prediction"] = {{"mean", report.prediction[i].mean},
                                   {"std", report.prediction[i].stddev}};
        }
        entry["draws"] = report.feature[i].draws;
        factors[name] = entry;
    }
    out["factors"] = factors;
    return out.dump(2);
}

void write_invariance_csv(const InvarianceReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write invariance csv: " + path.string());
    out << "factor,level,mean,std\n";
    char buf[96];
    for (size_t i = 0; i < report.feature.size(); ++i) {
        const char* name = factor_name(kFactors[i]);
        std::snprintf(buf, sizeof(buf), "%s,F,%.17g,%.17g\n", name, report.feature[i].mean,
                      report.feature[i].stddev);
        out << buf;
        if (i < report.prediction.size()) {
            std::snprintf(buf, sizeof(buf), "%s,P,%.17g,%.17g\n", name,
                          report.prediction[i].mean, report.prediction[i].stddev);
            out << buf;
        }
    }
}

}  // namespace forge
