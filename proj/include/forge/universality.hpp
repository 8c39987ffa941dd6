#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "forge/classifier.hpp"
#include "forge/dataset.hpp"
#include "forge/transform.hpp"

namespace forge {

/// Mean/std of the per-image distances for one factor at one level, plus the
/// parameter values that were drawn.
struct FactorStats {
    double mean = 0.0;
    double stddev = 0.0;
    std::vector<double> draws;
};

struct InvarianceReport {
    size_t sample_count = 0;
    // Indexed by Factor order H, S, L, C.
    std::vector<FactorStats> feature;
    std::vector<FactorStats> prediction;  // empty when no model was supplied
    bool used_model_features = false;
};

/// Uniform sample without replacement of min(n, size) dataset indices.
std::vector<size_t> sample_analysis_set(const LabeledDataset& ds, size_t n, uint64_t seed);

/// Mean embedding distance between each image and a single-factor transformed
/// copy (the other factors stay at identity). Without a model the embedding
/// is the raw descriptor; with a model it is the model's learned
/// representation. Draws are keyed on (seed, image index).
FactorStats feature_invariance(const LinearModel* model, const DescriptorConfig& cfg,
                               std::span<const Image> images, Factor factor,
                               const TransformSpace& space, uint64_t seed, int threads = 1);

/// Same sampling, with the distance taken between concatenated class
/// posterior vectors. Requires a trained model.
FactorStats prediction_invariance(const LinearModel& model, const DescriptorConfig& cfg,
                                  std::span<const Image> images, Factor factor,
                                  const TransformSpace& space, uint64_t seed, int threads = 1);

/// Runs all four factors at both levels. `model` may be null, which limits
/// the report to descriptor-level feature invariance.
InvarianceReport analyze_universality(const LinearModel* model, const DescriptorConfig& cfg,
                                      std::span<const Image> images, const TransformSpace& space,
                                      uint64_t seed, int threads = 1);

/// Raw Euclidean distances; per-factor draws included for audit.
std::string invariance_report_json(const InvarianceReport& report);
/// Bar-chart-ready rows: factor, level in {F, P}, mean, std.
void write_invariance_csv(const InvarianceReport& report, const std::filesystem::path& path);

}  // namespace forge
