#pragma once

#include <string>
#include <vector>

#include "forge/classifier.hpp"
#include "forge/dataset.hpp"
#include "forge/eval.hpp"
#include "forge/universality.hpp"

namespace forge {

/// Parallel ordered descriptor extraction.
std::vector<Descriptor> extract_all(const LabeledDataset& ds, const DescriptorConfig& cfg,
                                    int threads = 1);

std::vector<SampleMeta> dataset_meta(const LabeledDataset& ds);

/// Row-per-sample embeddings: the model's learned representation when a
/// model is supplied, raw descriptors otherwise.
EmbeddingMatrix embed_dataset(const LinearModel* model, const LabeledDataset& ds,
                              const DescriptorConfig& cfg, int threads = 1);

/// Full retrieval evaluation of query against gallery.
EvalReport evaluate_datasets(const LinearModel* model, const LabeledDataset& query,
                             const LabeledDataset& gallery, const DescriptorConfig& cfg,
                             const EvalProtocol& protocol, int threads = 1);

/// Eval-mode resize of every sample; no-op when targets are 0.
void resize_dataset(LabeledDataset& ds, int target_w, int target_h);

/// Keeps only `count` identities (seeded uniform choice) and re-indexes them
/// contiguously. count must not exceed the dataset's identity count.
LabeledDataset subsample_identities(const LabeledDataset& ds, int count, uint64_t seed);

struct ExperimentConfig {
    DescriptorConfig descriptor;
    TransformSpace space;
    TrainConfig train;
    EvalProtocol protocol;
    int threads = 1;
};

struct AblationRow {
    std::string name;  // baseline, +H, +S, +L, +C, +All
    EvalReport report;
};

/// Trains and evaluates the per-factor toggles: no augmentation, each single
/// factor, then the full space.
std::vector<AblationRow> run_ablation(const LabeledDataset& train_set,
                                      const LabeledDataset& query, const LabeledDataset& gallery,
                                      const ExperimentConfig& cfg);

std::string ablation_json(const std::vector<AblationRow>& rows, const EvalProtocol& protocol);
void write_ablation_csv(const std::vector<AblationRow>& rows, const EvalProtocol& protocol,
                        const std::filesystem::path& path);

struct SweepPoint {
    int identity_count = 0;
    uint64_t seed = 0;
    double rank1 = 0.0;
    double map = 0.0;
};

/// Trains on seeded identity subsets of increasing size and evaluates each
/// model on the fixed query/gallery pair. `repeats` reruns every count with
/// derived seeds.
std::vector<SweepPoint> run_identity_sweep(const LabeledDataset& train_set,
                                           const LabeledDataset& query,
                                           const LabeledDataset& gallery,
                                           const ExperimentConfig& cfg,
                                           const std::vector<int>& identity_counts,
                                           int repeats = 1, bool use_uit = true);

std::string sweep_json(const std::vector<SweepPoint>& points);
void write_sweep_csv(const std::vector<SweepPoint>& points, const std::filesystem::path& path);

}  // namespace forge
