#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "forge/dataset.hpp"
#include "forge/features.hpp"
#include "forge/transform.hpp"

namespace forge {

/// Class posterior vectors for the m local regions plus the whole image.
struct PredictionSet {
    std::vector<std::vector<double>> regional;
    std::vector<double> global_probs;

    /// All m+1 vectors in order regional[0..m-1], global.
    std::vector<double> concatenated() const;
};

struct TrainConfig {
    double momentum = 0.9;
    double weight_decay = 0.0005;
    int batch_size = 32;
    int epochs = 60;
    double lr = 0.001;
    int lr_drop_epoch = 40;     // epochs at base lr before dividing
    double lr_drop_divisor = 10.0;
    double smoothing = 0.1;     // label-smoothing mass epsilon
    uint64_t seed = 0;

    double lr_for_epoch(int epoch) const {
        return epoch < lr_drop_epoch ? lr : lr / lr_drop_divisor;
    }
    void validate() const;
};

/// Smoothed target mass for class k given truth y: 1-eps at y, eps/(K-1)
/// elsewhere. eps = 0 reduces to the one-hot target.
std::vector<double> smoothed_targets(int label, int n_classes, double smoothing);

/// Cross entropy of one head against the smoothed target. Probabilities must
/// be strictly positive.
double single_head_ce(std::span<const double> probs, int label, double smoothing);

/// Sum of the m regional head losses plus the global head loss.
double combined_ce_loss(const PredictionSet& preds, int label, double smoothing);

/// One linear softmax head per descriptor segment: m regional heads plus a
/// global head. Weights are doubles; checkpoints quantize to float32.
class LinearModel {
public:
    struct Head {
        std::vector<double> weights;  // n_classes x input_dim, row-major
        std::vector<double> bias;     // n_classes
    };

    LinearModel() = default;
    LinearModel(int m, int n_classes, int part_dim);

    int m() const { return m_; }
    int n_classes() const { return n_classes_; }
    int part_dim() const { return part_dim_; }
    int head_count() const { return m_ + 1; }
    int embedding_dim() const { return head_count() * n_classes_; }

    std::vector<Head>& heads() { return heads_; }
    const std::vector<Head>& heads() const { return heads_; }

    std::vector<double> head_logits(int head, std::span<const float> segment) const;

    /// Softmax posteriors of every head.
    PredictionSet predict(const Descriptor& d) const;

    /// Learned re-id representation: the concatenated pre-softmax logits of
    /// all heads. This is what ranking uses once a model is trained.
    std::vector<float> embed(const Descriptor& d) const;

    void check_compatible(const Descriptor& d) const;

private:
    int m_ = 0;
    int n_classes_ = 0;
    int part_dim_ = 0;
    std::vector<Head> heads_;
};

std::vector<double> softmax(std::span<const double> logits);

/// One SGD update: v = momentum*v + (grad + weight_decay*param); param -= lr*v.
void sgd_update(std::vector<double>& param, std::vector<double>& velocity,
                const std::vector<double>& grad, const TrainConfig& cfg, double lr);

struct TrainResult {
    LinearModel model;
    std::vector<double> epoch_loss;  // mean combined loss per epoch
    DescriptorConfig descriptor;
    TrainConfig config;
    bool use_uit = false;
};

/// Mini-batch SGD (momentum, weight decay, step lr schedule) over the
/// combined loss. With use_uit every image is re-augmented each epoch from
/// the (seed, epoch, index) substream before descriptor extraction.
/// Deterministic for any thread count.
TrainResult train(const LabeledDataset& train_set, const TransformSpace& space,
                  const TrainConfig& cfg, const DescriptorConfig& descriptor_cfg, bool use_uit,
                  int threads = 1);

/// Fraction of samples whose global-head argmax matches the label.
double top1_accuracy(const LinearModel& model, std::span<const Descriptor> descriptors,
                     std::span<const int> labels);

// Checkpoint: <base>.bin holds float32 weights, <base>.json the shape and
// training provenance.
void save_model(const TrainResult& result, const std::filesystem::path& base_path);
TrainResult load_model(const std::filesystem::path& base_path);

void write_loss_curve_csv(std::span<const double> epoch_loss, const std::filesystem::path& path);

}  // namespace forge
