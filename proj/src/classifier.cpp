#include "forge/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "forge/error.hpp"
#include "forge/parallel.hpp"

using json = nlohmann::ordered_json;

namespace forge {

std::vector<double> PredictionSet::concatenated() const {
    std::vector<double> out;
    size_t total = global_probs.size();
    for (const auto& r : regional) total += r.size();
    out.reserve(total);
    for (const auto& r : regional) out.insert(out.end(), r.begin(), r.end());
    out.insert(out.end(), global_probs.begin(), global_probs.end());
    return out;
}

void TrainConfig::validate() const {
    if (smoothing < 0.0 || smoothing >= 1.0) throw InputError("smoothing must be in [0, 1)");
    if (lr <= 0.0) throw InputError("learning rate must be positive");
    if (epochs < 1) throw InputError("epochs must be >= 1");
    if (batch_size < 1) throw InputError("batch size must be >= 1");
    if (momentum < 0.0 || momentum >= 1.0) throw InputError("momentum must be in [0, 1)");
    if (weight_decay < 0.0) throw InputError("weight decay must be nonnegative");
    if (lr_drop_divisor <= 0.0) throw InputError("lr divisor must be positive");
}

std::vector<double> smoothed_targets(int label, int n_classes, double smoothing) {
    if (label < 0 || label >= n_classes) throw InputError("label out of range");
    const double off = n_classes > 1 ? smoothing / (n_classes - 1) : 0.0;
    std::vector<double> q(static_cast<size_t>(n_classes), off);
    q[static_cast<size_t>(label)] = 1.0 - smoothing;
    return q;
}

double single_head_ce(std::span<const double> probs, int label, double smoothing) {
    if (label < 0 || static_cast<size_t>(label) >= probs.size()) {
        throw InputError("label out of range");
    }
    const int n = static_cast<int>(probs.size());
    const std::vector<double> q = smoothed_targets(label, n, smoothing);
    double loss = 0.0;
    for (int k = 0; k < n; ++k) {
        if (!(probs[static_cast<size_t>(k)] > 0.0)) {
            throw NumericError("cross entropy over non-positive probability");
        }
        loss += q[static_cast<size_t>(k)] * -std::log(probs[static_cast<size_t>(k)]);
    }
    return loss;
}

double combined_ce_loss(const PredictionSet& preds, int label, double smoothing) {
    double loss = 0.0;
    for (const auto& region : preds.regional) loss += single_head_ce(region, label, smoothing);
    loss += single_head_ce(preds.global_probs, label, smoothing);
    return loss;
}

std::vector<double> softmax(std::span<const double> logits) {
    const double peak = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double sum = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - peak);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

LinearModel::LinearModel(int m, int n_classes, int part_dim)
    : m_(m), n_classes_(n_classes), part_dim_(part_dim) {
    if (m < 1 || n_classes < 1 || part_dim < 1) throw InputError("invalid model shape");
    heads_.resize(static_cast<size_t>(m) + 1);
    for (Head& h : heads_) {
        h.weights.assign(static_cast<size_t>(n_classes) * part_dim, 0.0);
        h.bias.assign(static_cast<size_t>(n_classes), 0.0);
    }
}

void LinearModel::check_compatible(const Descriptor& d) const {
    if (d.m != m_ || d.part_dim() != part_dim_) {
        throw ShapeError("descriptor shape does not match model heads");
    }
}

std::vector<double> LinearModel::head_logits(int head, std::span<const float> segment) const {
    if (segment.size() != static_cast<size_t>(part_dim_)) {
        throw ShapeError("segment dimension does not match head input");
    }
    const Head& h = heads_[static_cast<size_t>(head)];
    std::vector<double> logits(static_cast<size_t>(n_classes_));
    for (int c = 0; c < n_classes_; ++c) {
        const double* w = h.weights.data() + static_cast<size_t>(c) * part_dim_;
        double acc = h.bias[static_cast<size_t>(c)];
        for (int i = 0; i < part_dim_; ++i) acc += w[i] * segment[static_cast<size_t>(i)];
        logits[static_cast<size_t>(c)] = acc;
    }
    return logits;
}

PredictionSet LinearModel::predict(const Descriptor& d) const {
    check_compatible(d);
    PredictionSet out;
    out.regional.reserve(static_cast<size_t>(m_));
    for (int part = 0; part < m_; ++part) {
        out.regional.push_back(softmax(head_logits(part, d.part(part))));
    }
    out.global_probs = softmax(head_logits(m_, d.global_part()));
    return out;
}

std::vector<float> LinearModel::embed(const Descriptor& d) const {
    check_compatible(d);
    std::vector<float> out;
    out.reserve(static_cast<size_t>(embedding_dim()));
    for (int head = 0; head <= m_; ++head) {
        std::vector<double> logits = head_logits(head, d.part(head));
        for (double v : logits) out.push_back(static_cast<float>(v));
    }
    return out;
}

void sgd_update(std::vector<double>& param, std::vector<double>& velocity,
                const std::vector<double>& grad, const TrainConfig& cfg, double lr) {
    for (size_t i = 0; i < param.size(); ++i) {
        const double g = grad[i] + cfg.weight_decay * param[i];
        velocity[i] = cfg.momentum * velocity[i] + g;
        param[i] -= lr * velocity[i];
    }
}

namespace {

struct SgdState {
    std::vector<LinearModel::Head> velocity;

    explicit SgdState(const LinearModel& model) {
        velocity.resize(model.heads().size());
        for (size_t h = 0; h < velocity.size(); ++h) {
            velocity[h].weights.assign(model.heads()[h].weights.size(), 0.0);
            velocity[h].bias.assign(model.heads()[h].bias.size(), 0.0);
        }
    }
};

}  // namespace

TrainResult train(const LabeledDataset& train_set, const TransformSpace& space,
                  const TrainConfig& cfg, const DescriptorConfig& descriptor_cfg, bool use_uit,
                  int threads) {
    cfg.validate();
    descriptor_cfg.validate();
    space.validate();
    if (train_set.samples.empty()) throw InputError("train: empty training set");
    if (train_set.n_identities < 2) {
        throw InputError("train: need at least 2 identities, got " +
                         std::to_string(train_set.n_identities));
    }

    const size_t n = train_set.samples.size();
    const int n_classes = train_set.n_identities;
    LinearModel model(descriptor_cfg.m, n_classes, descriptor_cfg.part_dim());
    SgdState state(model);

    // Without augmentation descriptors never change; extract once.
    std::vector<Descriptor> clean(n);
    if (!use_uit) {
        parallel_for(n, threads,
                     [&](size_t i) { clean[i] = extract(train_set.samples[i].image, descriptor_cfg); });
    }

    std::vector<double> epoch_loss(static_cast<size_t>(cfg.epochs), 0.0);
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});

    const int n_heads = model.head_count();
    std::vector<std::vector<double>> grad_w(static_cast<size_t>(n_heads));
    std::vector<std::vector<double>> grad_b(static_cast<size_t>(n_heads));

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = cfg.lr_for_epoch(epoch);
        Rng shuffle_rng(derive_seed(cfg.seed, {0x5u, static_cast<uint64_t>(epoch)}));
        shuffle(order, shuffle_rng);

        double loss_sum = 0.0;
        for (size_t batch_begin = 0; batch_begin < n;
             batch_begin += static_cast<size_t>(cfg.batch_size)) {
            const size_t batch_end =
                std::min(n, batch_begin + static_cast<size_t>(cfg.batch_size));
            const size_t batch_n = batch_end - batch_begin;

            // Augmentation substreams are keyed on (seed, epoch, dataset
            // index), so the batch partition cannot change the draws.
            std::vector<Descriptor> batch_desc(batch_n);
            parallel_for(batch_n, threads, [&](size_t bi) {
                const size_t idx = order[batch_begin + bi];
                if (use_uit) {
                    Rng rng(derive_seed(cfg.seed,
                                        {0xAu, static_cast<uint64_t>(epoch), idx}));
                    const TransformParams t = sample_params(space, rng);
                    batch_desc[bi] =
                        extract(apply_transform(train_set.samples[idx].image, t), descriptor_cfg);
                } else {
                    batch_desc[bi] = clean[idx];
                }
            });

            for (int h = 0; h < n_heads; ++h) {
                grad_w[static_cast<size_t>(h)].assign(model.heads()[static_cast<size_t>(h)].weights.size(), 0.0);
                grad_b[static_cast<size_t>(h)].assign(model.heads()[static_cast<size_t>(h)].bias.size(), 0.0);
            }

            const double inv_batch = 1.0 / static_cast<double>(batch_n);
            for (size_t bi = 0; bi < batch_n; ++bi) {
                const size_t idx = order[batch_begin + bi];
                const int label = train_set.samples[idx].identity;
                const Descriptor& d = batch_desc[bi];
                const std::vector<double> q = smoothed_targets(label, n_classes, cfg.smoothing);
                for (int h = 0; h < n_heads; ++h) {
                    std::span<const float> seg = d.part(h);
                    const std::vector<double> probs = softmax(model.head_logits(h, seg));
                    loss_sum += single_head_ce(probs, label, cfg.smoothing);
                    // dL/dz = p - q for softmax cross entropy.
                    std::vector<double>& gw = grad_w[static_cast<size_t>(h)];
                    std::vector<double>& gb = grad_b[static_cast<size_t>(h)];
                    for (int c = 0; c < n_classes; ++c) {
                        const double g = (probs[static_cast<size_t>(c)] - q[static_cast<size_t>(c)]) * inv_batch;
                        gb[static_cast<size_t>(c)] += g;
                        double* gw_row = gw.data() + static_cast<size_t>(c) * model.part_dim();
                        for (int i = 0; i < model.part_dim(); ++i) {
                            gw_row[i] += g * seg[static_cast<size_t>(i)];
                        }
                    }
                }
            }

            for (int h = 0; h < n_heads; ++h) {
                LinearModel::Head& head = model.heads()[static_cast<size_t>(h)];
                LinearModel::Head& vel = state.velocity[static_cast<size_t>(h)];
                sgd_update(head.weights, vel.weights, grad_w[static_cast<size_t>(h)], cfg, lr);
                sgd_update(head.bias, vel.bias, grad_b[static_cast<size_t>(h)], cfg, lr);
            }
        }
        epoch_loss[static_cast<size_t>(epoch)] = loss_sum / static_cast<double>(n);
    }

    TrainResult result;
    result.model = std::move(model);
    result.epoch_loss = std::move(epoch_loss);
    result.descriptor = descriptor_cfg;
    result.config = cfg;
    result.use_uit = use_uit;
    return result;
}

double top1_accuracy(const LinearModel& model, std::span<const Descriptor> descriptors,
                     std::span<const int> labels) {
    if (descriptors.size() != labels.size() || descriptors.empty()) {
        throw InputError("top1_accuracy: size mismatch or empty input");
    }
    size_t hits = 0;
    for (size_t i = 0; i < descriptors.size(); ++i) {
        const std::vector<double> probs =
            softmax(model.head_logits(model.m(), descriptors[i].global_part()));
        const auto arg =
            std::distance(probs.begin(), std::max_element(probs.begin(), probs.end()));
        if (static_cast<int>(arg) == labels[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(descriptors.size());
}

void save_model(const TrainResult& result, const std::filesystem::path& base_path) {
    const LinearModel& model = result.model;
    std::ofstream bin(base_path.string() + ".bin", std::ios::binary | std::ios::trunc);
    if (!bin) throw IoError("cannot write model: " + base_path.string() + ".bin");
    for (const LinearModel::Head& h : model.heads()) {
        std::vector<float> buf;
        buf.reserve(h.weights.size() + h.bias.size());
        for (double v : h.weights) buf.push_back(static_cast<float>(v));
        for (double v : h.bias) buf.push_back(static_cast<float>(v));
        bin.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }
    if (!bin) throw IoError("model write failed");

    json side;
    side["format"] = "forge-linear-model-v1";
    side["m"] = model.m();
    side["n_classes"] = model.n_classes();
    side["part_dim"] = model.part_dim();
    side["descriptor"] = {{"m", result.descriptor.m},
                          {"bins_per_channel", result.descriptor.bins_per_channel}};
    side["use_uit"] = result.use_uit;
    side["train_config"] = {{"momentum", result.config.momentum},
                            {"weight_decay", result.config.weight_decay},
                            {"batch_size", result.config.batch_size},
                            {"epochs", result.config.epochs},
                            {"lr", result.config.lr},
                            {"lr_drop_epoch", result.config.lr_drop_epoch},
                            {"lr_drop_divisor", result.config.lr_drop_divisor},
                            {"smoothing", result.config.smoothing},
                            {"seed", result.config.seed}};
    std::ofstream meta(base_path.string() + ".json", std::ios::trunc);
    if (!meta) throw IoError("cannot write model sidecar");
    meta << side.dump(2) << '\n';
}

TrainResult load_model(const std::filesystem::path& base_path) {
    std::ifstream meta(base_path.string() + ".json");
    if (!meta) throw IoError("cannot open model sidecar: " + base_path.string() + ".json");
    json side;
    try {
        meta >> side;
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("model sidecar: ") + e.what());
    }
    if (side.value("format", "") != "forge-linear-model-v1") {
        throw FormatError("model sidecar: unknown format");
    }

    TrainResult result;
    const int m = side.at("m").get<int>();
    const int n_classes = side.at("n_classes").get<int>();
    const int part_dim = side.at("part_dim").get<int>();
    result.model = LinearModel(m, n_classes, part_dim);
    result.descriptor.m = side.at("descriptor").at("m").get<int>();
    result.descriptor.bins_per_channel = side.at("descriptor").at("bins_per_channel").get<int>();
    result.use_uit = side.value("use_uit", false);
    if (side.contains("train_config")) {
        const json& tc = side["train_config"];
        result.config.momentum = tc.value("momentum", result.config.momentum);
        result.config.weight_decay = tc.value("weight_decay", result.config.weight_decay);
        result.config.batch_size = tc.value("batch_size", result.config.batch_size);
        result.config.epochs = tc.value("epochs", result.config.epochs);
        result.config.lr = tc.value("lr", result.config.lr);
        result.config.lr_drop_epoch = tc.value("lr_drop_epoch", result.config.lr_drop_epoch);
        result.config.lr_drop_divisor = tc.value("lr_drop_divisor", result.config.lr_drop_divisor);
        result.config.smoothing = tc.value("smoothing", result.config.smoothing);
        result.config.seed = tc.value("seed", result.config.seed);
    }

    std::ifstream bin(base_path.string() + ".bin", std::ios::binary);
    if (!bin) throw IoError("cannot open model weights: " + base_path.string() + ".bin");
    for (LinearModel::Head& h : result.model.heads()) {
        std::vector<float> buf(h.weights.size() + h.bias.size());
        bin.read(reinterpret_cast<char*>(buf.data()),
                 static_cast<std::streamsize>(buf.size() * sizeof(float)));
        if (bin.gcount() != static_cast<std::streamsize>(buf.size() * sizeof(float))) {
            throw FormatError("model weights truncated: " + base_path.string() + ".bin");
        }
        for (size_t i = 0; i < h.weights.size(); ++i) h.weights[i] = buf[i];
        for (size_t i = 0; i < h.bias.size(); ++i) h.bias[i] = buf[h.weights.size() + i];
    }
    char probe;
    if (bin.read(&probe, 1)) throw FormatError("model weights: trailing bytes");
    return result;
}

void write_loss_curve_csv(std::span<const double> epoch_loss,
                          const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write loss curve: " + path.string());
    out << "epoch,mean_loss\n";
    char buf[40];
    for (size_t e = 0; e < epoch_loss.size(); ++e) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", e + 1, epoch_loss[e]);
        out << buf;
    }
}

}  // namespace forge
