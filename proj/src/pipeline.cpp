#include "forge/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "forge/error.hpp"
#include "forge/parallel.hpp"

using json = nlohmann::ordered_json;

namespace forge {

std::vector<Descriptor> extract_all(const LabeledDataset& ds, const DescriptorConfig& cfg,
                                    int threads) {
    std::vector<Descriptor> out(ds.samples.size());
    parallel_for(ds.samples.size(), threads,
                 [&](size_t i) { out[i] = extract(ds.samples[i].image, cfg); });
    return out;
}

std::vector<SampleMeta> dataset_meta(const LabeledDataset& ds) {
    std::vector<SampleMeta> meta(ds.samples.size());
    for (size_t i = 0; i < ds.samples.size(); ++i) {
        meta[i] = {ds.samples[i].identity, ds.samples[i].camera};
    }
    return meta;
}

EmbeddingMatrix embed_dataset(const LinearModel* model, const LabeledDataset& ds,
                              const DescriptorConfig& cfg, int threads) {
    const std::vector<Descriptor> descriptors = extract_all(ds, cfg, threads);
    EmbeddingMatrix m;
    if (model == nullptr) {
        return descriptors_to_matrix(descriptors);
    }
    m.dim = static_cast<uint32_t>(model->embedding_dim());
    m.values.assign(descriptors.size() * static_cast<size_t>(m.dim), 0.0f);
    parallel_for(descriptors.size(), threads, [&](size_t i) {
        const std::vector<float> row = model->embed(descriptors[i]);
        std::copy(row.begin(), row.end(), m.values.begin() + i * m.dim);
    });
    return m;
}

EvalReport evaluate_datasets(const LinearModel* model, const LabeledDataset& query,
                             const LabeledDataset& gallery, const DescriptorConfig& cfg,
                             const EvalProtocol& protocol, int threads) {
    const EmbeddingMatrix q = embed_dataset(model, query, cfg, threads);
    const EmbeddingMatrix g = embed_dataset(model, gallery, cfg, threads);
    const DistanceMatrix dist = distance_matrix(q, g, threads);
    const std::vector<SampleMeta> qm = dataset_meta(query);
    const std::vector<SampleMeta> gm = dataset_meta(gallery);
    return evaluate(dist, qm, gm, protocol, threads);
}

void resize_dataset(LabeledDataset& ds, int target_w, int target_h) {
    if (target_w <= 0 || target_h <= 0) return;
    for (LabeledSample& s : ds.samples) {
        s.image = bilinear_resize(s.image, target_w, target_h);
    }
}

LabeledDataset subsample_identities(const LabeledDataset& ds, int count, uint64_t seed) {
    if (count < 1 || count > ds.n_identities) {
        throw InputError("identity count " + std::to_string(count) + " exceeds available " +
                         std::to_string(ds.n_identities));
    }
    Rng rng(derive_seed(seed, 0x1D5ULL));
    const std::vector<size_t> chosen =
        sample_without_replacement(static_cast<size_t>(ds.n_identities),
                                   static_cast<size_t>(count), rng);
    std::set<int> keep(chosen.begin(), chosen.end());

    LabeledDataset out;
    out.split = ds.split;
    std::map<int, int> remap;
    for (int old_index : keep) {
        remap[old_index] = static_cast<int>(out.label_registry.size());
        out.label_registry.push_back(ds.label_registry[static_cast<size_t>(old_index)]);
    }
    for (const LabeledSample& s : ds.samples) {
        auto it = remap.find(s.identity);
        if (it == remap.end()) continue;
        LabeledSample copy = s;
        copy.identity = it->second;
        out.samples.push_back(std::move(copy));
    }
    out.n_identities = count;
    return out;
}

std::vector<AblationRow> run_ablation(const LabeledDataset& train_set,
                                      const LabeledDataset& query, const LabeledDataset& gallery,
                                      const ExperimentConfig& cfg) {
    struct Variant {
        std::string name;
        bool use_uit;
        TransformSpace space;
    };
    std::vector<Variant> variants;
    variants.push_back({"baseline", false, cfg.space});
    for (Factor f : {Factor::Hue, Factor::Saturation, Factor::Lightness, Factor::Contrast}) {
        variants.push_back({std::string("+") + factor_name(f), true, cfg.space.single_factor(f)});
    }
    variants.push_back({"+All", true, cfg.space});

    std::vector<AblationRow> rows;
    rows.reserve(variants.size());
    for (const Variant& v : variants) {
        const TrainResult trained =
            train(train_set, v.space, cfg.train, cfg.descriptor, v.use_uit, cfg.threads);
        rows.push_back({v.name, evaluate_datasets(&trained.model, query, gallery, cfg.descriptor,
                                                  cfg.protocol, cfg.threads)});
    }
    return rows;
}

std::string ablation_json(const std::vector<AblationRow>& rows, const EvalProtocol& protocol) {
    json out = json::array();
    for (const AblationRow& row : rows) {
        json entry;
        entry["variant"] = row.name;
        for (int r : protocol.ranks_reported) {
            entry["rank" + std::to_string(r)] = row.report.cmc_at(r);
        }
        entry["map"] = row.report.map;
        out.push_back(entry);
    }
    return out.dump(2);
}

void write_ablation_csv(const std::vector<AblationRow>& rows, const EvalProtocol& protocol,
                        const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write ablation csv: " + path.string());
    out << "variant";
    for (int r : protocol.ranks_reported) out << ",rank" << r;
    out << ",map\n";
    char buf[48];
    for (const AblationRow& row : rows) {
        out << row.name;
        for (int r : protocol.ranks_reported) {
            std::snprintf(buf, sizeof(buf), ",%.17g", row.report.cmc_at(r));
            out << buf;
        }
        std::snprintf(buf, sizeof(buf), ",%.17g\n", row.report.map);
        out << buf;
    }
}

std::vector<SweepPoint> run_identity_sweep(const LabeledDataset& train_set,
                                           const LabeledDataset& query,
                                           const LabeledDataset& gallery,
                                           const ExperimentConfig& cfg,
                                           const std::vector<int>& identity_counts,
                                           int repeats, bool use_uit) {
    if (identity_counts.empty()) throw InputError("sweep: no identity counts given");
    if (repeats < 1) throw InputError("sweep: repeats must be >= 1");
    for (int c : identity_counts) {
        if (c > train_set.n_identities) {
            throw InputError("sweep: count " + std::to_string(c) + " exceeds training identities " +
                             std::to_string(train_set.n_identities));
        }
    }

    std::vector<SweepPoint> points;
    for (int count : identity_counts) {
        for (int rep = 0; rep < repeats; ++rep) {
            const uint64_t run_seed = derive_seed(cfg.train.seed,
                                                  {static_cast<uint64_t>(count),
                                                   static_cast<uint64_t>(rep)});
            const LabeledDataset subset = subsample_identities(train_set, count, run_seed);
            TrainConfig tc = cfg.train;
            tc.seed = run_seed;
            const TrainResult trained =
                train(subset, cfg.space, tc, cfg.descriptor, use_uit, cfg.threads);
            const EvalReport report = evaluate_datasets(&trained.model, query, gallery,
                                                        cfg.descriptor, cfg.protocol, cfg.threads);
            points.push_back({count, run_seed, report.cmc_at(1), report.map});
        }
    }
    return points;
}

std::string sweep_json(const std::vector<SweepPoint>& points) {
    json out = json::array();
    for (const SweepPoint& p : points) {
        out.push_back({{"identity_count", p.identity_count},
                       {"seed", p.seed},
                       {"rank1", p.rank1},
                       {"map", p.map}});
    }
    return out.dump(2);
}

void write_sweep_csv(const std::vector<SweepPoint>& points, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write sweep csv: " + path.string());
    out << "identity_count,seed,rank1,map\n";
    char buf[96];
    for (const SweepPoint& p : points) {
        std::snprintf(buf, sizeof(buf), "%d,%llu,%.17g,%.17g\n", p.identity_count,
                      static_cast<unsigned long long>(p.seed), p.rank1, p.map);
        out << buf;
    }
}

}  // namespace forge
