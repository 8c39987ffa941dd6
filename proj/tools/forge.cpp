#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "forge/config.hpp"
#include "forge/error.hpp"
#include "forge/image_io.hpp"
#include "forge/log.hpp"
#include "forge/parallel.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace forge;

namespace {

constexpr const char* kExitCodeHelp =
    "Exit codes:\n"
    "  0  success\n"
    "  2  input error (bad arguments, empty or missing datasets, shape mismatches)\n"
    "  3  format error (malformed manifests, embeddings, configs, checkpoints)\n"
    "  4  numeric error (NaN distances, non-positive probabilities)\n"
    "  5  I/O error (unreadable or unwritable paths)\n";

// Timestamps are confined to run.log so every report file stays byte-stable
// across reruns.
class RunLog {
public:
    explicit RunLog(const fs::path& out_dir) : out_(out_dir / "run.log", std::ios::app) {}

    void note(const std::string& msg) {
        if (!out_) return;
        const auto now = std::chrono::system_clock::now();
        const std::time_t t = std::chrono::system_clock::to_time_t(now);
        char stamp[32];
        std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
        out_ << stamp << ' ' << msg << '\n';
        out_.flush();
    }

private:
    std::ofstream out_;
};

fs::path prepare_out_dir(const RunConfig& cfg) {
    if (cfg.out_dir.empty()) throw InputError("--out directory is required");
    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec) throw IoError("cannot create output directory: " + cfg.out_dir.string());
    std::ofstream echo(cfg.out_dir / "effective_config.txt", std::ios::trunc);
    if (!echo) throw IoError("cannot write effective config");
    echo << cfg.effective_text();
    return cfg.out_dir;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!text.empty() && text.back() != '\n') out << '\n';
}

LabeledDataset load_split(const std::string& dir, Split split, const RunConfig& cfg,
                          const std::string& manifest) {
    if (dir.empty()) {
        throw InputError(std::string("missing dataset directory for ") + split_name(split));
    }
    IngestOptions opts;
    opts.threads = resolve_threads(cfg.threads);
    if (!manifest.empty()) {
        opts.manifest = fs::path(manifest);
    } else if (fs::exists(fs::path(dir) / "manifest.jsonl")) {
        opts.manifest = fs::path(dir) / "manifest.jsonl";
    }
    LabeledDataset ds = ingest_directory(dir, split, opts);
    resize_dataset(ds, cfg.preprocess_width, cfg.preprocess_height);
    return ds;
}

std::optional<TrainResult> maybe_load_model(const RunConfig& cfg) {
    if (cfg.model_path.empty()) return std::nullopt;
    return load_model(cfg.model_path);
}

int cmd_fixture(const RunConfig& cfg) {
    const fs::path out = prepare_out_dir(cfg);
    RunLog log(out);
    log.note("fixture start");
    const FixtureBundle bundle = generate_fixture(cfg.fixture);
    write_fixture(bundle, out);
    log.note("fixture done");
    return 0;
}

int cmd_augment(const RunConfig& cfg, const std::string& manifest) {
    const fs::path out = prepare_out_dir(cfg);
    RunLog log(out);
    log.note("augment start");
    if (cfg.augment_count < 1) throw InputError("augment count must be >= 1");

    // Augment operates on native-size images; no resize.
    RunConfig native = cfg;
    native.preprocess_width = 0;
    native.preprocess_height = 0;
    const LabeledDataset ds = load_split(cfg.data_dir, Split::Train, native, manifest);

    const size_t total = ds.samples.size() * static_cast<size_t>(cfg.augment_count);
    const std::vector<TransformParams> params = sample_batch_params(cfg.space, cfg.seed, total);

    const fs::path image_dir = out / "images";
    std::error_code ec;
    fs::create_directories(image_dir, ec);
    if (ec) throw IoError("cannot create image output directory");

    std::vector<std::string> names(total);
    for (size_t j = 0; j < total; ++j) {
        const size_t i = j / static_cast<size_t>(cfg.augment_count);
        const size_t k = j % static_cast<size_t>(cfg.augment_count);
        const fs::path src(ds.samples[i].source_path);
        names[j] = src.stem().string() + "__aug" + std::to_string(k) + ".png";
    }
    parallel_for(total, resolve_threads(cfg.threads), [&](size_t j) {
        const size_t i = j / static_cast<size_t>(cfg.augment_count);
        const Image transformed = apply_transform(ds.samples[i].image, params[j]);
        save_png(transformed, image_dir / names[j]);
    });

    std::ofstream plog(out / "params.jsonl", std::ios::trunc);
    if (!plog) throw IoError("cannot write params log");
    for (size_t j = 0; j < total; ++j) {
        const size_t i = j / static_cast<size_t>(cfg.augment_count);
        json row = {{"index", j},
                    {"source", ds.samples[i].source_path},
                    {"output", names[j]},
                    {"hue_shift", params[j].hue_shift},
                    {"saturation", params[j].saturation},
                    {"lightness", params[j].lightness},
                    {"contrast", params[j].contrast}};
        plog << row.dump() << '\n';
    }
    log.note("augment done: " + std::to_string(total) + " images");
    return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& manifest) {
    const fs::path out = prepare_out_dir(cfg);
    RunLog log(out);
    log.note("train start");
    const LabeledDataset ds = load_split(cfg.train_dir, Split::Train, cfg, manifest);
    write_text(out / "train_dataset.json", dataset_summary_json(ds));

    const TrainResult result = train(ds, cfg.space, cfg.train, cfg.descriptor, cfg.use_uit,
                                     resolve_threads(cfg.threads));
    save_model(result, out / "model");
    write_loss_curve_csv(result.epoch_loss, out / "loss_curve.csv");

    json summary;
    summary["n_samples"] = ds.samples.size();
    summary["n_identities"] = ds.n_identities;
    summary["use_uit"] = cfg.use_uit;
    summary["epochs"] = cfg.train.epochs;
    summary["final_mean_loss"] = result.epoch_loss.back();
    write_text(out / "train_summary.json", summary.dump(2));
    log.note("train done");
    return 0;
}

int cmd_eval(const RunConfig& cfg, bool dump_embeddings) {
    const fs::path out = prepare_out_dir(cfg);
    RunLog log(out);
    log.note("eval start");
    const std::optional<TrainResult> model = maybe_load_model(cfg);
    const DescriptorConfig dcfg = model ? model->descriptor : cfg.descriptor;
    const int threads = resolve_threads(cfg.threads);

    LabeledDataset query = load_split(cfg.query_dir, Split::Query, cfg, "");
    LabeledDataset gallery = load_split(cfg.gallery_dir, Split::Gallery, cfg, "");

    const EmbeddingMatrix q = embed_dataset(model ? &model->model : nullptr, query, dcfg, threads);
    const EmbeddingMatrix g =
        embed_dataset(model ? &model->model : nullptr, gallery, dcfg, threads);
    const std::vector<SampleMeta> qm = dataset_meta(query);
    const std::vector<SampleMeta> gm = dataset_meta(gallery);
    const EvalReport report = evaluate(distance_matrix(q, g, threads), qm, gm, cfg.protocol,
                                       threads);

    write_text(out / "eval_report.json", eval_report_json(report, cfg.protocol));
    write_cmc_csv(report, out / "cmc.csv");
    if (dump_embeddings) {
        write_embeddings_binary(q, out / "query_embeddings.bin");
        write_embeddings_binary(g, out / "gallery_embeddings.bin");
        write_meta_jsonl(qm, out / "query_meta.jsonl");
        write_meta_jsonl(gm, out / "gallery_meta.jsonl");
    }
    log.note("eval done");
    return 0;
}

int cmd_eval_external(const RunConfig& cfg, const std::string& query_emb,
                      const std::string& query_meta, const std::string& gallery_emb,
                      const std::string& gallery_meta, bool csv_format) {
    const fs::path out = prepare_out_dir(cfg);
    RunLog log(out);
    log.note("eval-external start");
    if (query_emb.empty() || query_meta.empty() || gallery_emb.empty() || gallery_meta.empty()) {
        throw InputError("eval-external needs --query-emb/--query-meta/--gallery-emb/--gallery-meta");
    }
    const EmbeddingMatrix q =
        csv_format ? read_embeddings_csv(query_emb) : read_embeddings_binary(query_emb);
    const EmbeddingMatrix g =
        csv_format ? read_embeddings_csv(gallery_emb) : read_embeddings_binary(gallery_emb);
    const std::vector<SampleMeta> qm = read_meta_jsonl(query_meta);
    const std::vector<SampleMeta> gm = read_meta_jsonl(gallery_meta);
    if (qm.size() != q.count()) {
        throw FormatError("query meta rows (" + std::to_string(qm.size()) +
                          ") do not match embeddings (" + std::to_string(q.count()) + ")");
    }
    if (gm.size() != g.count()) {
        throw FormatError("gallery meta rows (" + std::to_string(gm.size()) +
                          ") do not match embeddings (" + std::to_string(g.count()) + ")");
    }
    const int threads = resolve_threads(cfg.threads);
    const EvalReport report =
        evaluate(distance_matrix(q, g, threads), qm, gm, cfg.protocol, threads);
    write_text(out / "eval_report.json", eval_report_json(report, cfg.protocol));
    write_cmc_csv(report, out / "cmc.csv");
    log.note("eval-external done");
    return 0;
}

int cmd_universality(const RunConfig& cfg) {
    const fs::path out = prepare_out_dir(cfg);
    RunLog log(out);
    log.note("universality start");
    const std::optional<TrainResult> model = maybe_load_model(cfg);
    const DescriptorConfig dcfg = model ? model->descriptor : cfg.descriptor;

    const LabeledDataset ds = load_split(cfg.data_dir, Split::Query, cfg, "");
    const std::vector<size_t> indices = sample_analysis_set(ds, cfg.universality_count, cfg.seed);
    std::vector<Image> images;
    images.reserve(indices.size());
    for (size_t i : indices) images.push_back(ds.samples[i].image);

    const InvarianceReport report =
        analyze_universality(model ? &model->model : nullptr, dcfg, images, cfg.space, cfg.seed,
                             resolve_threads(cfg.threads));
    write_text(out / "invariance.json", invariance_report_json(report));
    write_invariance_csv(report, out / "invariance.csv");
    log.note("universality done");
    return 0;
}

int cmd_ablate(const RunConfig& cfg) {
    const fs::path out = prepare_out_dir(cfg);
    RunLog log(out);
    log.note("ablate start");
    const LabeledDataset train_set = load_split(cfg.train_dir, Split::Train, cfg, "");
    const LabeledDataset query = load_split(cfg.query_dir, Split::Query, cfg, "");
    const LabeledDataset gallery = load_split(cfg.gallery_dir, Split::Gallery, cfg, "");
    const std::vector<AblationRow> rows =
        run_ablation(train_set, query, gallery, cfg.experiment());
    write_text(out / "ablation.json", ablation_json(rows, cfg.protocol));
    write_ablation_csv(rows, cfg.protocol, out / "ablation.csv");
    log.note("ablate done");
    return 0;
}

int cmd_sweep(const RunConfig& cfg) {
    const fs::path out = prepare_out_dir(cfg);
    RunLog log(out);
    log.note("sweep start");
    const LabeledDataset train_set = load_split(cfg.train_dir, Split::Train, cfg, "");
    const LabeledDataset query = load_split(cfg.query_dir, Split::Query, cfg, "");
    const LabeledDataset gallery = load_split(cfg.gallery_dir, Split::Gallery, cfg, "");
    const std::vector<SweepPoint> points = run_identity_sweep(
        train_set, query, gallery, cfg.experiment(), cfg.sweep_counts, cfg.sweep_repeats,
        cfg.use_uit);
    write_text(out / "sweep.json", sweep_json(points));
    write_sweep_csv(points, out / "sweep.csv");
    log.note("sweep done");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"forge: universal appearance-transformation pipeline for person re-id"};
    app.footer(kExitCodeHelp);
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, out_dir, seed_str, threads_str;
    app.add_option("--config", config_path, "key = value config file");
    app.add_option("--seed", seed_str, "global random seed (u64)");
    app.add_option("--threads", threads_str, "worker threads (0 = auto)");
    app.add_option("--out", out_dir, "output directory");

    // Per-subcommand flag values, mapped onto config keys after parsing.
    std::string in_dir, train_dir, query_dir, gallery_dir, data_dir, model_path, manifest;
    std::string count_str, counts_str, repeats_str, ids_str;
    std::string offset_hue, offset_saturation, offset_lightness, offset_contrast;
    std::string uit_str;
    std::string query_emb, query_meta, gallery_emb, gallery_meta;
    bool dump_embeddings = false;
    bool csv_format = false;

    CLI::App* fixture = app.add_subcommand("fixture", "generate a synthetic re-id dataset");
    fixture->add_option("--ids", ids_str, "identity count");
    fixture->add_option("--offset-hue", offset_hue, "test-domain hue offset (degrees)");
    fixture->add_option("--offset-saturation", offset_saturation, "test-domain saturation factor");
    fixture->add_option("--offset-lightness", offset_lightness, "test-domain lightness factor");
    fixture->add_option("--offset-contrast", offset_contrast, "test-domain contrast factor");

    CLI::App* augment = app.add_subcommand("augment", "export transformed images and a params log");
    augment->add_option("--in", in_dir, "input dataset directory");
    augment->add_option("--manifest", manifest, "JSON-lines manifest (path/identity/camera)");
    augment->add_option("--count", count_str, "transforms per image");

    CLI::App* train_cmd = app.add_subcommand("train", "train the stand-in classifier");
    train_cmd->add_option("--train", train_dir, "training dataset directory");
    train_cmd->add_option("--manifest", manifest, "JSON-lines manifest");
    train_cmd->add_option("--uit", uit_str, "true/false: use online transformations");

    CLI::App* eval_cmd = app.add_subcommand("eval", "rank query against gallery and score CMC/mAP");
    eval_cmd->add_option("--query", query_dir, "query dataset directory");
    eval_cmd->add_option("--gallery", gallery_dir, "gallery dataset directory");
    eval_cmd->add_option("--model", model_path, "model checkpoint base path (no extension)");
    eval_cmd->add_flag("--dump-embeddings", dump_embeddings,
                       "also export embeddings + meta for eval-external");

    CLI::App* eval_ext = app.add_subcommand("eval-external", "score externally computed embeddings");
    eval_ext->add_option("--query-emb", query_emb, "query embedding file");
    eval_ext->add_option("--query-meta", query_meta, "query meta JSON-lines");
    eval_ext->add_option("--gallery-emb", gallery_emb, "gallery embedding file");
    eval_ext->add_option("--gallery-meta", gallery_meta, "gallery meta JSON-lines");
    eval_ext->add_flag("--csv", csv_format, "embeddings are CSV instead of binary");

    CLI::App* universality = app.add_subcommand("universality",
                                                "feature/prediction invariance per factor");
    universality->add_option("--data", data_dir, "analysis dataset directory");
    universality->add_option("--model", model_path, "model checkpoint base path");
    universality->add_option("--count", count_str, "number of analysis images");

    CLI::App* ablate = app.add_subcommand("ablate", "baseline, per-factor and +All training table");
    ablate->add_option("--train", train_dir, "training dataset directory");
    ablate->add_option("--query", query_dir, "query dataset directory");
    ablate->add_option("--gallery", gallery_dir, "gallery dataset directory");

    CLI::App* sweep = app.add_subcommand("sweep", "rank-1/mAP over seed identity counts");
    sweep->add_option("--train", train_dir, "training dataset directory");
    sweep->add_option("--query", query_dir, "query dataset directory");
    sweep->add_option("--gallery", gallery_dir, "gallery dataset directory");
    sweep->add_option("--counts", counts_str, "comma-separated identity counts");
    sweep->add_option("--repeats", repeats_str, "training repeats per count");

    CLI11_PARSE(app, argc, argv);

    try {
        KeyValueConfig overlay;
        if (!config_path.empty()) overlay.parse_file(config_path);
        auto maybe_set = [&](const std::string& key, const std::string& value) {
            if (!value.empty()) overlay.set(key, value);
        };
        maybe_set("seed", seed_str);
        maybe_set("threads", threads_str);
        maybe_set("out", out_dir);
        maybe_set("dataset.train", train_dir);
        maybe_set("dataset.query", query_dir);
        maybe_set("dataset.gallery", gallery_dir);
        maybe_set("dataset.data", in_dir.empty() ? data_dir : in_dir);
        maybe_set("model", model_path);
        maybe_set("train.use_uit", uit_str);
        maybe_set("fixture.identities", ids_str);
        maybe_set("fixture.offset.hue", offset_hue);
        maybe_set("fixture.offset.saturation", offset_saturation);
        maybe_set("fixture.offset.lightness", offset_lightness);
        maybe_set("fixture.offset.contrast", offset_contrast);
        maybe_set("sweep.counts", counts_str);
        maybe_set("sweep.repeats", repeats_str);
        if (!count_str.empty()) {
            overlay.set(app.got_subcommand("universality") ? "universality.count"
                                                           : "augment.count",
                        count_str);
        }

        const RunConfig cfg = RunConfig::resolve(overlay);
        cfg.space.validate();

        if (app.got_subcommand(fixture)) return cmd_fixture(cfg);
        if (app.got_subcommand(augment)) return cmd_augment(cfg, manifest);
        if (app.got_subcommand(train_cmd)) return cmd_train(cfg, manifest);
        if (app.got_subcommand(eval_cmd)) return cmd_eval(cfg, dump_embeddings);
        if (app.got_subcommand(eval_ext)) {
            return cmd_eval_external(cfg, query_emb, query_meta, gallery_emb, gallery_meta,
                                     csv_format);
        }
        if (app.got_subcommand(universality)) return cmd_universality(cfg);
        if (app.got_subcommand(ablate)) return cmd_ablate(cfg);
        if (app.got_subcommand(sweep)) return cmd_sweep(cfg);
        throw InputError("no subcommand selected");
    } catch (const Error& e) {
        log::error(e.what());
        std::cerr << "forge: " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "forge: unexpected error: " << e.what() << '\n';
        return 1;
    }
}
