// Acceptance runner: executes every acceptance criterion at its stated
// tolerance, prints one PASS/FAIL line per criterion and exits nonzero if
// any fail. argv[1] must point at the forge CLI binary (used by the
// reproducibility criterion).

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "forge/classifier.hpp"
#include "forge/colorspace.hpp"
#include "forge/fixture.hpp"
#include "forge/pipeline.hpp"
#include "forge/transform.hpp"
#include "forge/universality.hpp"

#include "../oracle_eval.hpp"

namespace fs = std::filesystem;
using namespace forge;

namespace {

struct Check {
    std::vector<std::string> failures;

    void expect(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }
};

std::string fmt(const char* pattern, double a, double b = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), pattern, a, b);
    return buf;
}

Image random_image(Rng& rng, int w, int h, double lo = 0.0, double hi = 1.0) {
    Image img(w, h);
    for (float& v : img.data()) v = static_cast<float>(rng.uniform(lo, hi));
    return img;
}

Image random_gray(Rng& rng, int w, int h) {
    Image img(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double v = rng.next_double();
            img.set_pixel(x, y, {v, v, v});
        }
    }
    return img;
}

// ---------------------------------------------------------------- criterion 1

void criterion_transform_algebra(Check& c) {
    Rng rng(0xAC01);
    for (int trial = 0; trial < 6; ++trial) {
        const Image img = random_image(rng, 48, 96);

        c.expect(apply_transform(img, TransformParams{}) == img, "identity params not a fixpoint");

        c.expect(max_channel_difference(shift_hue(img, 360.0), img) < 1e-6,
                 "hue 360 exceeded 1e-6");

        const double a = rng.uniform(-180.0, 180.0);
        const double b = rng.uniform(-180.0, 180.0);
        const double comp =
            max_channel_difference(shift_hue(shift_hue(img, a), b), shift_hue(img, a + b));
        c.expect(comp < 2e-6, fmt("hue composition %g exceeded 2e-6", comp));

        const Image degenerate = random_image(rng, 48, 96);
        c.expect(interpolate(degenerate, img, 0.0) == degenerate,
                 "interpolation alpha=0 endpoint not exact");
        c.expect(interpolate(degenerate, img, 1.0) == img,
                 "interpolation alpha=1 endpoint not exact");

        const Image mid = random_image(rng, 48, 96, 0.25, 0.75);
        const double mean_before = mean_luminance(mid);
        const double factor = rng.uniform(0.6, 1.4);
        const double mean_after = mean_luminance(adjust_contrast(mid, factor));
        c.expect(std::abs(mean_after - mean_before) < 1e-6,
                 fmt("contrast mean drift %g exceeded 1e-6", std::abs(mean_after - mean_before)));

        const Image gray = random_gray(rng, 48, 96);
        c.expect(max_channel_difference(shift_hue(gray, rng.uniform(-180, 180)), gray) < 1e-6,
                 "grayscale image moved under hue shift");
        c.expect(max_channel_difference(adjust_saturation(gray, rng.uniform(0.0, 2.0)), gray) <
                     1e-6,
                 "grayscale image moved under saturation");
    }
}

// ---------------------------------------------------------------- criterion 2

void criterion_color_round_trip(Check& c) {
    Rng rng(0xAC02);
    double worst = 0.0;
    for (int i = 0; i < 1000000; ++i) {
        const RgbPixel p{rng.next_double(), rng.next_double(), rng.next_double()};
        const RgbPixel q = hsv_to_rgb(rgb_to_hsv(p));
        worst = std::max({worst, std::abs(p.r - q.r), std::abs(p.g - q.g), std::abs(p.b - q.b)});
    }
    c.expect(worst < 1e-6, fmt("round-trip worst error %g exceeded 1e-6", worst));
}

// ---------------------------------------------------------------- criterion 3

void criterion_metric_oracle(Check& c) {
    Rng rng(0xAC03);
    for (int trial = 0; trial < 100; ++trial) {
        const size_t n_q = 1 + rng.next_below(10);
        const size_t n_g = 2 + rng.next_below(29);
        const int n_ids = 2 + static_cast<int>(rng.next_below(5));
        const int n_cams = 2 + static_cast<int>(rng.next_below(2));

        std::vector<SampleMeta> qm, gm;
        for (size_t q = 0; q < n_q; ++q) {
            qm.push_back({static_cast<int>(rng.next_below(n_ids)),
                          static_cast<int>(rng.next_below(n_cams)) + 1});
        }
        for (size_t g = 0; g < n_g; ++g) {
            gm.push_back({static_cast<int>(rng.next_below(n_ids)),
                          static_cast<int>(rng.next_below(n_cams)) + 1});
        }
        DistanceMatrix dist;
        dist.rows = n_q;
        dist.cols = n_g;
        dist.values.resize(n_q * n_g);
        std::vector<std::vector<double>> rows(n_q, std::vector<double>(n_g));
        for (size_t q = 0; q < n_q; ++q) {
            for (size_t g = 0; g < n_g; ++g) {
                rows[q][g] = rng.uniform(0.0, 10.0);
                dist.values[q * n_g + g] = rows[q][g];
            }
        }
        const EvalReport report = evaluate(dist, qm, gm, {});
        const test::OracleReport oracle = test::oracle_evaluate(rows, qm, gm, true);
        c.expect(report.n_queries_evaluated == oracle.evaluated, "oracle evaluated-count mismatch");
        if (oracle.evaluated == 0) continue;
        c.expect(std::abs(report.map - oracle.map) < 1e-9,
                 fmt("mAP differs from oracle by %g", std::abs(report.map - oracle.map)));
        for (size_t r = 0; r < oracle.cmc.size(); ++r) {
            if (std::abs(report.cmc[r] - oracle.cmc[r]) >= 1e-9) {
                c.expect(false, fmt("CMC differs from oracle at rank %g", double(r + 1)));
                break;
            }
        }
    }

    // Hand case: hits at ranks 1 and 3 of 5.
    DistanceMatrix d;
    d.rows = 1;
    d.cols = 5;
    d.values = {0.1, 0.2, 0.3, 0.4, 0.5};
    const std::vector<SampleMeta> qm = {{1, 1}};
    const std::vector<SampleMeta> gm = {{1, 2}, {9, 2}, {1, 2}, {9, 2}, {9, 2}};
    const EvalReport hand = evaluate(d, qm, gm, {});
    c.expect(std::abs(hand.map - (1.0 + 2.0 / 3.0) / 2.0) < 1e-9,
             fmt("hand AP %g differs from 0.8333...", hand.map));
}

// ---------------------------------------------------------------- criterion 4

void criterion_loss_suite(Check& c) {
    // Closed form: uniform predictions over K classes cost (m+1) ln K.
    for (int k : {2, 3, 4, 10}) {
        PredictionSet p;
        p.regional.assign(6, std::vector<double>(static_cast<size_t>(k), 1.0 / k));
        p.global_probs.assign(static_cast<size_t>(k), 1.0 / k);
        const double expected = 7.0 * std::log(static_cast<double>(k));
        c.expect(std::abs(combined_ce_loss(p, 0, 0.0) - expected) < 1e-9,
                 fmt("uniform loss differs from 7lnK by %g",
                     std::abs(combined_ce_loss(p, 0, 0.0) - expected)));
    }

    Rng rng(0xAC04);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + static_cast<int>(rng.next_below(6));
        std::vector<double> logits(static_cast<size_t>(n));
        for (double& v : logits) v = rng.uniform(-3.0, 3.0);
        const int label = static_cast<int>(rng.next_below(n));
        const double eps = trial % 2 == 0 ? 0.0 : 0.1;

        const std::vector<double> p = softmax(logits);
        const std::vector<double> q = smoothed_targets(label, n, eps);
        const double h = 1e-6;
        for (int k = 0; k < n; ++k) {
            std::vector<double> plus = logits, minus = logits;
            plus[static_cast<size_t>(k)] += h;
            minus[static_cast<size_t>(k)] -= h;
            const double numeric = (single_head_ce(softmax(plus), label, eps) -
                                    single_head_ce(softmax(minus), label, eps)) /
                                   (2.0 * h);
            const double analytic = p[static_cast<size_t>(k)] - q[static_cast<size_t>(k)];
            const double rel =
                std::abs(numeric - analytic) / std::max(1e-6, std::abs(analytic));
            c.expect(rel < 1e-4, fmt("gradient relative error %g exceeded 1e-4", rel));
        }

        // eps = 0 must match the one-hot form exactly.
        c.expect(single_head_ce(p, label, 0.0) == -std::log(p[static_cast<size_t>(label)]),
                 "eps=0 did not reduce exactly to one-hot CE");
    }
}

// ---------------------------------------------------------------- criterion 5

struct CliRunner {
    std::string binary;
    fs::path root;

    int run(const std::string& args) const {
        const std::string cmd = binary + " " + args + " >> " + (root / "cli.out").string() +
                                " 2>&1";
        return std::system(cmd.c_str());
    }
};

std::map<std::string, std::vector<char>> read_dir_files(const fs::path& dir) {
    std::map<std::string, std::vector<char>> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string rel = fs::relative(entry.path(), dir).string();
        if (rel == "run.log" || rel.ends_with("/run.log")) continue;  // timestamps live here
        std::ifstream in(entry.path(), std::ios::binary);
        files[rel] = std::vector<char>((std::istreambuf_iterator<char>(in)),
                                       std::istreambuf_iterator<char>());
    }
    return files;
}

bool dirs_identical(const fs::path& a, const fs::path& b, std::string& detail) {
    const auto fa = read_dir_files(a);
    const auto fb = read_dir_files(b);
    if (fa.size() != fb.size()) {
        detail = "file count differs: " + a.string() + " vs " + b.string();
        return false;
    }
    for (const auto& [rel, bytes] : fa) {
        auto it = fb.find(rel);
        if (it == fb.end()) {
            detail = "missing file " + rel;
            return false;
        }
        if (it->second != bytes) {
            detail = "bytes differ in " + rel;
            return false;
        }
    }
    return true;
}

void criterion_cli_determinism(Check& c, const std::string& forge_bin) {
    const fs::path root = fs::current_path() / "acceptance_tmp";
    fs::remove_all(root);
    fs::create_directories(root);
    CliRunner cli{forge_bin, root};

    const fs::path cfg_path = root / "run.cfg";
    {
        std::ofstream cfg(cfg_path);
        cfg << "preprocess.width = 0\npreprocess.height = 0\n";
        cfg << "fixture.identities = 5\nfixture.train_per_id_per_cam = 2\n";
        cfg << "fixture.test_per_id_per_cam = 1\nfixture.width = 24\nfixture.height = 48\n";
        cfg << "train.epochs = 4\ntrain.batch_size = 8\ntrain.lr = 0.05\n";
        cfg << "train.lr_drop_epoch = 3\n";
        cfg << "augment.count = 2\nuniversality.count = 10\n";
        cfg << "sweep.counts = 2,4\nsweep.repeats = 1\n";
    }
    const std::string base = "--config " + cfg_path.string() + " --seed 77";
    const fs::path fx = root / "fx";

    // Each subcommand is run twice with the same seed, then once with a
    // different thread count; all report bytes must match.
    auto triple = [&](const std::string& name, const std::string& args) {
        const fs::path r1 = root / (name + "_a");
        const fs::path r2 = root / (name + "_b");
        const fs::path r8 = root / (name + "_t8");
        int rc = cli.run(base + " --threads 1 --out " + r1.string() + " " + args);
        rc |= cli.run(base + " --threads 1 --out " + r2.string() + " " + args);
        rc |= cli.run(base + " --threads 8 --out " + r8.string() + " " + args);
        if (rc != 0) {
            c.expect(false, name + ": nonzero exit status");
            return;
        }
        std::string detail;
        const bool rerun_same = dirs_identical(r1, r2, detail);
        c.expect(rerun_same, name + " rerun: " + detail);
        // The echoed config records the thread knob itself; everything else
        // must match bit for bit.
        auto fa = read_dir_files(r1);
        auto fb = read_dir_files(r8);
        fa.erase("effective_config.txt");
        fb.erase("effective_config.txt");
        bool same = fa.size() == fb.size();
        std::string why = same ? "" : "file count differs";
        if (same) {
            for (const auto& [rel, bytes] : fa) {
                auto it = fb.find(rel);
                if (it == fb.end() || it->second != bytes) {
                    same = false;
                    why = "bytes differ in " + rel;
                    break;
                }
            }
        }
        c.expect(same, name + " threads 1 vs 8: " + why);
    };

    triple("fixture", "fixture");
    if (c.failures.empty()) {
        // Later commands consume one canonical fixture.
        int rc = cli.run(base + " --threads 1 --out " + fx.string() + " fixture");
        c.expect(rc == 0, "canonical fixture generation failed");
    }
    if (!c.failures.empty()) return;

    triple("augment", "augment --in " + (fx / "query").string());
    triple("train", "train --train " + (fx / "train").string());

    const fs::path model_run = root / "model_run";
    int rc = cli.run(base + " --threads 1 --out " + model_run.string() + " train --train " +
                     (fx / "train").string());
    c.expect(rc == 0, "model training for eval failed");
    if (!c.failures.empty()) return;
    const std::string model = (model_run / "model").string();

    triple("eval", "eval --query " + (fx / "query").string() + " --gallery " +
                       (fx / "gallery").string() + " --model " + model + " --dump-embeddings");
    triple("universality", "universality --data " + (fx / "train").string() + " --model " + model);
    triple("ablate", "ablate --train " + (fx / "train").string() + " --query " +
                         (fx / "query").string() + " --gallery " + (fx / "gallery").string());
    triple("sweep", "sweep --train " + (fx / "train").string() + " --query " +
                        (fx / "query").string() + " --gallery " + (fx / "gallery").string());

    const fs::path emb = root / "eval_a";
    triple("eval-external",
           "eval-external --query-emb " + (emb / "query_embeddings.bin").string() +
               " --query-meta " + (emb / "query_meta.jsonl").string() + " --gallery-emb " +
               (emb / "gallery_embeddings.bin").string() + " --gallery-meta " +
               (emb / "gallery_meta.jsonl").string());
}

// ---------------------------------------------------------------- criterion 6

void criterion_invariance_ordering(Check& c) {
    FixtureConfig fcfg;
    fcfg.n_identities = 20;
    fcfg.train_samples_per_id_per_camera = 13;  // 20*2*13 = 520 analysis images
    fcfg.test_samples_per_id_per_camera = 1;
    fcfg.width = 32;
    fcfg.height = 96;
    fcfg.seed = 17;
    const FixtureBundle bundle = generate_fixture(fcfg);

    const DescriptorConfig dcfg;
    const TransformSpace space;
    TrainConfig tcfg;
    tcfg.seed = 17;
    const int threads = 2;

    const TrainResult uit = train(bundle.train, space, tcfg, dcfg, true, threads);
    const TrainResult baseline = train(bundle.train, space, tcfg, dcfg, false, threads);

    std::vector<Image> images;
    images.reserve(bundle.train.samples.size());
    for (const LabeledSample& s : bundle.train.samples) images.push_back(s.image);
    c.expect(images.size() >= 500, "analysis set smaller than 500 images");

    for (Factor f : {Factor::Hue, Factor::Saturation, Factor::Lightness, Factor::Contrast}) {
        const FactorStats fu = feature_invariance(&uit.model, dcfg, images, f, space, 99, threads);
        const FactorStats fb =
            feature_invariance(&baseline.model, dcfg, images, f, space, 99, threads);
        c.expect(fu.mean < fb.mean,
                 std::string("feature invariance not lower for UIT at factor ") + factor_name(f) +
                     fmt(" (uit %g vs baseline %g)", fu.mean, fb.mean));

        const FactorStats pu =
            prediction_invariance(uit.model, dcfg, images, f, space, 99, threads);
        const FactorStats pb =
            prediction_invariance(baseline.model, dcfg, images, f, space, 99, threads);
        c.expect(pu.mean < pb.mean,
                 std::string("prediction invariance not lower for UIT at factor ") +
                     factor_name(f) + fmt(" (uit %g vs baseline %g)", pu.mean, pb.mean));
    }
}

// ---------------------------------------------------------------- criterion 7

void criterion_ablation_margins(Check& c) {
    FixtureConfig fcfg;
    fcfg.n_identities = 8;
    fcfg.train_samples_per_id_per_camera = 6;
    fcfg.test_samples_per_id_per_camera = 6;
    fcfg.width = 32;
    fcfg.height = 96;
    fcfg.seed = 101;
    fcfg.test_offset.hue_shift = 11.0;
    fcfg.test_offset.contrast = 0.85;
    const FixtureBundle bundle = generate_fixture(fcfg);

    ExperimentConfig cfg;
    cfg.descriptor.bins_per_channel = 24;
    cfg.train.seed = 101;
    cfg.threads = 2;

    const std::vector<AblationRow> rows =
        run_ablation(bundle.train, bundle.query, bundle.gallery, cfg);
    std::map<std::string, double> r1;
    for (const AblationRow& row : rows) r1[row.name] = row.report.cmc_at(1);

    c.expect(r1["+All"] >= r1["baseline"] + 0.05,
             fmt("+All rank-1 %g not 5 points above baseline %g", r1["+All"], r1["baseline"]));
    c.expect(r1["+H"] > r1["baseline"],
             fmt("+H rank-1 %g does not beat baseline %g", r1["+H"], r1["baseline"]));
    c.expect(r1["+C"] > r1["baseline"],
             fmt("+C rank-1 %g does not beat baseline %g", r1["+C"], r1["baseline"]));
}

// ---------------------------------------------------------------- criterion 8

void criterion_identity_sweep(Check& c) {
    FixtureConfig fcfg;
    fcfg.n_identities = 16;
    fcfg.train_samples_per_id_per_camera = 6;
    fcfg.test_samples_per_id_per_camera = 4;
    fcfg.width = 32;
    fcfg.height = 96;
    fcfg.seed = 23;
    fcfg.test_offset.hue_shift = 11.0;
    fcfg.test_offset.contrast = 0.85;
    const FixtureBundle bundle = generate_fixture(fcfg);

    ExperimentConfig cfg;
    cfg.descriptor.bins_per_channel = 16;
    cfg.train.seed = 23;
    cfg.threads = 2;

    const std::vector<int> counts = {2, 4, 8, 16};
    const std::vector<SweepPoint> points =
        run_identity_sweep(bundle.train, bundle.query, bundle.gallery, cfg, counts, 3, true);

    std::map<int, double> best;
    for (const SweepPoint& p : points) {
        best[p.identity_count] = std::max(best[p.identity_count], p.rank1);
    }
    double previous = -1.0;
    for (int count : counts) {
        c.expect(best[count] >= previous,
                 fmt("best rank-1 decreased at count %g (%g)", double(count), best[count]));
        previous = best[count];
    }
}

// ---------------------------------------------------------------- criterion 9

void criterion_throughput(Check& c) {
    Rng rng(0xAC09);
    std::vector<Image> batch;
    for (int i = 0; i < 64; ++i) batch.push_back(random_image(rng, 128, 384));
    const TransformSpace space;

    // Parallel output must be bit-identical to serial.
    const std::vector<Image> serial = augment_batch(batch, space, 5, 1);
    const std::vector<Image> parallel = augment_batch(batch, space, 5, 8);
    for (size_t i = 0; i < batch.size(); ++i) {
        if (!(serial[i] == parallel[i])) {
            c.expect(false, "8-thread augment_batch differs from serial");
            break;
        }
    }

    std::vector<Image> out;
    augment_batch_into(batch, space, 0, 8, out);  // warm buffers and threads
    const auto t0 = std::chrono::steady_clock::now();
    size_t total = 0;
    int rep = 0;
    while (std::chrono::steady_clock::now() - t0 < std::chrono::seconds(3)) {
        augment_batch_into(batch, space, static_cast<uint64_t>(rep++), 8, out);
        total += out.size();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double rate = static_cast<double>(total) / secs;
    std::printf("       throughput: %.0f images/s at 384x128 on 8 threads\n", rate);
    c.expect(rate >= 2000.0, fmt("sustained %g images/s, floor is 2000", rate));
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: %s <path-to-forge-binary>\n", argv[0]);
        return 2;
    }
    const std::string forge_bin = argv[1];

    struct Criterion {
        int id;
        const char* name;
        double time_limit_s;  // 0 = none stated
        std::function<void(Check&)> body;
    };
    const std::vector<Criterion> criteria = {
        {1, "transform algebra suite", 10.0, criterion_transform_algebra},
        {2, "color round-trip suite (1e6 pixels)", 5.0, criterion_color_round_trip},
        {3, "metric oracle suite", 10.0, criterion_metric_oracle},
        {4, "loss suite", 0.0, criterion_loss_suite},
        {5, "seeded reproducibility of every subcommand", 0.0,
         [&](Check& c) { criterion_cli_determinism(c, forge_bin); }},
        {6, "invariance ordering (UIT below baseline per factor)", 300.0,
         criterion_invariance_ordering},
        {7, "ablation margins under hue+contrast domain shift", 600.0,
         criterion_ablation_margins},
        {8, "rank-1 nondecreasing over seed identity counts", 0.0, criterion_identity_sweep},
        {9, "augment throughput floor", 0.0, criterion_throughput},
    };

    int failed = 0;
    for (const Criterion& criterion : criteria) {
        Check check;
        const auto start = std::chrono::steady_clock::now();
        try {
            criterion.body(check);
        } catch (const std::exception& e) {
            check.expect(false, std::string("exception: ") + e.what());
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (criterion.time_limit_s > 0.0 && elapsed >= criterion.time_limit_s) {
            check.expect(false,
                         fmt("runtime %gs exceeded limit %gs", elapsed, criterion.time_limit_s));
        }
        if (check.failures.empty()) {
            std::printf("[PASS] criterion %d: %s (%.1fs)\n", criterion.id, criterion.name,
                        elapsed);
        } else {
            ++failed;
            std::printf("[FAIL] criterion %d: %s (%.1fs)\n", criterion.id, criterion.name,
                        elapsed);
            for (const std::string& f : check.failures) {
                std::printf("       %s\n", f.c_str());
            }
        }
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
