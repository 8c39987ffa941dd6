#include "forge/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "forge/error.hpp"
#include "forge/image_io.hpp"
#include "forge/log.hpp"
#include "forge/parallel.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace forge {

const char* split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Query: return "query";
        default: return "gallery";
    }
}

namespace {

bool has_image_extension(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

// Market-style convention: <identity>_c<camera>_<suffix>.<ext>
bool parse_market_name(const std::string& stem, int& identity, int& camera) {
    size_t us = stem.find("_c");
    if (us == std::string::npos || us == 0) return false;
    const std::string id_part = stem.substr(0, us);
    if (!std::all_of(id_part.begin(), id_part.end(),
                     [](unsigned char c) { return std::isdigit(c); })) {
        return false;
    }
    size_t pos = us + 2;
    size_t cam_end = pos;
    while (cam_end < stem.size() && std::isdigit(static_cast<unsigned char>(stem[cam_end]))) {
        ++cam_end;
    }
    if (cam_end == pos) return false;
    try {
        identity = std::stoi(id_part);
        camera = std::stoi(stem.substr(pos, cam_end - pos));
    } catch (const std::exception&) {
        return false;
    }
    return identity >= 0 && camera >= 0;
}

struct PendingSample {
    fs::path path;
    int label = 0;
    int camera = 0;
};

std::vector<PendingSample> scan_by_filename(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && has_image_extension(entry.path())) {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());

    std::vector<PendingSample> pending;
    pending.reserve(files.size());
    for (const fs::path& f : files) {
        int identity = 0, camera = 0;
        if (!parse_market_name(f.stem().string(), identity, camera)) {
            throw FormatError("filename does not match <id>_c<cam>_<suffix> and no manifest "
                              "was supplied: " + f.string());
        }
        pending.push_back({f, identity, camera});
    }
    return pending;
}

std::vector<PendingSample> scan_by_manifest(const fs::path& dir, const fs::path& manifest) {
    std::ifstream in(manifest);
    if (!in) throw IoError("cannot open manifest: " + manifest.string());

    std::vector<PendingSample> pending;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json row;
        try {
            row = json::parse(line);
        } catch (const json::parse_error& e) {
            throw FormatError("manifest line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!row.contains("path") || !row.contains("identity") || !row.contains("camera")) {
            throw FormatError("manifest line " + std::to_string(line_no) +
                              ": expected path/identity/camera");
        }
        PendingSample s;
        fs::path p = row["path"].get<std::string>();
        s.path = p.is_absolute() ? p : dir / p;
        s.label = row["identity"].get<int>();
        s.camera = row["camera"].get<int>();
        if (s.label < 0 || s.camera < 0) {
            throw FormatError("manifest line " + std::to_string(line_no) +
                              ": identity and camera must be nonnegative");
        }
        pending.push_back(std::move(s));
    }
    // Deterministic ordering regardless of manifest line order.
    std::sort(pending.begin(), pending.end(),
              [](const PendingSample& a, const PendingSample& b) { return a.path < b.path; });
    return pending;
}

}  // namespace

LabeledDataset ingest_directory(const fs::path& dir, Split split, const IngestOptions& options) {
    if (!fs::exists(dir) || !fs::is_directory(dir)) {
        throw InputError("dataset directory does not exist: " + dir.string());
    }

    std::vector<PendingSample> pending = options.manifest
                                             ? scan_by_manifest(dir, *options.manifest)
                                             : scan_by_filename(dir);

    // Parallel decode into positional slots keeps the serial lexicographic
    // order intact.
    std::vector<std::optional<Image>> decoded(pending.size());
    parallel_for(pending.size(), options.threads, [&](size_t i) {
        try {
            decoded[i] = load_image(pending[i].path);
        } catch (const Error&) {
            decoded[i] = std::nullopt;
        }
    });

    LabeledDataset ds;
    ds.split = split;
    for (size_t i = 0; i < pending.size(); ++i) {
        if (!decoded[i]) {
            log::warn("skipping unreadable image: " + pending[i].path.string());
            ds.skipped.push_back(pending[i].path.string());
            continue;
        }
        LabeledSample s;
        s.image = std::move(*decoded[i]);
        s.original_label = pending[i].label;
        s.camera = pending[i].camera;
        s.source_path = pending[i].path.string();
        ds.samples.push_back(std::move(s));
    }
    if (ds.samples.empty()) {
        throw InputError("no readable samples in " + dir.string());
    }

    // Contiguous identity indices, ascending by original label.
    std::set<int> labels;
    for (const LabeledSample& s : ds.samples) labels.insert(s.original_label);
    std::map<int, int> to_index;
    for (int label : labels) {
        to_index[label] = static_cast<int>(ds.label_registry.size());
        ds.label_registry.push_back(label);
    }
    for (LabeledSample& s : ds.samples) s.identity = to_index[s.original_label];
    ds.n_identities = static_cast<int>(ds.label_registry.size());
    return ds;
}

std::string dataset_summary_json(const LabeledDataset& ds) {
    std::map<int, int> per_identity;
    std::map<int, int> per_camera;
    for (const LabeledSample& s : ds.samples) {
        per_identity[s.original_label]++;
        per_camera[s.camera]++;
    }
    json out;
    out["split"] = split_name(ds.split);
    out["n_samples"] = ds.samples.size();
    out["n_identities"] = ds.n_identities;
    out["n_skipped"] = ds.skipped.size();
    json ids = json::object();
    for (const auto& [label, count] : per_identity) ids[std::to_string(label)] = count;
    json cams = json::object();
    for (const auto& [cam, count] : per_camera) cams[std::to_string(cam)] = count;
    out["per_identity"] = ids;
    out["per_camera"] = cams;
    return out.dump(2);
}

Image bilinear_resize(const Image& img, int target_w, int target_h) {
    if (img.empty()) throw ShapeError("bilinear_resize: empty source");
    if (target_w <= 0 || target_h <= 0) {
        throw ShapeError("bilinear_resize: target dimensions must be positive");
    }
    if (target_w == img.width() && target_h == img.height()) return img;

    Image out(target_w, target_h);
    const double sx = static_cast<double>(img.width()) / target_w;
    const double sy = static_cast<double>(img.height()) / target_h;
    for (int y = 0; y < target_h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        int y0 = static_cast<int>(std::floor(fy));
        double wy = fy - y0;
        int y1 = std::min(y0 + 1, img.height() - 1);
        y0 = std::max(y0, 0);
        float* dst = out.row(y);
        const float* row0 = img.row(y0);
        const float* row1 = img.row(y1);
        for (int x = 0; x < target_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            int x0 = static_cast<int>(std::floor(fx));
            double wx = fx - x0;
            int x1 = std::min(x0 + 1, img.width() - 1);
            x0 = std::max(x0, 0);
            for (int c = 0; c < 3; ++c) {
                double top = (1.0 - wx) * row0[x0 * 3 + c] + wx * row0[x1 * 3 + c];
                double bottom = (1.0 - wx) * row1[x0 * 3 + c] + wx * row1[x1 * 3 + c];
                dst[x * 3 + c] = static_cast<float>((1.0 - wy) * top + wy * bottom);
            }
        }
    }
    return out;
}

Image horizontal_flip(const Image& img) {
    Image out(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y) {
        const float* src = img.row(y);
        float* dst = out.row(y);
        for (int x = 0; x < img.width(); ++x) {
            const float* s = src + static_cast<size_t>(img.width() - 1 - x) * 3;
            dst[x * 3 + 0] = s[0];
            dst[x * 3 + 1] = s[1];
            dst[x * 3 + 2] = s[2];
        }
    }
    return out;
}

Image pad_random_crop(const Image& img, int pad, Rng& rng) {
    if (pad <= 0) return img;
    const int ox = static_cast<int>(rng.next_below(static_cast<uint64_t>(2 * pad + 1)));
    const int oy = static_cast<int>(rng.next_below(static_cast<uint64_t>(2 * pad + 1)));
    Image out(img.width(), img.height(), 0.0f);
    for (int y = 0; y < img.height(); ++y) {
        // Source row in padded coordinates; zero outside the original.
        int sy = y + oy - pad;
        if (sy < 0 || sy >= img.height()) continue;
        const float* src = img.row(sy);
        float* dst = out.row(y);
        for (int x = 0; x < img.width(); ++x) {
            int sx = x + ox - pad;
            if (sx < 0 || sx >= img.width()) continue;
            dst[x * 3 + 0] = src[sx * 3 + 0];
            dst[x * 3 + 1] = src[sx * 3 + 1];
            dst[x * 3 + 2] = src[sx * 3 + 2];
        }
    }
    return out;
}

Image preprocess(const Image& img, int target_w, int target_h, bool train_mode, Rng& rng,
                 const PreprocessOptions& options) {
    if (img.empty()) throw ShapeError("preprocess: empty source image");
    if (target_w <= 0 || target_h <= 0) {
        throw ShapeError("preprocess: target dimensions must be positive");
    }
    Image work = img;
    if (train_mode) {
        if (options.enable_crop) work = pad_random_crop(work, options.crop_pad, rng);
        if (options.enable_flip && rng.bernoulli(options.flip_prob)) {
            work = horizontal_flip(work);
        }
    }
    return bilinear_resize(work, target_w, target_h);
}

}  // namespace forge
