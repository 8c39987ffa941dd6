#include "forge/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "forge/error.hpp"
#include "forge/parallel.hpp"

namespace forge {

namespace {

std::string trim(const std::string& s) {
    const size_t begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const size_t end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

std::string strip_quotes(const std::string& s) {
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                          (s.front() == '\'' && s.back() == '\''))) {
        return s.substr(1, s.size() - 2);
    }
    return s;
}

}  // namespace

void KeyValueConfig::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path.string());
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        parse_line(line, path.string() + ":" + std::to_string(line_no));
    }
}

void KeyValueConfig::parse_line(const std::string& raw, const std::string& where) {
    std::string line = raw;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) return;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
        throw FormatError("config " + where + ": expected key = value, got '" + trim(raw) + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = strip_quotes(trim(line.substr(eq + 1)));
    if (key.empty()) throw FormatError("config " + where + ": empty key");
    entries_[key] = value;
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
    entries_[key] = value;
}

bool KeyValueConfig::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second;
}

int KeyValueConfig::get_int(const std::string& key, int fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    try {
        size_t pos = 0;
        const int v = std::stoi(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument(it->second);
        return v;
    } catch (const std::exception&) {
        throw FormatError("config key '" + key + "': expected integer, got '" + it->second + "'");
    }
}

uint64_t KeyValueConfig::get_u64(const std::string& key, uint64_t fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    try {
        size_t pos = 0;
        const unsigned long long v = std::stoull(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument(it->second);
        return static_cast<uint64_t>(v);
    } catch (const std::exception&) {
        throw FormatError("config key '" + key + "': expected unsigned integer, got '" +
                          it->second + "'");
    }
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    try {
        size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument(it->second);
        return v;
    } catch (const std::exception&) {
        throw FormatError("config key '" + key + "': expected number, got '" + it->second + "'");
    }
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    std::string v = it->second;
    std::transform(v.begin(), v.end(), v.begin(), ::tolower);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw FormatError("config key '" + key + "': expected boolean, got '" + it->second + "'");
}

std::vector<int> KeyValueConfig::get_int_list(const std::string& key,
                                              const std::vector<int>& fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    std::vector<int> out;
    std::stringstream ss(it->second);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        cell = trim(cell);
        if (cell.empty()) continue;
        try {
            out.push_back(std::stoi(cell));
        } catch (const std::exception&) {
            throw FormatError("config key '" + key + "': expected integer list, got '" +
                              it->second + "'");
        }
    }
    if (out.empty()) {
        throw FormatError("config key '" + key + "': empty list");
    }
    return out;
}

void KeyValueConfig::validate_keys(const std::vector<std::string>& known) const {
    for (const auto& [key, value] : entries_) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw FormatError("unknown config key '" + key + "'");
        }
    }
}

namespace {

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = {
        "seed", "threads", "out",
        "dataset.train", "dataset.query", "dataset.gallery", "dataset.data",
        "model",
        "preprocess.width", "preprocess.height",
        "descriptor.m", "descriptor.bins",
        "transform.hue.enabled", "transform.hue.min", "transform.hue.max",
        "transform.saturation.enabled", "transform.saturation.min", "transform.saturation.max",
        "transform.lightness.enabled", "transform.lightness.min", "transform.lightness.max",
        "transform.contrast.enabled", "transform.contrast.min", "transform.contrast.max",
        "train.momentum", "train.weight_decay", "train.batch_size", "train.epochs",
        "train.lr", "train.lr_drop_epoch", "train.lr_drop_divisor", "train.smoothing",
        "train.use_uit",
        "eval.exclude_same_camera_same_id", "eval.ranks",
        "fixture.identities", "fixture.train_per_id_per_cam", "fixture.test_per_id_per_cam",
        "fixture.cameras", "fixture.width", "fixture.height", "fixture.noise",
        "fixture.offset.hue", "fixture.offset.saturation", "fixture.offset.lightness",
        "fixture.offset.contrast",
        "augment.count", "universality.count",
        "sweep.counts", "sweep.repeats",
    };
    return keys;
}

void load_range(const KeyValueConfig& c, const std::string& prefix, TransformSpace::Range& r) {
    r.enabled = c.get_bool(prefix + ".enabled", r.enabled);
    r.min = c.get_double(prefix + ".min", r.min);
    r.max = c.get_double(prefix + ".max", r.max);
}

}  // namespace

RunConfig RunConfig::resolve(const KeyValueConfig& overlay) {
    overlay.validate_keys(known_keys());

    RunConfig cfg;
    cfg.seed = overlay.get_u64("seed", cfg.seed);
    cfg.threads = overlay.get_int("threads", cfg.threads);
    cfg.out_dir = overlay.get_string("out", "");

    cfg.train_dir = overlay.get_string("dataset.train", "");
    cfg.query_dir = overlay.get_string("dataset.query", "");
    cfg.gallery_dir = overlay.get_string("dataset.gallery", "");
    cfg.data_dir = overlay.get_string("dataset.data", "");
    cfg.model_path = overlay.get_string("model", "");

    cfg.preprocess_width = overlay.get_int("preprocess.width", cfg.preprocess_width);
    cfg.preprocess_height = overlay.get_int("preprocess.height", cfg.preprocess_height);

    cfg.descriptor.m = overlay.get_int("descriptor.m", cfg.descriptor.m);
    cfg.descriptor.bins_per_channel = overlay.get_int("descriptor.bins",
                                                      cfg.descriptor.bins_per_channel);

    load_range(overlay, "transform.hue", cfg.space.hue);
    load_range(overlay, "transform.saturation", cfg.space.saturation);
    load_range(overlay, "transform.lightness", cfg.space.lightness);
    load_range(overlay, "transform.contrast", cfg.space.contrast);

    cfg.train.momentum = overlay.get_double("train.momentum", cfg.train.momentum);
    cfg.train.weight_decay = overlay.get_double("train.weight_decay", cfg.train.weight_decay);
    cfg.train.batch_size = overlay.get_int("train.batch_size", cfg.train.batch_size);
    cfg.train.epochs = overlay.get_int("train.epochs", cfg.train.epochs);
    cfg.train.lr = overlay.get_double("train.lr", cfg.train.lr);
    cfg.train.lr_drop_epoch = overlay.get_int("train.lr_drop_epoch", cfg.train.lr_drop_epoch);
    cfg.train.lr_drop_divisor =
        overlay.get_double("train.lr_drop_divisor", cfg.train.lr_drop_divisor);
    cfg.train.smoothing = overlay.get_double("train.smoothing", cfg.train.smoothing);
    cfg.train.seed = cfg.seed;
    cfg.use_uit = overlay.get_bool("train.use_uit", cfg.use_uit);

    cfg.protocol.exclude_same_camera_same_id = overlay.get_bool(
        "eval.exclude_same_camera_same_id", cfg.protocol.exclude_same_camera_same_id);
    cfg.protocol.ranks_reported = overlay.get_int_list("eval.ranks", cfg.protocol.ranks_reported);

    cfg.fixture.n_identities = overlay.get_int("fixture.identities", cfg.fixture.n_identities);
    cfg.fixture.train_samples_per_id_per_camera = overlay.get_int(
        "fixture.train_per_id_per_cam", cfg.fixture.train_samples_per_id_per_camera);
    cfg.fixture.test_samples_per_id_per_camera = overlay.get_int(
        "fixture.test_per_id_per_cam", cfg.fixture.test_samples_per_id_per_camera);
    cfg.fixture.n_cameras = overlay.get_int("fixture.cameras", cfg.fixture.n_cameras);
    cfg.fixture.width = overlay.get_int("fixture.width", cfg.fixture.width);
    cfg.fixture.height = overlay.get_int("fixture.height", cfg.fixture.height);
    cfg.fixture.pixel_noise = overlay.get_double("fixture.noise", cfg.fixture.pixel_noise);
    cfg.fixture.seed = cfg.seed;
    cfg.fixture.test_offset.hue_shift =
        overlay.get_double("fixture.offset.hue", cfg.fixture.test_offset.hue_shift);
    cfg.fixture.test_offset.saturation =
        overlay.get_double("fixture.offset.saturation", cfg.fixture.test_offset.saturation);
    cfg.fixture.test_offset.lightness =
        overlay.get_double("fixture.offset.lightness", cfg.fixture.test_offset.lightness);
    cfg.fixture.test_offset.contrast =
        overlay.get_double("fixture.offset.contrast", cfg.fixture.test_offset.contrast);

    cfg.augment_count = overlay.get_int("augment.count", cfg.augment_count);
    cfg.universality_count = static_cast<size_t>(
        overlay.get_int("universality.count", static_cast<int>(cfg.universality_count)));
    cfg.sweep_counts = overlay.get_int_list("sweep.counts", cfg.sweep_counts);
    cfg.sweep_repeats = overlay.get_int("sweep.repeats", cfg.sweep_repeats);
    return cfg;
}

ExperimentConfig RunConfig::experiment() const {
    ExperimentConfig e;
    e.descriptor = descriptor;
    e.space = space;
    e.train = train;
    e.protocol = protocol;
    e.threads = resolve_threads(threads);
    return e;
}

std::string RunConfig::effective_text() const {
    std::map<std::string, std::string> kv;
    char buf[64];
    auto put_num = [&](const std::string& key, double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        kv[key] = buf;
    };
    auto put_bool = [&](const std::string& key, bool v) { kv[key] = v ? "true" : "false"; };

    kv["seed"] = std::to_string(seed);
    kv["threads"] = std::to_string(threads);
    kv["out"] = out_dir.string();
    kv["dataset.train"] = train_dir;
    kv["dataset.query"] = query_dir;
    kv["dataset.gallery"] = gallery_dir;
    kv["dataset.data"] = data_dir;
    kv["model"] = model_path;
    kv["preprocess.width"] = std::to_string(preprocess_width);
    kv["preprocess.height"] = std::to_string(preprocess_height);
    kv["descriptor.m"] = std::to_string(descriptor.m);
    kv["descriptor.bins"] = std::to_string(descriptor.bins_per_channel);

    auto put_range = [&](const std::string& prefix, const TransformSpace::Range& r) {
        put_bool(prefix + ".enabled", r.enabled);
        put_num(prefix + ".min", r.min);
        put_num(prefix + ".max", r.max);
    };
    put_range("transform.hue", space.hue);
    put_range("transform.saturation", space.saturation);
    put_range("transform.lightness", space.lightness);
    put_range("transform.contrast", space.contrast);

    put_num("train.momentum", train.momentum);
    put_num("train.weight_decay", train.weight_decay);
    kv["train.batch_size"] = std::to_string(train.batch_size);
    kv["train.epochs"] = std::to_string(train.epochs);
    put_num("train.lr", train.lr);
    kv["train.lr_drop_epoch"] = std::to_string(train.lr_drop_epoch);
    put_num("train.lr_drop_divisor", train.lr_drop_divisor);
    put_num("train.smoothing", train.smoothing);
    put_bool("train.use_uit", use_uit);

    put_bool("eval.exclude_same_camera_same_id", protocol.exclude_same_camera_same_id);
    std::string ranks;
    for (size_t i = 0; i < protocol.ranks_reported.size(); ++i) {
        if (i) ranks += ',';
        ranks += std::to_string(protocol.ranks_reported[i]);
    }
    kv["eval.ranks"] = ranks;

    kv["fixture.identities"] = std::to_string(fixture.n_identities);
    kv["fixture.train_per_id_per_cam"] = std::to_string(fixture.train_samples_per_id_per_camera);
    kv["fixture.test_per_id_per_cam"] = std::to_string(fixture.test_samples_per_id_per_camera);
    kv["fixture.cameras"] = std::to_string(fixture.n_cameras);
    kv["fixture.width"] = std::to_string(fixture.width);
    kv["fixture.height"] = std::to_string(fixture.height);
    put_num("fixture.noise", fixture.pixel_noise);
    put_num("fixture.offset.hue", fixture.test_offset.hue_shift);
    put_num("fixture.offset.saturation", fixture.test_offset.saturation);
    put_num("fixture.offset.lightness", fixture.test_offset.lightness);
    put_num("fixture.offset.contrast", fixture.test_offset.contrast);

    kv["augment.count"] = std::to_string(augment_count);
    kv["universality.count"] = std::to_string(universality_count);
    std::string counts;
    for (size_t i = 0; i < sweep_counts.size(); ++i) {
        if (i) counts += ',';
        counts += std::to_string(sweep_counts[i]);
    }
    kv["sweep.counts"] = counts;
    kv["sweep.repeats"] = std::to_string(sweep_repeats);

    std::string text;
    for (const auto& [key, value] : kv) {
        text += key;
        text += " = ";
        text += value;
        text += '\n';
    }
    return text;
}

}  // namespace forge
