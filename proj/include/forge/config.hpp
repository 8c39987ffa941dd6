#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "forge/eval.hpp"
#include "forge/fixture.hpp"
#include "forge/pipeline.hpp"

namespace forge {

/// Flat `key = value` configuration with dotted keys and '#' comments. File
/// values are overlaid by CLI flags; the fully merged result can be echoed
/// back out so every reported number is auditable.
class KeyValueConfig {
public:
    void parse_file(const std::filesystem::path& path);
    void parse_line(const std::string& line, const std::string& where);
    void set(const std::string& key, const std::string& value);

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    int get_int(const std::string& key, int fallback) const;
    uint64_t get_u64(const std::string& key, uint64_t fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<int> get_int_list(const std::string& key, const std::vector<int>& fallback) const;

    const std::map<std::string, std::string>& entries() const { return entries_; }

    /// Rejects keys outside the known set; typos fail loudly.
    void validate_keys(const std::vector<std::string>& known) const;

private:
    std::map<std::string, std::string> entries_;
};

/// Everything a run needs, resolved from defaults, config file and flags.
struct RunConfig {
    uint64_t seed = 42;
    int threads = 0;  // 0 = hardware concurrency
    std::filesystem::path out_dir;

    std::string train_dir;
    std::string query_dir;
    std::string gallery_dir;
    std::string data_dir;
    std::string model_path;

    // Eval-mode resize applied at ingest; 0 disables.
    int preprocess_width = 128;
    int preprocess_height = 384;

    DescriptorConfig descriptor;
    TransformSpace space;
    TrainConfig train;
    EvalProtocol protocol;
    bool use_uit = true;

    FixtureConfig fixture;

    int augment_count = 1;
    size_t universality_count = 1000;
    std::vector<int> sweep_counts = {2, 4, 8, 16};
    int sweep_repeats = 1;

    static RunConfig resolve(const KeyValueConfig& overlay);

    ExperimentConfig experiment() const;

    /// Sorted `key = value` lines of the merged effective configuration.
    std::string effective_text() const;
};

}  // namespace forge
