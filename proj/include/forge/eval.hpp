#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "forge/features.hpp"

namespace forge {

/// Identity and camera tags for one query or gallery row.
struct SampleMeta {
    int identity = 0;
    int camera = 0;
};

struct EvalProtocol {
    bool exclude_same_camera_same_id = true;
    std::vector<int> ranks_reported = {1, 5, 10};
    void validate() const;
};

struct PerQueryResult {
    int query_index = 0;
    double average_precision = 0.0;
    int first_hit_rank = 0;  // 1-based
};

/// All-shot single-query evaluation result.
struct EvalReport {
    std::vector<double> cmc;  // cmc[r-1] = fraction matched within rank r
    double map = 0.0;
    size_t n_queries_evaluated = 0;
    size_t n_queries_excluded = 0;  // queries with no valid gallery match
    std::vector<PerQueryResult> per_query;

    double cmc_at(int rank) const;
};

struct DistanceMatrix {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> values;  // row-major

    double at(size_t r, size_t c) const { return values[r * cols + c]; }
    std::span<const double> row(size_t r) const { return {values.data() + r * cols, cols}; }
};

/// Pairwise Euclidean distances between query and gallery embeddings.
DistanceMatrix distance_matrix(const EmbeddingMatrix& queries, const EmbeddingMatrix& gallery,
                               int threads = 1);

/// Ascending-distance ranking; ties keep ascending gallery index. NaN
/// distances are rejected.
std::vector<size_t> tie_break(std::span<const double> distances);

/// Single-query ranking with junk removal (same identity AND same camera as
/// the query, when the protocol flag is set). Queries with no valid match are
/// excluded from the CMC and mAP denominators and surfaced in the report.
EvalReport evaluate(const DistanceMatrix& dist, std::span<const SampleMeta> query_meta,
                    std::span<const SampleMeta> gallery_meta, const EvalProtocol& protocol,
                    int threads = 1);

std::string eval_report_json(const EvalReport& report, const EvalProtocol& protocol);
void write_cmc_csv(const EvalReport& report, const std::filesystem::path& path);

// Meta JSON-lines ({"identity":..,"camera":..} per row) used by the external
// embedding interface.
std::vector<SampleMeta> read_meta_jsonl(const std::filesystem::path& path);
void write_meta_jsonl(std::span<const SampleMeta> meta, const std::filesystem::path& path);

}  // namespace forge
