#include "forge/eval.hpp"

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

void EvalProtocol::validate() const {
    int prev = 0;
    for (int r : ranks_reported) {
        if (r < 1 || r <= prev) throw InputError("ranks_reported must be ascending and >= 1");
        prev = r;
    }
}

double EvalReport::cmc_at(int rank) const {
    if (rank < 1) throw InputError("rank must be >= 1");
    if (cmc.empty()) return 0.0;
    const size_t idx = std::min(static_cast<size_t>(rank), cmc.size());
    return cmc[idx - 1];
}

DistanceMatrix distance_matrix(const EmbeddingMatrix& queries, const EmbeddingMatrix& gallery,
                               int threads) {
    if (queries.dim != gallery.dim) {
        throw ShapeError("distance_matrix: query and gallery dimensions differ");
    }
    DistanceMatrix dist;
    dist.rows = queries.count();
    dist.cols = gallery.count();
    dist.values.assign(dist.rows * dist.cols, 0.0);
    parallel_for(dist.rows, threads, [&](size_t q) {
        double* out = dist.values.data() + q * dist.cols;
        std::span<const float> qrow = queries.row(q);
        for (size_t g = 0; g < dist.cols; ++g) {
            out[g] = euclidean_distance(qrow, gallery.row(g));
        }
    });
    return dist;
}

std::vector<size_t> tie_break(std::span<const double> distances) {
    for (double d : distances) {
        if (std::isnan(d)) throw NumericError("tie_break: NaN distance");
    }
    std::vector<size_t> order(distances.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (distances[a] != distances[b]) return distances[a] < distances[b];
        return a < b;
    });
    return order;
}

EvalReport evaluate(const DistanceMatrix& dist, std::span<const SampleMeta> query_meta,
                    std::span<const SampleMeta> gallery_meta, const EvalProtocol& protocol,
                    int threads) {
    protocol.validate();
    if (query_meta.size() != dist.rows || gallery_meta.size() != dist.cols) {
        throw ShapeError("evaluate: meta lengths do not match distance matrix");
    }

    struct QueryOutcome {
        bool valid = false;
        double ap = 0.0;
        int first_hit = 0;
    };
    std::vector<QueryOutcome> outcomes(dist.rows);

    parallel_for(dist.rows, threads, [&](size_t q) {
        const std::vector<size_t> order = tie_break(dist.row(q));
        const SampleMeta& qm = query_meta[q];

        int rank = 0;
        int hits = 0;
        double precision_sum = 0.0;
        int first_hit = 0;
        for (size_t g : order) {
            const SampleMeta& gm = gallery_meta[g];
            if (protocol.exclude_same_camera_same_id && gm.identity == qm.identity &&
                gm.camera == qm.camera) {
                continue;  // junk entry, removed from the ranked list
            }
            ++rank;
            if (gm.identity == qm.identity) {
                ++hits;
                precision_sum += static_cast<double>(hits) / rank;
                if (first_hit == 0) first_hit = rank;
            }
        }
        if (hits > 0) {
            outcomes[q].valid = true;
            outcomes[q].ap = precision_sum / hits;
            outcomes[q].first_hit = first_hit;
        }
    });

    EvalReport report;
    std::vector<double> aps;
    std::vector<size_t> hit_histogram(dist.cols + 1, 0);
    for (size_t q = 0; q < dist.rows; ++q) {
        if (!outcomes[q].valid) {
            ++report.n_queries_excluded;
            continue;
        }
        ++report.n_queries_evaluated;
        aps.push_back(outcomes[q].ap);
        hit_histogram[static_cast<size_t>(outcomes[q].first_hit)]++;
        report.per_query.push_back(
            {static_cast<int>(q), outcomes[q].ap, outcomes[q].first_hit});
    }

    if (report.n_queries_evaluated > 0) {
        report.map = kahan_sum(aps) / static_cast<double>(report.n_queries_evaluated);
        report.cmc.assign(dist.cols, 0.0);
        size_t matched = 0;
        for (size_t r = 1; r <= dist.cols; ++r) {
            matched += hit_histogram[r];
            report.cmc[r - 1] =
                static_cast<double>(matched) / static_cast<double>(report.n_queries_evaluated);
        }
    }
    return report;
}

std::string eval_report_json(const EvalReport& report, const EvalProtocol& protocol) {
    json out;
    out["protocol"] = {{"variant", "all-shot-single-query"},
                       {"exclude_same_camera_same_id", protocol.exclude_same_camera_same_id}};
    json ranks = json::object();
    for (int r : protocol.ranks_reported) {
        ranks["rank" + std::to_string(r)] = report.cmc_at(r);
    }
    out["cmc"] = ranks;
    out["map"] = report.map;
    out["n_queries_evaluated"] = report.n_queries_evaluated;
    out["n_queries_excluded"] = report.n_queries_excluded;
    json per_query = json::array();
    for (const PerQueryResult& pq : report.per_query) {
        per_query.push_back({{"query", pq.query_index},
                             {"ap", pq.average_precision},
                             {"first_hit_rank", pq.first_hit_rank}});
    }
    out["per_query"] = per_query;
    return out.dump(2);
}

void write_cmc_csv(const EvalReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write CMC csv: " + path.string());
    out << "rank,cmc\n";
    char buf[48];
    for (size_t r = 0; r < report.cmc.size(); ++r) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", r + 1, report.cmc[r]);
        out << buf;
    }
}

std::vector<SampleMeta> read_meta_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open meta file: " + path.string());
    std::vector<SampleMeta> meta;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json row;
        try {
            row = json::parse(line);
        } catch (const json::parse_error& e) {
            throw FormatError("meta line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!row.contains("identity") || !row.contains("camera")) {
            throw FormatError("meta line " + std::to_string(line_no) +
                              ": expected identity and camera");
        }
        meta.push_back({row["identity"].get<int>(), row["camera"].get<int>()});
    }
    if (meta.empty()) throw FormatError("meta file has no rows: " + path.string());
    return meta;
}

void write_meta_jsonl(std::span<const SampleMeta> meta, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write meta file: " + path.string());
    for (const SampleMeta& m : meta) {
        json row = {{"identity", m.identity}, {"camera", m.camera}};
        out << row.dump() << '\n';
    }
}

}  // namespace forge
