#include "forge/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "forge/colorspace.hpp"
#include "forge/error.hpp"

namespace forge {

void DescriptorConfig::validate() const {
    if (m < 1) throw InputError("descriptor config: m must be >= 1");
    if (bins_per_channel < 2) throw InputError("descriptor config: bins_per_channel must be >= 2");
}

namespace {

inline int bin_of(double unit_value, int bins) {
    int b = static_cast<int>(unit_value * bins);
    return b >= bins ? bins - 1 : (b < 0 ? 0 : b);
}

void normalize_l2(float* v, int n) {
    double norm_sq = 0.0;
    for (int i = 0; i < n; ++i) norm_sq += static_cast<double>(v[i]) * v[i];
    if (norm_sq <= 0.0) return;  // empty-content histogram stays zero
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (int i = 0; i < n; ++i) v[i] = static_cast<float>(v[i] * inv);
}

}  // namespace

Descriptor extract(const Image& img, const DescriptorConfig& cfg) {
    cfg.validate();
    if (img.height() < cfg.m) {
        throw ShapeError("extract: image height " + std::to_string(img.height()) +
                         " is smaller than part count " + std::to_string(cfg.m));
    }

    const int bins = cfg.bins_per_channel;
    const int part_dim = cfg.part_dim();
    Descriptor d;
    d.m = cfg.m;
    d.bins_per_channel = bins;
    d.values.assign(static_cast<size_t>(cfg.dimension()), 0.0f);
    float* global = d.values.data() + static_cast<size_t>(cfg.m) * part_dim;

    const int rows_per_part = img.height() / cfg.m;
    for (int part = 0; part < cfg.m; ++part) {
        const int row_begin = part * rows_per_part;
        const int row_end = (part == cfg.m - 1) ? img.height() : row_begin + rows_per_part;
        float* hist = d.values.data() + static_cast<size_t>(part) * part_dim;
        for (int y = row_begin; y < row_end; ++y) {
            const float* row = img.row(y);
            for (int x = 0; x < img.width(); ++x) {
                HsvPixel hsv = rgb_to_hsv({row[x * 3], row[x * 3 + 1], row[x * 3 + 2]});
                const int hb = bin_of(hsv.h / 360.0, bins);
                const int sb = bins + bin_of(hsv.s, bins);
                const int vb = 2 * bins + bin_of(hsv.v, bins);
                hist[hb] += 1.0f;
                hist[sb] += 1.0f;
                hist[vb] += 1.0f;
                global[hb] += 1.0f;
                global[sb] += 1.0f;
                global[vb] += 1.0f;
            }
        }
    }
    for (int part = 0; part <= cfg.m; ++part) {
        normalize_l2(d.values.data() + static_cast<size_t>(part) * part_dim, part_dim);
    }
    return d;
}

double euclidean_distance(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) throw ShapeError("euclidean_distance: dimension mismatch");
    double sum = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double diff = static_cast<double>(a[i]) - b[i];
        sum += diff * diff;
    }
    return std::sqrt(sum);
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ShapeError("euclidean_distance: dimension mismatch");
    double sum = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        sum += diff * diff;
    }
    return std::sqrt(sum);
}

double distance(const Descriptor& a, const Descriptor& b) {
    return euclidean_distance(std::span<const float>(a.values),
                              std::span<const float>(b.values));
}

void EmbeddingMatrix::append(std::span<const float> row) {
    if (dim == 0) dim = static_cast<uint32_t>(row.size());
    if (row.size() != dim) throw ShapeError("embedding row dimension mismatch");
    values.insert(values.end(), row.begin(), row.end());
}

EmbeddingMatrix descriptors_to_matrix(std::span<const Descriptor> descriptors) {
    EmbeddingMatrix m;
    for (const Descriptor& d : descriptors) m.append(d.values);
    return m;
}

namespace {

void put_u32_le(std::ofstream& out, uint32_t v) {
    unsigned char bytes[4] = {static_cast<unsigned char>(v & 0xff),
                              static_cast<unsigned char>((v >> 8) & 0xff),
                              static_cast<unsigned char>((v >> 16) & 0xff),
                              static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(bytes), 4);
}

uint32_t get_u32_le(std::ifstream& in) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    if (!in) throw FormatError("embedding file: truncated header");
    return static_cast<uint32_t>(bytes[0]) | (static_cast<uint32_t>(bytes[1]) << 8) |
           (static_cast<uint32_t>(bytes[2]) << 16) | (static_cast<uint32_t>(bytes[3]) << 24);
}

}  // namespace

void write_embeddings_binary(const EmbeddingMatrix& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open embedding file for write: " + path.string());
    put_u32_le(out, m.dim);
    put_u32_le(out, static_cast<uint32_t>(m.count()));
    static_assert(sizeof(float) == 4);
    // Host is little-endian; floats are written verbatim.
    out.write(reinterpret_cast<const char*>(m.values.data()),
              static_cast<std::streamsize>(m.values.size() * sizeof(float)));
    if (!out) throw IoError("embedding write failed: " + path.string());
}

EmbeddingMatrix read_embeddings_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open embedding file: " + path.string());
    EmbeddingMatrix m;
    m.dim = get_u32_le(in);
    const uint32_t count = get_u32_le(in);
    if (m.dim == 0) throw FormatError("embedding file: zero dimension");
    m.values.resize(static_cast<size_t>(m.dim) * count);
    in.read(reinterpret_cast<char*>(m.values.data()),
            static_cast<std::streamsize>(m.values.size() * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(m.values.size() * sizeof(float))) {
        throw FormatError("embedding file: truncated payload in " + path.string());
    }
    char probe;
    if (in.read(&probe, 1)) {
        throw FormatError("embedding file: trailing bytes in " + path.string());
    }
    return m;
}

void write_embeddings_csv(const EmbeddingMatrix& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open embedding file for write: " + path.string());
    char buf[32];
    for (size_t r = 0; r < m.count(); ++r) {
        std::span<const float> row = m.row(r);
        for (size_t c = 0; c < row.size(); ++c) {
            // %.9g round-trips float32 exactly.
            std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(row[c]));
            if (c != 0) out << ',';
            out << buf;
        }
        out << '\n';
    }
    if (!out) throw IoError("embedding write failed: " + path.string());
}

EmbeddingMatrix read_embeddings_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open embedding file: " + path.string());
    EmbeddingMatrix m;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<float> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stof(cell));
            } catch (const std::exception&) {
                throw FormatError("embedding CSV line " + std::to_string(line_no) +
                                  ": bad value '" + cell + "'");
            }
        }
        if (m.dim != 0 && row.size() != m.dim) {
            throw FormatError("embedding CSV line " + std::to_string(line_no) +
                              ": inconsistent dimension");
        }
        m.append(row);
    }
    if (m.dim == 0) throw FormatError("embedding CSV is empty: " + path.string());
    return m;
}

}  // namespace forge
