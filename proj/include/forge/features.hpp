#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "forge/image.hpp"

namespace forge {

struct DescriptorConfig {
    int m = 6;                 // horizontal parts
    int bins_per_channel = 8;  // histogram bins per HSV channel

    int part_dim() const { return 3 * bins_per_channel; }
    int dimension() const { return (m + 1) * part_dim(); }
    void validate() const;
};

/// Concatenated part + global embedding: m stripe histograms top to bottom,
/// then the whole-image histogram, each L2-normalized.
struct Descriptor {
    int m = 0;
    int bins_per_channel = 0;
    std::vector<float> values;  // (m + 1) * 3 * bins

    int part_dim() const { return 3 * bins_per_channel; }
    int dimension() const { return static_cast<int>(values.size()); }

    std::span<const float> part(int index) const {
        return {values.data() + static_cast<size_t>(index) * part_dim(),
                static_cast<size_t>(part_dim())};
    }
    std::span<const float> global_part() const { return part(m); }
};

/// Splits the image rows into m near-equal stripes (remainder rows go to the
/// bottom stripe) and builds a hard-binned HSV histogram per stripe plus one
/// for the whole image. Requires height >= m.
Descriptor extract(const Image& img, const DescriptorConfig& cfg);

/// Euclidean distance over the concatenated vectors.
double distance(const Descriptor& a, const Descriptor& b);
double euclidean_distance(std::span<const float> a, std::span<const float> b);
double euclidean_distance(std::span<const double> a, std::span<const double> b);

/// Flat embedding matrix used by ranking and the external-embedding formats:
/// `count` rows of `dim` float32 values.
struct EmbeddingMatrix {
    uint32_t dim = 0;
    std::vector<float> values;  // count * dim

    size_t count() const { return dim == 0 ? 0 : values.size() / dim; }
    std::span<const float> row(size_t i) const {
        return {values.data() + i * dim, static_cast<size_t>(dim)};
    }
    void append(std::span<const float> row);
};

// Binary layout: uint32 LE dimension, uint32 LE count, then count*dim
// float32 LE values.
void write_embeddings_binary(const EmbeddingMatrix& m, const std::filesystem::path& path);
EmbeddingMatrix read_embeddings_binary(const std::filesystem::path& path);

void write_embeddings_csv(const EmbeddingMatrix& m, const std::filesystem::path& path);
EmbeddingMatrix read_embeddings_csv(const std::filesystem::path& path);

EmbeddingMatrix descriptors_to_matrix(std::span<const Descriptor> descriptors);

}  // namespace forge
