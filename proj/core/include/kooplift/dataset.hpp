#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kooplift/matrix.hpp"

namespace kooplift {

/// Raw images from an IDX file; pixels are bytes, row-wise per image.
struct ImageSet {
    std::size_t count = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint8_t> pixels;  // count * height * width
};

struct LabelSet {
    std::size_t count = 0;
    std::vector<std::uint8_t> labels;
};

struct Batch {
    DenseMatrix features;           // B x D_in
    std::vector<int> labels;        // B
    DenseMatrix one_hot;            // B x C
};

/// IDX parsing. Magic numbers are big-endian: 0x00000803 for images
/// (3 dimensions) and 0x00000801 for labels (1 dimension). Wrong magic,
/// truncated payloads and dimension overflow raise distinct errors.
ImageSet parse_idx_images(const std::vector<std::uint8_t>& bytes);
LabelSet parse_idx_labels(const std::vector<std::uint8_t>& bytes);

/// File loaders with transparent gzip decompression (1f 8b prefix).
ImageSet load_idx_images(const std::string& path);
LabelSet load_idx_labels(const std::string& path);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& bytes);

/// count x (H*W) matrix, pixel p mapped to p / 255.
DenseMatrix to_features(const ImageSet& images);

/// count x classes one-hot matrix; throws on out-of-range labels.
DenseMatrix one_hot(const LabelSet& labels, std::size_t classes);

LabelSet head_labels(const LabelSet& labels, std::size_t n);

/// A seeded permutation of the dataset cut into batches. Batches are
/// materialized on demand; the last one may be short. The same seed always
/// produces the same permutation (SplitMix64 + Fisher-Yates).
class BatchSequence {
public:
    BatchSequence(const DenseMatrix& features, const LabelSet& labels,
                  std::size_t batch_size, std::uint64_t seed, std::size_t classes);

    std::size_t size() const { return num_batches_; }
    std::size_t sample_count() const { return permutation_.size(); }
    Batch batch(std::size_t index) const;

    /// Permutation indices backing batch `index` (for gathering side data
    /// such as cached teacher logits).
    std::vector<std::size_t> indices(std::size_t index) const;
    const std::vector<std::size_t>& permutation() const { return permutation_; }

private:
    const DenseMatrix* features_;
    const LabelSet* labels_;
    std::size_t batch_size_;
    std::size_t classes_;
    std::size_t num_batches_;
    std::vector<std::size_t> permutation_;
};

BatchSequence shuffled_batches(const DenseMatrix& features, const LabelSet& labels,
                               std::size_t batch_size, std::uint64_t seed, std::size_t classes);

}  // namespace kooplift
