#include "kooplift/dataset.hpp"

#include <zlib.h>

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "kooplift/rng.hpp"

namespace kooplift {

namespace {

std::uint32_t read_be32(const std::vector<std::uint8_t>& b, std::size_t off) {
    return (static_cast<std::uint32_t>(b[off]) << 24) | (static_cast<std::uint32_t>(b[off + 1]) << 16) |
           (static_cast<std::uint32_t>(b[off + 2]) << 8) | static_cast<std::uint32_t>(b[off + 3]);
}

bool is_gzip(const std::vector<std::uint8_t>& b) {
    return b.size() >= 2 && b[0] == 0x1f && b[1] == 0x8b;
}

}  // namespace

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& bytes) {
    z_stream zs{};
    // 15 + 16: max window, gzip framing
    if (inflateInit2(&zs, 15 + 16) != Z_OK) throw std::runtime_error("gunzip: inflateInit failed");
    std::vector<std::uint8_t> out;
    out.reserve(bytes.size() * 4);
    std::uint8_t buf[1 << 16];
    zs.next_in = const_cast<Bytef*>(bytes.data());
    zs.avail_in = static_cast<uInt>(bytes.size());
    int ret = Z_OK;
    do {
        zs.next_out = buf;
        zs.avail_out = sizeof(buf);
        ret = inflate(&zs, Z_NO_FLUSH);
        if (ret != Z_OK && ret != Z_STREAM_END) {
            inflateEnd(&zs);
            throw std::runtime_error("gunzip: corrupt gzip stream");
        }
        out.insert(out.end(), buf, buf + (sizeof(buf) - zs.avail_out));
    } while (ret != Z_STREAM_END);
    inflateEnd(&zs);
    return out;
}

ImageSet parse_idx_images(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 16) throw std::runtime_error("idx images: truncated header");
    const std::uint32_t magic = read_be32(bytes, 0);
    if (magic != 0x00000803u) {
        char msg[64];
        std::snprintf(msg, sizeof(msg), "unexpected magic for images: 0x%08x", magic);
        throw std::runtime_error(msg);
    }
    ImageSet set;
    set.count = read_be32(bytes, 4);
    set.height = read_be32(bytes, 8);
    set.width = read_be32(bytes, 12);
    const std::uint64_t expect =
        static_cast<std::uint64_t>(set.count) * set.height * set.width;
    if (set.height != 0 && set.width != 0 &&
        expect / set.height / set.width != set.count)
        throw std::runtime_error("idx images: dimension overflow");
    if (bytes.size() - 16 < expect) throw std::runtime_error("idx images: truncated payload");
    if (bytes.size() - 16 > expect) throw std::runtime_error("idx images: trailing bytes after payload");
    set.pixels.assign(bytes.begin() + 16, bytes.end());
    return set;
}

LabelSet parse_idx_labels(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8) throw std::runtime_error("idx labels: truncated header");
    const std::uint32_t magic = read_be32(bytes, 0);
    if (magic != 0x00000801u) {
        char msg[64];
        std::snprintf(msg, sizeof(msg), "unexpected magic for labels: 0x%08x", magic);
        throw std::runtime_error(msg);
    }
    LabelSet set;
    set.count = read_be32(bytes, 4);
    if (bytes.size() - 8 < set.count) throw std::runtime_error("idx labels: truncated payload");
    if (bytes.size() - 8 > set.count) throw std::runtime_error("idx labels: trailing bytes after payload");
    set.labels.assign(bytes.begin() + 8, bytes.end());
    return set;
}

ImageSet load_idx_images(const std::string& path) {
    auto bytes = read_file_bytes(path);
    if (is_gzip(bytes)) bytes = gunzip(bytes);
    return parse_idx_images(bytes);
}

LabelSet load_idx_labels(const std::string& path) {
    auto bytes = read_file_bytes(path);
    if (is_gzip(bytes)) bytes = gunzip(bytes);
    return parse_idx_labels(bytes);
}

DenseMatrix to_features(const ImageSet& images) {
    if (images.count == 0) throw std::invalid_argument("to_features: empty image set");
    const std::size_t dim = images.height * images.width;
    DenseMatrix out(images.count, dim);
    for (std::size_t i = 0; i < images.pixels.size(); ++i)
        out.data[i] = static_cast<double>(images.pixels[i]) / 255.0;
    return out;
}

DenseMatrix one_hot(const LabelSet& labels, std::size_t classes) {
    DenseMatrix out(labels.count, classes);
    for (std::size_t i = 0; i < labels.count; ++i) {
        const std::size_t c = labels.labels[i];
        if (c >= classes) {
            char msg[64];
            std::snprintf(msg, sizeof(msg), "one_hot: label %zu out of range (C=%zu)", c, classes);
            throw std::out_of_range(msg);
        }
        out(i, c) = 1.0;
    }
    return out;
}

LabelSet head_labels(const LabelSet& labels, std::size_t n) {
    LabelSet out;
    out.count = std::min(n, labels.count);
    out.labels.assign(labels.labels.begin(), labels.labels.begin() + static_cast<std::ptrdiff_t>(out.count));
    return out;
}

BatchSequence::BatchSequence(const DenseMatrix& features, const LabelSet& labels,
                             std::size_t batch_size, std::uint64_t seed, std::size_t classes)
    : features_(&features), labels_(&labels), batch_size_(batch_size), classes_(classes) {
    if (batch_size == 0) throw std::invalid_argument("shuffled_batches: batch_size must be >= 1");
    if (features.rows != labels.count)
        throw std::invalid_argument("shuffled_batches: feature/label count mismatch");
    const std::size_t n = features.rows;
    permutation_.resize(n);
    for (std::size_t i = 0; i < n; ++i) permutation_[i] = i;
    SplitMix64 rng(seed);
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(permutation_[i - 1], permutation_[j]);
    }
    num_batches_ = (n + batch_size - 1) / batch_size;
}

std::vector<std::size_t> BatchSequence::indices(std::size_t index) const {
    if (index >= num_batches_) throw std::out_of_range("BatchSequence: batch index out of range");
    const std::size_t lo = index * batch_size_;
    const std::size_t hi = std::min(permutation_.size(), lo + batch_size_);
    return {permutation_.begin() + static_cast<std::ptrdiff_t>(lo),
            permutation_.begin() + static_cast<std::ptrdiff_t>(hi)};
}

Batch BatchSequence::batch(std::size_t index) const {
    const auto idx = indices(index);
    Batch b;
    b.features = gather_rows(*features_, idx);
    b.labels.resize(idx.size());
    b.one_hot = DenseMatrix(idx.size(), classes_);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const std::size_t c = labels_->labels[idx[i]];
        if (c >= classes_) throw std::out_of_range("BatchSequence: label out of range");
        b.labels[i] = static_cast<int>(c);
        b.one_hot(i, c) = 1.0;
    }
    return b;
}

BatchSequence shuffled_batches(const DenseMatrix& features, const LabelSet& labels,
                               std::size_t batch_size, std::uint64_t seed, std::size_t classes) {
    return BatchSequence(features, labels, batch_size, seed, classes);
}

}  // namespace kooplift
