#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "artemis/tensor.hpp"

namespace artemis {

// One dataset image: source path, original size, and how preprocessing
// will normalize it to the 256x256 reference frame.
struct ManifestEntry {
    std::string path;
    int width = 0;
    int height = 0;
    std::string action; // "crop" or "tile-then-crop"
};

struct DatasetManifest {
    uint64_t seed = 0;
    std::vector<ManifestEntry> entries;

    void save(const std::filesystem::path& path) const;
    static DatasetManifest load(const std::filesystem::path& path);
};

// Scans a directory tree for JPEG/PNG files (sorted for determinism),
// records sizes, and skips unreadable or non-image files with a warning.
// Throws DataError if no usable image is found, ConfigError if the
// directory does not exist.
DatasetManifest build_manifest(const std::filesystem::path& root_dir, uint64_t seed);

// Decodes an image file to an H x W x 3 RGB tensor in [0,255].
Tensor load_image(const std::filesystem::path& path);

// Normalizes to exactly target x target x 3: oversized axes are center
// cropped; undersized axes are self-concatenated until they reach the
// target, then cropped. Values pass through untouched.
Tensor preprocess_image(const Tensor& raw, int target = 256);

// Area-averaged downscale for reduced-resolution runs (no-op if sizes match).
Tensor resize_image(const Tensor& image, int size);

// Deterministic shuffled batches: epoch e uses the permutation derived from
// manifest.seed and e; the final partial batch is dropped. Small datasets
// are cached in memory after first decode.
class BatchStream {
public:
    BatchStream(const DatasetManifest& manifest, int batch_size, int image_size);

    int batches_per_epoch() const { return static_cast<int>(entry_count()) / batch_size_; }
    size_t entry_count() const { return manifest_.entries.size(); }

    // Indices of epoch `epoch` in iteration order.
    std::vector<size_t> epoch_permutation(int64_t epoch) const;

    // batch_size x image_size x image_size x 3 tensor.
    Tensor batch(int64_t epoch, int batch_index);

private:
    Tensor image(size_t entry_index);

    DatasetManifest manifest_;
    int batch_size_;
    int image_size_;
    std::vector<std::optional<Tensor>> cache_;
    bool use_cache_;
};

} // namespace artemis
