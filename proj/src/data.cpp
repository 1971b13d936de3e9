#include "artemis/data.hpp"

#include <nlohmann/json.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>

namespace artemis {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool has_image_extension(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".jpg" || ext == ".jpeg" || ext == ".png";
}

} // namespace

void DatasetManifest::save(const fs::path& path) const {
    json j;
    j["seed"] = seed;
    j["entries"] = json::array();
    for (const auto& e : entries)
        j["entries"].push_back({{"path", e.path},
                                {"width", e.width},
                                {"height", e.height},
                                {"action", e.action}});
    std::ofstream f(path);
    if (!f) throw IoError("cannot write manifest '" + path.string() + "'");
    f << j.dump(2) << "\n";
}

DatasetManifest DatasetManifest::load(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot read manifest '" + path.string() + "'");
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw IoError("manifest '" + path.string() + "' is not valid JSON: " + e.what());
    }
    DatasetManifest m;
    m.seed = j.at("seed").get<uint64_t>();
    for (const auto& je : j.at("entries")) {
        ManifestEntry e;
        e.path = je.at("path").get<std::string>();
        e.width = je.at("width").get<int>();
        e.height = je.at("height").get<int>();
        e.action = je.at("action").get<std::string>();
        m.entries.push_back(std::move(e));
    }
    if (m.entries.empty()) throw DataError("manifest '" + path.string() + "' has no entries");
    return m;
}

DatasetManifest build_manifest(const fs::path& root_dir, uint64_t seed) {
    if (!fs::exists(root_dir) || !fs::is_directory(root_dir))
        throw ConfigError("data directory '" + root_dir.string() + "' does not exist");

    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(root_dir)) {
        if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    DatasetManifest manifest;
    manifest.seed = seed;
    for (const auto& p : files) {
        if (!has_image_extension(p)) {
            std::clog << "[artemis] warning: skipping non-image file " << p << "\n";
            continue;
        }
        cv::Mat img = cv::imread(p.string(), cv::IMREAD_COLOR);
        if (img.empty()) {
            std::clog << "[artemis] warning: skipping unreadable image " << p << "\n";
            continue;
        }
        ManifestEntry e;
        e.path = p.string();
        e.width = img.cols;
        e.height = img.rows;
        e.action = (img.rows >= 256 && img.cols >= 256) ? "crop" : "tile-then-crop";
        manifest.entries.push_back(std::move(e));
    }
    if (manifest.entries.empty())
        throw DataError("empty dataset: no readable JPEG/PNG images under '" +
                        root_dir.string() + "'");
    return manifest;
}

Tensor load_image(const fs::path& path) {
    cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (bgr.empty()) throw DataError("cannot decode image '" + path.string() + "'");
    Tensor t({bgr.rows, bgr.cols, 3});
    for (int y = 0; y < bgr.rows; ++y) {
        const cv::Vec3b* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < bgr.cols; ++x) {
            size_t i = (static_cast<size_t>(y) * bgr.cols + x) * 3;
            t[i] = static_cast<float>(row[x][2]);     // R
            t[i + 1] = static_cast<float>(row[x][1]); // G
            t[i + 2] = static_cast<float>(row[x][0]); // B
        }
    }
    return t;
}

Tensor preprocess_image(const Tensor& raw, int target) {
    if (raw.rank() != 3)
        throw ShapeError("preprocess: expected H x W x C image, got " + raw.shape_str());
    if (raw.dim(2) != 3)
        throw DataError("preprocess: expected 3 channels, got " + std::to_string(raw.dim(2)));
    const int h = raw.dim(0), w = raw.dim(1);
    if (h < 1 || w < 1) throw ShapeError("preprocess: empty image");

    // Self-concatenate along each deficient axis until it reaches the target.
    const int reps_h = (h >= target) ? 1 : (target + h - 1) / h;
    const int reps_w = (w >= target) ? 1 : (target + w - 1) / w;
    const int th = h * reps_h, tw = w * reps_w;
    const int off_h = (th - target) / 2;
    const int off_w = (tw - target) / 2;

    Tensor out({target, target, 3});
    for (int y = 0; y < target; ++y) {
        const int sy = (off_h + y) % h;
        for (int x = 0; x < target; ++x) {
            const int sx = (off_w + x) % w;
            const size_t src = (static_cast<size_t>(sy) * w + sx) * 3;
            const size_t dst = (static_cast<size_t>(y) * target + x) * 3;
            out[dst] = raw[src];
            out[dst + 1] = raw[src + 1];
            out[dst + 2] = raw[src + 2];
        }
    }
    return out;
}

Tensor resize_image(const Tensor& image, int size) {
    if (image.dim(0) == size && image.dim(1) == size) return image;
    cv::Mat src(image.dim(0), image.dim(1), CV_32FC3);
    std::copy(image.data(), image.data() + image.size(), reinterpret_cast<float*>(src.data));
    cv::Mat dst;
    cv::resize(src, dst, cv::Size(size, size), 0, 0, cv::INTER_AREA);
    Tensor out({size, size, 3});
    std::copy(reinterpret_cast<float*>(dst.data), reinterpret_cast<float*>(dst.data) + out.size(),
              out.data());
    return out;
}

BatchStream::BatchStream(const DatasetManifest& manifest, int batch_size, int image_size)
    : manifest_(manifest), batch_size_(batch_size), image_size_(image_size) {
    if (batch_size < 1) throw ConfigError("batch size must be >= 1");
    if (manifest.entries.empty()) throw DataError("empty dataset manifest");
    if (static_cast<size_t>(batch_size) > manifest.entries.size())
        throw ConfigError("batch size " + std::to_string(batch_size) + " exceeds dataset size " +
                          std::to_string(manifest.entries.size()));
    use_cache_ = manifest.entries.size() <= 512;
    if (use_cache_) cache_.resize(manifest.entries.size());
}

std::vector<size_t> BatchStream::epoch_permutation(int64_t epoch) const {
    std::vector<size_t> order(manifest_.entries.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(mix_seed(manifest_.seed, static_cast<uint64_t>(epoch)));
    rng.shuffle(order);
    return order;
}

Tensor BatchStream::image(size_t entry_index) {
    if (use_cache_ && cache_[entry_index].has_value()) return *cache_[entry_index];
    Tensor raw = load_image(manifest_.entries[entry_index].path);
    Tensor img = preprocess_image(raw, 256);
    if (image_size_ != 256) img = resize_image(img, image_size_);
    if (use_cache_) cache_[entry_index] = img;
    return img;
}

Tensor BatchStream::batch(int64_t epoch, int batch_index) {
    if (batch_index < 0 || batch_index >= batches_per_epoch())
        throw ConfigError("batch index " + std::to_string(batch_index) + " out of range");
    std::vector<size_t> order = epoch_permutation(epoch);
    Tensor out({batch_size_, image_size_, image_size_, 3});
    const size_t sample = static_cast<size_t>(image_size_) * image_size_ * 3;
    for (int b = 0; b < batch_size_; ++b) {
        Tensor img = image(order[static_cast<size_t>(batch_index) * batch_size_ + b]);
        std::copy(img.data(), img.data() + sample, out.data() + b * sample);
    }
    return out;
}

} // namespace artemis
