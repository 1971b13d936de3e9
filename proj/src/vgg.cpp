#include "artemis/vgg.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iostream>

namespace artemis {

namespace {

constexpr float kImagenetMean[3] = {123.68f, 116.779f, 103.939f};

constexpr uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr uint64_t kFnvPrime = 1099511628211ULL;

uint64_t fnv1a(uint64_t h, const void* data, size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
    return h;
}

constexpr char kMagic[4] = {'A', 'V', 'G', 'G'};
constexpr uint32_t kWeightsVersion = 1;

struct RegistryEntry {
    const char* name;
    int spatial_div;
    int channels;
};

constexpr RegistryEntry kRegistry[] = {
    {"none", 1, 3},          {"block1_conv1", 1, 64},  {"block2_conv1", 2, 128},
    {"block3_conv1", 4, 256}, {"block4_conv1", 8, 512}, {"block5_conv1", 16, 512},
};

} // namespace

BlockSpec block_spec(const std::string& name, int image_size) {
    for (const auto& e : kRegistry) {
        if (name == e.name) {
            BlockSpec s;
            s.name = name;
            s.h = image_size / e.spatial_div;
            s.w = image_size / e.spatial_div;
            s.c = e.channels;
            return s;
        }
    }
    throw ConfigError("unknown VGG block '" + name + "'");
}

std::array<int, 3> block_dims(const std::string& name, int image_size) {
    BlockSpec s = block_spec(name, image_size);
    return {s.h, s.w, s.c};
}

const std::vector<std::string>& known_block_names() {
    static const std::vector<std::string> names = {
        "none", "block1_conv1", "block2_conv1", "block3_conv1", "block4_conv1", "block5_conv1"};
    return names;
}

bool is_known_block(const std::string& name) {
    const auto& names = known_block_names();
    return std::find(names.begin(), names.end(), name) != names.end();
}

const std::array<Vgg19::ConvSpec, 16>& Vgg19::conv_specs() {
    static const std::array<ConvSpec, 16> specs = {{
        {"conv1_1", 3, 64, false},
        {"conv1_2", 64, 64, false},
        {"conv2_1", 64, 128, true},
        {"conv2_2", 128, 128, false},
        {"conv3_1", 128, 256, true},
        {"conv3_2", 256, 256, false},
        {"conv3_3", 256, 256, false},
        {"conv3_4", 256, 256, false},
        {"conv4_1", 256, 512, true},
        {"conv4_2", 512, 512, false},
        {"conv4_3", 512, 512, false},
        {"conv4_4", 512, 512, false},
        {"conv5_1", 512, 512, true},
        {"conv5_2", 512, 512, false},
        {"conv5_3", 512, 512, false},
        {"conv5_4", 512, 512, false},
    }};
    return specs;
}

Vgg19::Vgg19() {
    Rng init_rng(0);
    const auto& specs = conv_specs();
    stages_.reserve(specs.size());
    for (const auto& cs : specs) {
        Stage st;
        if (cs.pool_before) st.pool = std::make_unique<nn::MaxPool2d>();
        st.conv = std::make_unique<nn::Conv2d>(cs.in_c, cs.out_c, 3, 1, init_rng);
        st.relu = std::make_unique<nn::ReLU>();
        std::string name(cs.name);
        if (name.size() > 2 && name.substr(name.size() - 2) == "_1")
            st.tap = "block" + name.substr(4, 1) + "_conv1";
        st.conv->freeze();
        stages_.push_back(std::move(st));
    }
}

std::unique_ptr<Vgg19> Vgg19::random(uint64_t seed) {
    auto net = std::unique_ptr<Vgg19>(new Vgg19());
    Rng rng(seed);
    for (auto& st : net->stages_) {
        Tensor& w = st.conv->weight().value;
        float fan_in = static_cast<float>(w.dim(0) * w.dim(1) * w.dim(2));
        rng.fill_normal(w.data(), w.size(), 0.0f, std::sqrt(2.0f / fan_in));
        st.conv->bias().value.fill(0.0f);
    }
    return net;
}

uint64_t Vgg19::weight_checksum() const {
    uint64_t h = kFnvOffset;
    for (const auto& st : stages_) {
        const Tensor& w = st.conv->weight().value;
        const Tensor& b = st.conv->bias().value;
        h = fnv1a(h, w.data(), w.size() * sizeof(float));
        h = fnv1a(h, b.data(), b.size() * sizeof(float));
    }
    return h;
}

void Vgg19::write_weights(const std::filesystem::path& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
    f.write(kMagic, 4);
    uint32_t version = kWeightsVersion;
    f.write(reinterpret_cast<const char*>(&version), 4);
    uint32_t n_layers = static_cast<uint32_t>(stages_.size());
    f.write(reinterpret_cast<const char*>(&n_layers), 4);
    const auto& specs = conv_specs();
    for (size_t i = 0; i < stages_.size(); ++i) {
        const std::string name = specs[i].name;
        uint32_t name_len = static_cast<uint32_t>(name.size());
        f.write(reinterpret_cast<const char*>(&name_len), 4);
        f.write(name.data(), name_len);
        const Tensor& w = stages_[i].conv->weight().value;
        uint32_t dims[4] = {static_cast<uint32_t>(w.dim(0)), static_cast<uint32_t>(w.dim(1)),
                            static_cast<uint32_t>(w.dim(2)), static_cast<uint32_t>(w.dim(3))};
        f.write(reinterpret_cast<const char*>(dims), sizeof(dims));
        f.write(reinterpret_cast<const char*>(w.data()),
                static_cast<std::streamsize>(w.size() * sizeof(float)));
        const Tensor& b = stages_[i].conv->bias().value;
        f.write(reinterpret_cast<const char*>(b.data()),
                static_cast<std::streamsize>(b.size() * sizeof(float)));
    }
    uint64_t checksum = weight_checksum();
    f.write(reinterpret_cast<const char*>(&checksum), 8);
    if (!f) throw IoError("failed writing weight archive '" + path.string() + "'");
}

void Vgg19::write_random_weights(const std::filesystem::path& path, uint64_t seed) {
    random(seed)->write_weights(path);
}

std::unique_ptr<Vgg19> Vgg19::load(const std::filesystem::path& weights_path) {
    std::ifstream f(weights_path, std::ios::binary);
    if (!f) throw IoError("cannot open VGG weight archive '" + weights_path.string() + "'");

    auto read_or_fail = [&](void* dst, size_t len, const std::string& what) {
        f.read(static_cast<char*>(dst), static_cast<std::streamsize>(len));
        if (f.gcount() != static_cast<std::streamsize>(len))
            throw IoError("truncated VGG weight archive while reading " + what);
    };

    char magic[4];
    read_or_fail(magic, 4, "magic");
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw IoError("'" + weights_path.string() + "' is not a VGG weight archive");
    uint32_t version = 0, n_layers = 0;
    read_or_fail(&version, 4, "version");
    if (version != kWeightsVersion)
        throw IoError("unsupported VGG weight archive version " + std::to_string(version));
    read_or_fail(&n_layers, 4, "layer count");
    const auto& specs = conv_specs();
    if (n_layers != specs.size())
        throw IoError("VGG weight archive has " + std::to_string(n_layers) +
                      " conv layers, expected " + std::to_string(specs.size()));

    auto net = std::unique_ptr<Vgg19>(new Vgg19());
    for (size_t i = 0; i < specs.size(); ++i) {
        uint32_t name_len = 0;
        read_or_fail(&name_len, 4, "layer name length");
        if (name_len > 64) throw IoError("corrupt VGG weight archive (layer name too long)");
        std::string name(name_len, '\0');
        read_or_fail(name.data(), name_len, "layer name");
        uint32_t dims[4];
        read_or_fail(dims, sizeof(dims), "layer dims of " + name);
        if (name != specs[i].name || dims[0] != 3 || dims[1] != 3 ||
            dims[2] != static_cast<uint32_t>(specs[i].in_c) ||
            dims[3] != static_cast<uint32_t>(specs[i].out_c)) {
            throw IoError("VGG weight archive mismatch at layer " + std::to_string(i) + ": got '" +
                          name + "' (3x3x" + std::to_string(dims[2]) + "x" + std::to_string(dims[3]) +
                          "), expected '" + specs[i].name + "' (3x3x" +
                          std::to_string(specs[i].in_c) + "x" + std::to_string(specs[i].out_c) + ")");
        }
        Tensor& w = net->stages_[i].conv->weight().value;
        Tensor& b = net->stages_[i].conv->bias().value;
        read_or_fail(w.data(), w.size() * sizeof(float), "weights of " + name);
        read_or_fail(b.data(), b.size() * sizeof(float), "bias of " + name);
    }
    uint64_t stored = 0;
    read_or_fail(&stored, 8, "checksum");
    uint64_t computed = net->weight_checksum();
    if (stored != computed)
        throw IoError("VGG weight archive checksum mismatch (file corrupt?)");
    std::clog << "[artemis] loaded VGG-19 backbone: 16 conv layers, checksum 0x" << std::hex
              << computed << std::dec << "\n";
    return net;
}

std::map<std::string, Tensor> Vgg19::extract(const Tensor& images,
                                             const std::vector<std::string>& blocks,
                                             bool want_grad) {
    if (images.rank() != 4 || images.dim(3) != 3)
        throw ShapeError("vgg extract: expected N x H x W x 3 images, got " + images.shape_str());
    if (blocks.empty()) throw ConfigError("vgg extract: empty block set");
    for (const auto& b : blocks)
        if (!is_known_block(b)) throw ConfigError("unknown VGG block '" + b + "'");

    std::map<std::string, Tensor> out;
    input_tap_requested_ = false;
    last_input_shape_ = images.shape();

    int deepest = -1;
    for (const auto& b : blocks) {
        if (b == "none") {
            input_tap_requested_ = true;
            out.emplace("none", images);
            continue;
        }
        for (size_t i = 0; i < stages_.size(); ++i)
            if (stages_[i].tap == b) deepest = std::max(deepest, static_cast<int>(i));
    }
    deepest_stage_used_ = deepest;
    if (deepest < 0) return out; // only "none" requested

    // Mean subtraction; gradient of this shift is the identity.
    Tensor h = images;
    for (size_t i = 0; i < h.size(); ++i) h[i] -= kImagenetMean[i % 3];

    nn::FwdCtx ctx;
    ctx.grad = want_grad;
    for (int i = 0; i <= deepest; ++i) {
        Stage& st = stages_[i];
        if (st.pool) h = st.pool->forward(h, ctx);
        h = st.conv->forward(h, ctx);
        h = st.relu->forward(h, ctx);
        if (!st.tap.empty() &&
            std::find(blocks.begin(), blocks.end(), st.tap) != blocks.end())
            out.emplace(st.tap, h);
    }
    return out;
}

Tensor Vgg19::backward(const std::map<std::string, Tensor>& tap_grads) {
    Tensor g; // empty until the deepest tap injects
    for (int i = deepest_stage_used_; i >= 0; --i) {
        Stage& st = stages_[i];
        if (!st.tap.empty()) {
            auto it = tap_grads.find(st.tap);
            if (it != tap_grads.end()) {
                if (g.empty())
                    g = it->second;
                else
                    g += it->second;
            }
        }
        if (g.empty()) continue;
        g = st.relu->backward(g);
        g = st.conv->backward(g);
        if (st.pool) g = st.pool->backward(g);
    }
    if (g.empty()) g = Tensor(last_input_shape_);
    auto it = tap_grads.find("none");
    if (it != tap_grads.end()) g += it->second;
    return g;
}

} // namespace artemis
