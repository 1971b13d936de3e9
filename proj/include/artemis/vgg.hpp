#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "artemis/nn/layers.hpp"

namespace artemis {

// Style-representation tap points. "none" is the identity (the raw image).
struct BlockSpec {
    std::string name;
    int h = 0, w = 0, c = 0; // dims for a single sample at the chosen image size

    bool is_none() const { return name == "none"; }
};

// Registry of tap points and their dims. `image_size` scales the spatial
// dims for reduced-resolution runs (channel widths are fixed by the
// architecture). Unknown names raise ConfigError.
BlockSpec block_spec(const std::string& name, int image_size = 256);
std::array<int, 3> block_dims(const std::string& name, int image_size = 256);
const std::vector<std::string>& known_block_names();
bool is_known_block(const std::string& name);

struct StyleRepresentation {
    BlockSpec block;
    Tensor data; // batch tensor, N x h x w x c
};

// Frozen VGG-19 feature extractor. Only the 16 convolutional layers are
// used; weights come from a serialized archive and are never updated.
// Inputs are [0,255] RGB images; ImageNet channel means are subtracted
// internally so callers never pre-normalize.
class Vgg19 {
public:
    struct ConvSpec {
        const char* name;
        int in_c, out_c;
        bool pool_before; // 2x2 max pool precedes this conv
    };
    static const std::array<ConvSpec, 16>& conv_specs();

    // Builds the topology with He-random weights (used by tests and the
    // weight-file generator; real runs load pretrained weights).
    static std::unique_ptr<Vgg19> random(uint64_t seed);

    // Loads and validates a weight archive; logs the weight checksum.
    static std::unique_ptr<Vgg19> load(const std::filesystem::path& weights_path);

    static void write_random_weights(const std::filesystem::path& path, uint64_t seed);
    void write_weights(const std::filesystem::path& path) const;

    uint64_t weight_checksum() const;

    // Runs the net up to the deepest requested tap and returns one batch
    // tensor per block. With `want_grad`, layer caches are kept so
    // backward() can propagate tap gradients to the image input (backbone
    // weights never receive gradients).
    std::map<std::string, Tensor> extract(const Tensor& images,
                                          const std::vector<std::string>& blocks,
                                          bool want_grad = false);

    // Gradient w.r.t. the [0,255] image input for the taps of the last
    // grad-enabled extract(). Missing taps contribute zero.
    Tensor backward(const std::map<std::string, Tensor>& tap_grads);

private:
    Vgg19();

    struct Stage {
        std::unique_ptr<nn::MaxPool2d> pool; // null for the first stage of each run
        std::unique_ptr<nn::Conv2d> conv;
        std::unique_ptr<nn::ReLU> relu;
        std::string tap; // block name if this layer is a tap point, else empty
    };

    std::vector<Stage> stages_;
    int deepest_stage_used_ = -1;
    std::vector<int> last_input_shape_;
    bool input_tap_requested_ = false;
};

} // namespace artemis
