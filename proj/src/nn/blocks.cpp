#include "artemis/nn/blocks.hpp"

namespace artemis::nn {

namespace {

void check_divisible(const Tensor& x, int stride, const char* what) {
    if (stride > 1 && (x.dim(1) % stride != 0 || x.dim(2) % stride != 0))
        throw ShapeError(std::string(what) + ": spatial dims " + x.shape_str() +
                         " not divisible by stride " + std::to_string(stride));
}

} // namespace

EncoderBlock::EncoderBlock(int in_c, const EncoderBlockCfg& cfg, Rng& rng) : cfg_(cfg) {
    if (cfg.c < 1) throw ConfigError("encoder block: output channels must be >= 1");
    if (cfg.stride != 1 && cfg.stride != 2)
        throw ConfigError("encoder block: stride must be 1 or 2");
    int kernel = cfg.stride == 2 ? 4 : 3;
    body_.emplace<Conv2d>("conv", in_c, cfg.c, kernel, cfg.stride, rng);
    body_.emplace<BatchNorm>("bn", cfg.c);
    body_.emplace<LeakyReLU>("act", 0.2f);
}

Tensor EncoderBlock::forward(const Tensor& x, const FwdCtx& ctx) {
    check_divisible(x, cfg_.stride, "encoder block");
    return body_.forward(x, ctx);
}

BatchDecoderBlock::BatchDecoderBlock(int in_c, const BatchDecoderBlockCfg& cfg, Rng& rng) {
    if (cfg.c < 1) throw ConfigError("batch decoder block: output channels must be >= 1");
    body_.emplace<ConvTranspose2d>("deconv", in_c, cfg.c, 4, 2, rng);
    body_.emplace<BatchNorm>("bn", cfg.c);
    body_.emplace<LeakyReLU>("act", 0.2f);
    if (cfg.attention) attention_ = body_.emplace<SelfAttention>("attn", cfg.c, rng);
}

GroupDecoderBlock::GroupDecoderBlock(int in_c, const GroupDecoderBlockCfg& cfg, Rng& rng) {
    if (cfg.c < 1 || cfg.k < 1)
        throw ConfigError("group decoder block: channels and kernel must be >= 1");
    int groups = std::min(4, cfg.c);
    if (cfg.c % groups != 0)
        throw ConfigError("group decoder block: " + std::to_string(cfg.c) +
                          " channels not divisible by " + std::to_string(groups) + " norm groups");
    body_.emplace<Conv2d>("conv", in_c, cfg.c, cfg.k, 1, rng);
    body_.emplace<GroupNorm>("gn", groups, cfg.c);
    body_.emplace<LeakyReLU>("act", 0.2f);
}

DiscriminatorBlock::DiscriminatorBlock(int in_c, const DiscriminatorBlockCfg& cfg, Rng& rng)
    : cfg_(cfg) {
    if (cfg.c < 1) throw ConfigError("discriminator block: output channels must be >= 1");
    body_.emplace<Conv2d>("conv", in_c, cfg.c, 4, cfg.stride, rng);
    body_.emplace<BatchNorm>("bn", cfg.c);
    body_.emplace<LeakyReLU>("act", 0.2f);
    if (cfg.resnext) body_.emplace<ResNeXtLayer>("resnext", cfg.c, rng);
}

Tensor DiscriminatorBlock::forward(const Tensor& x, const FwdCtx& ctx) {
    check_divisible(x, cfg_.stride, "discriminator block");
    return body_.forward(x, ctx);
}

} // namespace artemis::nn
