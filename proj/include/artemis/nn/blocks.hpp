#pragma once

#include "artemis/nn/attention.hpp"
#include "artemis/nn/layers.hpp"
#include "artemis/nn/norm.hpp"
#include "artemis/nn/resnext.hpp"

namespace artemis::nn {

struct EncoderBlockCfg {
    int c = 1;      // output channels
    int stride = 1; // 1 or 2; stride 2 halves spatial dims
};

struct BatchDecoderBlockCfg {
    int c = 1;
    bool attention = false;
};

struct GroupDecoderBlockCfg {
    int c = 1;
    int k = 1;
};

struct DiscriminatorBlockCfg {
    int c = 1;
    bool resnext = false;
    int stride = 2; // drops to 1 when the input grid is already tiny
};

// conv (3x3 for stride 1, 4x4 for stride 2) -> batch norm -> LeakyReLU(0.2).
class EncoderBlock : public Module {
public:
    EncoderBlock(int in_c, const EncoderBlockCfg& cfg, Rng& rng);

    Tensor forward(const Tensor& x, const FwdCtx& ctx) override;
    Tensor backward(const Tensor& grad_out) override { return body_.backward(grad_out); }
    void collect_params(const std::string& prefix, std::vector<Param*>& out) override {
        body_.collect_params(prefix, out);
    }
    void collect_buffers(const std::string& prefix, std::vector<NamedTensor>& out) override {
        body_.collect_buffers(prefix, out);
    }

private:
    EncoderBlockCfg cfg_;
    Sequential body_;
};

// transposed conv (4x4, stride 2) -> batch norm -> LeakyReLU(0.2)
// -> self-attention when enabled. Doubles spatial dims.
class BatchDecoderBlock : public Module {
public:
    BatchDecoderBlock(int in_c, const BatchDecoderBlockCfg& cfg, Rng& rng);

    Tensor forward(const Tensor& x, const FwdCtx& ctx) override { return body_.forward(x, ctx); }
    Tensor backward(const Tensor& grad_out) override { return body_.backward(grad_out); }
    void collect_params(const std::string& prefix, std::vector<Param*>& out) override {
        body_.collect_params(prefix, out);
    }
    void collect_buffers(const std::string& prefix, std::vector<NamedTensor>& out) override {
        body_.collect_buffers(prefix, out);
    }

    SelfAttention* attention() { return attention_; }

private:
    Sequential body_;
    SelfAttention* attention_ = nullptr;
};

// conv (k x k, stride 1, same padding) -> group norm -> LeakyReLU(0.2).
// Group count is min(4, c).
class GroupDecoderBlock : public Module {
public:
    GroupDecoderBlock(int in_c, const GroupDecoderBlockCfg& cfg, Rng& rng);

    Tensor forward(const Tensor& x, const FwdCtx& ctx) override { return body_.forward(x, ctx); }
    Tensor backward(const Tensor& grad_out) override { return body_.backward(grad_out); }
    void collect_params(const std::string& prefix, std::vector<Param*>& out) override {
        body_.collect_params(prefix, out);
    }

private:
    Sequential body_;
};

// conv (4x4, stride 2) -> batch norm -> LeakyReLU(0.2) -> ResNeXt layer
// when enabled. Halves spatial dims at stride 2.
class DiscriminatorBlock : public Module {
public:
    DiscriminatorBlock(int in_c, const DiscriminatorBlockCfg& cfg, Rng& rng);

    Tensor forward(const Tensor& x, const FwdCtx& ctx) override;
    Tensor backward(const Tensor& grad_out) override { return body_.backward(grad_out); }
    void collect_params(const std::string& prefix, std::vector<Param*>& out) override {
        body_.collect_params(prefix, out);
    }
    void collect_buffers(const std::string& prefix, std::vector<NamedTensor>& out) override {
        body_.collect_buffers(prefix, out);
    }

private:
    DiscriminatorBlockCfg cfg_;
    Sequential body_;
};

} // namespace artemis::nn
