#pragma once

#include "artemis/nn/module.hpp"

namespace artemis::nn {

// Nonlocal self-attention over all H*W positions:
//   out = x + gamma * softmax(Q K^T) V
// with Q, K projecting to C/8 channels, V to C (1x1 convs, no bias), and
// gamma a learned scalar initialized to zero so the layer starts as the
// identity. Requires C >= 8.
class SelfAttention : public Module {
public:
    SelfAttention(int channels, Rng& rng);

    Tensor forward(const Tensor& x, const FwdCtx& ctx) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(const std::string& prefix, std::vector<Param*>& out) override;

    float gamma() const { return gamma_.value[0]; }
    void set_gamma(float g) { gamma_.value[0] = g; }

    // Attention map for one sample of the last grad-enabled forward
    // (positions x positions, rows sum to 1).
    const Tensor& attention_map(int sample) const { return cached_attn_[sample]; }

private:
    int c_, ck_;
    Param wq_, wk_, wv_, gamma_;

    Tensor cached_x_;
    std::vector<Tensor> cached_q_, cached_k_, cached_v_, cached_attn_, cached_o_;
};

} // namespace artemis::nn
