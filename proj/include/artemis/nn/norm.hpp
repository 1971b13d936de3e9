#pragma once

#include "artemis/nn/module.hpp"

namespace artemis::nn {

// Per-channel batch normalization over all non-channel dims. Accepts NHWC
// rank-4 or (N, F) rank-2 input. Training mode uses batch statistics and
// maintains running estimates for inference.
class BatchNorm : public Module {
public:
    explicit BatchNorm(int channels, float momentum = 0.1f, float eps = 1e-5f);

    Tensor forward(const Tensor& x, const FwdCtx& ctx) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(const std::string& prefix, std::vector<Param*>& out) override;
    void collect_buffers(const std::string& prefix, std::vector<NamedTensor>& out) override;

private:
    int c_;
    float momentum_, eps_;
    Param gamma_, beta_;
    Tensor running_mean_, running_var_;

    Tensor cached_xhat_;
    std::vector<float> cached_inv_std_;
    bool cached_training_ = false;
};

// Group normalization: statistics per (sample, channel-group), identical in
// training and inference. Channel count must be divisible by `groups`.
class GroupNorm : public Module {
public:
    GroupNorm(int groups, int channels, float eps = 1e-5f);

    Tensor forward(const Tensor& x, const FwdCtx& ctx) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(const std::string& prefix, std::vector<Param*>& out) override;

private:
    int groups_, c_;
    float eps_;
    Param gamma_, beta_;

    Tensor cached_xhat_;
    std::vector<float> cached_inv_std_; // one per (n, group)
};

} // namespace artemis::nn
