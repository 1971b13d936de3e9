#pragma once

#include "artemis/nn/layers.hpp"
#include "artemis/nn/norm.hpp"

namespace artemis::nn {

// Residual y = x + T(x); T is a bottleneck to C/2 channels, a grouped 3x3
// convolution (cardinality 8), and an expansion back to C, with batch norm
// and LeakyReLU between stages. Channel count must be divisible by the
// cardinality; the group count clamps to the bottleneck width when C/2 is
// narrower than the cardinality.
class ResNeXtLayer : public Module {
public:
    ResNeXtLayer(int channels, Rng& rng, int cardinality = 8);

    Tensor forward(const Tensor& x, const FwdCtx& ctx) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(const std::string& prefix, std::vector<Param*>& out) override;
    void collect_buffers(const std::string& prefix, std::vector<NamedTensor>& out) override;

    Sequential& transform() { return transform_; }

private:
    int c_;
    Sequential transform_;
};

} // namespace artemis::nn
