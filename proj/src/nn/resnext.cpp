#include "artemis/nn/resnext.hpp"

namespace artemis::nn {

ResNeXtLayer::ResNeXtLayer(int channels, Rng& rng, int cardinality) : c_(channels) {
    if (cardinality < 1 || channels % cardinality != 0)
        throw ConfigError("resnext: " + std::to_string(channels) +
                          " channels not divisible by cardinality " + std::to_string(cardinality));
    int width = std::max(channels / 2, 1);
    int groups = std::min(cardinality, width);
    while (width % groups != 0) --groups;

    transform_.emplace<Conv2d>("reduce", channels, width, 1, 1, rng);
    transform_.emplace<BatchNorm>("bn1", width);
    transform_.emplace<LeakyReLU>("act1", 0.2f);
    transform_.emplace<Conv2d>("grouped", width, width, 3, 1, rng, true, groups);
    transform_.emplace<BatchNorm>("bn2", width);
    transform_.emplace<LeakyReLU>("act2", 0.2f);
    transform_.emplace<Conv2d>("expand", width, channels, 1, 1, rng);
    transform_.emplace<BatchNorm>("bn3", channels);
}

void ResNeXtLayer::collect_params(const std::string& prefix, std::vector<Param*>& out) {
    transform_.collect_params(prefix, out);
}

void ResNeXtLayer::collect_buffers(const std::string& prefix, std::vector<NamedTensor>& out) {
    transform_.collect_buffers(prefix, out);
}

Tensor ResNeXtLayer::forward(const Tensor& x, const FwdCtx& ctx) {
    if (x.rank() != 4 || x.dim(3) != c_)
        throw ShapeError("resnext: expected NHWC with " + std::to_string(c_) +
                         " channels, got " + x.shape_str());
    Tensor y = transform_.forward(x, ctx);
    y += x;
    return y;
}

Tensor ResNeXtLayer::backward(const Tensor& grad_out) {
    Tensor dx = transform_.backward(grad_out);
    dx += grad_out;
    return dx;
}

} // namespace artemis::nn
