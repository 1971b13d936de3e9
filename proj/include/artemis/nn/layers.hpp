#pragma once

#include <cstdint>
#include <vector>

#include "artemis/nn/module.hpp"

namespace artemis::nn {

// TensorFlow-style SAME padding: output spatial size is ceil(in / stride).
struct ConvGeom {
    int in_h = 0, in_w = 0, in_c = 0;
    int out_h = 0, out_w = 0;
    int kh = 0, kw = 0, stride = 1;
    int pad_top = 0, pad_left = 0;

    static ConvGeom same(int in_h, int in_w, int in_c, int kh, int kw, int stride);
};

// 2-D convolution, SAME padding, optional channel groups.
// Weight layout: (kh, kw, in_c/groups, out_c); per-sample im2col + GEMM.
class Conv2d : public Module {
public:
    Conv2d(int in_c, int out_c, int kernel, int stride, Rng& rng,
           bool bias = true, int groups = 1);

    Tensor forward(const Tensor& x, const FwdCtx& ctx) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(const std::string& prefix, std::vector<Param*>& out) override;

    Param& weight() { return weight_; }
    Param& bias() { return bias_; }
    int out_channels() const { return out_c_; }

private:
    int in_c_, out_c_, kernel_, stride_, groups_;
    bool has_bias_;
    Param weight_, bias_;
    Tensor cached_x_;
    ConvGeom geom_;
};

// Transposed convolution: output spatial dims are stride * input dims.
// Weight layout: (kh, kw, out_c, in_c); implemented as the adjoint of the
// SAME conv that maps the (larger) output grid back to the input grid.
class ConvTranspose2d : public Module {
public:
    ConvTranspose2d(int in_c, int out_c, int kernel, int stride, Rng& rng, bool bias = true);

    Tensor forward(const Tensor& x, const FwdCtx& ctx) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(const std::string& prefix, std::vector<Param*>& out) override;

    int out_channels() const { return out_c_; }

private:
    int in_c_, out_c_, kernel_, stride_;
    bool has_bias_;
    Param weight_, bias_;
    Tensor cached_x_;
    ConvGeom geom_;
};

class Dense : public Module {
public:
    Dense(int in_f, int out_f, Rng& rng);

    Tensor forward(const Tensor& x, const FwdCtx& ctx) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(const std::string& prefix, std::vector<Param*>& out) override;

private:
    int in_f_, out_f_;
    Param weight_, bias_;
    Tensor cached_x_;
};

// Collapses all non-batch dims: (N, ...) -> (N, F).
class Flatten : public Module {
public:
    Tensor forward(const Tensor& x, const FwdCtx& ctx) override;
    Tensor backward(const Tensor& grad_out) override;

private:
    std::vector<int> cached_shape_;
};

class LeakyReLU : public Module {
public:
    explicit LeakyReLU(float slope = 0.2f) : slope_(slope) {}
    Tensor forward(const Tensor& x, const FwdCtx& ctx) override;
    Tensor backward(const Tensor& grad_out) override;

private:
    float slope_;
    std::vector<uint8_t> mask_;
};

class ReLU : public Module {
public:
    Tensor forward(const Tensor& x, const FwdCtx& ctx) override;
    Tensor backward(const Tensor& grad_out) override;

private:
    std::vector<uint8_t> mask_;
};

class Sigmoid : public Module {
public:
    Tensor forward(const Tensor& x, const FwdCtx& ctx) override;
    Tensor backward(const Tensor& grad_out) override;

private:
    Tensor cached_y_;
};

// y = factor * x; rescales sigmoid output to pixel range.
class Scale : public Module {
public:
    explicit Scale(float factor) : factor_(factor) {}
    Tensor forward(const Tensor& x, const FwdCtx& ctx) override;
    Tensor backward(const Tensor& grad_out) override;

private:
    float factor_;
};

// Additive N(0, stddev^2) noise in training mode, identity otherwise.
class GaussianNoise : public Module {
public:
    explicit GaussianNoise(float stddev = 1.0f) : stddev_(stddev) {}
    Tensor forward(const Tensor& x, const FwdCtx& ctx) override;
    Tensor backward(const Tensor& grad_out) override;

private:
    float stddev_;
};

// 2x2 max pooling, stride 2 (the VGG reduction step).
class MaxPool2d : public Module {
public:
    Tensor forward(const Tensor& x, const FwdCtx& ctx) override;
    Tensor backward(const Tensor& grad_out) override;

private:
    std::vector<int> in_shape_;
    std::vector<int32_t> argmax_;
};

} // namespace artemis::nn
