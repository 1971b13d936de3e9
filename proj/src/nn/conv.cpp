#include "artemis/nn/layers.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstring>

namespace artemis::nn {

using MatMap = Eigen::Map<Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using CMatMap = Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

ConvGeom ConvGeom::same(int in_h, int in_w, int in_c, int kh, int kw, int stride) {
    ConvGeom g;
    g.in_h = in_h;
    g.in_w = in_w;
    g.in_c = in_c;
    g.kh = kh;
    g.kw = kw;
    g.stride = stride;
    g.out_h = (in_h + stride - 1) / stride;
    g.out_w = (in_w + stride - 1) / stride;
    int pad_h = std::max((g.out_h - 1) * stride + kh - in_h, 0);
    int pad_w = std::max((g.out_w - 1) * stride + kw - in_w, 0);
    g.pad_top = pad_h / 2;
    g.pad_left = pad_w / 2;
    return g;
}

namespace {

// Gathers kernel patches of one sample into a (out_h*out_w) x (kh*kw*cn)
// matrix, restricted to input channels [c0, c0+cn).
void im2col(const ConvGeom& g, const float* x, int c0, int cn, float* cols) {
    const int row_len = g.kh * g.kw * cn;
    for (int oh = 0; oh < g.out_h; ++oh) {
        for (int ow = 0; ow < g.out_w; ++ow) {
            float* row = cols + (static_cast<size_t>(oh) * g.out_w + ow) * row_len;
            for (int a = 0; a < g.kh; ++a) {
                int ih = oh * g.stride - g.pad_top + a;
                for (int b = 0; b < g.kw; ++b) {
                    int iw = ow * g.stride - g.pad_left + b;
                    float* dst = row + (a * g.kw + b) * cn;
                    if (ih < 0 || ih >= g.in_h || iw < 0 || iw >= g.in_w) {
                        std::memset(dst, 0, sizeof(float) * cn);
                    } else {
                        const float* src = x + (static_cast<size_t>(ih) * g.in_w + iw) * g.in_c + c0;
                        std::memcpy(dst, src, sizeof(float) * cn);
                    }
                }
            }
        }
    }
}

// Adjoint of im2col: scatter-adds patch rows back onto the input grid.
void col2im_add(const ConvGeom& g, const float* cols, int c0, int cn, float* x) {
    const int row_len = g.kh * g.kw * cn;
    for (int oh = 0; oh < g.out_h; ++oh) {
        for (int ow = 0; ow < g.out_w; ++ow) {
            const float* row = cols + (static_cast<size_t>(oh) * g.out_w + ow) * row_len;
            for (int a = 0; a < g.kh; ++a) {
                int ih = oh * g.stride - g.pad_top + a;
                if (ih < 0 || ih >= g.in_h) continue;
                for (int b = 0; b < g.kw; ++b) {
                    int iw = ow * g.stride - g.pad_left + b;
                    if (iw < 0 || iw >= g.in_w) continue;
                    const float* src = row + (a * g.kw + b) * cn;
                    float* dst = x + (static_cast<size_t>(ih) * g.in_w + iw) * g.in_c + c0;
                    for (int c = 0; c < cn; ++c) dst[c] += src[c];
                }
            }
        }
    }
}

void check_rank4(const Tensor& x, const char* what) {
    if (x.rank() != 4)
        throw ShapeError(std::string(what) + ": expected rank-4 NHWC input, got " + x.shape_str());
}

} // namespace

Conv2d::Conv2d(int in_c, int out_c, int kernel, int stride, Rng& rng, bool bias, int groups)
    : in_c_(in_c), out_c_(out_c), kernel_(kernel), stride_(stride), groups_(groups),
      has_bias_(bias) {
    if (in_c % groups != 0 || out_c % groups != 0)
        throw ConfigError("conv: channels not divisible by groups (" + std::to_string(in_c) +
                          ", " + std::to_string(out_c) + ", groups=" + std::to_string(groups) + ")");
    float stddev = std::sqrt(2.0f / (kernel * kernel * (in_c / groups)));
    weight_ = Param("weight", Tensor::randn({kernel, kernel, in_c / groups, out_c}, rng, 0.0f, stddev));
    if (has_bias_) bias_ = Param("bias", Tensor({out_c}));
}

void Conv2d::collect_params(const std::string& prefix, std::vector<Param*>& out) {
    weight_.name = prefix + "weight";
    out.push_back(&weight_);
    if (has_bias_) {
        bias_.name = prefix + "bias";
        out.push_back(&bias_);
    }
}

Tensor Conv2d::forward(const Tensor& x, const FwdCtx& ctx) {
    check_rank4(x, "conv");
    if (x.dim(3) != in_c_)
        throw ShapeError("conv: expected " + std::to_string(in_c_) + " input channels, got " +
                         std::to_string(x.dim(3)) + " in " + x.shape_str());
    const int n_batch = x.dim(0);
    geom_ = ConvGeom::same(x.dim(1), x.dim(2), in_c_, kernel_, kernel_, stride_);
    Tensor y({n_batch, geom_.out_h, geom_.out_w, out_c_});

    const int cinpg = in_c_ / groups_;
    const int coutpg = out_c_ / groups_;
    const int patch = kernel_ * kernel_ * cinpg;
    const size_t p = static_cast<size_t>(geom_.out_h) * geom_.out_w;
    const size_t in_stride = static_cast<size_t>(geom_.in_h) * geom_.in_w * in_c_;

    CMatMap wmat(weight_.value.data(), patch, out_c_);

#pragma omp parallel for schedule(static) if (n_batch > 1)
    for (int n = 0; n < n_batch; ++n) {
        std::vector<float> cols(p * patch);
        MatMap ymat(y.data() + n * p * out_c_, static_cast<Eigen::Index>(p), out_c_);
        for (int g = 0; g < groups_; ++g) {
            im2col(geom_, x.data() + n * in_stride, g * cinpg, cinpg, cols.data());
            MatMap cmat(cols.data(), static_cast<Eigen::Index>(p), patch);
            ymat.middleCols(g * coutpg, coutpg).noalias() =
                cmat * wmat.middleCols(g * coutpg, coutpg);
        }
        if (has_bias_) {
            CMatMap b(bias_.value.data(), 1, out_c_);
            ymat.rowwise() += b.row(0);
        }
    }

    if (ctx.grad && weight_.trainable)
        cached_x_ = x;
    else
        cached_x_ = Tensor();
    return y;
}

Tensor Conv2d::backward(const Tensor& grad_out) {
    const int n_batch = grad_out.dim(0);
    Tensor dx({n_batch, geom_.in_h, geom_.in_w, in_c_});

    const int cinpg = in_c_ / groups_;
    const int coutpg = out_c_ / groups_;
    const int patch = kernel_ * kernel_ * cinpg;
    const size_t p = static_cast<size_t>(geom_.out_h) * geom_.out_w;
    const size_t in_stride = static_cast<size_t>(geom_.in_h) * geom_.in_w * in_c_;

    CMatMap wmat(weight_.value.data(), patch, out_c_);

#pragma omp parallel for schedule(static) if (n_batch > 1)
    for (int n = 0; n < n_batch; ++n) {
        std::vector<float> dcols(p * patch);
        CMatMap gmat(grad_out.data() + n * p * out_c_, static_cast<Eigen::Index>(p), out_c_);
        for (int g = 0; g < groups_; ++g) {
            MatMap dcmat(dcols.data(), static_cast<Eigen::Index>(p), patch);
            dcmat.noalias() =
                gmat.middleCols(g * coutpg, coutpg) * wmat.middleCols(g * coutpg, coutpg).transpose();
            col2im_add(geom_, dcols.data(), g * cinpg, cinpg, dx.data() + n * in_stride);
        }
    }

    if (weight_.trainable && !cached_x_.empty()) {
        MatMap dwmat(weight_.grad.data(), patch, out_c_);
        std::vector<float> cols(p * patch);
        for (int n = 0; n < n_batch; ++n) {
            CMatMap gmat(grad_out.data() + n * p * out_c_, static_cast<Eigen::Index>(p), out_c_);
            for (int g = 0; g < groups_; ++g) {
                im2col(geom_, cached_x_.data() + n * in_stride, g * cinpg, cinpg, cols.data());
                CMatMap cmat(cols.data(), static_cast<Eigen::Index>(p), patch);
                dwmat.middleCols(g * coutpg, coutpg).noalias() +=
                    cmat.transpose() * gmat.middleCols(g * coutpg, coutpg);
            }
        }
        if (has_bias_) {
            for (size_t i = 0; i < grad_out.size(); ++i)
                bias_.grad[i % out_c_] += grad_out[i];
        }
    }
    return dx;
}

ConvTranspose2d::ConvTranspose2d(int in_c, int out_c, int kernel, int stride, Rng& rng, bool bias)
    : in_c_(in_c), out_c_(out_c), kernel_(kernel), stride_(stride), has_bias_(bias) {
    float stddev = std::sqrt(2.0f * stride * stride / (kernel * kernel * in_c));
    weight_ = Param("weight", Tensor::randn({kernel, kernel, out_c, in_c}, rng, 0.0f, stddev));
    if (has_bias_) bias_ = Param("bias", Tensor({out_c}));
}

void ConvTranspose2d::collect_params(const std::string& prefix, std::vector<Param*>& out) {
    weight_.name = prefix + "weight";
    out.push_back(&weight_);
    if (has_bias_) {
        bias_.name = prefix + "bias";
        out.push_back(&bias_);
    }
}

Tensor ConvTranspose2d::forward(const Tensor& x, const FwdCtx& ctx) {
    check_rank4(x, "conv_transpose");
    if (x.dim(3) != in_c_)
        throw ShapeError("conv_transpose: expected " + std::to_string(in_c_) +
                         " input channels, got " + std::to_string(x.dim(3)));
    const int n_batch = x.dim(0);
    const int out_h = x.dim(1) * stride_;
    const int out_w = x.dim(2) * stride_;
    // Geometry of the adjoint conv: output grid -> input grid.
    geom_ = ConvGeom::same(out_h, out_w, out_c_, kernel_, kernel_, stride_);
    Tensor y({n_batch, out_h, out_w, out_c_});

    const int patch = kernel_ * kernel_ * out_c_;
    const size_t p = static_cast<size_t>(x.dim(1)) * x.dim(2);
    const size_t out_stride = static_cast<size_t>(out_h) * out_w * out_c_;

    CMatMap wmat(weight_.value.data(), patch, in_c_);

#pragma omp parallel for schedule(static) if (n_batch > 1)
    for (int n = 0; n < n_batch; ++n) {
        std::vector<float> cols(p * patch);
        CMatMap xmat(x.data() + n * p * in_c_, static_cast<Eigen::Index>(p), in_c_);
        MatMap cmat(cols.data(), static_cast<Eigen::Index>(p), patch);
        cmat.noalias() = xmat * wmat.transpose();
        float* ydat = y.data() + n * out_stride;
        col2im_add(geom_, cols.data(), 0, out_c_, ydat);
        if (has_bias_) {
            for (size_t i = 0; i < out_stride; ++i) ydat[i] += bias_.value[i % out_c_];
        }
    }

    if (ctx.grad && weight_.trainable)
        cached_x_ = x;
    else
        cached_x_ = Tensor();
    return y;
}

Tensor ConvTranspose2d::backward(const Tensor& grad_out) {
    const int n_batch = grad_out.dim(0);
    const int in_h = geom_.out_h;
    const int in_w = geom_.out_w;
    Tensor dx({n_batch, in_h, in_w, in_c_});

    const int patch = kernel_ * kernel_ * out_c_;
    const size_t p = static_cast<size_t>(in_h) * in_w;
    const size_t out_stride = static_cast<size_t>(geom_.in_h) * geom_.in_w * out_c_;

    CMatMap wmat(weight_.value.data(), patch, in_c_);

#pragma omp parallel for schedule(static) if (n_batch > 1)
    for (int n = 0; n < n_batch; ++n) {
        std::vector<float> cols(p * patch);
        im2col(geom_, grad_out.data() + n * out_stride, 0, out_c_, cols.data());
        CMatMap cmat(cols.data(), static_cast<Eigen::Index>(p), patch);
        MatMap dxmat(dx.data() + n * p * in_c_, static_cast<Eigen::Index>(p), in_c_);
        dxmat.noalias() = cmat * wmat;
    }

    if (weight_.trainable && !cached_x_.empty()) {
        MatMap dwmat(weight_.grad.data(), patch, in_c_);
        std::vector<float> cols(p * patch);
        for (int n = 0; n < n_batch; ++n) {
            im2col(geom_, grad_out.data() + n * out_stride, 0, out_c_, cols.data());
            CMatMap cmat(cols.data(), static_cast<Eigen::Index>(p), patch);
            CMatMap xmat(cached_x_.data() + n * p * in_c_, static_cast<Eigen::Index>(p), in_c_);
            dwmat.noalias() += cmat.transpose() * xmat;
        }
        if (has_bias_) {
            for (size_t i = 0; i < grad_out.size(); ++i)
                bias_.grad[i % out_c_] += grad_out[i];
        }
    }
    return dx;
}

Dense::Dense(int in_f, int out_f, Rng& rng) : in_f_(in_f), out_f_(out_f) {
    float stddev = std::sqrt(2.0f / in_f);
    weight_ = Param("weight", Tensor::randn({in_f, out_f}, rng, 0.0f, stddev));
    bias_ = Param("bias", Tensor({out_f}));
}

void Dense::collect_params(const std::string& prefix, std::vector<Param*>& out) {
    weight_.name = prefix + "weight";
    bias_.name = prefix + "bias";
    out.push_back(&weight_);
    out.push_back(&bias_);
}

Tensor Dense::forward(const Tensor& x, const FwdCtx& ctx) {
    if (x.rank() != 2 || x.dim(1) != in_f_)
        throw ShapeError("dense: expected (N x " + std::to_string(in_f_) + "), got " + x.shape_str());
    const int n = x.dim(0);
    Tensor y({n, out_f_});
    CMatMap xm(x.data(), n, in_f_);
    CMatMap wm(weight_.value.data(), in_f_, out_f_);
    CMatMap bm(bias_.value.data(), 1, out_f_);
    MatMap ym(y.data(), n, out_f_);
    ym.noalias() = xm * wm;
    ym.rowwise() += bm.row(0);
    if (ctx.grad)
        cached_x_ = x;
    else
        cached_x_ = Tensor();
    return y;
}

Tensor Dense::backward(const Tensor& grad_out) {
    const int n = grad_out.dim(0);
    Tensor dx({n, in_f_});
    CMatMap gm(grad_out.data(), n, out_f_);
    CMatMap wm(weight_.value.data(), in_f_, out_f_);
    MatMap dxm(dx.data(), n, in_f_);
    dxm.noalias() = gm * wm.transpose();
    if (weight_.trainable && !cached_x_.empty()) {
        CMatMap xm(cached_x_.data(), n, in_f_);
        MatMap dwm(weight_.grad.data(), in_f_, out_f_);
        dwm.noalias() += xm.transpose() * gm;
        MatMap dbm(bias_.grad.data(), 1, out_f_);
        dbm.row(0) += gm.colwise().sum();
    }
    return dx;
}

Tensor Flatten::forward(const Tensor& x, const FwdCtx& ctx) {
    (void)ctx;
    cached_shape_ = x.shape();
    int n = x.dim(0);
    int f = static_cast<int>(x.size() / n);
    return x.reshaped({n, f});
}

Tensor Flatten::backward(const Tensor& grad_out) {
    return grad_out.reshaped(cached_shape_);
}

Tensor LeakyReLU::forward(const Tensor& x, const FwdCtx& ctx) {
    Tensor y = x;
    if (ctx.grad) mask_.assign(x.size(), 0);
    for (size_t i = 0; i < y.size(); ++i) {
        if (y[i] > 0.0f) {
            if (ctx.grad) mask_[i] = 1;
        } else {
            y[i] *= slope_;
        }
    }
    return y;
}

Tensor LeakyReLU::backward(const Tensor& grad_out) {
    Tensor dx = grad_out;
    for (size_t i = 0; i < dx.size(); ++i)
        if (!mask_[i]) dx[i] *= slope_;
    return dx;
}

Tensor ReLU::forward(const Tensor& x, const FwdCtx& ctx) {
    Tensor y = x;
    if (ctx.grad) mask_.assign(x.size(), 0);
    for (size_t i = 0; i < y.size(); ++i) {
        if (y[i] > 0.0f) {
            if (ctx.grad) mask_[i] = 1;
        } else {
            y[i] = 0.0f;
        }
    }
    return y;
}

Tensor ReLU::backward(const Tensor& grad_out) {
    Tensor dx = grad_out;
    for (size_t i = 0; i < dx.size(); ++i)
        if (!mask_[i]) dx[i] = 0.0f;
    return dx;
}

Tensor Sigmoid::forward(const Tensor& x, const FwdCtx& ctx) {
    Tensor y = x;
    for (size_t i = 0; i < y.size(); ++i) y[i] = 1.0f / (1.0f + std::exp(-y[i]));
    if (ctx.grad)
        cached_y_ = y;
    else
        cached_y_ = Tensor();
    return y;
}

Tensor Sigmoid::backward(const Tensor& grad_out) {
    Tensor dx = grad_out;
    for (size_t i = 0; i < dx.size(); ++i) {
        float s = cached_y_[i];
        dx[i] *= s * (1.0f - s);
    }
    return dx;
}

Tensor Scale::forward(const Tensor& x, const FwdCtx& ctx) {
    (void)ctx;
    Tensor y = x;
    y *= factor_;
    return y;
}

Tensor Scale::backward(const Tensor& grad_out) {
    Tensor dx = grad_out;
    dx *= factor_;
    return dx;
}

Tensor GaussianNoise::forward(const Tensor& x, const FwdCtx& ctx) {
    if (!ctx.training) return x;
    if (ctx.rng == nullptr)
        throw ConfigError("noise layer: training-mode forward requires an rng");
    Tensor y = x;
    std::vector<float> noise(x.size());
    ctx.rng->fill_normal(noise.data(), noise.size(), 0.0f, stddev_);
    for (size_t i = 0; i < y.size(); ++i) y[i] += noise[i];
    return y;
}

Tensor GaussianNoise::backward(const Tensor& grad_out) {
    return grad_out;
}

Tensor MaxPool2d::forward(const Tensor& x, const FwdCtx& ctx) {
    check_rank4(x, "maxpool");
    if (x.dim(1) % 2 != 0 || x.dim(2) % 2 != 0)
        throw ShapeError("maxpool: spatial dims must be even, got " + x.shape_str());
    const int n_batch = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
    Tensor y({n_batch, h / 2, w / 2, c});
    in_shape_ = x.shape();
    if (ctx.grad) argmax_.assign(y.size(), 0);

    for (int n = 0; n < n_batch; ++n) {
        for (int oh = 0; oh < h / 2; ++oh) {
            for (int ow = 0; ow < w / 2; ++ow) {
                for (int ch = 0; ch < c; ++ch) {
                    float best = -std::numeric_limits<float>::infinity();
                    size_t best_idx = 0;
                    for (int a = 0; a < 2; ++a) {
                        for (int b = 0; b < 2; ++b) {
                            size_t i = x.idx(n, oh * 2 + a, ow * 2 + b, ch);
                            if (x[i] > best) {
                                best = x[i];
                                best_idx = i;
                            }
                        }
                    }
                    size_t o = y.idx(n, oh, ow, ch);
                    y[o] = best;
                    if (ctx.grad) argmax_[o] = static_cast<int32_t>(best_idx - x.idx(n, 0, 0, 0));
                }
            }
        }
    }
    return y;
}

Tensor MaxPool2d::backward(const Tensor& grad_out) {
    Tensor dx(in_shape_);
    const size_t sample = static_cast<size_t>(in_shape_[1]) * in_shape_[2] * in_shape_[3];
    const size_t out_sample = grad_out.size() / grad_out.dim(0);
    for (int n = 0; n < grad_out.dim(0); ++n) {
        for (size_t i = 0; i < out_sample; ++i) {
            size_t o = n * out_sample + i;
            dx[n * sample + argmax_[o]] += grad_out[o];
        }
    }
    return dx;
}

} // namespace artemis::nn
