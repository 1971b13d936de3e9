#include "artemis/nn/norm.hpp"

#include <cmath>

namespace artemis::nn {

namespace {

void check_channels(const Tensor& x, int c, const char* what) {
    if (x.rank() != 4 && x.rank() != 2)
        throw ShapeError(std::string(what) + ": expected rank-2 or rank-4 input, got " + x.shape_str());
    if (x.dim(x.rank() - 1) != c)
        throw ShapeError(std::string(what) + ": expected " + std::to_string(c) +
                         " channels, got " + x.shape_str());
}

} // namespace

BatchNorm::BatchNorm(int channels, float momentum, float eps)
    : c_(channels), momentum_(momentum), eps_(eps),
      gamma_("gamma", Tensor({channels}, 1.0f)),
      beta_("beta", Tensor({channels})),
      running_mean_({channels}, 0.0f),
      running_var_({channels}, 1.0f) {}

void BatchNorm::collect_params(const std::string& prefix, std::vector<Param*>& out) {
    gamma_.name = prefix + "gamma";
    beta_.name = prefix + "beta";
    out.push_back(&gamma_);
    out.push_back(&beta_);
}

void BatchNorm::collect_buffers(const std::string& prefix, std::vector<NamedTensor>& out) {
    out.emplace_back(prefix + "running_mean", &running_mean_);
    out.emplace_back(prefix + "running_var", &running_var_);
}

Tensor BatchNorm::forward(const Tensor& x, const FwdCtx& ctx) {
    check_channels(x, c_, "batchnorm");
    const size_t m = x.size() / c_;
    Tensor y(x.shape());
    cached_training_ = ctx.training;

    std::vector<float> mean(c_), inv_std(c_);
    if (ctx.training) {
        std::vector<double> sum(c_, 0.0), sumsq(c_, 0.0);
        for (size_t i = 0; i < x.size(); ++i) {
            int ch = static_cast<int>(i % c_);
            sum[ch] += x[i];
            sumsq[ch] += static_cast<double>(x[i]) * x[i];
        }
        for (int ch = 0; ch < c_; ++ch) {
            double mu = sum[ch] / static_cast<double>(m);
            double var = sumsq[ch] / static_cast<double>(m) - mu * mu;
            var = std::max(var, 0.0);
            mean[ch] = static_cast<float>(mu);
            inv_std[ch] = static_cast<float>(1.0 / std::sqrt(var + eps_));
            running_mean_[ch] = (1.0f - momentum_) * running_mean_[ch] + momentum_ * mean[ch];
            running_var_[ch] = (1.0f - momentum_) * running_var_[ch] + momentum_ * static_cast<float>(var);
        }
    } else {
        for (int ch = 0; ch < c_; ++ch) {
            mean[ch] = running_mean_[ch];
            inv_std[ch] = 1.0f / std::sqrt(running_var_[ch] + eps_);
        }
    }

    Tensor xhat(x.shape());
    for (size_t i = 0; i < x.size(); ++i) {
        int ch = static_cast<int>(i % c_);
        xhat[i] = (x[i] - mean[ch]) * inv_std[ch];
        y[i] = gamma_.value[ch] * xhat[i] + beta_.value[ch];
    }

    if (ctx.grad) {
        cached_xhat_ = std::move(xhat);
        cached_inv_std_ = std::move(inv_std);
    } else {
        cached_xhat_ = Tensor();
    }
    return y;
}

Tensor BatchNorm::backward(const Tensor& grad_out) {
    const size_t m = grad_out.size() / c_;
    Tensor dx(grad_out.shape());

    std::vector<double> sum_gy(c_, 0.0), sum_gy_xhat(c_, 0.0);
    for (size_t i = 0; i < grad_out.size(); ++i) {
        int ch = static_cast<int>(i % c_);
        sum_gy[ch] += grad_out[i];
        sum_gy_xhat[ch] += static_cast<double>(grad_out[i]) * cached_xhat_[i];
    }
    for (int ch = 0; ch < c_; ++ch) {
        beta_.grad[ch] += static_cast<float>(sum_gy[ch]);
        gamma_.grad[ch] += static_cast<float>(sum_gy_xhat[ch]);
    }

    if (!cached_training_) {
        // Inference statistics are constants.
        for (size_t i = 0; i < grad_out.size(); ++i) {
            int ch = static_cast<int>(i % c_);
            dx[i] = grad_out[i] * gamma_.value[ch] * cached_inv_std_[ch];
        }
        return dx;
    }

    const double inv_m = 1.0 / static_cast<double>(m);
    for (size_t i = 0; i < grad_out.size(); ++i) {
        int ch = static_cast<int>(i % c_);
        double t = static_cast<double>(m) * grad_out[i] - sum_gy[ch] -
                   static_cast<double>(cached_xhat_[i]) * sum_gy_xhat[ch];
        dx[i] = static_cast<float>(gamma_.value[ch] * cached_inv_std_[ch] * inv_m * t);
    }
    return dx;
}

GroupNorm::GroupNorm(int groups, int channels, float eps)
    : groups_(groups), c_(channels), eps_(eps),
      gamma_("gamma", Tensor({channels}, 1.0f)),
      beta_("beta", Tensor({channels})) {
    if (groups < 1 || channels % groups != 0)
        throw ConfigError("groupnorm: " + std::to_string(channels) +
                          " channels not divisible by " + std::to_string(groups) + " groups");
}

void GroupNorm::collect_params(const std::string& prefix, std::vector<Param*>& out) {
    gamma_.name = prefix + "gamma";
    beta_.name = prefix + "beta";
    out.push_back(&gamma_);
    out.push_back(&beta_);
}

Tensor GroupNorm::forward(const Tensor& x, const FwdCtx& ctx) {
    check_channels(x, c_, "groupnorm");
    if (x.rank() != 4)
        throw ShapeError("groupnorm: expected rank-4 NHWC input, got " + x.shape_str());
    const int n_batch = x.dim(0);
    const int cpg = c_ / groups_;
    const size_t sample = x.size() / n_batch;
    const size_t m = sample / groups_; // H*W*cpg elements per group

    Tensor y(x.shape());
    Tensor xhat(x.shape());
    std::vector<float> inv_std(static_cast<size_t>(n_batch) * groups_);

    for (int n = 0; n < n_batch; ++n) {
        std::vector<double> sum(groups_, 0.0), sumsq(groups_, 0.0);
        const float* xs = x.data() + n * sample;
        for (size_t i = 0; i < sample; ++i) {
            int g = static_cast<int>((i % c_) / cpg);
            sum[g] += xs[i];
            sumsq[g] += static_cast<double>(xs[i]) * xs[i];
        }
        for (int g = 0; g < groups_; ++g) {
            double mu = sum[g] / static_cast<double>(m);
            double var = std::max(sumsq[g] / static_cast<double>(m) - mu * mu, 0.0);
            float is = static_cast<float>(1.0 / std::sqrt(var + eps_));
            inv_std[n * groups_ + g] = is;
            sum[g] = mu; // reuse as mean
        }
        float* ys = y.data() + n * sample;
        float* hs = xhat.data() + n * sample;
        for (size_t i = 0; i < sample; ++i) {
            int ch = static_cast<int>(i % c_);
            int g = ch / cpg;
            hs[i] = (xs[i] - static_cast<float>(sum[g])) * inv_std[n * groups_ + g];
            ys[i] = gamma_.value[ch] * hs[i] + beta_.value[ch];
        }
    }

    if (ctx.grad) {
        cached_xhat_ = std::move(xhat);
        cached_inv_std_ = std::move(inv_std);
    } else {
        cached_xhat_ = Tensor();
    }
    return y;
}

Tensor GroupNorm::backward(const Tensor& grad_out) {
    const int n_batch = grad_out.dim(0);
    const int cpg = c_ / groups_;
    const size_t sample = grad_out.size() / n_batch;
    const size_t m = sample / groups_;
    Tensor dx(grad_out.shape());

    for (int n = 0; n < n_batch; ++n) {
        const float* gs = grad_out.data() + n * sample;
        const float* hs = cached_xhat_.data() + n * sample;
        std::vector<double> sum_dxhat(groups_, 0.0), sum_dxhat_xhat(groups_, 0.0);
        for (size_t i = 0; i < sample; ++i) {
            int ch = static_cast<int>(i % c_);
            int g = ch / cpg;
            double dxhat = static_cast<double>(gs[i]) * gamma_.value[ch];
            sum_dxhat[g] += dxhat;
            sum_dxhat_xhat[g] += dxhat * hs[i];
            gamma_.grad[ch] += gs[i] * hs[i];
            beta_.grad[ch] += gs[i];
        }
        float* ds = dx.data() + n * sample;
        for (size_t i = 0; i < sample; ++i) {
            int ch = static_cast<int>(i % c_);
            int g = ch / cpg;
            double dxhat = static_cast<double>(gs[i]) * gamma_.value[ch];
            double t = static_cast<double>(m) * dxhat - sum_dxhat[g] -
                       static_cast<double>(hs[i]) * sum_dxhat_xhat[g];
            ds[i] = static_cast<float>(cached_inv_std_[n * groups_ + g] / static_cast<double>(m) * t);
        }
    }
    return dx;
}

} // namespace artemis::nn
