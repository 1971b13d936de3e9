#include "artemis/nn/attention.hpp"

#include <Eigen/Core>

#include <cmath>

namespace artemis::nn {

using MatMap = Eigen::Map<Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using CMatMap = Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

SelfAttention::SelfAttention(int channels, Rng& rng) : c_(channels), ck_(channels / 8) {
    if (channels < 8)
        throw ConfigError("self-attention requires >= 8 channels, got " + std::to_string(channels));
    float sq = std::sqrt(2.0f / (c_ + ck_));
    float sv = std::sqrt(2.0f / (c_ + c_));
    wq_ = Param("wq", Tensor::randn({c_, ck_}, rng, 0.0f, sq));
    wk_ = Param("wk", Tensor::randn({c_, ck_}, rng, 0.0f, sq));
    wv_ = Param("wv", Tensor::randn({c_, c_}, rng, 0.0f, sv));
    gamma_ = Param("gamma", Tensor({1}, 0.0f));
}

void SelfAttention::collect_params(const std::string& prefix, std::vector<Param*>& out) {
    wq_.name = prefix + "wq";
    wk_.name = prefix + "wk";
    wv_.name = prefix + "wv";
    gamma_.name = prefix + "gamma";
    out.push_back(&wq_);
    out.push_back(&wk_);
    out.push_back(&wv_);
    out.push_back(&gamma_);
}

Tensor SelfAttention::forward(const Tensor& x, const FwdCtx& ctx) {
    if (x.rank() != 4 || x.dim(3) != c_)
        throw ShapeError("self-attention: expected NHWC with " + std::to_string(c_) +
                         " channels, got " + x.shape_str());
    const int n_batch = x.dim(0);
    const Eigen::Index p = static_cast<Eigen::Index>(x.dim(1)) * x.dim(2);
    Tensor y = x;

    if (ctx.grad) {
        cached_x_ = x;
        cached_q_.assign(n_batch, Tensor());
        cached_k_.assign(n_batch, Tensor());
        cached_v_.assign(n_batch, Tensor());
        cached_attn_.assign(n_batch, Tensor());
        cached_o_.assign(n_batch, Tensor());
    }

    CMatMap wq(wq_.value.data(), c_, ck_);
    CMatMap wk(wk_.value.data(), c_, ck_);
    CMatMap wv(wv_.value.data(), c_, c_);
    const float g = gamma_.value[0];

#pragma omp parallel for schedule(static) if (n_batch > 1)
    for (int n = 0; n < n_batch; ++n) {
        CMatMap xm(x.data() + n * p * c_, p, c_);
        RowMat q = xm * wq;
        RowMat k = xm * wk;
        RowMat v = xm * wv;
        RowMat scores = q * k.transpose();
        // Row softmax, max-shifted.
        for (Eigen::Index r = 0; r < p; ++r) {
            float mx = scores.row(r).maxCoeff();
            double denom = 0.0;
            for (Eigen::Index j = 0; j < p; ++j) {
                float e = std::exp(scores(r, j) - mx);
                scores(r, j) = e;
                denom += e;
            }
            scores.row(r) /= static_cast<float>(denom);
        }
        RowMat o = scores * v;
        MatMap ym(y.data() + n * p * c_, p, c_);
        ym.noalias() += g * o;

        if (ctx.grad) {
            auto to_tensor = [](const RowMat& m) {
                Tensor t({static_cast<int>(m.rows()), static_cast<int>(m.cols())});
                std::copy(m.data(), m.data() + m.size(), t.data());
                return t;
            };
            cached_q_[n] = to_tensor(q);
            cached_k_[n] = to_tensor(k);
            cached_v_[n] = to_tensor(v);
            cached_attn_[n] = to_tensor(scores);
            cached_o_[n] = to_tensor(o);
        }
    }
    return y;
}

Tensor SelfAttention::backward(const Tensor& grad_out) {
    const int n_batch = grad_out.dim(0);
    const Eigen::Index p = static_cast<Eigen::Index>(grad_out.dim(1)) * grad_out.dim(2);
    Tensor dx = grad_out; // identity path

    CMatMap wq(wq_.value.data(), c_, ck_);
    CMatMap wk(wk_.value.data(), c_, ck_);
    CMatMap wv(wv_.value.data(), c_, c_);
    const float g = gamma_.value[0];

    std::vector<RowMat> dwq_acc(n_batch), dwk_acc(n_batch), dwv_acc(n_batch);
    std::vector<double> dgamma_acc(n_batch, 0.0);

#pragma omp parallel for schedule(static) if (n_batch > 1)
    for (int n = 0; n < n_batch; ++n) {
        CMatMap gy(grad_out.data() + n * p * c_, p, c_);
        CMatMap xm(cached_x_.data() + n * p * c_, p, c_);
        CMatMap q(cached_q_[n].data(), p, ck_);
        CMatMap k(cached_k_[n].data(), p, ck_);
        CMatMap v(cached_v_[n].data(), p, c_);
        CMatMap attn(cached_attn_[n].data(), p, p);
        CMatMap o(cached_o_[n].data(), p, c_);

        dgamma_acc[n] = gy.cwiseProduct(o).sum();

        RowMat do_ = g * gy;
        RowMat dattn = do_ * v.transpose();
        RowMat dv = attn.transpose() * do_;
        // Softmax backward per row: ds = a .* (dattn - rowsum(dattn .* a)).
        RowMat ds(p, p);
        for (Eigen::Index r = 0; r < p; ++r) {
            float dot = attn.row(r).dot(dattn.row(r));
            ds.row(r) = attn.row(r).cwiseProduct((dattn.row(r).array() - dot).matrix());
        }
        RowMat dq = ds * k;
        RowMat dk = ds.transpose() * q;

        dwq_acc[n] = xm.transpose() * dq;
        dwk_acc[n] = xm.transpose() * dk;
        dwv_acc[n] = xm.transpose() * dv;

        MatMap dxm(dx.data() + n * p * c_, p, c_);
        dxm.noalias() += dq * wq.transpose();
        dxm.noalias() += dk * wk.transpose();
        dxm.noalias() += dv * wv.transpose();
    }

    MatMap dwq(wq_.grad.data(), c_, ck_);
    MatMap dwk(wk_.grad.data(), c_, ck_);
    MatMap dwv(wv_.grad.data(), c_, c_);
    double dgamma = 0.0;
    for (int n = 0; n < n_batch; ++n) {
        dwq += dwq_acc[n];
        dwk += dwk_acc[n];
        dwv += dwv_acc[n];
        dgamma += dgamma_acc[n];
    }
    gamma_.grad[0] += static_cast<float>(dgamma);
    return dx;
}

} // namespace artemis::nn
