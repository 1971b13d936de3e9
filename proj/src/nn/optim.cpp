#include "artemis/nn/optim.hpp"

#include <cmath>

namespace artemis::nn {

Adam::Adam(std::vector<Param*> params, AdamCfg cfg) : params_(std::move(params)), cfg_(cfg) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (Param* p : params_) {
        m_.emplace_back(p->value.shape());
        v_.emplace_back(p->value.shape());
    }
}

void Adam::step() {
    ++t_;
    const float bc1 = 1.0f - std::pow(cfg_.beta1, static_cast<float>(t_));
    const float bc2 = 1.0f - std::pow(cfg_.beta2, static_cast<float>(t_));
    for (size_t i = 0; i < params_.size(); ++i) {
        Param* p = params_[i];
        if (!p->trainable) continue;
        float* w = p->value.data();
        const float* g = p->grad.data();
        float* m = m_[i].data();
        float* v = v_[i].data();
        for (size_t j = 0; j < p->value.size(); ++j) {
            m[j] = cfg_.beta1 * m[j] + (1.0f - cfg_.beta1) * g[j];
            v[j] = cfg_.beta2 * v[j] + (1.0f - cfg_.beta2) * g[j] * g[j];
            float mhat = m[j] / bc1;
            float vhat = v[j] / bc2;
            w[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

void Adam::zero_grad() {
    for (Param* p : params_) p->zero_grad();
}

void Adam::collect_state(const std::string& prefix, std::vector<NamedTensor>& out) {
    for (size_t i = 0; i < params_.size(); ++i) {
        out.emplace_back(prefix + params_[i]->name + ".m", &m_[i]);
        out.emplace_back(prefix + params_[i]->name + ".v", &v_[i]);
    }
}

} // namespace artemis::nn
