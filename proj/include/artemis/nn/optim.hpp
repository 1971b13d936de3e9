#pragma once

#include "artemis/nn/module.hpp"

namespace artemis::nn {

struct AdamCfg {
    float lr = 2e-4f;
    float beta1 = 0.5f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
};

class Adam {
public:
    Adam(std::vector<Param*> params, AdamCfg cfg = {});

    void step();
    void zero_grad();

    int64_t step_count() const { return t_; }
    void set_step_count(int64_t t) { t_ = t; }

    // Moment tensors for checkpointing, named after their parameter.
    void collect_state(const std::string& prefix, std::vector<NamedTensor>& out);

private:
    std::vector<Param*> params_;
    std::vector<Tensor> m_, v_;
    AdamCfg cfg_;
    int64_t t_ = 0;
};

} // namespace artemis::nn
