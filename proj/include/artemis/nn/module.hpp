#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "artemis/tensor.hpp"

namespace artemis::nn {

struct Param {
    std::string name;
    Tensor value;
    Tensor grad;
    bool trainable = true;

    Param() = default;
    Param(std::string n, Tensor v)
        : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

    void zero_grad() { grad.fill(0.0f); }
};

// Per-forward context. `training` switches norm statistics and noise layers;
// `grad` makes layers cache what backward() needs. They are independent:
// the frozen VGG runs with grad=true, training=false during GAN updates.
struct FwdCtx {
    bool training = false;
    bool grad = false;
    Rng* rng = nullptr;
};

inline FwdCtx eval_ctx() { return {}; }
inline FwdCtx grad_ctx() { return {false, true, nullptr}; }
inline FwdCtx train_ctx(Rng& rng) { return {true, true, &rng}; }

using NamedTensor = std::pair<std::string, Tensor*>;

class Module {
public:
    virtual ~Module() = default;

    virtual Tensor forward(const Tensor& x, const FwdCtx& ctx) = 0;

    // Propagates grad_out to grad_in; accumulates into Param::grad.
    // Valid only directly after a forward() with ctx.grad set.
    virtual Tensor backward(const Tensor& grad_out) = 0;

    virtual void collect_params(const std::string& prefix, std::vector<Param*>& out) {
        (void)prefix;
        (void)out;
    }

    // Non-trainable persistent state (e.g. norm running stats).
    virtual void collect_buffers(const std::string& prefix, std::vector<NamedTensor>& out) {
        (void)prefix;
        (void)out;
    }

    std::vector<Param*> params(const std::string& prefix = "") {
        std::vector<Param*> out;
        collect_params(prefix, out);
        return out;
    }

    void freeze() {
        for (Param* p : params()) p->trainable = false;
    }

    void zero_grads() {
        for (Param* p : params()) p->zero_grad();
    }

    size_t param_count() {
        size_t n = 0;
        for (Param* p : params()) n += p->value.size();
        return n;
    }
};

class Sequential : public Module {
public:
    template <typename T, typename... Args>
    T* emplace(const std::string& name, Args&&... args) {
        auto layer = std::make_unique<T>(std::forward<Args>(args)...);
        T* raw = layer.get();
        names_.push_back(name);
        layers_.push_back(std::move(layer));
        return raw;
    }

    Tensor forward(const Tensor& x, const FwdCtx& ctx) override {
        Tensor h = x;
        for (auto& layer : layers_) h = layer->forward(h, ctx);
        return h;
    }

    Tensor backward(const Tensor& grad_out) override {
        Tensor g = grad_out;
        for (size_t i = layers_.size(); i > 0; --i) g = layers_[i - 1]->backward(g);
        return g;
    }

    void collect_params(const std::string& prefix, std::vector<Param*>& out) override {
        for (size_t i = 0; i < layers_.size(); ++i)
            layers_[i]->collect_params(prefix + names_[i] + ".", out);
    }

    void collect_buffers(const std::string& prefix, std::vector<NamedTensor>& out) override {
        for (size_t i = 0; i < layers_.size(); ++i)
            layers_[i]->collect_buffers(prefix + names_[i] + ".", out);
    }

    size_t layer_count() const { return layers_.size(); }
    Module* layer(size_t i) { return layers_[i].get(); }

private:
    std::vector<std::string> names_;
    std::vector<std::unique_ptr<Module>> layers_;
};

} // namespace artemis::nn
