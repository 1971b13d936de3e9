#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "artemis/errors.hpp"
#include "artemis/rng.hpp"

namespace artemis {

// Dense float tensor, row-major, channels-last (N x H x W x C for rank 4).
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
        data_.assign(numel(shape_), 0.0f);
    }
    Tensor(std::vector<int> shape, float fill) : shape_(std::move(shape)) {
        data_.assign(numel(shape_), fill);
    }

    static size_t numel(const std::vector<int>& shape) {
        size_t n = 1;
        for (int d : shape) n *= static_cast<size_t>(d);
        return n;
    }

    static Tensor randn(std::vector<int> shape, Rng& rng, float mean = 0.0f, float stddev = 1.0f) {
        Tensor t(std::move(shape));
        rng.fill_normal(t.data(), t.size(), mean, stddev);
        return t;
    }

    const std::vector<int>& shape() const { return shape_; }
    int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    int rank() const { return static_cast<int>(shape_.size()); }
    size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    float& operator[](size_t i) { return data_[i]; }
    float operator[](size_t i) const { return data_[i]; }

    // NHWC addressing.
    float& at(int n, int h, int w, int c) {
        return data_[idx(n, h, w, c)];
    }
    float at(int n, int h, int w, int c) const {
        return data_[idx(n, h, w, c)];
    }
    size_t idx(int n, int h, int w, int c) const {
        return ((static_cast<size_t>(n) * shape_[1] + h) * shape_[2] + w) * shape_[3] + c;
    }

    Tensor reshaped(std::vector<int> new_shape) const {
        if (numel(new_shape) != size())
            throw ShapeError("reshape: element count mismatch " + shape_str(shape_) +
                             " -> " + shape_str(new_shape));
        Tensor t = *this;
        t.shape_ = std::move(new_shape);
        return t;
    }

    // One sample of a batch tensor (leading dim dropped).
    Tensor slice_sample(int n) const;

    void fill(float v) { data_.assign(data_.size(), v); }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    Tensor& operator+=(const Tensor& o);
    Tensor& operator-=(const Tensor& o);
    Tensor& operator*=(float s);

    double sum() const;
    double sum_squares() const;
    double frobenius_norm() const;
    float max_abs() const;
    bool all_finite() const;

    std::string shape_str() const { return shape_str(shape_); }
    static std::string shape_str(const std::vector<int>& s);

private:
    std::vector<int> shape_;
    std::vector<float> data_;
};

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(what) + ": shape mismatch " + a.shape_str() +
                         " vs " + b.shape_str());
}

} // namespace artemis
