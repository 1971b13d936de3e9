#include "artemis/tensor.hpp"

#include <cmath>
#include <sstream>

namespace artemis {

Tensor Tensor::slice_sample(int n) const {
    std::vector<int> sub(shape_.begin() + 1, shape_.end());
    Tensor out(sub);
    size_t stride = out.size();
    const float* src = data_.data() + static_cast<size_t>(n) * stride;
    std::copy(src, src + stride, out.data());
    return out;
}

Tensor& Tensor::operator+=(const Tensor& o) {
    check_same_shape(*this, o, "tensor +=");
    for (size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
}

Tensor& Tensor::operator-=(const Tensor& o) {
    check_same_shape(*this, o, "tensor -=");
    for (size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
}

Tensor& Tensor::operator*=(float s) {
    for (float& v : data_) v *= s;
    return *this;
}

double Tensor::sum() const {
    double acc = 0.0;
    for (float v : data_) acc += v;
    return acc;
}

double Tensor::sum_squares() const {
    double acc = 0.0;
    for (float v : data_) acc += static_cast<double>(v) * v;
    return acc;
}

double Tensor::frobenius_norm() const {
    return std::sqrt(sum_squares());
}

float Tensor::max_abs() const {
    float m = 0.0f;
    for (float v : data_) m = std::max(m, std::fabs(v));
    return m;
}

bool Tensor::all_finite() const {
    for (float v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string Tensor::shape_str(const std::vector<int>& s) {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) os << "x";
        os << s[i];
    }
    os << ")";
    return os.str();
}

} // namespace artemis
