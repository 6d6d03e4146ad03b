#include "thermoscope/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "thermoscope/error.hpp"

namespace thermoscope {

std::size_t shape_size(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d < 0) throw DimensionError("negative dimension in shape " + shape_string(shape));
        n *= static_cast<std::size_t>(d);
    }
    return shape.empty() ? 0 : n;
}

std::string shape_string(const std::vector<int>& shape) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
    os << ')';
    return os.str();
}

Tensor::Tensor(std::vector<int> shape, double fill)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(values.begin(), values.end()) {
    if (data_.size() != shape_size(shape_)) {
        throw DimensionError("tensor of shape " + shape_string(shape_) + " given " +
                             std::to_string(data_.size()) + " values");
    }
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor Tensor::reshaped(std::vector<int> shape) const {
    if (shape_size(shape) != data_.size()) {
        throw DimensionError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    }
    Tensor out = *this;
    out.shape_ = std::move(shape);
    return out;
}

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

double Tensor::sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

void add_into(Tensor& dst, const Tensor& src, double scale) {
    if (!dst.same_shape(src)) {
        throw DimensionError("add: " + shape_string(dst.shape()) + " vs " + shape_string(src.shape()));
    }
    double* d = dst.data();
    const double* s = src.data();
    for (std::size_t i = 0; i < dst.size(); ++i) d[i] += scale * s[i];
}

Tensor scaled(const Tensor& t, double s) {
    Tensor out = t;
    for (double& v : out.values()) v *= s;
    return out;
}

}  // namespace thermoscope
