#pragma once

#include <cstddef>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace thermoscope {

// Fixed 64-byte alignment. Eigen peels vectorised reductions differently
// depending on where a buffer starts, so heap-address luck would otherwise
// leak into the last bits of sums and break bitwise reproducibility.
template <class T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t kAlign{64};
    AlignedAllocator() = default;
    template <class U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept {}
    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }
    template <class U>
    friend bool operator==(const AlignedAllocator&, const AlignedAllocator<U>&) noexcept {
        return true;
    }
};

// Dense row-major array of doubles. Images and feature maps are rank-3
// (channels, height, width); convolution weights are rank-4.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape, double fill = 0.0);
    Tensor(std::vector<int> shape, std::vector<double> values);

    static Tensor chw(int channels, int height, int width, double fill = 0.0) {
        return Tensor({channels, height, width}, fill);
    }
    static Tensor scalar(double v) { return Tensor({1}, v); }

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    int channels() const { return shape_.at(0); }
    int height() const { return shape_.at(1); }
    int width() const { return shape_.at(2); }
    std::size_t plane() const { return static_cast<std::size_t>(height()) * width(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& at(int c, int h, int w) {
        return data_[(static_cast<std::size_t>(c) * shape_[1] + h) * shape_[2] + w];
    }
    double at(int c, int h, int w) const {
        return data_[(static_cast<std::size_t>(c) * shape_[1] + h) * shape_[2] + w];
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    void fill(double v);
    Tensor reshaped(std::vector<int> shape) const;
    bool all_finite() const;
    double sum() const;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    std::vector<int> shape_;
    std::vector<double, AlignedAllocator<double>> data_;
};

std::string shape_string(const std::vector<int>& shape);
std::size_t shape_size(const std::vector<int>& shape);

// Elementwise helpers used outside the autodiff graph.
void add_into(Tensor& dst, const Tensor& src, double scale = 1.0);
Tensor scaled(const Tensor& t, double s);

}  // namespace thermoscope
