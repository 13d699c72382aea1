#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <utility>
#include <vector>

#include "cgc/error.hpp"

namespace cgc {

// Rank-N row-major float64 array. The universal numeric carrier for images,
// feature maps, weights and gradients.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0)
        : shape_(std::move(shape)), data_(count(shape_), fill) {}

    Tensor(std::vector<std::size_t> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (count(shape_) != data_.size())
            throw ShapeMismatch("tensor data length does not match shape");
    }

    static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t numel() const { return data_.size(); }
    std::size_t dim(std::size_t i) const { return shape_[i]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    template <typename... Ix>
    double& operator()(Ix... ix) {
        return data_[offset(ix...)];
    }
    template <typename... Ix>
    double operator()(Ix... ix) const {
        return data_[offset(ix...)];
    }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    void fill(double v) { data_.assign(data_.size(), v); }

    // Metadata-only reshape; element count must be preserved.
    Tensor reshaped(std::vector<std::size_t> shape) const {
        if (count(shape) != data_.size())
            throw ShapeMismatch("reshape changes element count");
        Tensor t;
        t.shape_ = std::move(shape);
        t.data_ = data_;
        return t;
    }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

private:
    static std::size_t count(const std::vector<std::size_t>& shape) {
        std::size_t n = 1;
        for (std::size_t d : shape) n *= d;
        return shape.empty() ? 0 : n;
    }

    template <typename... Ix>
    std::size_t offset(Ix... ix) const {
        assert(sizeof...(ix) == shape_.size());
        std::size_t idx[] = {static_cast<std::size_t>(ix)...};
        std::size_t off = 0;
        for (std::size_t k = 0; k < sizeof...(ix); ++k) {
            assert(idx[k] < shape_[k]);
            off = off * shape_[k] + idx[k];
        }
        return off;
    }

    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

}  // namespace cgc
