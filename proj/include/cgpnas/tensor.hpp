#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace cgpnas {

/// Dense row-major double tensor. Rank 3 is (batch, length, dim); pooled
/// activations are rank 2 and losses rank 1 of size one.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
    Tensor(std::vector<std::size_t> shape, std::vector<double> values);

    static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape_); }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_[axis]; }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    /// Size of the innermost axis.
    std::size_t last_dim() const { return shape_.empty() ? 1 : shape_.back(); }
    /// Number of innermost rows (size / last_dim).
    std::size_t rows() const { return last_dim() == 0 ? 0 : size() / last_dim(); }

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }
    std::span<double> row(std::size_t r) { return {values_.data() + r * last_dim(), last_dim()}; }
    std::span<const double> row(std::size_t r) const {
        return {values_.data() + r * last_dim(), last_dim()};
    }

    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    bool operator==(const Tensor&) const = default;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> values_;
};

std::string shape_string(const std::vector<std::size_t>& shape);

} // namespace cgpnas
