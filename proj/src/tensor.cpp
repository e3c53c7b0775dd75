#include "cgpnas/tensor.hpp"

#include <functional>
#include <numeric>
#include <stdexcept>

namespace cgpnas {

namespace {

std::size_t element_count(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

} // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), values_(element_count(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
    if (values_.size() != element_count(shape_)) {
        throw std::invalid_argument("tensor of shape " + shape_string(shape_) + " given " +
                                    std::to_string(values_.size()) + " values");
    }
}

std::string shape_string(const std::vector<std::size_t>& shape) {
    std::string out = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(shape[i]);
    }
    return out + ")";
}

} // namespace cgpnas
