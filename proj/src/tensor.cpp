#include "fedsched/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>

namespace fedsched {

size_t numel(const std::vector<size_t>& shape) {
    size_t n = 1;
    for (size_t d : shape) n *= d;
    return n;
}

std::string shape_str(const std::vector<size_t>& shape) {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << ")";
    return os.str();
}

Tensor::Tensor(std::vector<size_t> s, std::vector<double> values)
    : shape(std::move(s)), v(std::move(values)) {
    if (shape.empty()) throw std::invalid_argument("Tensor: empty shape");
    for (size_t d : shape) {
        if (d == 0) throw std::invalid_argument("Tensor: zero dimension in " + shape_str(shape));
    }
    if (numel(shape) != v.size()) {
        throw std::invalid_argument("Tensor: shape " + shape_str(shape) + " does not match " +
                                    std::to_string(v.size()) + " values");
    }
}

Tensor Tensor::zeros(std::vector<size_t> s) {
    Tensor t;
    t.shape = std::move(s);
    if (t.shape.empty()) throw std::invalid_argument("Tensor: empty shape");
    for (size_t d : t.shape) {
        if (d == 0) throw std::invalid_argument("Tensor: zero dimension in " + shape_str(t.shape));
    }
    t.v.assign(numel(t.shape), 0.0);
    return t;
}

bool Tensor::all_finite() const {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

bool bits_equal(const Tensor& a, const Tensor& b) {
    if (a.shape != b.shape) return false;
    if (a.v.empty()) return b.v.empty();
    return std::memcmp(a.v.data(), b.v.data(), a.v.size() * sizeof(double)) == 0;
}

}  // namespace fedsched
