#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace fedsched {

// Dense double-precision tensor: a shape plus a flat row-major value array.
struct Tensor {
    std::vector<size_t> shape;
    std::vector<double> v;

    Tensor() = default;
    Tensor(std::vector<size_t> s, std::vector<double> values);

    static Tensor zeros(std::vector<size_t> s);

    size_t size() const { return v.size(); }
    double* data() { return v.data(); }
    const double* data() const { return v.data(); }
    double& operator[](size_t i) { return v[i]; }
    double operator[](size_t i) const { return v[i]; }

    size_t dim(size_t i) const { return shape[i]; }
    bool same_shape(const Tensor& o) const { return shape == o.shape; }
    bool all_finite() const;
};

size_t numel(const std::vector<size_t>& shape);
std::string shape_str(const std::vector<size_t>& shape);

// exact comparison, bit for bit
bool bits_equal(const Tensor& a, const Tensor& b);

}  // namespace fedsched
