#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dronedet/common.hpp"

namespace dronedet {

// Dense row-major double tensor. All model math runs in double so finite
// difference gradient checks are meaningful; checkpoints quantize to f32.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> v;

    Tensor() = default;
    Tensor(std::vector<int> s, std::vector<double> data) : shape(std::move(s)), v(std::move(data)) {}

    static Tensor zeros(std::vector<int> shape);
    static Tensor full(std::vector<int> shape, double value);

    int64_t numel() const { return static_cast<int64_t>(v.size()); }
    int ndim() const { return static_cast<int>(shape.size()); }
    int dim(int i) const;
    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    double& operator[](int64_t i) { return v[static_cast<size_t>(i)]; }
    double operator[](int64_t i) const { return v[static_cast<size_t>(i)]; }
};

int64_t numel_of(const std::vector<int>& shape);
std::string shape_str(const std::vector<int>& shape);

// dst += alpha * src (shapes must match)
void axpy(Tensor& dst, const Tensor& src, double alpha = 1.0);

} // namespace dronedet
