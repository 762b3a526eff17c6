#include "dronedet/tensor.hpp"

#include <sstream>

namespace dronedet {

int64_t numel_of(const std::vector<int>& shape) {
    int64_t n = 1;
    for (int d : shape) {
        check(d >= 0, "negative tensor dimension");
        n *= d;
    }
    return n;
}

std::string shape_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << "]";
    return os.str();
}

Tensor Tensor::zeros(std::vector<int> shape) {
    const auto n = numel_of(shape);
    return Tensor(std::move(shape), std::vector<double>(static_cast<size_t>(n), 0.0));
}

Tensor Tensor::full(std::vector<int> shape, double value) {
    const auto n = numel_of(shape);
    return Tensor(std::move(shape), std::vector<double>(static_cast<size_t>(n), value));
}

int Tensor::dim(int i) const {
    check(i >= 0 && i < ndim(), "tensor dim index out of range");
    return shape[static_cast<size_t>(i)];
}

void axpy(Tensor& dst, const Tensor& src, double alpha) {
    check(dst.v.size() == src.v.size(), "axpy: size mismatch");
    const size_t n = dst.v.size();
    for (size_t i = 0; i < n; ++i) dst.v[i] += alpha * src.v[i];
}

} // namespace dronedet
