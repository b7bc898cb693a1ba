#include "muvos/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "muvos/errors.hpp"

namespace muvos {

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

std::size_t element_count(const Shape& shape) {
    std::size_t n = 1;
    for (auto e : shape) n *= e;
    return n;
}

static void check_extents(const Shape& shape) {
    if (shape.empty()) throw ShapeError("tensor shape must have at least one axis");
    for (auto e : shape) {
        if (e == 0) throw ShapeError("tensor extents must be positive, got " + shape_str(shape));
    }
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
    check_extents(shape_);
    data_.assign(element_count(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    check_extents(shape_);
    if (data_.size() != element_count(shape_)) {
        throw ShapeError("data length " + std::to_string(data_.size()) + " does not match shape " +
                         shape_str(shape_));
    }
}

Tensor Tensor::reshaped(Shape shape) const {
    if (element_count(shape) != size()) {
        throw ShapeError("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
    }
    return Tensor(std::move(shape), data_);
}

Tensor Tensor::channels(std::size_t begin, std::size_t end) const {
    if (rank() != 3 || begin >= end || end > shape_[0]) {
        throw ShapeError("channel slice [" + std::to_string(begin) + "," + std::to_string(end) +
                         ") invalid for " + shape_str(shape_));
    }
    const std::size_t plane = shape_[1] * shape_[2];
    std::vector<double> out(data_.begin() + static_cast<std::ptrdiff_t>(begin * plane),
                            data_.begin() + static_cast<std::ptrdiff_t>(end * plane));
    return Tensor({end - begin, shape_[1], shape_[2]}, std::move(out));
}

bool Tensor::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor concat_channels(std::initializer_list<const Tensor*> parts) {
    if (parts.size() == 0) throw ShapeError("concat_channels needs at least one tensor");
    const Tensor& first = **parts.begin();
    if (first.rank() != 3) throw ShapeError("concat_channels expects rank-3 tensors");
    std::size_t channels = 0;
    for (const Tensor* p : parts) {
        if (p->rank() != 3 || p->dim(1) != first.dim(1) || p->dim(2) != first.dim(2)) {
            throw ShapeError("concat_channels spatial mismatch: " + shape_str(first.shape()) + " vs " +
                             shape_str(p->shape()));
        }
        channels += p->dim(0);
    }
    std::vector<double> out;
    out.reserve(channels * first.dim(1) * first.dim(2));
    for (const Tensor* p : parts) out.insert(out.end(), p->values().begin(), p->values().end());
    return Tensor({channels, first.dim(1), first.dim(2)}, std::move(out));
}

static void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
    }
}

Tensor operator+(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "operator+");
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

Tensor operator-(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "operator-");
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

Tensor operator*(double s, const Tensor& a) {
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = s * a[i];
    return out;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace muvos
