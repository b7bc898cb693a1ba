#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "muvos/tensor.hpp"

namespace muvos {

/// Weights (C_out x C_in x k x k) and bias (C_out) of one 2-D convolution.
struct ConvParams {
    Tensor weights;
    Tensor bias;

    std::size_t out_channels() const { return weights.dim(0); }
    std::size_t in_channels() const { return weights.dim(1); }
    std::size_t kernel() const { return weights.dim(2); }

    static ConvParams zeros(std::size_t c_out, std::size_t c_in, std::size_t k);
    /// Uniform in +-1/sqrt(fan_in) for weights and bias.
    static ConvParams fan_in_uniform(std::size_t c_out, std::size_t c_in, std::size_t k,
                                     unsigned long long seed);
};

/// Zero-padded cross-correlation of a C_in x H x W input. Parallel over output rows.
Tensor conv2d(const Tensor& input, const Tensor& weights, const Tensor& bias, std::size_t stride,
              std::size_t pad);

/// conv2d with stride 1 and floor(k/2) padding (spatial size preserved).
Tensor conv2d_same(const Tensor& input, const ConvParams& p);

enum class Activation { sigmoid, relu };

Tensor pointwise(Activation kind, const Tensor& x);
double sigmoid(double x);
Tensor leaky_relu(const Tensor& x, double slope);

/// Softmax over the listed axes; each slice over the remaining axes sums to one.
Tensor softmax_over(const Tensor& x, const std::vector<std::size_t>& axes);

inline constexpr double kNormEps = 1e-8;

/// Divides every spatial position's channel vector by (its norm + eps).
Tensor l2_normalize_channels(const Tensor& f, double eps = kNormEps);

/// Half-pixel-centre (align_corners = false) bilinear resampling.
Tensor bilinear_resize(const Tensor& x, std::size_t out_h, std::size_t out_w);

/// Central-difference Jacobian, shape (out_size x in_size).
Tensor numeric_jacobian(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                        double eps = 1e-5);

}  // namespace muvos
