#pragma once

#include <array>
#include <cstddef>

#include "muvos/ops.hpp"
#include "muvos/tensor.hpp"

namespace muvos {

/// One row of the lightweight motion network layout.
struct LayerSpec {
    std::size_t c_in, c_out, kernel, stride;
};

inline constexpr std::size_t kMotionNetLayers = 8;
inline constexpr std::size_t kFullMotionDim = 1024;
inline constexpr double kMotionNetLeakySlope = 0.1;

/// Layer chain 3->3->16->16->32->32->32->64->d_out with kernels 7,1,3,1,3,1,3,1, stride 1.
std::array<LayerSpec, kMotionNetLayers> motion_net_layout(std::size_t d_out);

struct MotionNetParams {
    std::array<ConvParams, kMotionNetLayers> layers;

    std::size_t out_dim() const { return layers.back().out_channels(); }
};

/// Single 1x1 convolution D -> 1 producing the attention logit.
struct MsamParams {
    ConvParams conv;

    /// All-zero parameters give a neutral 0.5 attention map.
    static MsamParams zeros(std::size_t d);
};

MotionNetParams motion_net_init(std::size_t d_out, unsigned long long seed);

/// Eight same-padded convolutions, leaky ReLU between layers 1-7, linear output.
Tensor motion_net_forward(const MotionNetParams& p, const Tensor& motion_input);

/// sigmoid(conv1x1(f_m)), shape 1 x H' x W'.
Tensor attention_map(const Tensor& f_m, const MsamParams& p);

/// f_s * attention + f_s with the single-channel attention broadcast over channels.
Tensor msam_fuse(const Tensor& f_s, const Tensor& f_m, const MsamParams& p);

/// Plain element-wise sum, the additive fusion baseline.
Tensor additive_fuse(const Tensor& f_s, const Tensor& f_m);

}  // namespace muvos
