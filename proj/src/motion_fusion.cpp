#include "muvos/motion_fusion.hpp"

#include <string>

#include "muvos/errors.hpp"

namespace muvos {

std::array<LayerSpec, kMotionNetLayers> motion_net_layout(std::size_t d_out) {
    return {{
        {3, 3, 7, 1},
        {3, 16, 1, 1},
        {16, 16, 3, 1},
        {16, 32, 1, 1},
        {32, 32, 3, 1},
        {32, 32, 1, 1},
        {32, 64, 3, 1},
        {64, d_out, 1, 1},
    }};
}

MsamParams MsamParams::zeros(std::size_t d) { return {ConvParams::zeros(1, d, 1)}; }

MotionNetParams motion_net_init(std::size_t d_out, unsigned long long seed) {
    if (d_out == 0) throw ValidationError("motion_net_init: d_out must be at least 1");
    const auto layout = motion_net_layout(d_out);
    MotionNetParams p;
    for (std::size_t i = 0; i < kMotionNetLayers; ++i) {
        const LayerSpec& s = layout[i];
        // Per-layer stream so that changing d_out leaves earlier layers untouched.
        p.layers[i] = ConvParams::fan_in_uniform(s.c_out, s.c_in, s.kernel, seed * 1000003ULL + i);
    }
    return p;
}

Tensor motion_net_forward(const MotionNetParams& p, const Tensor& motion_input) {
    if (motion_input.rank() != 3 || motion_input.dim(0) != 3) {
        throw ShapeError("motion_net_forward: expected 3 x H' x W' input, got " + shape_str(motion_input.shape()));
    }
    Tensor x = motion_input;
    for (std::size_t i = 0; i < kMotionNetLayers; ++i) {
        x = conv2d_same(x, p.layers[i]);
        if (i + 1 < kMotionNetLayers) x = leaky_relu(x, kMotionNetLeakySlope);
    }
    return x;
}

static void check_attention_params(const Tensor& f_m, const MsamParams& p) {
    if (f_m.rank() != 3) throw ShapeError("attention_map: expected D x H' x W', got " + shape_str(f_m.shape()));
    if (p.conv.kernel() != 1 || p.conv.out_channels() != 1 || p.conv.in_channels() != f_m.dim(0)) {
        throw ShapeError("attention_map: parameters " + shape_str(p.conv.weights.shape()) +
                         " are not a 1x1 conv from " + std::to_string(f_m.dim(0)) + " channels to 1");
    }
}

Tensor attention_map(const Tensor& f_m, const MsamParams& p) {
    check_attention_params(f_m, p);
    return pointwise(Activation::sigmoid, conv2d(f_m, p.conv.weights, p.conv.bias, 1, 0));
}

Tensor msam_fuse(const Tensor& f_s, const Tensor& f_m, const MsamParams& p) {
    if (f_s.rank() != 3 || f_m.rank() != 3 || f_s.dim(1) != f_m.dim(1) || f_s.dim(2) != f_m.dim(2)) {
        throw ShapeError("msam_fuse: spatial mismatch " + shape_str(f_s.shape()) + " vs " + shape_str(f_m.shape()));
    }
    const Tensor att = attention_map(f_m, p);
    const std::size_t plane = f_s.dim(1) * f_s.dim(2);
    Tensor out(f_s.shape());
    for (std::size_t c = 0; c < f_s.dim(0); ++c) {
        for (std::size_t i = 0; i < plane; ++i) {
            const double s = f_s[c * plane + i];
            out[c * plane + i] = s * att[i] + s;
        }
    }
    return out;
}

Tensor additive_fuse(const Tensor& f_s, const Tensor& f_m) {
    if (f_s.shape() != f_m.shape()) {
        throw ShapeError("additive_fuse: shape mismatch " + shape_str(f_s.shape()) + " vs " + shape_str(f_m.shape()));
    }
    return f_s + f_m;
}

}  // namespace muvos
