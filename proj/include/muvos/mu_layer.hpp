#pragma once

#include <cstddef>

#include "muvos/ops.hpp"
#include "muvos/tensor.hpp"

namespace muvos {

/// Search window extents. `u` spans horizontal offsets, `v` vertical; both odd.
struct Window {
    std::size_t u = 25;
    std::size_t v = 25;

    std::size_t radius_u() const { return u / 2; }
    std::size_t radius_v() const { return v / 2; }
};

/// Cosine similarity between each query position x and each candidate x + (du, dv)
/// in the previous frame. values is indexed [iu][iv][y][x] with du = iu - U/2,
/// dv = iv - V/2. Candidates outside the image hold kOutOfBounds.
struct CostVolume {
    Window window;
    Tensor values;

    static constexpr double kOutOfBounds = -1.0;

    std::size_t height() const { return values.dim(2); }
    std::size_t width() const { return values.dim(3); }
};

/// Displacement (2 x H' x W', channel 0 horizontal), uncertainty (1 x H' x W') and
/// the assembled 3-channel motion-net input.
struct MotionBundle {
    Tensor displacement;
    Tensor uncertainty;
    Tensor motion_input;
};

/// Softmax sharpness applied to cosine scores before the soft-argmin.
inline constexpr double kDefaultSoftArgminBeta = 50.0;

/// 1x1 convolution reducing D channels to D/4.
Tensor project_features(const Tensor& f, const ConvParams& proj);

/// Parallel over spatial rows; each position's U*V*d block is independent.
CostVolume build_cost_volume(const Tensor& f_t, const Tensor& f_prev, Window window);

/// Expected offset under softmax(sign * beta * C) per position.
Tensor soft_argmin_displacement(const CostVolume& c, int sign = +1, double beta = kDefaultSoftArgminBeta);

/// d(upstream . displacement)/dC, same layout as c.values.
Tensor soft_argmin_grad(const CostVolume& c, int sign, const Tensor& upstream,
                        double beta = kDefaultSoftArgminBeta);

/// Highest similarity over the window at each position (high = confident match).
Tensor uncertainty_map(const CostVolume& c);

/// [du / radius_u, dv / radius_v, uncertainty]; a radius of zero leaves the channel at zero.
Tensor assemble_motion_input(const Tensor& disp, const Tensor& unc, Window window);

/// Cost volume, displacement, uncertainty and motion input in one pass.
MotionBundle compute_motion(const Tensor& f_t, const Tensor& f_prev, Window window, int sign = +1,
                            double beta = kDefaultSoftArgminBeta);

}  // namespace muvos
