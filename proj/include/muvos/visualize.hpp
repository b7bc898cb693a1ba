#pragma once

#include <cstddef>

#include "muvos/tensor.hpp"

namespace muvos {

/// HSV colour coding of a 2 x H x W displacement field: hue = atan2(v, u) in
/// [0, 360), full saturation, value = |d| / max|d| (zero field renders black).
Tensor visualize_flow(const Tensor& disp);

/// Hue in degrees [0, 360) used for a displacement (u, v).
double flow_hue_degrees(double u, double v);

/// HSV (h in degrees, s and v in [0, 1]) to RGB in [0, 1].
void hsv_to_rgb(double h, double s, double v, double rgb[3]);

/// Linear blue (-1) to red (+1) heat ramp; the midpoint 0 maps to (0.5, 0, 0.5).
/// The result is bilinearly resized to out_h x out_w.
Tensor visualize_uncertainty(const Tensor& unc, std::size_t out_h, std::size_t out_w);

}  // namespace muvos
