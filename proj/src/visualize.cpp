#include "muvos/visualize.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "muvos/errors.hpp"
#include "muvos/ops.hpp"

namespace muvos {

double flow_hue_degrees(double u, double v) {
    double deg = std::atan2(v, u) * 180.0 / std::numbers::pi;
    if (deg < 0.0) deg += 360.0;
    if (deg >= 360.0) deg -= 360.0;
    return deg;
}

void hsv_to_rgb(double h, double s, double v, double rgb[3]) {
    const double c = v * s;
    const double hp = h / 60.0;
    const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
    double r = 0, g = 0, b = 0;
    switch (static_cast<int>(hp) % 6) {
        case 0: r = c, g = x; break;
        case 1: r = x, g = c; break;
        case 2: g = c, b = x; break;
        case 3: g = x, b = c; break;
        case 4: r = x, b = c; break;
        default: r = c, b = x; break;
    }
    const double m = v - c;
    rgb[0] = r + m;
    rgb[1] = g + m;
    rgb[2] = b + m;
}

Tensor visualize_flow(const Tensor& disp) {
    if (disp.rank() != 3 || disp.dim(0) != 2) {
        throw ShapeError("visualize_flow: expected 2 x H x W, got " + shape_str(disp.shape()));
    }
    const std::size_t h = disp.dim(1), w = disp.dim(2);
    double max_mag = 0.0;
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) max_mag = std::max(max_mag, std::hypot(disp.at(0, y, x), disp.at(1, y, x)));
    const double denom = std::max(max_mag, 1e-12);

    Tensor out({3, h, w});
    double rgb[3];
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const double u = disp.at(0, y, x), v = disp.at(1, y, x);
            hsv_to_rgb(flow_hue_degrees(u, v), 1.0, std::hypot(u, v) / denom, rgb);
            for (std::size_t c = 0; c < 3; ++c) out.at(c, y, x) = rgb[c];
        }
    }
    return out;
}

Tensor visualize_uncertainty(const Tensor& unc, std::size_t out_h, std::size_t out_w) {
    if (unc.rank() != 3 || unc.dim(0) != 1) {
        throw ShapeError("visualize_uncertainty: expected 1 x H x W, got " + shape_str(unc.shape()));
    }
    const std::size_t h = unc.dim(1), w = unc.dim(2);
    Tensor heat({3, h, w});
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const double t = (std::clamp(unc.at(0, y, x), -1.0, 1.0) + 1.0) / 2.0;
            heat.at(0, y, x) = t;
            heat.at(1, y, x) = 0.0;
            heat.at(2, y, x) = 1.0 - t;
        }
    }
    return bilinear_resize(heat, out_h, out_w);
}

}  // namespace muvos
