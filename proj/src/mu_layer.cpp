#include "muvos/mu_layer.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "muvos/errors.hpp"

namespace muvos {

Tensor project_features(const Tensor& f, const ConvParams& proj) {
    if (f.rank() != 3) throw ShapeError("project_features: expected D x H x W, got " + shape_str(f.shape()));
    const std::size_t d = f.dim(0);
    if (d % 4 != 0) throw ShapeError("project_features: D = " + std::to_string(d) + " is not divisible by 4");
    if (proj.kernel() != 1 || proj.out_channels() != d / 4 || proj.in_channels() != d) {
        throw ShapeError("project_features: projection " + shape_str(proj.weights.shape()) + " is not a 1x1 " +
                         std::to_string(d) + "->" + std::to_string(d / 4) + " convolution");
    }
    return conv2d(f, proj.weights, proj.bias, 1, 0);
}

static void check_window(Window w) {
    if (w.u == 0 || w.v == 0 || w.u % 2 == 0 || w.v % 2 == 0) {
        throw ValidationError("search window must have odd positive extents, got " + std::to_string(w.u) + "x" +
                              std::to_string(w.v));
    }
}

CostVolume build_cost_volume(const Tensor& f_t, const Tensor& f_prev, Window window) {
    check_window(window);
    if (f_t.rank() != 3 || f_t.shape() != f_prev.shape()) {
        throw ShapeError("build_cost_volume: feature shapes differ: " + shape_str(f_t.shape()) + " vs " +
                         shape_str(f_prev.shape()));
    }
    const std::size_t d = f_t.dim(0), h = f_t.dim(1), w = f_t.dim(2);
    const Tensor a = l2_normalize_channels(f_t);
    const Tensor b = l2_normalize_channels(f_prev);
    const auto ru = static_cast<std::ptrdiff_t>(window.radius_u());
    const auto rv = static_cast<std::ptrdiff_t>(window.radius_v());
    const auto ih = static_cast<std::ptrdiff_t>(h), iw = static_cast<std::ptrdiff_t>(w);

    CostVolume cv{window, Tensor({window.u, window.v, h, w}, CostVolume::kOutOfBounds)};
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t y = 0; y < ih; ++y) {
        std::vector<double> query(d);
        for (std::ptrdiff_t x = 0; x < iw; ++x) {
            for (std::size_t c = 0; c < d; ++c)
                query[c] = a.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(x));
            for (std::ptrdiff_t du = -ru; du <= ru; ++du) {
                const std::ptrdiff_t tx = x + du;
                if (tx < 0 || tx >= iw) continue;
                for (std::ptrdiff_t dv = -rv; dv <= rv; ++dv) {
                    const std::ptrdiff_t ty = y + dv;
                    if (ty < 0 || ty >= ih) continue;
                    double dot = 0.0;
                    for (std::size_t c = 0; c < d; ++c)
                        dot += query[c] * b.at(c, static_cast<std::size_t>(ty), static_cast<std::size_t>(tx));
                    cv.values.at(static_cast<std::size_t>(du + ru), static_cast<std::size_t>(dv + rv),
                                 static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = dot;
                }
            }
        }
    }
    return cv;
}

namespace {

// Softmax probabilities over the window at one position, written into `p`.
void window_softmax(const CostVolume& c, std::size_t y, std::size_t x, double scale, std::vector<double>& p) {
    const std::size_t nu = c.window.u, nv = c.window.v;
    double mx = -INFINITY;
    for (std::size_t iu = 0; iu < nu; ++iu)
        for (std::size_t iv = 0; iv < nv; ++iv) mx = std::max(mx, scale * c.values.at(iu, iv, y, x));
    double sum = 0.0;
    for (std::size_t iu = 0; iu < nu; ++iu) {
        for (std::size_t iv = 0; iv < nv; ++iv) {
            const double e = std::exp(scale * c.values.at(iu, iv, y, x) - mx);
            p[iu * nv + iv] = e;
            sum += e;
        }
    }
    for (auto& v : p) v /= sum;
}

void check_sign(int sign) {
    if (sign != 1 && sign != -1) throw ValidationError("soft-argmin sign must be +1 or -1");
}

}  // namespace

Tensor soft_argmin_displacement(const CostVolume& c, int sign, double beta) {
    check_sign(sign);
    const std::size_t h = c.height(), w = c.width(), nv = c.window.v;
    const double ru = static_cast<double>(c.window.radius_u());
    const double rv = static_cast<double>(c.window.radius_v());
    const double scale = sign * beta;
    Tensor disp({2, h, w});
    const auto rows = static_cast<std::ptrdiff_t>(h);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t yy = 0; yy < rows; ++yy) {
        const auto y = static_cast<std::size_t>(yy);
        std::vector<double> p(c.window.u * nv);
        for (std::size_t x = 0; x < w; ++x) {
            window_softmax(c, y, x, scale, p);
            double eu = 0.0, ev = 0.0;
            for (std::size_t iu = 0; iu < c.window.u; ++iu) {
                for (std::size_t iv = 0; iv < nv; ++iv) {
                    eu += p[iu * nv + iv] * (static_cast<double>(iu) - ru);
                    ev += p[iu * nv + iv] * (static_cast<double>(iv) - rv);
                }
            }
            disp.at(0, y, x) = eu;
            disp.at(1, y, x) = ev;
        }
    }
    return disp;
}

Tensor soft_argmin_grad(const CostVolume& c, int sign, const Tensor& upstream, double beta) {
    check_sign(sign);
    const std::size_t h = c.height(), w = c.width(), nv = c.window.v;
    if (upstream.shape() != Shape{2, h, w}) {
        throw ShapeError("soft_argmin_grad: upstream must be 2x" + std::to_string(h) + "x" + std::to_string(w) +
                         ", got " + shape_str(upstream.shape()));
    }
    const double ru = static_cast<double>(c.window.radius_u());
    const double rv = static_cast<double>(c.window.radius_v());
    const double scale = sign * beta;
    Tensor grad(c.values.shape());
    std::vector<double> p(c.window.u * nv);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            window_softmax(c, y, x, scale, p);
            double eu = 0.0, ev = 0.0;
            for (std::size_t iu = 0; iu < c.window.u; ++iu) {
                for (std::size_t iv = 0; iv < nv; ++iv) {
                    eu += p[iu * nv + iv] * (static_cast<double>(iu) - ru);
                    ev += p[iu * nv + iv] * (static_cast<double>(iv) - rv);
                }
            }
            const double gu = upstream.at(0, y, x), gv = upstream.at(1, y, x);
            for (std::size_t iu = 0; iu < c.window.u; ++iu) {
                for (std::size_t iv = 0; iv < nv; ++iv) {
                    const double du = static_cast<double>(iu) - ru - eu;
                    const double dv = static_cast<double>(iv) - rv - ev;
                    grad.at(iu, iv, y, x) = scale * p[iu * nv + iv] * (gu * du + gv * dv);
                }
            }
        }
    }
    return grad;
}

Tensor uncertainty_map(const CostVolume& c) {
    const std::size_t h = c.height(), w = c.width();
    Tensor unc({1, h, w});
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            double mx = c.values.at(0, 0, y, x);
            for (std::size_t iu = 0; iu < c.window.u; ++iu)
                for (std::size_t iv = 0; iv < c.window.v; ++iv) mx = std::max(mx, c.values.at(iu, iv, y, x));
            unc.at(0, y, x) = mx;
        }
    }
    return unc;
}

Tensor assemble_motion_input(const Tensor& disp, const Tensor& unc, Window window) {
    if (disp.rank() != 3 || disp.dim(0) != 2 || unc.rank() != 3 || unc.dim(0) != 1 ||
        disp.dim(1) != unc.dim(1) || disp.dim(2) != unc.dim(2)) {
        throw ShapeError("assemble_motion_input: displacement " + shape_str(disp.shape()) + " and uncertainty " +
                         shape_str(unc.shape()) + " are inconsistent");
    }
    const std::size_t h = disp.dim(1), w = disp.dim(2);
    const double ru = static_cast<double>(window.radius_u());
    const double rv = static_cast<double>(window.radius_v());
    Tensor out({3, h, w});
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            out.at(0, y, x) = ru > 0 ? disp.at(0, y, x) / ru : 0.0;
            out.at(1, y, x) = rv > 0 ? disp.at(1, y, x) / rv : 0.0;
            out.at(2, y, x) = unc.at(0, y, x);
        }
    }
    return out;
}

MotionBundle compute_motion(const Tensor& f_t, const Tensor& f_prev, Window window, int sign, double beta) {
    const CostVolume cv = build_cost_volume(f_t, f_prev, window);
    MotionBundle m;
    m.displacement = soft_argmin_displacement(cv, sign, beta);
    m.uncertainty = uncertainty_map(cv);
    m.motion_input = assemble_motion_input(m.displacement, m.uncertainty, window);
    return m;
}

}  // namespace muvos
