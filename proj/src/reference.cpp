#include "muvos/reference.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "muvos/errors.hpp"
#include "muvos/ops.hpp"

namespace muvos::reference {

Tensor conv2d(const Tensor& input, const Tensor& weights, const Tensor& bias, std::size_t stride, std::size_t pad) {
    if (input.rank() != 3 || weights.rank() != 4 || weights.dim(1) != input.dim(0) || bias.size() != weights.dim(0)) {
        throw ShapeError("reference::conv2d: inconsistent shapes");
    }
    const std::size_t c_in = input.dim(0), h = input.dim(1), w = input.dim(2), k = weights.dim(2);
    const std::size_t c_out = weights.dim(0);
    const std::size_t h_out = (h + 2 * pad - k) / stride + 1, w_out = (w + 2 * pad - k) / stride + 1;
    Tensor out({c_out, h_out, w_out});
    for (std::size_t co = 0; co < c_out; ++co) {
        for (std::size_t oy = 0; oy < h_out; ++oy) {
            for (std::size_t ox = 0; ox < w_out; ++ox) {
                double acc = bias[co];
                for (std::size_t ci = 0; ci < c_in; ++ci) {
                    for (std::size_t ky = 0; ky < k; ++ky) {
                        const long iy = static_cast<long>(oy * stride + ky) - static_cast<long>(pad);
                        if (iy < 0 || iy >= static_cast<long>(h)) continue;
                        for (std::size_t kx = 0; kx < k; ++kx) {
                            const long ix = static_cast<long>(ox * stride + kx) - static_cast<long>(pad);
                            if (ix < 0 || ix >= static_cast<long>(w)) continue;
                            acc += weights.at(co, ci, ky, kx) *
                                   input.at(ci, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
                        }
                    }
                }
                out.at(co, oy, ox) = acc;
            }
        }
    }
    return out;
}

CostVolume build_cost_volume(const Tensor& f_t, const Tensor& f_prev, Window window) {
    if (f_t.rank() != 3 || f_t.shape() != f_prev.shape()) throw ShapeError("reference::build_cost_volume: shape mismatch");
    const std::size_t d = f_t.dim(0);
    const long h = static_cast<long>(f_t.dim(1)), w = static_cast<long>(f_t.dim(2));
    const Tensor a = l2_normalize_channels(f_t);
    const Tensor b = l2_normalize_channels(f_prev);
    const long ru = static_cast<long>(window.radius_u()), rv = static_cast<long>(window.radius_v());
    CostVolume cv{window, Tensor({window.u, window.v, f_t.dim(1), f_t.dim(2)}, CostVolume::kOutOfBounds)};
    for (long y = 0; y < h; ++y) {
        for (long x = 0; x < w; ++x) {
            for (long du = -ru; du <= ru; ++du) {
                for (long dv = -rv; dv <= rv; ++dv) {
                    const long tx = x + du, ty = y + dv;
                    if (tx < 0 || tx >= w || ty < 0 || ty >= h) continue;
                    double dot = 0.0;
                    for (std::size_t c = 0; c < d; ++c) {
                        dot += a.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(x)) *
                               b.at(c, static_cast<std::size_t>(ty), static_cast<std::size_t>(tx));
                    }
                    cv.values.at(static_cast<std::size_t>(du + ru), static_cast<std::size_t>(dv + rv),
                                 static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = dot;
                }
            }
        }
    }
    return cv;
}

Tensor memory_read(const MemoryBank& bank, const QueryEmbedding& q) {
    if (bank.empty()) throw NoReferenceError();
    const std::size_t dk = q.key.dim(0), dv = q.value.dim(0);
    const std::size_t plane = q.key.dim(1) * q.key.dim(2);
    Tensor retrieved({dv, q.key.dim(1), q.key.dim(2)});
    std::vector<double> weights;
    for (std::size_t i = 0; i < plane; ++i) {
        weights.clear();
        double mx = -INFINITY;
        for (const auto& e : bank.entries()) {
            const std::size_t mplane = e.key.dim(1) * e.key.dim(2);
            for (std::size_t j = 0; j < mplane; ++j) {
                double s = 0.0;
                for (std::size_t c = 0; c < dk; ++c) s += q.key[c * plane + i] * e.key[c * mplane + j];
                weights.push_back(s);
                mx = std::max(mx, s);
            }
        }
        double sum = 0.0;
        for (auto& v : weights) {
            v = std::exp(v - mx);
            sum += v;
        }
        for (auto& v : weights) v /= sum;
        for (std::size_t c = 0; c < dv; ++c) {
            double acc = 0.0;
            std::size_t n = 0;
            for (const auto& e : bank.entries()) {
                const std::size_t mplane = e.value.dim(1) * e.value.dim(2);
                for (std::size_t j = 0; j < mplane; ++j) acc += weights[n++] * e.value[c * mplane + j];
            }
            retrieved[c * plane + i] = acc;
        }
    }
    return concat_channels({&retrieved, &q.value});
}

}  // namespace muvos::reference
