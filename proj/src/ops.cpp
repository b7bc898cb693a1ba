#include "muvos/ops.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "muvos/errors.hpp"

namespace muvos {

ConvParams ConvParams::zeros(std::size_t c_out, std::size_t c_in, std::size_t k) {
    return {Tensor({c_out, c_in, k, k}), Tensor({c_out})};
}

ConvParams ConvParams::fan_in_uniform(std::size_t c_out, std::size_t c_in, std::size_t k,
                                      unsigned long long seed) {
    std::mt19937_64 rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(c_in * k * k));
    std::uniform_real_distribution<double> dist(-bound, bound);
    ConvParams p = zeros(c_out, c_in, k);
    for (auto& w : p.weights.data()) w = dist(rng);
    for (auto& b : p.bias.data()) b = dist(rng);
    return p;
}

Tensor conv2d(const Tensor& input, const Tensor& weights, const Tensor& bias, std::size_t stride,
              std::size_t pad) {
    if (input.rank() != 3) throw ShapeError("conv2d: input must be C x H x W, got " + shape_str(input.shape()));
    if (weights.rank() != 4 || weights.dim(2) != weights.dim(3)) {
        throw ShapeError("conv2d: weights must be C_out x C_in x k x k, got " + shape_str(weights.shape()));
    }
    if (weights.dim(1) != input.dim(0)) {
        throw ShapeError("conv2d: weights expect " + std::to_string(weights.dim(1)) +
                         " input channels, input " + shape_str(input.shape()) + " has " +
                         std::to_string(input.dim(0)));
    }
    if (bias.rank() != 1 || bias.dim(0) != weights.dim(0)) {
        throw ShapeError("conv2d: bias " + shape_str(bias.shape()) + " does not match " +
                         std::to_string(weights.dim(0)) + " output channels");
    }
    const std::size_t k = weights.dim(2);
    if (k % 2 == 0) throw ShapeError("conv2d: kernel size must be odd, got " + std::to_string(k));
    if (stride == 0) throw ValidationError("conv2d: stride must be positive");

    const std::size_t c_in = input.dim(0), h = input.dim(1), w = input.dim(2);
    if (h + 2 * pad < k || w + 2 * pad < k) {
        throw ShapeError("conv2d: kernel " + std::to_string(k) + " larger than padded input " +
                         shape_str(input.shape()));
    }
    const std::size_t c_out = weights.dim(0);
    const std::size_t h_out = (h + 2 * pad - k) / stride + 1;
    const std::size_t w_out = (w + 2 * pad - k) / stride + 1;
    Tensor out({c_out, h_out, w_out});

    const auto ih = static_cast<std::ptrdiff_t>(h), iw = static_cast<std::ptrdiff_t>(w);
    const auto rows = static_cast<std::ptrdiff_t>(c_out * h_out);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t row = 0; row < rows; ++row) {
        const std::size_t co = static_cast<std::size_t>(row) / h_out;
        const std::size_t oy = static_cast<std::size_t>(row) % h_out;
        for (std::size_t ox = 0; ox < w_out; ++ox) {
            double acc = bias[co];
            for (std::size_t ci = 0; ci < c_in; ++ci) {
                for (std::size_t ky = 0; ky < k; ++ky) {
                    const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) -
                                              static_cast<std::ptrdiff_t>(pad);
                    if (iy < 0 || iy >= ih) continue;
                    for (std::size_t kx = 0; kx < k; ++kx) {
                        const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) -
                                                  static_cast<std::ptrdiff_t>(pad);
                        if (ix < 0 || ix >= iw) continue;
                        acc += weights.at(co, ci, ky, kx) *
                               input.at(ci, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
                    }
                }
            }
            out.at(co, oy, ox) = acc;
        }
    }
    return out;
}

Tensor conv2d_same(const Tensor& input, const ConvParams& p) {
    return conv2d(input, p.weights, p.bias, 1, p.weights.dim(2) / 2);
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Tensor pointwise(Activation kind, const Tensor& x) {
    Tensor out(x.shape());
    switch (kind) {
        case Activation::sigmoid:
            for (std::size_t i = 0; i < x.size(); ++i) out[i] = sigmoid(x[i]);
            break;
        case Activation::relu:
            for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
            break;
    }
    return out;
}

Tensor leaky_relu(const Tensor& x, double slope) {
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : slope * x[i];
    return out;
}

Tensor softmax_over(const Tensor& x, const std::vector<std::size_t>& axes) {
    if (axes.empty()) throw ValidationError("softmax_over: axis set is empty");
    const std::size_t rank = x.rank();
    std::vector<bool> selected(rank, false);
    for (auto a : axes) {
        if (a >= rank) throw ValidationError("softmax_over: axis " + std::to_string(a) + " out of range");
        if (selected[a]) throw ValidationError("softmax_over: duplicate axis " + std::to_string(a));
        selected[a] = true;
    }

    std::vector<std::size_t> strides(rank, 1);
    for (std::size_t i = rank - 1; i > 0; --i) strides[i - 1] = strides[i] * x.dim(i);

    // Flat offsets of every element inside one slice, and of every slice origin.
    auto offsets_for = [&](bool want_selected) {
        std::vector<std::size_t> offs{0};
        for (std::size_t a = 0; a < rank; ++a) {
            if (selected[a] != want_selected) continue;
            std::vector<std::size_t> next;
            next.reserve(offs.size() * x.dim(a));
            for (auto base : offs)
                for (std::size_t i = 0; i < x.dim(a); ++i) next.push_back(base + i * strides[a]);
            offs = std::move(next);
        }
        return offs;
    };
    const auto inner = offsets_for(true);
    const auto outer = offsets_for(false);

    Tensor out(x.shape());
    const auto n_outer = static_cast<std::ptrdiff_t>(outer.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t o = 0; o < n_outer; ++o) {
        const std::size_t base = outer[static_cast<std::size_t>(o)];
        double mx = x[base + inner[0]];
        for (auto off : inner) mx = std::max(mx, x[base + off]);
        double sum = 0.0;
        for (auto off : inner) {
            const double e = std::exp(x[base + off] - mx);
            out[base + off] = e;
            sum += e;
        }
        for (auto off : inner) out[base + off] /= sum;
    }
    return out;
}

Tensor l2_normalize_channels(const Tensor& f, double eps) {
    if (f.rank() != 3) throw ShapeError("l2_normalize_channels: expected D x H x W, got " + shape_str(f.shape()));
    if (!(eps > 0.0)) throw ValidationError("l2_normalize_channels: eps must be positive");
    const std::size_t d = f.dim(0), plane = f.dim(1) * f.dim(2);
    Tensor out(f.shape());
    for (std::size_t p = 0; p < plane; ++p) {
        double sq = 0.0;
        for (std::size_t c = 0; c < d; ++c) sq += f[c * plane + p] * f[c * plane + p];
        const double inv = 1.0 / (std::sqrt(sq) + eps);
        for (std::size_t c = 0; c < d; ++c) out[c * plane + p] = f[c * plane + p] * inv;
    }
    return out;
}

namespace {

struct Tap {
    std::size_t lo, hi;
    double frac;
};

std::vector<Tap> resample_taps(std::size_t in, std::size_t out) {
    std::vector<Tap> taps(out);
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    for (std::size_t i = 0; i < out; ++i) {
        double src = (static_cast<double>(i) + 0.5) * scale - 0.5;
        src = std::clamp(src, 0.0, static_cast<double>(in - 1));
        const auto lo = static_cast<std::size_t>(std::floor(src));
        taps[i] = {lo, std::min(lo + 1, in - 1), src - static_cast<double>(lo)};
    }
    return taps;
}

}  // namespace

Tensor bilinear_resize(const Tensor& x, std::size_t out_h, std::size_t out_w) {
    if (x.rank() != 3) throw ShapeError("bilinear_resize: expected C x H x W, got " + shape_str(x.shape()));
    if (out_h == 0 || out_w == 0) throw ValidationError("bilinear_resize: output size must be positive");
    const auto ty = resample_taps(x.dim(1), out_h);
    const auto tx = resample_taps(x.dim(2), out_w);
    Tensor out({x.dim(0), out_h, out_w});
    for (std::size_t c = 0; c < x.dim(0); ++c) {
        for (std::size_t i = 0; i < out_h; ++i) {
            const Tap& a = ty[i];
            for (std::size_t j = 0; j < out_w; ++j) {
                const Tap& b = tx[j];
                const double top = (1.0 - b.frac) * x.at(c, a.lo, b.lo) + b.frac * x.at(c, a.lo, b.hi);
                const double bot = (1.0 - b.frac) * x.at(c, a.hi, b.lo) + b.frac * x.at(c, a.hi, b.hi);
                out.at(c, i, j) = (1.0 - a.frac) * top + a.frac * bot;
            }
        }
    }
    return out;
}

Tensor numeric_jacobian(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double eps) {
    if (!(eps > 0.0)) throw ValidationError("numeric_jacobian: eps must be positive");
    const std::size_t out_size = f(x).size();
    Tensor jac({out_size, x.size()});
    Tensor probe = x;
    for (std::size_t j = 0; j < x.size(); ++j) {
        probe[j] = x[j] + eps;
        const Tensor plus = f(probe);
        probe[j] = x[j] - eps;
        const Tensor minus = f(probe);
        probe[j] = x[j];
        for (std::size_t i = 0; i < out_size; ++i) jac.at(i, j) = (plus[i] - minus[i]) / (2.0 * eps);
    }
    return jac;
}

}  // namespace muvos
