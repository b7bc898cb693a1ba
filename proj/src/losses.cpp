#include "muvos/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "muvos/errors.hpp"

namespace muvos {

namespace {

void check_pair(const Tensor& pred, const Tensor& target, const char* op) {
    if (pred.empty() || target.empty()) throw ValidationError(std::string(op) + ": empty mask");
    if (pred.shape() != target.shape()) {
        throw ShapeError(std::string(op) + ": prediction " + shape_str(pred.shape()) + " vs target " +
                         shape_str(target.shape()));
    }
}

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

}  // namespace

std::size_t bootstrap_count(std::size_t n, double ratio) {
    if (!(ratio > 0.0 && ratio <= 1.0)) throw ValidationError("bootstrap ratio must lie in (0, 1]");
    // Slack keeps exact products such as 0.4 * 10 from rounding up to 5.
    const auto k = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(n) - 1e-9));
    return std::clamp<std::size_t>(k, 1, n);
}

std::vector<double> pixel_cross_entropy(const Tensor& pred, const Tensor& target) {
    check_pair(pred, target, "pixel_cross_entropy");
    std::vector<double> ce(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double p = clamp_prob(pred[i]);
        const double t = target[i];
        ce[i] = -(t * std::log(p) + (1.0 - t) * std::log(1.0 - p));
    }
    return ce;
}

LossResult bootstrap_ce(const Tensor& pred, const Tensor& target, double ratio) {
    const std::vector<double> ce = pixel_cross_entropy(pred, target);
    const std::size_t k = bootstrap_count(ce.size(), ratio);

    std::vector<std::size_t> order(ce.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ce[a] > ce[b]; });

    LossResult r{0.0, Tensor(pred.shape())};
    const double inv_k = 1.0 / static_cast<double>(k);
    for (std::size_t s = 0; s < k; ++s) {
        const std::size_t i = order[s];
        r.value += ce[i];
        const double raw = pred[i];
        if (raw > kProbClamp && raw < 1.0 - kProbClamp) {
            const double t = target[i];
            r.grad[i] = (-t / raw + (1.0 - t) / (1.0 - raw)) * inv_k;
        }
    }
    r.value *= inv_k;
    return r;
}

LossResult mask_iou_loss(const Tensor& pred, const Tensor& target) {
    check_pair(pred, target, "mask_iou_loss");
    double inter = 0.0, uni = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        inter += std::min(pred[i], target[i]);
        uni += std::max(pred[i], target[i]);
    }
    LossResult r{0.0, Tensor(pred.shape())};
    if (uni == 0.0) return r;
    r.value = 1.0 - inter / uni;
    const double uni2 = uni * uni;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        double d_inter, d_uni;
        if (pred[i] < target[i]) {
            d_inter = 1.0;
            d_uni = 0.0;
        } else if (pred[i] > target[i]) {
            d_inter = 0.0;
            d_uni = 1.0;
        } else {
            d_inter = 0.5;
            d_uni = 0.5;
        }
        r.grad[i] = -(d_inter * uni - inter * d_uni) / uni2;
    }
    return r;
}

LossResult total_loss(const Tensor& pred, const Tensor& target, double ratio, double lambda) {
    const LossResult bce = bootstrap_ce(pred, target, ratio);
    const LossResult iou = mask_iou_loss(pred, target);
    LossResult r{bce.value + lambda * iou.value, Tensor(pred.shape())};
    for (std::size_t i = 0; i < pred.size(); ++i) r.grad[i] = bce.grad[i] + lambda * iou.grad[i];
    return r;
}

Tensor linear_head_predict(const Tensor& features, const ConvParams& head) {
    const Tensor logits = conv2d(features, head.weights, head.bias, 1, 0);
    return pointwise(Activation::sigmoid, logits).reshaped({features.dim(1), features.dim(2)});
}

LinearHeadFit fit_linear_head(const Tensor& features, const Tensor& target_mask, std::size_t steps, double lr,
                              double ratio, double lambda) {
    if (steps == 0) throw ValidationError("fit_linear_head: steps must be at least 1");
    if (lr < 0.0) throw ValidationError("fit_linear_head: learning rate must be non-negative");
    if (features.rank() != 3 || target_mask.shape() != Shape{features.dim(1), features.dim(2)}) {
        throw ShapeError("fit_linear_head: features " + shape_str(features.shape()) + " and mask " +
                         shape_str(target_mask.shape()) + " disagree");
    }
    const std::size_t d = features.dim(0), plane = features.dim(1) * features.dim(2);
    LinearHeadFit fit{ConvParams::zeros(1, d, 1), {}};
    fit.loss_trace.reserve(steps);
    for (std::size_t step = 0; step < steps; ++step) {
        const Tensor pred = linear_head_predict(features, fit.head);
        const LossResult loss = total_loss(pred, target_mask, ratio, lambda);
        fit.loss_trace.push_back(loss.value);

        std::vector<double> gw(d, 0.0);
        double gb = 0.0;
        for (std::size_t i = 0; i < plane; ++i) {
            const double dz = loss.grad[i] * pred[i] * (1.0 - pred[i]);
            gb += dz;
            for (std::size_t c = 0; c < d; ++c) gw[c] += dz * features[c * plane + i];
        }
        for (std::size_t c = 0; c < d; ++c) fit.head.weights[c] -= lr * gw[c];
        fit.head.bias[0] -= lr * gb;
    }
    return fit;
}

}  // namespace muvos
