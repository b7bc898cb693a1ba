#pragma once

#include <cstddef>
#include <vector>

#include "muvos/ops.hpp"
#include "muvos/tensor.hpp"

namespace muvos {

struct LossResult {
    double value = 0.0;
    Tensor grad;  // d(value)/d(pred), shape of pred
};

inline constexpr double kProbClamp = 1e-7;
inline constexpr double kDefaultBootstrapRatio = 0.4;
inline constexpr double kDefaultLossLambda = 1.0;

/// Number of hardest pixels kept for n pixels at the given ratio: ceil(ratio * n).
std::size_t bootstrap_count(std::size_t n, double ratio);

/// Per-pixel binary cross-entropy (after clamping pred into [1e-7, 1 - 1e-7]).
std::vector<double> pixel_cross_entropy(const Tensor& pred, const Tensor& target);

/// Cross-entropy averaged over the ceil(ratio * N) highest-loss pixels. Ties in
/// per-pixel loss resolve toward the earlier row-major pixel.
LossResult bootstrap_ce(const Tensor& pred, const Tensor& target, double ratio = kDefaultBootstrapRatio);

/// 1 - sum(min(p, t)) / sum(max(p, t)); zero when both sums vanish. At p == t the
/// subgradient is split 0.5 / 0.5 between the min and max sums.
LossResult mask_iou_loss(const Tensor& pred, const Tensor& target);

/// bootstrap_ce + lambda * mask_iou_loss.
LossResult total_loss(const Tensor& pred, const Tensor& target, double ratio = kDefaultBootstrapRatio,
                      double lambda = kDefaultLossLambda);

struct LinearHeadFit {
    ConvParams head;  // 1x1, D -> 1
    std::vector<double> loss_trace;
};

/// sigmoid(conv1x1(features)) over a target mask.
Tensor linear_head_predict(const Tensor& features, const ConvParams& head);

/// Plain gradient descent on total_loss through sigmoid and a zero-initialised 1x1
/// conv. loss_trace[i] is the loss before step i's update.
LinearHeadFit fit_linear_head(const Tensor& features, const Tensor& target_mask, std::size_t steps, double lr,
                              double ratio = kDefaultBootstrapRatio, double lambda = kDefaultLossLambda);

}  // namespace muvos
