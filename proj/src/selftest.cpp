#include "muvos/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>

#include "muvos/losses.hpp"
#include "muvos/metrics.hpp"
#include "muvos/mu_layer.hpp"
#include "muvos/object_mask.hpp"
#include "muvos/ops.hpp"
#include "muvos/reference.hpp"

namespace muvos {

namespace {

Tensor random_tensor(std::mt19937_64& rng, std::vector<std::size_t> shape, double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Tensor t(std::move(shape));
    for (auto& v : t.data()) v = dist(rng);
    return t;
}

std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

std::string fmt(const char* f, double v) {
    char buf[96];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double relative_error(const Tensor& analytic, const Tensor& numeric) {
    double scale = 0.0;
    for (double v : numeric.data()) scale = std::max(scale, std::abs(v));
    return max_abs_diff(analytic, numeric) / std::max(scale, 1e-12);
}

// Flattened d(loss)/d(pred) from a 1 x N numeric Jacobian, reshaped like pred.
Tensor numeric_gradient(const std::function<double(const Tensor&)>& loss, const Tensor& x) {
    const Tensor jac = numeric_jacobian([&](const Tensor& p) { return Tensor({1}, loss(p)); }, x);
    return jac.reshaped(x.shape());
}

SelftestCheck check_cost_volume(std::mt19937_64& rng) {
    std::size_t mismatches = 0;
    for (int i = 0; i < 20; ++i) {
        const std::size_t d = pick(rng, 1, 8), h = pick(rng, 1, 8), w = pick(rng, 1, 8);
        const Window win{2 * pick(rng, 0, 2) + 1, 2 * pick(rng, 0, 2) + 1};
        const Tensor a = random_tensor(rng, {d, h, w}, -1, 1), b = random_tensor(rng, {d, h, w}, -1, 1);
        if (build_cost_volume(a, b, win).values != reference::build_cost_volume(a, b, win).values) ++mismatches;
    }
    return {"cost volume parallel == serial", mismatches == 0, std::to_string(mismatches) + "/20 mismatches"};
}

SelftestCheck check_conv(std::mt19937_64& rng) {
    std::size_t mismatches = 0;
    for (int i = 0; i < 20; ++i) {
        const std::size_t cin = pick(rng, 1, 4), cout = pick(rng, 1, 4), k = 2 * pick(rng, 0, 2) + 1;
        const std::size_t stride = pick(rng, 1, 2), pad = pick(rng, 0, k / 2);
        const std::size_t h = pick(rng, k, 9), w = pick(rng, k, 9);
        const Tensor x = random_tensor(rng, {cin, h, w}, -1, 1);
        const Tensor wt = random_tensor(rng, {cout, cin, k, k}, -1, 1), b = random_tensor(rng, {cout}, -1, 1);
        if (conv2d(x, wt, b, stride, pad) != reference::conv2d(x, wt, b, stride, pad)) ++mismatches;
    }
    return {"conv2d parallel == serial", mismatches == 0, std::to_string(mismatches) + "/20 mismatches"};
}

SelftestCheck check_memory(std::mt19937_64& rng) {
    std::size_t mismatches = 0;
    for (int i = 0; i < 10; ++i) {
        const std::size_t dk = pick(rng, 1, 4), dv = pick(rng, 1, 4), h = pick(rng, 1, 5), w = pick(rng, 1, 5);
        MemoryBank bank;
        const std::size_t frames = pick(rng, 1, 3);
        for (std::size_t f = 0; f < frames; ++f) {
            bank.write(static_cast<int>(f + 1), random_tensor(rng, {dk, h, w}, -1, 1),
                       random_tensor(rng, {dv, h, w}, -1, 1));
        }
        const QueryEmbedding q{random_tensor(rng, {dk, h, w}, -1, 1), random_tensor(rng, {dv, h, w}, -1, 1)};
        if (memory_read(bank, q) != reference::memory_read(bank, q)) ++mismatches;
    }
    return {"memory read parallel == serial", mismatches == 0, std::to_string(mismatches) + "/10 mismatches"};
}

SelftestCheck check_soft_argmin_grad(std::mt19937_64& rng) {
    double worst = 0.0;
    for (int i = 0; i < 5; ++i) {
        const Window win{3, 5};
        const std::size_t h = pick(rng, 1, 3), w = pick(rng, 1, 3);
        CostVolume c{win, random_tensor(rng, {win.u, win.v, h, w}, -1, 1)};
        const Tensor up = random_tensor(rng, {2, h, w}, -1, 1);
        const int sign = i % 2 ? -1 : 1;
        const Tensor analytic = soft_argmin_grad(c, sign, up, 1.0);
        auto objective = [&](const Tensor& vals) {
            const Tensor disp = soft_argmin_displacement(CostVolume{win, vals}, sign, 1.0);
            double s = 0.0;
            for (std::size_t k = 0; k < disp.size(); ++k) s += disp[k] * up[k];
            return s;
        };
        worst = std::max(worst, relative_error(analytic, numeric_gradient(objective, c.values)));
    }
    return {"soft-argmin gradient vs finite differences", worst < 1e-6, fmt("max rel err %.3g", worst)};
}

SelftestCheck check_loss_grad(std::mt19937_64& rng) {
    double worst = 0.0;
    for (int i = 0; i < 5; ++i) {
        const std::size_t h = pick(rng, 2, 5), w = pick(rng, 2, 5);
        const Tensor pred = random_tensor(rng, {1, h, w}, 0.05, 0.95);
        Tensor target({1, h, w});
        for (auto& v : target.data()) v = static_cast<double>(pick(rng, 0, 1));
        const LossResult r = total_loss(pred, target);
        const Tensor numeric = numeric_gradient([&](const Tensor& p) { return total_loss(p, target).value; }, pred);
        worst = std::max(worst, relative_error(r.grad, numeric));
    }
    return {"total loss gradient vs finite differences", worst < 1e-5, fmt("max rel err %.3g", worst)};
}

SelftestCheck check_boundary(std::mt19937_64& rng) {
    double worst = 0.0;
    for (int i = 0; i < 10; ++i) {
        auto blob = [&] {
            std::vector<int> labels(32 * 32, 0);
            const std::size_t y0 = pick(rng, 0, 20), x0 = pick(rng, 0, 20);
            const std::size_t hh = pick(rng, 4, 12), ww = pick(rng, 4, 12);
            for (std::size_t y = y0; y < y0 + hh; ++y)
                for (std::size_t x = x0; x < x0 + ww; ++x) labels[y * 32 + x] = 1;
            return ObjectMask::from_labels(32, 32, std::move(labels));
        };
        const ObjectMask a = blob(), b = blob();
        const double tol = boundary_tolerance(32, 32);
        worst = std::max(worst, std::abs(boundary_f(a, b, 1, tol) - boundary_f_exact(a, b, 1, tol)));
    }
    return {"boundary F dilation vs exact matching", worst <= 0.05, fmt("max |diff| %.3g", worst)};
}

}  // namespace

std::vector<SelftestCheck> run_selftest(unsigned long long seed) {
    std::mt19937_64 rng(seed);
    std::vector<SelftestCheck> out;
    out.push_back(check_cost_volume(rng));
    out.push_back(check_conv(rng));
    out.push_back(check_memory(rng));
    out.push_back(check_soft_argmin_grad(rng));
    out.push_back(check_loss_grad(rng));
    out.push_back(check_boundary(rng));
    return out;
}

}  // namespace muvos
