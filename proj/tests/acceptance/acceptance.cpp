// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "muvos/cli.hpp"
#include "muvos/config.hpp"
#include "muvos/image_io.hpp"
#include "muvos/losses.hpp"
#include "muvos/memory.hpp"
#include "muvos/metrics.hpp"
#include "muvos/motion_fusion.hpp"
#include "muvos/mu_layer.hpp"
#include "muvos/ops.hpp"
#include "muvos/pipeline.hpp"
#include "muvos/synthetic.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace muvos;
using muvos::testing::random_binary;
using muvos::testing::random_tensor;
using muvos::testing::relative_error;
using muvos::testing::uniform_size;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool passed;
    std::string detail;
};

struct Criterion {
    std::string name;
    double time_limit_s;  // 0 means unbounded
    std::function<Outcome()> run;
};

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof buf, format, a, b, c);
    return buf;
}

struct VolumeInstance {
    Tensor f_t, f_prev;
    Window window;
};

// Cost-volume instances shared by the oracle and uncertainty checks.
std::vector<VolumeInstance> volume_instances() {
    std::mt19937_64 rng(1001);
    std::vector<VolumeInstance> out;
    for (int i = 0; i < 50; ++i) {
        const std::size_t d = uniform_size(rng, 1, 8), h = uniform_size(rng, 1, 8), w = uniform_size(rng, 1, 8);
        const Window win{2 * uniform_size(rng, 0, 2) + 1, 2 * uniform_size(rng, 0, 2) + 1};
        out.push_back({random_tensor(rng, {d, h, w}), random_tensor(rng, {d, h, w}), win});
    }
    return out;
}

Outcome cost_volume_oracle() {
    double worst = 0.0;
    for (const auto& inst : volume_instances()) {
        const CostVolume c = build_cost_volume(inst.f_t, inst.f_prev, inst.window);
        worst = std::max(worst, max_abs_diff(c.values, oracle::cosine_volume(inst.f_t, inst.f_prev, inst.window.u,
                                                                              inst.window.v)));
    }
    return {worst <= 1e-12, fmt("50 instances, max abs err %.3g", worst)};
}

Outcome uncertainty_exact() {
    std::size_t mismatches = 0, positions = 0;
    for (const auto& inst : volume_instances()) {
        const CostVolume c = build_cost_volume(inst.f_t, inst.f_prev, inst.window);
        const Tensor u = uncertainty_map(c);
        for (std::size_t y = 0; y < c.height(); ++y)
            for (std::size_t x = 0; x < c.width(); ++x) {
                double mx = -std::numeric_limits<double>::infinity();
                for (std::size_t iu = 0; iu < inst.window.u; ++iu)
                    for (std::size_t iv = 0; iv < inst.window.v; ++iv) mx = std::max(mx, c.values.at(iu, iv, y, x));
                mismatches += u.at(0, y, x) != mx;
                ++positions;
            }
    }
    return {mismatches == 0, fmt("%.0f positions, %.0f bitwise mismatches", static_cast<double>(positions),
                                 static_cast<double>(mismatches))};
}

Outcome displacement_recovery() {
    std::mt19937_64 rng(1003);
    std::uniform_int_distribution<long> shift(-3, 3);
    // Depth of the projected features the cost volume sees under the default config.
    const std::size_t d = RunConfig{}.feature_dim / 4, h = 14, w = 14, margin = 3;
    double worst = 0.0;
    std::size_t hits = 0, total = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const long dx = shift(rng), dy = shift(rng);
        const Tensor prev = random_tensor(rng, {d, h, w});
        Tensor cur = random_tensor(rng, {d, h, w});
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) {
                const long sy = static_cast<long>(y) + dy, sx = static_cast<long>(x) + dx;
                if (sy < 0 || sx < 0 || sy >= static_cast<long>(h) || sx >= static_cast<long>(w)) continue;
                for (std::size_t c = 0; c < d; ++c)
                    cur.at(c, y, x) = prev.at(c, static_cast<std::size_t>(sy), static_cast<std::size_t>(sx));
            }
        const Window win{7, 7};
        const CostVolume cv = build_cost_volume(cur, prev, win);
        const Tensor disp = soft_argmin_displacement(cv);
        for (std::size_t y = margin; y < h - margin; ++y)
            for (std::size_t x = margin; x < w - margin; ++x) {
                worst = std::max({worst, std::abs(disp.at(0, y, x) - static_cast<double>(dx)),
                                  std::abs(disp.at(1, y, x) - static_cast<double>(dy))});
                std::size_t best_u = 0, best_v = 0;
                for (std::size_t iu = 0; iu < 7; ++iu)
                    for (std::size_t iv = 0; iv < 7; ++iv)
                        if (cv.values.at(iu, iv, y, x) > cv.values.at(best_u, best_v, y, x)) {
                            best_u = iu;
                            best_v = iv;
                        }
                hits += static_cast<long>(best_u) - 3 == dx && static_cast<long>(best_v) - 3 == dy;
                ++total;
            }
    }
    const double rate = static_cast<double>(hits) / static_cast<double>(total);
    return {worst <= 0.35 && rate >= 0.95,
            fmt("depth %.0f, max soft-argmin err %.3g cells, argmax hit rate %.4f", static_cast<double>(d), worst, rate)};
}

Tensor numeric_grad(const std::function<double(const Tensor&)>& f, const Tensor& x) {
    return numeric_jacobian([&](const Tensor& t) { return Tensor({1}, f(t)); }, x).reshaped(x.shape());
}

// Keeps instances whose hardest-pixel selection has a clear gap, so a finite-difference
// step never crosses a tie boundary.
std::pair<Tensor, Tensor> separated_instance(std::mt19937_64& rng) {
    for (;;) {
        const std::size_t h = uniform_size(rng, 3, 7), w = uniform_size(rng, 3, 7);
        Tensor pred = random_tensor(rng, {h, w}, 0.05, 0.95);
        Tensor target = random_binary(rng, {h, w});
        auto ce = pixel_cross_entropy(pred, target);
        std::sort(ce.begin(), ce.end(), std::greater<>());
        const std::size_t k = bootstrap_count(ce.size(), kDefaultBootstrapRatio);
        if (k == ce.size() || ce[k - 1] - ce[k] > 1e-3) return {pred, target};
    }
}

Outcome gradient_fidelity() {
    std::mt19937_64 rng(1004);
    double bce = 0, iou = 0, tot = 0, sam = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const auto [p, t] = separated_instance(rng);
        bce = std::max(bce, relative_error(bootstrap_ce(p, t).grad,
                                           numeric_grad([&](const Tensor& x) { return bootstrap_ce(x, t).value; }, p)));
        iou = std::max(iou, relative_error(mask_iou_loss(p, t).grad,
                                           numeric_grad([&](const Tensor& x) { return mask_iou_loss(x, t).value; }, p)));
        tot = std::max(tot, relative_error(total_loss(p, t).grad,
                                           numeric_grad([&](const Tensor& x) { return total_loss(x, t).value; }, p)));
    }
    for (int trial = 0; trial < 20; ++trial) {
        const Window win{2 * uniform_size(rng, 0, 2) + 1, 2 * uniform_size(rng, 0, 2) + 1};
        const std::size_t h = uniform_size(rng, 1, 4), w = uniform_size(rng, 1, 4);
        const CostVolume c{win, random_tensor(rng, {win.u, win.v, h, w})};
        const Tensor up = random_tensor(rng, {2, h, w});
        const int sign = trial % 2 ? -1 : 1;
        const double beta = trial < 10 ? kDefaultSoftArgminBeta : 1.0;
        const Tensor numeric = numeric_jacobian(
            [&](const Tensor& v) {
                const Tensor d = soft_argmin_displacement(CostVolume{win, v}, sign, beta);
                double s = 0;
                for (std::size_t i = 0; i < d.size(); ++i) s += d[i] * up[i];
                return Tensor({1}, s);
            },
            c.values);
        sam = std::max(sam, relative_error(soft_argmin_grad(c, sign, up, beta), numeric.reshaped(c.values.shape())));
    }
    const bool ok = bce < 1e-5 && iou < 1e-5 && tot < 1e-5 && sam < 1e-6;
    return {ok, fmt("rel err bce %.2g, iou %.2g, total %.2g", bce, iou, tot) + fmt(", soft-argmin %.2g", sam)};
}

Outcome msam_bounds() {
    std::mt19937_64 rng(1005);
    double worst = 0.0;
    std::size_t violations = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t d = uniform_size(rng, 1, 8), dm = uniform_size(rng, 1, 8);
        const std::size_t h = uniform_size(rng, 1, 6), w = uniform_size(rng, 1, 6);
        Tensor fs = random_tensor(rng, {d, h, w}, 0.0, 3.0);
        fs[0] = 0.0;
        const Tensor fm = random_tensor(rng, {dm, h, w}, -4.0, 4.0);
        const MsamParams p{ConvParams::fan_in_uniform(1, dm, 1, 500 + static_cast<unsigned>(trial))};
        const Tensor out = msam_fuse(fs, fm, p), att = attention_map(fm, p);
        for (std::size_t c = 0; c < d; ++c)
            for (std::size_t y = 0; y < h; ++y)
                for (std::size_t x = 0; x < w; ++x) {
                    const double s = fs.at(c, y, x), o = out.at(c, y, x);
                    violations += !(s <= o && o <= 2.0 * s);
                    if (s > 1e-3) worst = std::max(worst, std::abs(o / s - 1.0 - att.at(0, y, x)));
                }
    }
    return {violations == 0 && worst <= 1e-9,
            fmt("%.0f bound violations, reconstruction err %.3g", static_cast<double>(violations), worst)};
}

Outcome loss_anchors() {
    std::mt19937_64 rng(1006);
    const Tensor t = random_binary(rng, {8, 8});
    const double perfect = total_loss(t, t).value;
    Tensor anti = t;
    for (auto& v : anti.data()) v = 1.0 - v;
    const double anti_iou = mask_iou_loss(anti, t).value;
    Tensor pred({10}), target({10}, 1.0);
    std::vector<double> ce;
    for (int i = 0; i < 10; ++i) {
        ce.push_back(0.1 * (i + 1));
        pred[static_cast<std::size_t>(i)] = std::exp(-ce.back());
    }
    const double hard = bootstrap_ce(pred, target, 0.4).value, oracle_hard = oracle::top_fraction_mean(ce, 0.4);
    const bool ok = perfect < 1e-6 && anti_iou == 1.0 && hard == oracle_hard && std::abs(hard - 0.85) < 1e-12;
    return {ok, fmt("perfect %.3g, anti IoU term %.17g, top-40%% mean %.15g", perfect, anti_iou, hard)};
}

Outcome memory_read_attention() {
    std::mt19937_64 rng(1007);
    double sum_err = 0.0, oracle_err = 0.0, hull_excess = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t dk = uniform_size(rng, 1, 6), dv = uniform_size(rng, 1, 4);
        const std::size_t h = uniform_size(rng, 1, 5), w = uniform_size(rng, 1, 5), n = h * w;
        const std::vector<Tensor> keys{random_tensor(rng, {dk, h, w}, -2, 2), random_tensor(rng, {dk, h, w}, -2, 2)};
        const std::vector<Tensor> values{random_tensor(rng, {dv, h, w}), random_tensor(rng, {dv, h, w})};
        MemoryBank bank;
        bank.write(1, keys[0], values[0]);
        bank.write(6, keys[1], values[1]);
        const QueryEmbedding q{random_tensor(rng, {dk, h, w}, -2, 2), random_tensor(rng, {dv, h, w})};

        const Tensor att = memory_attention(bank, q.key);
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0;
            for (std::size_t j = 0; j < 2 * n; ++j) s += att.at(i, j);
            sum_err = std::max(sum_err, std::abs(s - 1.0));
        }
        const Tensor read = memory_read(bank, q).channels(0, dv);
        oracle_err = std::max(oracle_err, max_abs_diff(read, oracle::memory_retrieve(keys, values, q.key)));
        for (std::size_t c = 0; c < dv; ++c) {
            double lo = 1e300, hi = -1e300;
            for (const auto& v : values)
                for (std::size_t i = 0; i < n; ++i) {
                    lo = std::min(lo, v[c * n + i]);
                    hi = std::max(hi, v[c * n + i]);
                }
            for (std::size_t i = 0; i < n; ++i)
                hull_excess = std::max({hull_excess, lo - read[c * n + i], read[c * n + i] - hi});
        }
    }
    const bool ok = sum_err <= 1e-12 && oracle_err <= 1e-12 && hull_excess <= 1e-12;
    return {ok, fmt("weight-sum err %.3g, oracle err %.3g, hull excess %.3g", sum_err, oracle_err, hull_excess)};
}

Outcome motion_net_conformance() {
    const std::array<std::array<std::size_t, 3>, kMotionNetLayers> rows{{
        {3, 3, 7}, {3, 16, 1}, {16, 16, 3}, {16, 32, 1}, {32, 32, 3}, {32, 32, 1}, {32, 64, 3}, {64, 1024, 1},
    }};
    const MotionNetParams p = motion_net_init(kFullMotionDim, 42);
    std::size_t rows_ok = 0;
    for (std::size_t i = 0; i < kMotionNetLayers; ++i) {
        const auto [cin, cout, k] = rows[i];
        rows_ok += p.layers[i].weights.shape() == Shape{cout, cin, k, k} && p.layers[i].bias.shape() == Shape{cout};
    }
    std::mt19937_64 rng(1008);
    const Tensor x = random_tensor(rng, {3, 6, 5});
    const Tensor out = motion_net_forward(p, x);
    const double err = max_abs_diff(out, oracle::motion_net(p, x));
    const bool ok = rows_ok == kMotionNetLayers && out.shape() == Shape{1024, 6, 5} && err <= 1e-10;
    return {ok, fmt("%.0f/8 layer shapes, forward err %.3g", static_cast<double>(rows_ok), err)};
}

RunConfig analytic_config() {
    RunConfig cfg;
    cfg.mode = PipelineMode::analytic;
    cfg.feature_dim = 16;
    cfg.window_u = cfg.window_v = 9;
    return cfg;
}

Outcome analytic_tracking() {
    const SyntheticSequence drift = make_square_sequence(SquareScene{.dx = 2}, 24);
    const auto masks = run_sequence(drift.frames, drift.masks[0], analytic_config());
    double j = 0.0, f = 0.0;
    for (std::size_t t = 0; t < masks.size(); ++t) {
        const ObjectMask& gt = drift.masks[t + 1];
        j += jaccard_j(masks[t], gt, 1);
        f += boundary_f(masks[t], gt, 1, boundary_tolerance(gt.height, gt.width));
    }
    j /= static_cast<double>(masks.size());
    f /= static_cast<double>(masks.size());
    const SyntheticSequence still = make_square_sequence(SquareScene{.dx = 0}, 2);
    const double j_static = jaccard_j(run_sequence(still.frames, still.masks[0], analytic_config())[0],
                                      still.masks[1], 1);
    return {j >= 0.7 && f >= 0.6 && j_static >= 0.95, fmt("drift mean J %.4f F %.4f, static J %.4f", j, f, j_static)};
}

Outcome toy_learning() {
    std::mt19937_64 rng(1010);
    const std::size_t h = 12, w = 12;
    const Tensor target = random_binary(rng, {h, w});
    Tensor features = random_tensor(rng, {4, h, w}, -0.3, 0.3);
    for (std::size_t i = 0; i < h * w; ++i) features[i] = 2.0 * target[i] - 1.0;
    const LinearHeadFit fit = fit_linear_head(features, target, 200, 0.5);
    const auto halved = std::find_if(fit.loss_trace.begin(), fit.loss_trace.end(),
                                     [&](double v) { return v <= 0.5 * fit.loss_trace.front(); });
    const Tensor pred = linear_head_predict(features, fit.head);
    double inter = 0, uni = 0;
    for (std::size_t i = 0; i < h * w; ++i) {
        const bool a = pred[i] > 0.5, b = target[i] > 0.5;
        inter += a && b;
        uni += a || b;
    }
    const double j = uni > 0 ? inter / uni : 1.0;
    const bool ok = halved != fit.loss_trace.end() && j >= 0.9;
    return {ok, fmt("loss %.4f -> %.4f, halved at step %.0f", fit.loss_trace.front(), fit.loss_trace.back(),
                    static_cast<double>(halved - fit.loss_trace.begin())) +
                    fmt(", J %.4f", j)};
}

ObjectMask rect(std::size_t h, std::size_t w, long y0, long x0, long rh, long rw) {
    std::vector<int> labels(h * w, 0);
    for (long y = std::max(0L, y0); y < std::min<long>(static_cast<long>(h), y0 + rh); ++y)
        for (long x = std::max(0L, x0); x < std::min<long>(static_cast<long>(w), x0 + rw); ++x)
            labels[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)] = 1;
    return ObjectMask::from_labels(h, w, std::move(labels));
}

// Union of a few random rectangles: irregular outlines with concave corners.
ObjectMask random_blob(std::mt19937_64& rng) {
    std::uniform_int_distribution<long> pos(0, 26), ext(3, 14);
    std::vector<int> labels(32 * 32, 0);
    const std::size_t parts = uniform_size(rng, 1, 4);
    for (std::size_t k = 0; k < parts; ++k) {
        const ObjectMask r = rect(32, 32, pos(rng), pos(rng), ext(rng), ext(rng));
        for (std::size_t i = 0; i < labels.size(); ++i) labels[i] |= r.labels[i];
    }
    return ObjectMask::from_labels(32, 32, std::move(labels));
}

Outcome metrics_sanity() {
    const ObjectMask a = rect(32, 32, 4, 4, 12, 12);
    const double tol = boundary_tolerance(32, 32);
    const bool identical = jaccard_j(a, a, 1) == 1.0 && boundary_f(a, a, 1, tol) == 1.0;
    const double third = jaccard_j(a, rect(32, 32, 4, 10, 12, 12), 1);

    std::mt19937_64 rng(1011);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const ObjectMask gt = random_blob(rng), pred = random_blob(rng);
        worst = std::max(worst, std::abs(boundary_f(pred, gt, 1, tol) - boundary_f_exact(pred, gt, 1, tol)));
    }
    const bool ok = identical && third == 1.0 / 3.0 && worst <= 0.05;
    return {ok, fmt("identical %.0f, offset-square J %.17g, max |F - F_exact| %.3g", identical ? 1.0 : 0.0, third,
                    worst)};
}

Outcome segment_determinism() {
    const fs::path root = fs::temp_directory_path() / ("muvos_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root / "frames");
    const SyntheticSequence seq = make_square_sequence(SquareScene{.height = 64, .width = 80, .side = 24, .x0 = 8,
                                                                   .y0 = 16, .dx = 3, .dy = 1, .patchwork = true},
                                                       6);
    for (std::size_t t = 0; t < seq.frames.size(); ++t) {
        char name[16];
        std::snprintf(name, sizeof name, "%05zu.ppm", t + 1);
        save_image(root / "frames" / name, seq.frames[t]);
    }
    save_mask(root / "first.pgm", seq.masks[0]);
    {
        const std::string cfg = "seed = 7\nfeature_dim = 16\nwindow_u = 5\nwindow_v = 5\nmemory_every = 2\n";
        write_file(root / "run.cfg", std::vector<std::uint8_t>(cfg.begin(), cfg.end()));
    }
    std::vector<std::vector<std::pair<std::string, std::vector<std::uint8_t>>>> runs;
    int codes = 0;
    for (const char* out : {"out_a", "out_b"}) {
        std::ostringstream so, se;
        codes |= run_cli({"segment", "--frames", (root / "frames").string(), "--first-mask",
                          (root / "first.pgm").string(), "--out", (root / out).string(), "--config",
                          (root / "run.cfg").string(), "--emit-flow", "--emit-uncertainty"},
                         so, se);
        std::vector<std::pair<std::string, std::vector<std::uint8_t>>> files;
        if (fs::exists(root / out))
            for (const auto& e : fs::directory_iterator(root / out))
                files.emplace_back(e.path().filename().string(), read_file(e.path()));
        std::sort(files.begin(), files.end());
        runs.push_back(std::move(files));
    }
    fs::remove_all(root);
    const bool ok = codes == 0 && !runs[0].empty() && runs[0] == runs[1];
    return {ok, fmt("exit %.0f, %.0f files per run, identical %.0f", codes, static_cast<double>(runs[0].size()),
                    runs[0] == runs[1] ? 1.0 : 0.0)};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {"cost_volume_oracle", 5.0, cost_volume_oracle},
        {"uncertainty_map_exact", 0.0, uncertainty_exact},
        {"displacement_recovery", 0.0, displacement_recovery},
        {"gradient_fidelity", 30.0, gradient_fidelity},
        {"msam_bounds_reconstruction", 0.0, msam_bounds},
        {"loss_anchor_values", 0.0, loss_anchors},
        {"memory_read_attention", 0.0, memory_read_attention},
        {"motion_net_conformance", 0.0, motion_net_conformance},
        {"analytic_tracking", 60.0, analytic_tracking},
        {"toy_learning", 0.0, toy_learning},
        {"metrics_sanity", 0.0, metrics_sanity},
        {"segment_determinism", 0.0, segment_determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto& c = criteria[i];
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.time_limit_s > 0.0 && secs >= c.time_limit_s) {
            o.passed = false;
            o.detail += fmt("; exceeded %.0f s limit", c.time_limit_s);
        }
        failures += !o.passed;
        std::printf("%s %2zu %-28s %8.3f s  %s\n", o.passed ? "PASS" : "FAIL", i + 1, c.name.c_str(), secs,
                    o.detail.c_str());
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failures), criteria.size());
    return failures == 0 ? 0 : 1;
}
