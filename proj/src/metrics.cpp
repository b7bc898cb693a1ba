#include "muvos/metrics.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "muvos/errors.hpp"

namespace muvos {

namespace {

void check_dims(const ObjectMask& a, const ObjectMask& b) {
    if (a.height != b.height || a.width != b.width) {
        throw ShapeError("mask dimensions differ: " + std::to_string(a.height) + "x" + std::to_string(a.width) +
                         " vs " + std::to_string(b.height) + "x" + std::to_string(b.width));
    }
}

std::vector<std::pair<int, int>> disk_offsets(double radius) {
    std::vector<std::pair<int, int>> offs;
    const int r = static_cast<int>(std::floor(radius));
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
            if (dy * dy + dx * dx <= radius * radius) offs.emplace_back(dy, dx);
    return offs;
}

double f_measure(double precision, double recall) {
    return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

}  // namespace

double boundary_tolerance(std::size_t height, std::size_t width, double fraction) {
    return fraction * std::hypot(static_cast<double>(height), static_cast<double>(width));
}

double jaccard_j(const ObjectMask& pred, const ObjectMask& gt, int object_id) {
    check_dims(pred, gt);
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < gt.labels.size(); ++i) {
        const bool p = pred.labels[i] == object_id, g = gt.labels[i] == object_id;
        inter += p && g;
        uni += p || g;
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<bool> boundary_pixels(const ObjectMask& m, int object_id) {
    const auto h = static_cast<long>(m.height), w = static_cast<long>(m.width);
    std::vector<bool> b(m.labels.size(), false);
    auto inside = [&](long y, long x) {
        return y >= 0 && y < h && x >= 0 && x < w && m.labels[static_cast<std::size_t>(y * w + x)] == object_id;
    };
    for (long y = 0; y < h; ++y) {
        for (long x = 0; x < w; ++x) {
            if (!inside(y, x)) continue;
            b[static_cast<std::size_t>(y * w + x)] =
                !inside(y - 1, x) || !inside(y + 1, x) || !inside(y, x - 1) || !inside(y, x + 1);
        }
    }
    return b;
}

double boundary_f(const ObjectMask& pred, const ObjectMask& gt, int object_id, double tolerance_px) {
    check_dims(pred, gt);
    const auto pb = boundary_pixels(pred, object_id);
    const auto gb = boundary_pixels(gt, object_id);
    const auto h = static_cast<long>(gt.height), w = static_cast<long>(gt.width);
    const auto disk = disk_offsets(tolerance_px);

    auto dilate = [&](const std::vector<bool>& src) {
        std::vector<bool> out(src.size(), false);
        for (long y = 0; y < h; ++y) {
            for (long x = 0; x < w; ++x) {
                if (!src[static_cast<std::size_t>(y * w + x)]) continue;
                for (auto [dy, dx] : disk) {
                    const long yy = y + dy, xx = x + dx;
                    if (yy >= 0 && yy < h && xx >= 0 && xx < w) out[static_cast<std::size_t>(yy * w + xx)] = true;
                }
            }
        }
        return out;
    };
    const auto pd = dilate(pb), gd = dilate(gb);

    std::size_t n_pred = 0, n_gt = 0, pred_hit = 0, gt_hit = 0;
    for (std::size_t i = 0; i < pb.size(); ++i) {
        n_pred += pb[i];
        n_gt += gb[i];
        pred_hit += pb[i] && gd[i];
        gt_hit += gb[i] && pd[i];
    }
    if (n_pred == 0 && n_gt == 0) return 1.0;
    if (n_pred == 0 || n_gt == 0) return 0.0;
    return f_measure(static_cast<double>(pred_hit) / static_cast<double>(n_pred),
                     static_cast<double>(gt_hit) / static_cast<double>(n_gt));
}

double boundary_f_exact(const ObjectMask& pred, const ObjectMask& gt, int object_id, double tolerance_px) {
    check_dims(pred, gt);
    const auto pb = boundary_pixels(pred, object_id);
    const auto gb = boundary_pixels(gt, object_id);
    const auto w = static_cast<long>(gt.width), h = static_cast<long>(gt.height);

    std::vector<long> pred_pts, gt_index(gb.size(), -1);
    long n_gt = 0;
    for (std::size_t i = 0; i < pb.size(); ++i) {
        if (pb[i]) pred_pts.push_back(static_cast<long>(i));
        if (gb[i]) gt_index[i] = n_gt++;
    }
    if (pred_pts.empty() && n_gt == 0) return 1.0;
    if (pred_pts.empty() || n_gt == 0) return 0.0;

    const auto disk = disk_offsets(tolerance_px);
    std::vector<std::vector<long>> adj(pred_pts.size());
    for (std::size_t i = 0; i < pred_pts.size(); ++i) {
        const long y = pred_pts[i] / w, x = pred_pts[i] % w;
        for (auto [dy, dx] : disk) {
            const long yy = y + dy, xx = x + dx;
            if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
            const long g = gt_index[static_cast<std::size_t>(yy * w + xx)];
            if (g >= 0) adj[i].push_back(g);
        }
    }

    // Kuhn's augmenting paths, iterative to stay off the call stack.
    std::vector<long> match_gt(static_cast<std::size_t>(n_gt), -1);
    std::vector<int> seen(static_cast<std::size_t>(n_gt), -1);
    std::size_t matched = 0;
    for (std::size_t root = 0; root < pred_pts.size(); ++root) {
        struct Frame {
            long node;
            std::size_t next;
        };
        std::vector<Frame> stack{{static_cast<long>(root), 0}};
        std::vector<long> via;  // gt node chosen at each stack level
        bool found = false;
        while (!stack.empty() && !found) {
            Frame& f = stack.back();
            const auto& edges = adj[static_cast<std::size_t>(f.node)];
            if (f.next == edges.size()) {
                stack.pop_back();
                if (!via.empty()) via.pop_back();
                continue;
            }
            const long g = edges[f.next++];
            if (seen[static_cast<std::size_t>(g)] == static_cast<int>(root)) continue;
            seen[static_cast<std::size_t>(g)] = static_cast<int>(root);
            via.push_back(g);
            const long owner = match_gt[static_cast<std::size_t>(g)];
            if (owner < 0) {
                found = true;
            } else {
                stack.push_back({owner, 0});
            }
        }
        if (!found) continue;
        // stack[i].node is re-matched to via[i].
        for (std::size_t i = 0; i < via.size(); ++i) match_gt[static_cast<std::size_t>(via[i])] = stack[i].node;
        ++matched;
    }

    return f_measure(static_cast<double>(matched) / static_cast<double>(pred_pts.size()),
                     static_cast<double>(matched) / static_cast<double>(n_gt));
}

}  // namespace muvos
