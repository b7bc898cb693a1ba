#include "muvos/report.hpp"

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "muvos/errors.hpp"
#include "muvos/image_io.hpp"
#include "muvos/metrics.hpp"

namespace muvos {

namespace {

std::vector<std::filesystem::path> list_pgm(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".pgm") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

}  // namespace

FrameScore score_frame(const ObjectMask& pred, const ObjectMask& gt, double tolerance_fraction) {
    if (pred.height != gt.height || pred.width != gt.width) {
        throw ShapeError("score_frame: prediction is " + std::to_string(pred.height) + "x" +
                         std::to_string(pred.width) + ", ground truth " + std::to_string(gt.height) + "x" +
                         std::to_string(gt.width));
    }
    std::set<int> ids;
    for (int v : gt.labels)
        if (v > 0) ids.insert(v);
    for (int v : pred.labels)
        if (v > 0) ids.insert(v);
    FrameScore s;
    if (ids.empty()) {
        s.j = s.f = s.jf = 1.0;
        return s;
    }
    const double tol = boundary_tolerance(gt.height, gt.width, tolerance_fraction);
    for (int id : ids) {
        s.j += jaccard_j(pred, gt, id);
        s.f += boundary_f(pred, gt, id, tol);
    }
    s.j /= static_cast<double>(ids.size());
    s.f /= static_cast<double>(ids.size());
    s.jf = 0.5 * (s.j + s.f);
    return s;
}

EvalReport evaluate(const std::vector<ObjectMask>& pred, const std::vector<ObjectMask>& gt,
                    const std::vector<std::string>& names, double tolerance_fraction) {
    if (pred.size() != gt.size() || pred.size() != names.size()) {
        throw ValidationError("evaluate: " + std::to_string(pred.size()) + " predictions, " +
                              std::to_string(gt.size()) + " ground truths, " + std::to_string(names.size()) +
                              " names");
    }
    EvalReport r;
    r.frames.resize(pred.size());
    const auto n = static_cast<long>(pred.size());
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        r.frames[k] = score_frame(pred[k], gt[k], tolerance_fraction);
        r.frames[k].frame = names[k];
    }
    if (r.frames.empty()) return r;
    for (const auto& f : r.frames) {
        r.mean_j += f.j;
        r.mean_f += f.f;
        r.mean_jf += f.jf;
    }
    const double inv = 1.0 / static_cast<double>(r.frames.size());
    r.mean_j *= inv;
    r.mean_f *= inv;
    r.mean_jf *= inv;
    return r;
}

EvalReport evaluate_directories(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                                double tolerance_fraction) {
    const auto preds = list_pgm(pred_dir);
    if (!std::filesystem::is_directory(gt_dir)) throw IoError("not a directory: " + gt_dir.string());
    if (preds.empty()) throw IoError("no .pgm masks in " + pred_dir.string());
    std::vector<ObjectMask> pred, gt;
    std::vector<std::string> names;
    for (const auto& p : preds) {
        const auto g = gt_dir / p.filename();
        if (!std::filesystem::exists(g)) throw IoError("no ground truth for " + p.filename().string() + " in " + gt_dir.string());
        pred.push_back(load_mask(p));
        gt.push_back(load_mask(g));
        names.push_back(p.stem().string());
    }
    return evaluate(pred, gt, names, tolerance_fraction);
}

std::string report_to_jsonl(const EvalReport& report) {
    std::string out;
    for (const auto& f : report.frames) {
        out += nlohmann::json{{"frame", f.frame}, {"J", f.j}, {"F", f.f}, {"JF", f.jf}}.dump();
        out += '\n';
    }
    const nlohmann::json summary{{"summary", true},
                                 {"frames", report.frames.size()},
                                 {"mean_J", report.mean_j},
                                 {"mean_F", report.mean_f},
                                 {"mean_JF", report.mean_jf}};
    out += summary.dump();
    out += '\n';
    return out;
}

}  // namespace muvos
