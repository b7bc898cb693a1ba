#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "muvos/object_mask.hpp"

namespace muvos {

struct FrameScore {
    std::string frame;  // file stem, e.g. "00002"
    double j = 0.0;
    double f = 0.0;
    double jf = 0.0;  // (j + f) / 2
};

struct EvalReport {
    std::vector<FrameScore> frames;
    double mean_j = 0.0;
    double mean_f = 0.0;
    double mean_jf = 0.0;
};

/// Scores one predicted frame against its ground truth, averaging J and F over the
/// object ids present in either mask (J = F = 1 when neither has an object).
FrameScore score_frame(const ObjectMask& pred, const ObjectMask& gt, double tolerance_fraction);

/// Scores aligned lists of frames; `names` labels each pair in the report.
EvalReport evaluate(const std::vector<ObjectMask>& pred, const std::vector<ObjectMask>& gt,
                    const std::vector<std::string>& names, double tolerance_fraction);

/// Scores every PGM in `pred_dir` against the file of the same name in `gt_dir`.
/// Ground-truth files without a prediction (such as the annotated first frame) are
/// skipped; a prediction without ground truth is an IoError.
EvalReport evaluate_directories(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                                double tolerance_fraction);

/// One JSON object per frame, then a summary object.
std::string report_to_jsonl(const EvalReport& report);

}  // namespace muvos
