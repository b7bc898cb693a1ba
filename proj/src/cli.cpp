#include "muvos/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <ostream>

#include <CLI11.hpp>

#include "muvos/config.hpp"
#include "muvos/errors.hpp"
#include "muvos/image_io.hpp"
#include "muvos/param_io.hpp"
#include "muvos/pipeline.hpp"
#include "muvos/report.hpp"
#include "muvos/selftest.hpp"
#include "muvos/visualize.hpp"

namespace muvos {

namespace fs = std::filesystem;

namespace {

struct SegmentArgs {
    std::string frames, first_mask, out, config, motion_params, msam_params;
    bool emit_flow = false, emit_uncertainty = false;
};

struct EvalArgs {
    std::string pred, gt, report;
    double tolerance_fraction = kDefaultBoundaryToleranceFraction;
};

std::string frame_name(std::size_t index) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%05zu", index);
    return buf;
}

std::vector<fs::path> list_frames(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".ppm") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

// Grid-resolution visualisation stretched over the padded frame, cropped to h x w.
Tensor to_frame_size(const Tensor& grid_rgb, std::size_t h, std::size_t w) {
    const Tensor full = bilinear_resize(grid_rgb, grid_rgb.dim(1) * kEncoderStride, grid_rgb.dim(2) * kEncoderStride);
    Tensor out({3, h, w});
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) out.at(c, y, x) = full.at(c, y, x);
    return out;
}

int segment(const SegmentArgs& a, std::ostream& out) {
    const RunConfig cfg = a.config.empty() ? RunConfig{} : load_config(a.config);
    PipelineParams params = make_pipeline_params(cfg);
    if (!a.motion_params.empty()) {
        params.motion_net = load_motion_net(a.motion_params);
        if (params.motion_net.out_dim() != cfg.feature_dim) {
            throw ValidationError("motion net outputs " + std::to_string(params.motion_net.out_dim()) +
                                  " channels but feature_dim is " + std::to_string(cfg.feature_dim));
        }
    }
    if (!a.msam_params.empty()) {
        params.msam = load_msam(a.msam_params);
        if (params.msam.conv.weights.dim(1) != cfg.feature_dim) {
            throw ValidationError("attention parameters do not match feature_dim " + std::to_string(cfg.feature_dim));
        }
    }

    const auto frames = list_frames(a.frames);
    if (frames.size() < 2) throw ValidationError("need at least two .ppm frames in " + a.frames);
    const ObjectMask first_mask = load_mask(a.first_mask);
    fs::create_directories(a.out);

    PipelineState state = init_pipeline(cfg, std::move(params), load_image(frames[0]), first_mask);
    for (std::size_t t = 1; t < frames.size(); ++t) {
        const FrameResult r = segment_frame(state, load_image(frames[t]));
        const std::string name = frame_name(t + 1);
        save_mask(fs::path(a.out) / (name + ".pgm"), r.mask);
        if (a.emit_flow) {
            save_image(fs::path(a.out) / (name + "_flow.ppm"),
                       to_frame_size(visualize_flow(r.motion.displacement), state.height, state.width));
        }
        if (a.emit_uncertainty) {
            const Tensor& unc = r.motion.uncertainty;
            const Tensor heat = visualize_uncertainty(unc, unc.dim(1) * kEncoderStride, unc.dim(2) * kEncoderStride);
            save_image(fs::path(a.out) / (name + "_unc.ppm"), to_frame_size(heat, state.height, state.width));
        }
    }
    out << "segmented " << frames.size() - 1 << " frames into " << a.out << '\n';
    return kExitOk;
}

int evaluate(const EvalArgs& a, std::ostream& out) {
    const EvalReport report = evaluate_directories(a.pred, a.gt, a.tolerance_fraction);
    const std::string text = report_to_jsonl(report);
    write_file(a.report, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
    char buf[128];
    std::snprintf(buf, sizeof buf, "frames=%zu J=%.4f F=%.4f J&F=%.4f\n", report.frames.size(), report.mean_j,
                  report.mean_f, report.mean_jf);
    out << buf;
    return kExitOk;
}

int selftest(unsigned long long seed, std::ostream& out) {
    bool ok = true;
    for (const auto& c : run_selftest(seed)) {
        out << (c.passed ? "PASS " : "FAIL ") << c.name << " (" << c.detail << ")\n";
        ok = ok && c.passed;
    }
    return ok ? kExitOk : kExitValidation;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Motion-uncertainty video object segmentation", "muvos"};
    app.require_subcommand(1);

    SegmentArgs seg;
    auto* seg_cmd = app.add_subcommand("segment", "Segment a frame sequence from its first-frame mask");
    seg_cmd->add_option("--frames", seg.frames, "Directory of .ppm frames, processed in name order")->required();
    seg_cmd->add_option("--first-mask", seg.first_mask, "PGM mask of the first frame (gray value = object id)")
        ->required();
    seg_cmd->add_option("--out", seg.out, "Output directory")->required();
    seg_cmd->add_option("--config", seg.config, "key = value configuration file");
    seg_cmd->add_option("--motion-params", seg.motion_params, "Motion net parameter file");
    seg_cmd->add_option("--msam-params", seg.msam_params, "Attention fusion parameter file");
    seg_cmd->add_flag("--emit-flow", seg.emit_flow, "Write NNNNN_flow.ppm displacement images");
    seg_cmd->add_flag("--emit-uncertainty", seg.emit_uncertainty, "Write NNNNN_unc.ppm uncertainty heat maps");

    EvalArgs ev;
    auto* eval_cmd = app.add_subcommand("eval", "Score predicted masks against ground truth");
    eval_cmd->add_option("--pred", ev.pred, "Directory of predicted .pgm masks")->required();
    eval_cmd->add_option("--gt", ev.gt, "Directory of ground-truth .pgm masks")->required();
    eval_cmd->add_option("--report", ev.report, "JSON Lines report to write")->required();
    eval_cmd->add_option("--tolerance-fraction", ev.tolerance_fraction, "Boundary tolerance as a fraction of the diagonal")
        ->check(CLI::Range(1e-9, 1.0));

    unsigned long long seed = 0;
    auto* self_cmd = app.add_subcommand("selftest", "Run the built-in oracle checks");
    self_cmd->add_option("--seed", seed, "Random seed");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "muvos: " << e.what() << "\n\n" << app.help();
        return kExitValidation;
    }

    try {
        if (*seg_cmd) return segment(seg, out);
        if (*eval_cmd) return evaluate(ev, out);
        return selftest(seed, out);
    } catch (const IoError& e) {
        err << "muvos: " << e.what() << '\n';
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        err << "muvos: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        err << "muvos: " << e.what() << '\n';
        return kExitValidation;
    }
}

}  // namespace muvos
