#include "muvos/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "muvos/errors.hpp"

namespace muvos {

namespace {

std::array<std::size_t, 5> encoder_channels(std::size_t in, std::size_t d) {
    return {in, std::max<std::size_t>(d / 8, 1), std::max<std::size_t>(d / 4, 1), std::max<std::size_t>(d / 2, 1), d};
}

std::array<ConvParams, 4> make_encoder(std::size_t in, std::size_t d, unsigned long long seed) {
    const auto ch = encoder_channels(in, d);
    std::array<ConvParams, 4> enc;
    for (std::size_t i = 0; i < 4; ++i) enc[i] = ConvParams::fan_in_uniform(ch[i + 1], ch[i], 3, seed + i);
    return enc;
}

Tensor run_encoder(const Tensor& x, const std::array<ConvParams, 4>& enc) {
    Tensor h = x;
    for (std::size_t i = 0; i < enc.size(); ++i) {
        h = conv2d(h, enc[i].weights, enc[i].bias, 2, 1);
        if (i + 1 < enc.size()) h = pointwise(Activation::relu, h);
    }
    return h;
}

void check_stride_aligned(const Tensor& img, std::size_t channels, const char* op) {
    if (img.rank() != 3 || img.dim(0) != channels) {
        throw ShapeError(std::string(op) + ": expected " + std::to_string(channels) + " x H x W, got " +
                         shape_str(img.shape()));
    }
    if (img.dim(1) % kEncoderStride != 0 || img.dim(2) % kEncoderStride != 0) {
        throw ShapeError(std::string(op) + ": image " + shape_str(img.shape()) +
                         " is not a multiple of 16 (pad with pad_to_stride)");
    }
}

// Mean of each channel over non-overlapping 16x16 cells.
Tensor cell_average(const Tensor& img) {
    const std::size_t c = img.dim(0), gh = img.dim(1) / kEncoderStride, gw = img.dim(2) / kEncoderStride;
    Tensor out({c, gh, gw});
    const double inv = 1.0 / static_cast<double>(kEncoderStride * kEncoderStride);
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t gy = 0; gy < gh; ++gy) {
            for (std::size_t gx = 0; gx < gw; ++gx) {
                double s = 0.0;
                for (std::size_t y = 0; y < kEncoderStride; ++y)
                    for (std::size_t x = 0; x < kEncoderStride; ++x)
                        s += img.at(ch, gy * kEncoderStride + y, gx * kEncoderStride + x);
                out.at(ch, gy, gx) = s * inv;
            }
        }
    }
    return out;
}

// Homogeneous colour coordinates (r - 1/2, g - 1/2, b - 1/2, 1/2) tiled cyclically
// to d channels. The constant component keeps cell vectors away from zero and lets
// the colour be recovered after any positive per-position rescaling.
Tensor analytic_colour_feature(const Tensor& img, std::size_t d) {
    const Tensor mean = cell_average(img);
    const std::size_t gh = mean.dim(1), gw = mean.dim(2);
    Tensor f({d, gh, gw});
    for (std::size_t c = 0; c < d; ++c) {
        const std::size_t stat = c % 4;
        for (std::size_t y = 0; y < gh; ++y)
            for (std::size_t x = 0; x < gw; ++x) f.at(c, y, x) = stat < 3 ? mean.at(stat, y, x) - 0.5 : 0.5;
    }
    return f;
}

// Mean cell colour (3 x H' x W') from homogeneous coordinates.
Tensor dehomogenise(const Tensor& feature) {
    const std::size_t gh = feature.dim(1), gw = feature.dim(2);
    Tensor rgb({3, gh, gw});
    for (std::size_t y = 0; y < gh; ++y) {
        for (std::size_t x = 0; x < gw; ++x) {
            const double scale = 2.0 * feature.at(3, y, x);
            for (std::size_t c = 0; c < 3; ++c) rgb.at(c, y, x) = feature.at(c, y, x) / scale + 0.5;
        }
    }
    return rgb;
}

constexpr std::size_t kAnalyticValueDim = 8;

// Keys whose dot products give a Gaussian in grid distance (bandwidth sigma) up to a
// per-query constant: query (x/s, y/s, 1), memory (x/s, y/s, -(x^2 + y^2) / 2s^2).
Tensor positional_key(std::size_t gh, std::size_t gw, double sigma, bool memory_side) {
    Tensor k({3, gh, gw});
    for (std::size_t y = 0; y < gh; ++y) {
        for (std::size_t x = 0; x < gw; ++x) {
            const double fx = static_cast<double>(x), fy = static_cast<double>(y);
            k.at(0, y, x) = fx / sigma;
            k.at(1, y, x) = fy / sigma;
            k.at(2, y, x) = memory_side ? -(fx * fx + fy * fy) / (2.0 * sigma * sigma) : 1.0;
        }
    }
    return k;
}

// Per-cell statistics the analytic decoder interpolates: object colour prototype (3),
// background colour prototype (3), object share of the retrieved mass (1).
Tensor analytic_prototypes(const Tensor& read) {
    const std::size_t gh = read.dim(1), gw = read.dim(2);
    Tensor out({7, gh, gw});
    for (std::size_t y = 0; y < gh; ++y) {
        for (std::size_t x = 0; x < gw; ++x) {
            const double w_obj = read.at(3, y, x), w_bg = read.at(7, y, x);
            for (std::size_t c = 0; c < 3; ++c) {
                out.at(c, y, x) = w_obj > 0.0 ? read.at(c, y, x) / w_obj : 0.0;
                out.at(3 + c, y, x) = w_bg > 0.0 ? read.at(4 + c, y, x) / w_bg : 0.0;
            }
            out.at(6, y, x) = w_obj / std::max(w_obj + w_bg, 1e-300);
        }
    }
    return out;
}

// Position of a pixel colour on the segment from the background prototype to the
// object prototype, clamped to [0, 1].
double prototype_projection(const Tensor& proto, const Tensor& image, std::size_t y, std::size_t x) {
    constexpr double kPure = 1e-9;
    const double share = proto.at(6, y, x);
    if (share < kPure) return 0.0;
    if (share > 1.0 - kPure) return 1.0;
    double dd = 0.0, proj = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
        const double delta = proto.at(c, y, x) - proto.at(3 + c, y, x);
        dd += delta * delta;
        proj += (image.at(c, y, x) - proto.at(3 + c, y, x)) * delta;
    }
    if (dd < 1e-6) return share;  // no colour contrast: fall back to the retrieved vote
    return std::clamp(proj / dd, 0.0, 1.0);
}

}  // namespace

PipelineParams make_pipeline_params(const RunConfig& config) {
    config.validate();
    if (config.mode == PipelineMode::analytic && config.feature_dim < 8) {
        throw ValidationError("analytic mode needs feature_dim >= 8");
    }
    const std::size_t d = config.feature_dim;
    const unsigned long long s = config.seed * 7919ULL;
    PipelineParams p;
    p.query_encoder = make_encoder(3, d, s + 100);
    p.reference_encoder = make_encoder(4, d, s + 200);
    p.motion_net = motion_net_init(d, config.seed);
    p.msam = MsamParams::zeros(d);
    if (config.mode == PipelineMode::analytic) {
        p.projection = ConvParams::zeros(d / 4, d, 1);
        for (std::size_t c = 0; c < d / 4; ++c) p.projection.weights.at(c, c, 0, 0) = 1.0;
    } else {
        p.projection = ConvParams::fan_in_uniform(d / 4, d, 1, s + 300);
    }
    const std::size_t dk = config.key_dim(), dv = config.value_dim();
    p.query_key = ConvParams::fan_in_uniform(dk, d, 1, s + 400);
    p.query_value = ConvParams::fan_in_uniform(dv, d, 1, s + 401);
    p.memory_key = ConvParams::fan_in_uniform(dk, d, 1, s + 402);
    p.memory_value = ConvParams::fan_in_uniform(dv, d, 1, s + 403);
    p.decoder[0] = ConvParams::fan_in_uniform(dv, 2 * dv, 3, s + 500);
    p.decoder[1] = ConvParams::fan_in_uniform(1, dv, 3, s + 501);
    return p;
}

Tensor pad_to_stride(const Tensor& img) {
    if (img.rank() != 3) throw ShapeError("pad_to_stride: expected C x H x W, got " + shape_str(img.shape()));
    auto up = [](std::size_t n) { return (n + kEncoderStride - 1) / kEncoderStride * kEncoderStride; };
    const std::size_t h = up(img.dim(1)), w = up(img.dim(2));
    if (h == img.dim(1) && w == img.dim(2)) return img;
    Tensor out({img.dim(0), h, w});
    for (std::size_t c = 0; c < img.dim(0); ++c)
        for (std::size_t y = 0; y < img.dim(1); ++y)
            for (std::size_t x = 0; x < img.dim(2); ++x) out.at(c, y, x) = img.at(c, y, x);
    return out;
}

Tensor encode_query(const Tensor& img, const PipelineParams& p, PipelineMode mode) {
    check_stride_aligned(img, 3, "encode_query");
    if (mode == PipelineMode::analytic) return analytic_colour_feature(img, p.motion_net.out_dim());
    return run_encoder(img, p.query_encoder);
}

Tensor encode_reference(const Tensor& img, const Tensor& mask, const PipelineParams& p, PipelineMode mode) {
    check_stride_aligned(img, 3, "encode_reference");
    if (mask.shape() != Shape{1, img.dim(1), img.dim(2)}) {
        throw ShapeError("encode_reference: mask " + shape_str(mask.shape()) + " does not match image " +
                         shape_str(img.shape()));
    }
    if (mode == PipelineMode::analytic) {
        Tensor f = analytic_colour_feature(img, p.motion_net.out_dim());
        const Tensor occupancy = cell_average(mask);
        const std::size_t last = f.dim(0) - 1;
        for (std::size_t y = 0; y < f.dim(1); ++y)
            for (std::size_t x = 0; x < f.dim(2); ++x) f.at(last, y, x) = occupancy.at(0, y, x);
        return f;
    }
    return run_encoder(concat_channels({&img, &mask}), p.reference_encoder);
}

QueryEmbedding embed_query(const Tensor& fused, const PipelineParams& p, const RunConfig& config) {
    if (config.mode == PipelineMode::analytic) {
        const std::size_t gh = fused.dim(1), gw = fused.dim(2);
        Tensor value({kAnalyticValueDim, gh, gw});
        const Tensor rgb = dehomogenise(fused);
        std::copy(rgb.data().begin(), rgb.data().end(), value.data().begin());
        return {positional_key(gh, gw, config.analytic_locality, false), std::move(value)};
    }
    return embed_kv(fused, p.query_key, p.query_value);
}

QueryEmbedding embed_reference(const Tensor& ref_feature, const PipelineParams& p, const RunConfig& config) {
    if (config.mode == PipelineMode::analytic) {
        // (occ * rgb, occ, (1 - occ) * rgb, 1 - occ) per cell.
        const std::size_t gh = ref_feature.dim(1), gw = ref_feature.dim(2), last = ref_feature.dim(0) - 1;
        const Tensor rgb = dehomogenise(ref_feature);
        Tensor value({kAnalyticValueDim, gh, gw});
        for (std::size_t y = 0; y < gh; ++y) {
            for (std::size_t x = 0; x < gw; ++x) {
                const double occ = ref_feature.at(last, y, x);
                for (std::size_t c = 0; c < 3; ++c) {
                    value.at(c, y, x) = occ * rgb.at(c, y, x);
                    value.at(4 + c, y, x) = (1.0 - occ) * rgb.at(c, y, x);
                }
                value.at(3, y, x) = occ;
                value.at(7, y, x) = 1.0 - occ;
            }
        }
        return {positional_key(gh, gw, config.analytic_locality, true), std::move(value)};
    }
    return embed_kv(ref_feature, p.memory_key, p.memory_value);
}

Tensor decode(const Tensor& read_feature, const Tensor& image, const PipelineParams& p, PipelineMode mode) {
    if (read_feature.rank() != 3) throw ShapeError("decode: expected C x H' x W', got " + shape_str(read_feature.shape()));
    if (image.rank() != 3 || image.dim(0) != 3) throw ShapeError("decode: expected 3 x H x W image, got " + shape_str(image.shape()));
    const std::size_t out_h = image.dim(1), out_w = image.dim(2);
    if (mode == PipelineMode::analytic) {
        if (read_feature.dim(0) != 2 * kAnalyticValueDim) {
            throw ShapeError("decode: analytic read feature must have 16 channels, got " +
                             shape_str(read_feature.shape()));
        }
        const Tensor proto = bilinear_resize(analytic_prototypes(read_feature), out_h, out_w);
        Tensor prob({1, out_h, out_w});
        for (std::size_t y = 0; y < out_h; ++y)
            for (std::size_t x = 0; x < out_w; ++x) prob.at(0, y, x) = prototype_projection(proto, image, y, x);
        return prob;
    }
    Tensor h = pointwise(Activation::relu, conv2d_same(read_feature, p.decoder[0]));
    h = bilinear_resize(h, 2 * h.dim(1), 2 * h.dim(2));
    h = conv2d_same(h, p.decoder[1]);
    h = bilinear_resize(h, 2 * h.dim(1), 2 * h.dim(2));
    return pointwise(Activation::sigmoid, bilinear_resize(h, out_h, out_w));
}

ObjectMask soft_aggregate(const Tensor& per_object_probs) {
    if (per_object_probs.rank() != 3) {
        throw ShapeError("soft_aggregate: expected K x H x W, got " + shape_str(per_object_probs.shape()));
    }
    const std::size_t k = per_object_probs.dim(0), h = per_object_probs.dim(1), w = per_object_probs.dim(2);
    const std::size_t plane = h * w;
    ObjectMask m{h, w, std::vector<int>(plane, 0), Tensor({k, h, w})};
    std::vector<double> odds(k + 1);
    for (std::size_t i = 0; i < plane; ++i) {
        double background = 1.0;
        for (std::size_t o = 0; o < k; ++o) {
            const double p = std::clamp(per_object_probs[o * plane + i], 1e-7, 1.0 - 1e-7);
            background *= 1.0 - p;
            odds[o + 1] = p / (1.0 - p);
        }
        background = std::clamp(background, 1e-7, 1.0 - 1e-7);
        odds[0] = background / (1.0 - background);
        double total = 0.0;
        for (double v : odds) total += v;
        int best = 0;
        double best_p = odds[0] / total;
        for (std::size_t o = 0; o < k; ++o) {
            const double p = odds[o + 1] / total;
            m.probs[o * plane + i] = p;
            if (p > best_p) {
                best_p = p;
                best = static_cast<int>(o + 1);
            }
        }
        m.labels[i] = best;
    }
    return m;
}

namespace {

Tensor crop(const Tensor& t, std::size_t h, std::size_t w) {
    if (t.dim(1) == h && t.dim(2) == w) return t;
    Tensor out({t.dim(0), h, w});
    for (std::size_t c = 0; c < t.dim(0); ++c)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) out.at(c, y, x) = t.at(c, y, x);
    return out;
}

void remember(PipelineState& s, const Tensor& padded_image, const ObjectMask& mask) {
    for (std::size_t o = 0; o < s.num_objects; ++o) {
        const Tensor plane = pad_to_stride(mask.binary_plane(static_cast<int>(o + 1)));
        const Tensor ref = encode_reference(padded_image, plane, s.params, s.config.mode);
        QueryEmbedding kv = embed_reference(ref, s.params, s.config);
        s.banks[o].write(s.frame_index, std::move(kv.key), std::move(kv.value));
    }
}

void check_frame(const Tensor& frame, std::size_t h, std::size_t w) {
    if (frame.rank() != 3 || frame.dim(0) != 3 || frame.dim(1) != h || frame.dim(2) != w) {
        throw ShapeError("frame " + shape_str(frame.shape()) + " does not match sequence size 3x" + std::to_string(h) +
                         "x" + std::to_string(w));
    }
}

}  // namespace

PipelineState init_pipeline(const RunConfig& config, PipelineParams params, const Tensor& first_frame,
                            const ObjectMask& first_mask) {
    config.validate();
    if (first_frame.rank() != 3 || first_frame.dim(0) != 3) {
        throw ShapeError("first frame must be 3 x H x W, got " + shape_str(first_frame.shape()));
    }
    check_frame(first_frame, first_mask.height, first_mask.width);
    const int k = first_mask.max_label();
    if (k == 0) throw ValidationError("first-frame mask contains no object");

    PipelineState s;
    s.config = config;
    s.params = std::move(params);
    s.num_objects = static_cast<std::size_t>(k);
    s.height = first_mask.height;
    s.width = first_mask.width;
    s.frame_index = 1;
    s.banks.resize(s.num_objects);
    s.prev_image = pad_to_stride(first_frame);
    s.prev_feature = encode_query(s.prev_image, s.params, config.mode);
    s.prev_mask = first_mask;
    remember(s, s.prev_image, first_mask);
    return s;
}

FrameResult segment_frame(PipelineState& s, const Tensor& frame) {
    if (!s.initialized()) throw ValidationError("segment_frame: pipeline state has no first frame");
    check_frame(frame, s.height, s.width);
    const RunConfig& cfg = s.config;
    const Tensor image = pad_to_stride(frame);

    const Tensor feature = encode_query(image, s.params, cfg.mode);
    const Tensor reduced_t = project_features(feature, s.params.projection);
    const Tensor reduced_prev = project_features(s.prev_feature, s.params.projection);
    MotionBundle motion = compute_motion(reduced_t, reduced_prev, cfg.window(), cfg.softargmin_sign,
                                         cfg.softargmin_beta);

    const Tensor motion_feature = motion_net_forward(s.params.motion_net, motion.motion_input);
    const Tensor fused = msam_fuse(feature, motion_feature, s.params.msam);
    const QueryEmbedding query = embed_query(fused, s.params, cfg);

    Tensor probs({s.num_objects, s.height, s.width});
    const std::size_t plane = s.height * s.width;
    for (std::size_t o = 0; o < s.num_objects; ++o) {
        const Tensor read = memory_read(s.banks[o], query);
        const Tensor prob = crop(decode(read, image, s.params, cfg.mode), s.height, s.width);
        std::copy(prob.data().begin(), prob.data().end(), probs.data().begin() + static_cast<std::ptrdiff_t>(o * plane));
    }
    ObjectMask mask = soft_aggregate(probs);

    s.frame_index += 1;
    s.prev_image = image;
    s.prev_feature = feature;
    s.prev_mask = mask;
    if ((static_cast<std::size_t>(s.frame_index) - 1) % cfg.memory_every == 0) remember(s, image, mask);
    return {std::move(mask), std::move(motion)};
}

std::vector<FrameResult> run_sequence_with_motion(const std::vector<Tensor>& frames, const ObjectMask& first_mask,
                                                  const RunConfig& config) {
    if (frames.size() < 2) throw ValidationError("run_sequence needs at least two frames");
    PipelineState s = init_pipeline(config, make_pipeline_params(config), frames.front(), first_mask);
    std::vector<FrameResult> out;
    out.reserve(frames.size() - 1);
    for (std::size_t t = 1; t < frames.size(); ++t) out.push_back(segment_frame(s, frames[t]));
    return out;
}

std::vector<ObjectMask> run_sequence(const std::vector<Tensor>& frames, const ObjectMask& first_mask,
                                     const RunConfig& config) {
    auto results = run_sequence_with_motion(frames, first_mask, config);
    std::vector<ObjectMask> masks;
    masks.reserve(results.size());
    for (auto& r : results) masks.push_back(std::move(r.mask));
    return masks;
}

}  // namespace muvos
