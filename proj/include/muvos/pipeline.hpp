#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "muvos/config.hpp"
#include "muvos/memory.hpp"
#include "muvos/motion_fusion.hpp"
#include "muvos/mu_layer.hpp"
#include "muvos/object_mask.hpp"
#include "muvos/ops.hpp"
#include "muvos/tensor.hpp"

namespace muvos {

inline constexpr std::size_t kEncoderStride = 16;

/// Every parameter set the segmentation loop needs.
///
/// Learned mode uses all of them. Analytic mode replaces the encoders, the key/value
/// embeddings and the decoder with fixed colour pooling, positional keys and a
/// per-pixel prototype projection, but still runs the projection, motion net and
/// attention fusion.
struct PipelineParams {
    std::array<ConvParams, 4> query_encoder;      // 3 -> ... -> D, 3x3 stride 2
    std::array<ConvParams, 4> reference_encoder;  // 4 -> ... -> D, 3x3 stride 2
    ConvParams projection;                        // 1x1, D -> D/4
    MotionNetParams motion_net;                   // 3 -> D
    MsamParams msam;                              // 1x1, D -> 1
    ConvParams query_key, query_value;            // 1x1, D -> Dk / Dv
    ConvParams memory_key, memory_value;          // 1x1, D -> Dk / Dv
    std::array<ConvParams, 2> decoder;            // 3x3, 2Dv -> Dv -> 1
};

/// Seeded initialisation. In analytic mode the projection keeps the first D/4
/// channels and the attention parameters are zero.
PipelineParams make_pipeline_params(const RunConfig& config);

/// Zero-pads bottom/right so both extents are multiples of 16.
Tensor pad_to_stride(const Tensor& img);

/// Stride-16 semantic feature of a 3 x H x W image (H, W multiples of 16).
Tensor encode_query(const Tensor& img, const PipelineParams& p, PipelineMode mode);

/// Stride-16 feature of an image plus its 1 x H x W object mask.
Tensor encode_reference(const Tensor& img, const Tensor& mask, const PipelineParams& p, PipelineMode mode);

/// Key/value embedding of a motion-fused query feature.
QueryEmbedding embed_query(const Tensor& fused, const PipelineParams& p, const RunConfig& config);

/// Key/value embedding of a reference feature for the memory bank.
QueryEmbedding embed_reference(const Tensor& ref_feature, const PipelineParams& p, const RunConfig& config);

/// Per-pixel object probability at the resolution of `image` (the padded query
/// frame, 3 x H x W). The analytic decoder uses the frame as a full-resolution skip
/// input; the learned decoder only takes its size.
Tensor decode(const Tensor& read_feature, const Tensor& image, const PipelineParams& p, PipelineMode mode);

/// Merges K per-object probability planes by normalised odds against the shared
/// background probability prod(1 - p_i).
ObjectMask soft_aggregate(const Tensor& per_object_probs);

struct PipelineState {
    RunConfig config;
    PipelineParams params;
    std::size_t num_objects = 0;
    std::size_t height = 0, width = 0;  // unpadded frame size
    int frame_index = 0;                // last processed frame (1-based)
    std::vector<MemoryBank> banks;      // one per object
    Tensor prev_image;                  // padded
    Tensor prev_feature;                // encode_query(prev_image)
    ObjectMask prev_mask;

    bool initialized() const { return frame_index > 0; }
};

struct FrameResult {
    ObjectMask mask;
    MotionBundle motion;
};

/// Seeds the state with frame 1 and its annotation.
PipelineState init_pipeline(const RunConfig& config, PipelineParams params, const Tensor& first_frame,
                            const ObjectMask& first_mask);

/// Segments the next frame and updates the state (memory written every
/// `memory_every` frames counted from frame 1).
FrameResult segment_frame(PipelineState& state, const Tensor& frame);

/// Masks for frames 2..T.
std::vector<ObjectMask> run_sequence(const std::vector<Tensor>& frames, const ObjectMask& first_mask,
                                     const RunConfig& config);

/// run_sequence that also returns each frame's motion bundle.
std::vector<FrameResult> run_sequence_with_motion(const std::vector<Tensor>& frames, const ObjectMask& first_mask,
                                                  const RunConfig& config);

}  // namespace muvos
