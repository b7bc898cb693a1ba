#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "muvos/errors.hpp"
#include "muvos/metrics.hpp"
#include "muvos/pipeline.hpp"
#include "muvos/synthetic.hpp"
#include "support.hpp"

using namespace muvos;
using muvos::testing::random_tensor;

namespace {

RunConfig analytic_config() {
    RunConfig c;
    c.mode = PipelineMode::analytic;
    c.feature_dim = 16;
    c.window_u = c.window_v = 9;
    return c;
}

RunConfig learned_config() {
    RunConfig c;
    c.feature_dim = 16;
    c.window_u = c.window_v = 5;
    return c;
}

// 16x16 cells coloured with a 3x3-periodic pattern of the eight RGB cube corners
// plus grey: no two cells within Chebyshev distance 2 share a colour.
Tensor periodic_texture(std::size_t h, std::size_t w) {
    static constexpr double kColours[9][3] = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 0},
                                              {0, 1, 1}, {1, 0, 1}, {1, 1, 1}, {0.5, 0.5, 0.5}};
    Tensor img({3, h, w});
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            const auto& rgb = kColours[(y / 16) % 3 * 3 + (x / 16) % 3];
            for (std::size_t c = 0; c < 3; ++c) img.at(c, y, x) = rgb[c];
        }
    return img;
}

double iou(const ObjectMask& a, const ObjectMask& b) { return jaccard_j(a, b, 1); }

}  // namespace

TEST(Encoders, ShapeContract) {
    std::mt19937_64 rng(1);
    const Tensor img = random_tensor(rng, {3, 64, 64}, 0, 1), mask({1, 64, 64}, 1.0);
    for (const RunConfig& cfg : {analytic_config(), learned_config()}) {
        const PipelineParams p = make_pipeline_params(cfg);
        EXPECT_EQ(encode_query(img, p, cfg.mode).shape(), (Shape{16, 4, 4}));
        EXPECT_EQ(encode_reference(img, mask, p, cfg.mode).shape(), (Shape{16, 4, 4}));
        EXPECT_THROW(encode_query(Tensor({3, 60, 64}), p, cfg.mode), ShapeError);
        EXPECT_THROW(encode_reference(img, Tensor({1, 32, 64}), p, cfg.mode), ShapeError);
    }
}

TEST(Encoders, AnalyticConstantImageIsSpatiallyConstant) {
    const RunConfig cfg = analytic_config();
    const Tensor f = encode_query(Tensor({3, 48, 32}, 0.3), make_pipeline_params(cfg), cfg.mode);
    for (std::size_t c = 0; c < 16; ++c)
        for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(f[c * 6 + i], f[c * 6]);
}

TEST(Encoders, AnalyticSquareMatchesAveragePool) {
    const RunConfig cfg = analytic_config();
    const PipelineParams p = make_pipeline_params(cfg);
    Tensor img({3, 64, 64}, 0.0), mask({1, 64, 64}, 0.0);
    for (std::size_t y = 20; y < 44; ++y)
        for (std::size_t x = 8; x < 40; ++x) {
            for (std::size_t c = 0; c < 3; ++c) img.at(c, y, x) = 1.0;
            mask.at(0, y, x) = 1.0;
        }
    const Tensor f = encode_query(img, p, cfg.mode), r = encode_reference(img, mask, p, cfg.mode);
    const Tensor background = encode_query(Tensor({3, 64, 64}, 0.0), p, cfg.mode);
    for (std::size_t gy = 0; gy < 4; ++gy)
        for (std::size_t gx = 0; gx < 4; ++gx) {
            double pooled = 0;
            for (std::size_t y = 0; y < 16; ++y)
                for (std::size_t x = 0; x < 16; ++x) pooled += mask.at(0, gy * 16 + y, gx * 16 + x) / 256.0;
            double energy = 0;
            for (std::size_t c = 0; c < 16; ++c) {
                const double d = f.at(c, gy, gx) - background.at(c, gy, gx);
                energy += d * d;
            }
            EXPECT_EQ(energy > 0.0, pooled > 0.0) << gy << "," << gx;
            EXPECT_NEAR(f.at(0, gy, gx), pooled - 0.5, 1e-12);
            EXPECT_EQ(r.at(15, gy, gx), pooled);
        }
}

TEST(Encoders, ReferenceSeesTheMask) {
    std::mt19937_64 rng(2);
    const Tensor img = random_tensor(rng, {3, 32, 32}, 0, 1);
    for (const RunConfig& cfg : {analytic_config(), learned_config()}) {
        const PipelineParams p = make_pipeline_params(cfg);
        EXPECT_NE(encode_reference(img, Tensor({1, 32, 32}, 0.0), p, cfg.mode),
                  encode_reference(img, Tensor({1, 32, 32}, 1.0), p, cfg.mode));
    }
}

TEST(Decode, LearnedOutputIsProbability) {
    const RunConfig cfg = learned_config();
    const PipelineParams p = make_pipeline_params(cfg);
    std::mt19937_64 rng(3);
    const Tensor read = random_tensor(rng, {16, 3, 4}, -3, 3);
    const Tensor prob = decode(read, Tensor({3, 48, 64}), p, cfg.mode);
    EXPECT_EQ(prob.shape(), (Shape{1, 48, 64}));
    for (double v : prob.data()) {
        EXPECT_GT(v, 0.0);
        EXPECT_LT(v, 1.0);
    }
}

TEST(Decode, AnalyticRecoversMatchedMemory) {
    const RunConfig cfg = analytic_config();
    const PipelineParams p = make_pipeline_params(cfg);
    Tensor img({3, 96, 96}, 0.1);
    std::vector<int> labels(96 * 96, 0);
    for (std::size_t y = 32; y < 64; ++y)
        for (std::size_t x = 16; x < 64; ++x) {
            img.at(0, y, x) = 0.9;
            img.at(2, y, x) = 0.6;
            labels[y * 96 + x] = 1;
        }
    const ObjectMask gt = ObjectMask::from_labels(96, 96, labels);
    MemoryBank bank;
    const QueryEmbedding ref = embed_reference(encode_reference(img, gt.binary_plane(1), p, cfg.mode), p, cfg);
    bank.write(1, ref.key, ref.value);
    const Tensor fused = 1.5 * encode_query(img, p, cfg.mode);
    const Tensor prob = decode(memory_read(bank, embed_query(fused, p, cfg)), img, p, cfg.mode);
    std::vector<int> pred(96 * 96);
    for (std::size_t i = 0; i < pred.size(); ++i) pred[i] = prob[i] > 0.5 ? 1 : 0;
    EXPECT_GE(iou(ObjectMask::from_labels(96, 96, pred), gt), 0.9);
    for (double v : prob.data()) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(SoftAggregate, Examples) {
    Tensor one({1, 2, 2}, 0.1);
    one[0] = one[1] = 0.9;
    const ObjectMask m = soft_aggregate(one);
    EXPECT_EQ(m.labels, (std::vector<int>{1, 1, 0, 0}));

    Tensor two({2, 1, 3}, 0.05);
    two.at(0, 0, 0) = 0.95;
    two.at(1, 0, 2) = 0.95;
    EXPECT_EQ(soft_aggregate(two).labels, (std::vector<int>{1, 0, 2}));

    for (int v : soft_aggregate(Tensor({3, 4, 4}, 0.01)).labels) EXPECT_EQ(v, 0);
}

TEST(SoftAggregate, TiesGoToLowerIndex) {
    EXPECT_EQ(soft_aggregate(Tensor({2, 1, 1}, 0.8)).labels[0], 1);
    // A single object at exactly 0.5 ties with the background.
    EXPECT_EQ(soft_aggregate(Tensor({1, 1, 1}, 0.5)).labels[0], 0);
}

TEST(SoftAggregate, LabelsAreArgmaxOfOwnProbabilities) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 10; ++trial) {
        const Tensor probs = random_tensor(rng, {3, 5, 5}, 0.0, 1.0);
        const ObjectMask m = soft_aggregate(probs);
        for (std::size_t i = 0; i < 25; ++i) {
            double bg = 1.0, best = -1.0;
            int arg = 0;
            for (std::size_t o = 0; o < 3; ++o) {
                const double p = m.probs[o * 25 + i];
                EXPECT_GE(p, 0.0);
                EXPECT_LE(p, 1.0);
                bg -= p;
                if (p > best) {
                    best = p;
                    arg = static_cast<int>(o + 1);
                }
            }
            EXPECT_EQ(m.labels[i], best > bg ? arg : 0);
        }
    }
}

TEST(SegmentFrame, StaticSceneKeepsTheMask) {
    const SyntheticSequence seq = make_square_sequence(SquareScene{.dx = 0}, 2);
    const auto masks = run_sequence(seq.frames, seq.masks[0], analytic_config());
    ASSERT_EQ(masks.size(), 1u);
    EXPECT_GE(iou(masks[0], seq.masks[0]), 0.95);
}

// Needs features that are unique within the search window: flat regions and image
// borders would otherwise pull the expectation away from zero.
TEST(SegmentFrame, IdenticalFramesHaveNoDisplacement) {
    const Tensor img = periodic_texture(128, 128);
    std::vector<int> labels(128 * 128, 0);
    for (std::size_t i = 0; i < 40 * 128; ++i) labels[i] = 1;
    RunConfig cfg = analytic_config();
    cfg.window_u = cfg.window_v = 5;
    const auto results = run_sequence_with_motion({img, img}, ObjectMask::from_labels(128, 128, labels), cfg);
    double worst = 0;
    for (double v : results[0].motion.displacement.data()) worst = std::max(worst, std::abs(v));
    EXPECT_LT(worst, 0.1);
}

TEST(SegmentFrame, DisplacementPointsBackToThePreviousFrame) {
    SquareScene scene{.x0 = 32, .y0 = 32, .dx = 16, .dy = 0, .patchwork = true};
    const SyntheticSequence seq = make_square_sequence(scene, 2);
    RunConfig cfg = analytic_config();
    cfg.window_u = cfg.window_v = 3;
    const auto r = run_sequence_with_motion(seq.frames, seq.masks[0], cfg);
    const Tensor& d = r[0].motion.displacement;
    // Frame 2 square covers grid cells x 3..5, y 2..4; it came from one cell to the left.
    for (std::size_t gy = 2; gy <= 4; ++gy)
        for (std::size_t gx = 3; gx <= 5; ++gx) {
            EXPECT_NEAR(d.at(0, gy, gx), -1.0, 0.5) << gy << "," << gx;
            EXPECT_NEAR(d.at(1, gy, gx), 0.0, 0.5) << gy << "," << gx;
        }
}

TEST(SegmentFrame, MotionUsesOnlyAdjacentFrames) {
    const SyntheticSequence seq = make_square_sequence(SquareScene{.patchwork = true}, 4);
    std::vector<Tensor> perturbed = seq.frames;
    for (auto& v : perturbed[1].data()) v = 1.0 - v;
    const RunConfig cfg = analytic_config();
    const auto a = run_sequence_with_motion(seq.frames, seq.masks[0], cfg);
    const auto b = run_sequence_with_motion(perturbed, seq.masks[0], cfg);
    EXPECT_NE(a[0].motion.displacement, b[0].motion.displacement);
    EXPECT_EQ(a[2].motion.displacement, b[2].motion.displacement);
    EXPECT_EQ(a[2].motion.uncertainty, b[2].motion.uncertainty);
    EXPECT_EQ(a[2].motion.motion_input, b[2].motion.motion_input);
}

TEST(SegmentFrame, MemoryCadence) {
    const SyntheticSequence seq = make_square_sequence(SquareScene{}, 12);
    for (std::size_t every : {1u, 2u, 5u}) {
        RunConfig cfg = analytic_config();
        cfg.memory_every = every;
        PipelineState s = init_pipeline(cfg, make_pipeline_params(cfg), seq.frames[0], seq.masks[0]);
        EXPECT_EQ(s.banks[0].size(), 1u);
        for (std::size_t t = 2; t <= 12; ++t) {
            segment_frame(s, seq.frames[t - 1]);
            EXPECT_EQ(s.banks[0].size(), 1 + (t - 1) / every) << "t=" << t << " every=" << every;
        }
    }
}

TEST(SegmentFrame, MultipleObjectsShareFrameIndices) {
    const SyntheticSequence seq = make_square_sequence(SquareScene{}, 7);
    std::vector<int> labels = seq.masks[0].labels;
    for (std::size_t y = 0; y < 16; ++y)
        for (std::size_t x = 96; x < 128; ++x) labels[y * 128 + x] = 2;
    RunConfig cfg = analytic_config();
    cfg.memory_every = 3;
    const ObjectMask first = ObjectMask::from_labels(128, 128, labels);
    PipelineState s = init_pipeline(cfg, make_pipeline_params(cfg), seq.frames[0], first);
    ASSERT_EQ(s.banks.size(), 2u);
    for (std::size_t t = 1; t < 7; ++t) segment_frame(s, seq.frames[t]);
    EXPECT_EQ(s.banks[0].frame_indices(), (std::vector<int>{1, 4, 7}));
    EXPECT_EQ(s.banks[0].frame_indices(), s.banks[1].frame_indices());
}

TEST(RunSequence, LengthDeterminismAndPadding) {
    SquareScene scene{.height = 40, .width = 56, .side = 12, .x0 = 4, .y0 = 10};
    const SyntheticSequence seq = make_square_sequence(scene, 5);
    for (const RunConfig& cfg : {analytic_config(), learned_config()}) {
        const auto a = run_sequence(seq.frames, seq.masks[0], cfg);
        const auto b = run_sequence(seq.frames, seq.masks[0], cfg);
        ASSERT_EQ(a.size(), 4u);
        for (std::size_t t = 0; t < a.size(); ++t) {
            EXPECT_EQ(a[t].height, 40u);
            EXPECT_EQ(a[t].width, 56u);
            EXPECT_EQ(a[t].labels, b[t].labels);
            EXPECT_EQ(a[t].probs, b[t].probs);
        }
    }
}

TEST(RunSequence, Rejects) {
    const SyntheticSequence seq = make_square_sequence(SquareScene{}, 2);
    const RunConfig cfg = analytic_config();
    EXPECT_THROW(run_sequence({seq.frames[0]}, seq.masks[0], cfg), ValidationError);
    EXPECT_THROW(run_sequence({seq.frames[0], Tensor({3, 64, 128})}, seq.masks[0], cfg), ShapeError);
    EXPECT_THROW(run_sequence(seq.frames, ObjectMask::from_labels(64, 64, std::vector<int>(64 * 64, 1)), cfg),
                 ShapeError);
    EXPECT_THROW(run_sequence(seq.frames, ObjectMask::from_labels(128, 128, std::vector<int>(128 * 128, 0)), cfg),
                 ValidationError);
    PipelineState empty;
    EXPECT_THROW(segment_frame(empty, seq.frames[1]), ValidationError);
    RunConfig narrow = cfg;
    narrow.feature_dim = 4;
    narrow.dk = narrow.dv = 1;
    EXPECT_THROW(make_pipeline_params(narrow), ValidationError);
}
