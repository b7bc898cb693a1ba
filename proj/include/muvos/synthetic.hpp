#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "muvos/object_mask.hpp"
#include "muvos/tensor.hpp"

namespace muvos {

/// An axis-aligned square translating at a constant integer velocity over a flat
/// background. With `patchwork` set, the square is painted in 16x16 tiles of
/// distinct saturated colours (anchored to the square), giving it texture at the
/// encoder's grid scale.
struct SquareScene {
    std::size_t height = 128;
    std::size_t width = 128;
    std::size_t side = 48;
    long x0 = 16;
    long y0 = 40;
    long dx = 2;
    long dy = 0;
    std::array<double, 3> colour{1.0, 1.0, 1.0};
    std::array<double, 3> background{0.0, 0.0, 0.0};
    bool patchwork = false;
};

struct SyntheticSequence {
    std::vector<Tensor> frames;      // 3 x H x W
    std::vector<ObjectMask> masks;   // ground truth, object id 1
};

SyntheticSequence make_square_sequence(const SquareScene& scene, std::size_t frames);

}  // namespace muvos
