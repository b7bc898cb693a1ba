#pragma once

#include <cstddef>
#include <vector>

#include "muvos/tensor.hpp"

namespace muvos {

/// Per-pixel labelling (0 = background, 1..K = objects) plus per-object
/// probability planes (K x H x W, may be empty for hard masks read from disk).
struct ObjectMask {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<int> labels;
    Tensor probs;

    int label(std::size_t y, std::size_t x) const { return labels[y * width + x]; }
    int max_label() const;

    /// Hard mask whose probability planes are the one-hot label indicators.
    static ObjectMask from_labels(std::size_t height, std::size_t width, std::vector<int> labels);

    /// 1 x H x W indicator of one object id.
    Tensor binary_plane(int object_id) const;
};

}  // namespace muvos
