#include "muvos/object_mask.hpp"

#include <algorithm>
#include <string>

#include "muvos/errors.hpp"

namespace muvos {

int ObjectMask::max_label() const {
    return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end());
}

ObjectMask ObjectMask::from_labels(std::size_t height, std::size_t width, std::vector<int> labels) {
    if (labels.size() != height * width) {
        throw ShapeError("label plane of " + std::to_string(labels.size()) + " pixels does not match " +
                         std::to_string(height) + "x" + std::to_string(width));
    }
    ObjectMask m{height, width, std::move(labels), {}};
    for (int v : m.labels)
        if (v < 0) throw ValidationError("object labels must be non-negative");
    const int k = m.max_label();
    if (k > 0) {
        m.probs = Tensor({static_cast<std::size_t>(k), height, width});
        const std::size_t plane = height * width;
        for (std::size_t i = 0; i < plane; ++i)
            if (m.labels[i] > 0) m.probs[static_cast<std::size_t>(m.labels[i] - 1) * plane + i] = 1.0;
    }
    return m;
}

Tensor ObjectMask::binary_plane(int object_id) const {
    Tensor out({1, height, width});
    for (std::size_t i = 0; i < labels.size(); ++i) out[i] = labels[i] == object_id ? 1.0 : 0.0;
    return out;
}

}  // namespace muvos
