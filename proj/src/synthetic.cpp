#include "muvos/synthetic.hpp"

namespace muvos {

namespace {

// Corners of the RGB cube other than black, plus mid grey.
constexpr std::array<std::array<double, 3>, 8> kTileColours{{
    {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 0}, {0, 1, 1}, {1, 0, 1}, {1, 1, 1}, {0.5, 0.5, 0.5},
}};

}  // namespace

SyntheticSequence make_square_sequence(const SquareScene& scene, std::size_t frames) {
    SyntheticSequence seq;
    const long h = static_cast<long>(scene.height), w = static_cast<long>(scene.width);
    const long side = static_cast<long>(scene.side);
    for (std::size_t t = 0; t < frames; ++t) {
        const long ox = scene.x0 + scene.dx * static_cast<long>(t);
        const long oy = scene.y0 + scene.dy * static_cast<long>(t);
        Tensor img({3, scene.height, scene.width});
        std::vector<int> labels(scene.height * scene.width, 0);
        for (long y = 0; y < h; ++y) {
            for (long x = 0; x < w; ++x) {
                const bool inside = x >= ox && x < ox + side && y >= oy && y < oy + side;
                const auto uy = static_cast<std::size_t>(y), ux = static_cast<std::size_t>(x);
                std::array<double, 3> rgb = scene.background;
                if (inside) {
                    labels[uy * scene.width + ux] = 1;
                    if (scene.patchwork) {
                        const long tile = ((y - oy) / 16) * 3 + (x - ox) / 16;
                        rgb = kTileColours[static_cast<std::size_t>(tile) % kTileColours.size()];
                    } else {
                        rgb = scene.colour;
                    }
                }
                for (std::size_t c = 0; c < 3; ++c) img.at(c, uy, ux) = rgb[c];
            }
        }
        seq.frames.push_back(std::move(img));
        seq.masks.push_back(ObjectMask::from_labels(scene.height, scene.width, std::move(labels)));
    }
    return seq;
}

}  // namespace muvos
