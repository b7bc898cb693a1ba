#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "muvos/tensor.hpp"

namespace muvos::testing {

inline Tensor random_tensor(std::mt19937_64& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Tensor t(std::move(shape));
    for (auto& v : t.data()) v = dist(rng);
    return t;
}

// Owning copy, safe to iterate when the tensor is a temporary.
inline std::vector<double> elements(const Tensor& t) { return t.values(); }

inline std::size_t uniform_size(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline Tensor random_binary(std::mt19937_64& rng, Shape shape) {
    std::bernoulli_distribution coin(0.5);
    Tensor t(std::move(shape));
    for (auto& v : t.data()) v = coin(rng) ? 1.0 : 0.0;
    return t;
}

// max |a - b| / max |b|
inline double relative_error(const Tensor& analytic, const Tensor& numeric) {
    double scale = 0.0, diff = 0.0;
    for (std::size_t i = 0; i < numeric.size(); ++i) {
        scale = std::max(scale, std::abs(numeric[i]));
        diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
    }
    return diff / std::max(scale, 1e-12);
}

}  // namespace muvos::testing
