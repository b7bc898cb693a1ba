#pragma once

// Single-threaded versions of the OpenMP kernels. They follow the same per-output
// accumulation order, so results agree bitwise; tests and the benchmark use them.

#include <cstddef>

#include "muvos/memory.hpp"
#include "muvos/mu_layer.hpp"
#include "muvos/tensor.hpp"

namespace muvos::reference {

Tensor conv2d(const Tensor& input, const Tensor& weights, const Tensor& bias, std::size_t stride, std::size_t pad);

CostVolume build_cost_volume(const Tensor& f_t, const Tensor& f_prev, Window window);

Tensor memory_read(const MemoryBank& bank, const QueryEmbedding& q);

}  // namespace muvos::reference
