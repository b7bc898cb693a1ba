#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "muvos/motion_fusion.hpp"
#include "muvos/tensor.hpp"

namespace muvos {

// Little-endian layout:
//   "MUVP" | u32 version | u32 tensor count |
//   per tensor: u32 rank | u64 extent * rank | f64 value * product(extents)
inline constexpr std::uint32_t kParamFormatVersion = 1;

std::vector<std::uint8_t> encode_tensors(std::span<const Tensor> tensors);
std::vector<Tensor> decode_tensors(std::span<const std::uint8_t> bytes);

void save_tensors(const std::filesystem::path& path, std::span<const Tensor> tensors);
std::vector<Tensor> load_tensors(const std::filesystem::path& path);

/// Weights and biases in layer order (16 tensors).
void save_motion_net(const std::filesystem::path& path, const MotionNetParams& p);
MotionNetParams load_motion_net(const std::filesystem::path& path);

void save_msam(const std::filesystem::path& path, const MsamParams& p);
MsamParams load_msam(const std::filesystem::path& path);

}  // namespace muvos
