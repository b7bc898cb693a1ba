#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "muvos/errors.hpp"
#include "muvos/object_mask.hpp"
#include "muvos/tensor.hpp"

namespace muvos {

enum class PnmErrorKind { bad_magic, unsupported_format, bad_header, bad_maxval, truncated };

class PnmError : public ParseError {
public:
    PnmError(PnmErrorKind kind, const std::string& what, std::size_t offset)
        : ParseError(what, offset), kind_(kind) {}
    PnmErrorKind kind() const noexcept { return kind_; }

private:
    PnmErrorKind kind_;
};

/// Raw 8-bit binary PGM (P5, 1 channel) or PPM (P6, 3 channels, interleaved).
struct PnmImage {
    std::size_t channels = 0;
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;
};

PnmImage decode_pnm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_pnm(const PnmImage& img);

/// Planar C x H x W tensor scaled to [0, 1].
Tensor pnm_to_tensor(const PnmImage& img);
/// Inverse of pnm_to_tensor; values clamped to [0, 1] and rounded half up.
PnmImage tensor_to_pnm(const Tensor& t);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

Tensor load_image(const std::filesystem::path& path);
void save_image(const std::filesystem::path& path, const Tensor& t);

/// PGM whose gray values are object ids.
ObjectMask load_mask(const std::filesystem::path& path);
void save_mask(const std::filesystem::path& path, const ObjectMask& m);

}  // namespace muvos
