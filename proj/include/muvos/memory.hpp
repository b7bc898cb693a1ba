#pragma once

#include <cstddef>
#include <vector>

#include "muvos/ops.hpp"
#include "muvos/tensor.hpp"

namespace muvos {

struct QueryEmbedding {
    Tensor key;    // Dk x H' x W'
    Tensor value;  // Dv x H' x W'
};

struct MemoryEntry {
    int frame_index;
    Tensor key;
    Tensor value;
};

/// Ordered key/value store of past frames. Frame indices strictly increase and
/// all entries share key and value shapes. No eviction.
class MemoryBank {
public:
    void write(int frame_index, Tensor key, Tensor value);

    const std::vector<MemoryEntry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    std::vector<int> frame_indices() const;

private:
    std::vector<MemoryEntry> entries_;
};

/// Two parallel 1x1 convolutions, D -> Dk (key) and D -> Dv (value).
QueryEmbedding embed_kv(const Tensor& feature, const ConvParams& key_proj, const ConvParams& value_proj);

/// Functional form of MemoryBank::write.
MemoryBank memory_write(MemoryBank bank, int frame_index, Tensor key, Tensor value);

/// Softmax over dot products between every query position (rows, row-major over
/// H' x W') and every stored position of every stored frame (columns, frame-major).
Tensor memory_attention(const MemoryBank& bank, const Tensor& query_key);

/// Retrieved values concatenated with the query value: (Dv + Dv) x H' x W'.
/// Parallel over query positions.
Tensor memory_read(const MemoryBank& bank, const QueryEmbedding& q);

}  // namespace muvos
