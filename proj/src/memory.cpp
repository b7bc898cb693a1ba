#include "muvos/memory.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "muvos/errors.hpp"

namespace muvos {

void MemoryBank::write(int frame_index, Tensor key, Tensor value) {
    if (key.rank() != 3 || value.rank() != 3 || key.dim(1) != value.dim(1) || key.dim(2) != value.dim(2)) {
        throw ShapeError("memory write: key " + shape_str(key.shape()) + " and value " + shape_str(value.shape()) +
                         " must be rank-3 with equal spatial size");
    }
    if (!entries_.empty()) {
        const MemoryEntry& last = entries_.back();
        if (frame_index <= last.frame_index) {
            throw ValidationError("memory write: frame index " + std::to_string(frame_index) +
                                  " is not after last stored index " + std::to_string(last.frame_index));
        }
        if (key.shape() != last.key.shape() || value.shape() != last.value.shape()) {
            throw ShapeError("memory write: entry shapes " + shape_str(key.shape()) + "/" + shape_str(value.shape()) +
                             " differ from stored " + shape_str(last.key.shape()) + "/" +
                             shape_str(last.value.shape()));
        }
    }
    entries_.push_back({frame_index, std::move(key), std::move(value)});
}

std::vector<int> MemoryBank::frame_indices() const {
    std::vector<int> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.frame_index);
    return out;
}

QueryEmbedding embed_kv(const Tensor& feature, const ConvParams& key_proj, const ConvParams& value_proj) {
    if (key_proj.kernel() != 1 || value_proj.kernel() != 1) throw ShapeError("embed_kv: projections must be 1x1");
    return {conv2d(feature, key_proj.weights, key_proj.bias, 1, 0),
            conv2d(feature, value_proj.weights, value_proj.bias, 1, 0)};
}

MemoryBank memory_write(MemoryBank bank, int frame_index, Tensor key, Tensor value) {
    bank.write(frame_index, std::move(key), std::move(value));
    return bank;
}

namespace {

// Stored keys and values as position-major matrices (N x Dk, N x Dv).
struct FlatMemory {
    std::size_t count = 0, dk = 0, dv = 0;
    std::vector<double> keys, values;
};

FlatMemory flatten(const MemoryBank& bank) {
    if (bank.empty()) throw NoReferenceError();
    const auto& first = bank.entries().front();
    FlatMemory m;
    m.dk = first.key.dim(0);
    m.dv = first.value.dim(0);
    const std::size_t plane = first.key.dim(1) * first.key.dim(2);
    m.count = plane * bank.size();
    m.keys.resize(m.count * m.dk);
    m.values.resize(m.count * m.dv);
    std::size_t row = 0;
    for (const auto& e : bank.entries()) {
        for (std::size_t p = 0; p < plane; ++p, ++row) {
            for (std::size_t c = 0; c < m.dk; ++c) m.keys[row * m.dk + c] = e.key[c * plane + p];
            for (std::size_t c = 0; c < m.dv; ++c) m.values[row * m.dv + c] = e.value[c * plane + p];
        }
    }
    return m;
}

void check_query_key(const FlatMemory& m, const Tensor& key) {
    if (key.rank() != 3 || key.dim(0) != m.dk) {
        throw ShapeError("memory read: query key " + shape_str(key.shape()) + " does not match stored key dim " +
                         std::to_string(m.dk));
    }
}

// Softmax weights of one query position against all stored positions.
void attend(const FlatMemory& m, const Tensor& key, std::size_t pos, std::size_t plane, std::vector<double>& w) {
    double mx = -INFINITY;
    for (std::size_t j = 0; j < m.count; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < m.dk; ++c) s += key[c * plane + pos] * m.keys[j * m.dk + c];
        w[j] = s;
        mx = std::max(mx, s);
    }
    double sum = 0.0;
    for (auto& v : w) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (auto& v : w) v /= sum;
}

}  // namespace

Tensor memory_attention(const MemoryBank& bank, const Tensor& query_key) {
    const FlatMemory m = flatten(bank);
    check_query_key(m, query_key);
    const std::size_t plane = query_key.dim(1) * query_key.dim(2);
    Tensor weights({plane, m.count});
    std::vector<double> w(m.count);
    for (std::size_t i = 0; i < plane; ++i) {
        attend(m, query_key, i, plane, w);
        std::copy(w.begin(), w.end(), weights.data().begin() + static_cast<std::ptrdiff_t>(i * m.count));
    }
    return weights;
}

Tensor memory_read(const MemoryBank& bank, const QueryEmbedding& q) {
    const FlatMemory m = flatten(bank);
    check_query_key(m, q.key);
    if (q.value.rank() != 3 || q.value.dim(0) != m.dv || q.value.dim(1) != q.key.dim(1) ||
        q.value.dim(2) != q.key.dim(2)) {
        throw ShapeError("memory read: query value " + shape_str(q.value.shape()) + " inconsistent with key " +
                         shape_str(q.key.shape()) + " and stored value dim " + std::to_string(m.dv));
    }
    const std::size_t h = q.key.dim(1), w = q.key.dim(2), plane = h * w;
    Tensor retrieved({m.dv, h, w});
    const auto n = static_cast<std::ptrdiff_t>(plane);
#pragma omp parallel
    {
        std::vector<double> weights(m.count), acc(m.dv);
#pragma omp for schedule(static)
        for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
            const auto i = static_cast<std::size_t>(ii);
            attend(m, q.key, i, plane, weights);
            // Position-major walk over the stored values; each channel still sums in j order.
            std::fill(acc.begin(), acc.end(), 0.0);
            for (std::size_t j = 0; j < m.count; ++j) {
                const double wj = weights[j];
                const double* v = &m.values[j * m.dv];
                for (std::size_t c = 0; c < m.dv; ++c) acc[c] += wj * v[c];
            }
            for (std::size_t c = 0; c < m.dv; ++c) retrieved[c * plane + i] = acc[c];
        }
    }
    return concat_channels({&retrieved, &q.value});
}

}  // namespace muvos
