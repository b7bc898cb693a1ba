#include "muvos/param_io.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include "muvos/errors.hpp"
#include "muvos/image_io.hpp"

namespace muvos {

namespace {

constexpr std::uint8_t kMagic[4] = {'M', 'U', 'V', 'P'};

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    template <typename T>
    T get(const char* what) {
        if (bytes_.size() - pos_ < sizeof(T)) {
            throw ParseError(std::string("parameter file truncated in ") + what, pos_);
        }
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(bytes_[pos_ + i]) << (8 * i);
        pos_ += sizeof(T);
        return v;
    }

    std::size_t pos() const { return pos_; }
    bool done() const { return pos_ == bytes_.size(); }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_tensors(std::span<const Tensor> tensors) {
    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    put<std::uint32_t>(out, kParamFormatVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
    for (const Tensor& t : tensors) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
        for (auto e : t.shape()) put<std::uint64_t>(out, e);
        for (double v : t.data()) put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
    }
    return out;
}

std::vector<Tensor> decode_tensors(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
        throw ParseError("not a parameter file (bad magic)", 0);
    }
    Reader r(bytes.subspan(4));
    const auto version = r.get<std::uint32_t>("version");
    if (version != kParamFormatVersion) {
        throw ParseError("unsupported parameter file version " + std::to_string(version), 4);
    }
    const auto count = r.get<std::uint32_t>("tensor count");
    std::vector<Tensor> out;
    out.reserve(count);
    for (std::uint32_t t = 0; t < count; ++t) {
        const std::size_t rank_pos = r.pos() + 4;
        const auto rank = r.get<std::uint32_t>("rank");
        if (rank == 0 || rank > 8) throw ParseError("implausible tensor rank " + std::to_string(rank), rank_pos);
        Shape shape(rank);
        std::size_t n = 1;
        for (auto& e : shape) {
            const std::size_t at = r.pos() + 4;
            e = static_cast<std::size_t>(r.get<std::uint64_t>("shape"));
            if (e == 0 || e > (1ULL << 32)) throw ParseError("invalid tensor extent", at);
            n *= e;
            if (n > (1ULL << 34)) throw ParseError("tensor too large", at);
        }
        std::vector<double> data(n);
        for (auto& v : data) v = std::bit_cast<double>(r.get<std::uint64_t>("payload"));
        out.emplace_back(std::move(shape), std::move(data));
    }
    if (!r.done()) throw ParseError("trailing bytes after last tensor", r.pos() + 4);
    return out;
}

void save_tensors(const std::filesystem::path& path, std::span<const Tensor> tensors) {
    write_file(path, encode_tensors(tensors));
}

std::vector<Tensor> load_tensors(const std::filesystem::path& path) { return decode_tensors(read_file(path)); }

void save_motion_net(const std::filesystem::path& path, const MotionNetParams& p) {
    std::vector<Tensor> ts;
    for (const auto& l : p.layers) {
        ts.push_back(l.weights);
        ts.push_back(l.bias);
    }
    save_tensors(path, ts);
}

MotionNetParams load_motion_net(const std::filesystem::path& path) {
    auto ts = load_tensors(path);
    if (ts.size() != 2 * kMotionNetLayers) throw ValidationError("motion net file must hold 16 tensors");
    MotionNetParams p;
    for (std::size_t i = 0; i < kMotionNetLayers; ++i) p.layers[i] = {std::move(ts[2 * i]), std::move(ts[2 * i + 1])};
    const auto layout = motion_net_layout(p.out_dim());
    for (std::size_t i = 0; i < kMotionNetLayers; ++i) {
        const auto& l = p.layers[i];
        if (l.weights.shape() != Shape{layout[i].c_out, layout[i].c_in, layout[i].kernel, layout[i].kernel} ||
            l.bias.shape() != Shape{layout[i].c_out}) {
            throw ShapeError("motion net layer " + std::to_string(i + 1) + " has shape " +
                             shape_str(l.weights.shape()));
        }
    }
    return p;
}

void save_msam(const std::filesystem::path& path, const MsamParams& p) {
    const Tensor ts[] = {p.conv.weights, p.conv.bias};
    save_tensors(path, ts);
}

MsamParams load_msam(const std::filesystem::path& path) {
    auto ts = load_tensors(path);
    if (ts.size() != 2 || ts[0].rank() != 4 || ts[0].dim(0) != 1 || ts[0].dim(2) != 1 || ts[0].dim(3) != 1 ||
        ts[1].shape() != Shape{1}) {
        throw ShapeError("attention parameter file must hold a 1x1 D->1 convolution");
    }
    return {{std::move(ts[0]), std::move(ts[1])}};
}

}  // namespace muvos
