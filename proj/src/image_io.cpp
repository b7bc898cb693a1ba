#include "muvos/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

namespace muvos {

namespace {

bool is_space(std::uint8_t c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

class HeaderReader {
public:
    explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::size_t pos() const { return pos_; }

    // Next decimal header field, skipping whitespace and '#' comments.
    std::size_t number(const char* field) {
        for (;;) {
            while (pos_ < bytes_.size() && is_space(bytes_[pos_])) ++pos_;
            if (pos_ < bytes_.size() && bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
                continue;
            }
            break;
        }
        const std::size_t start = pos_;
        if (pos_ >= bytes_.size()) {
            throw PnmError(PnmErrorKind::truncated, std::string("header ends before ") + field, pos_);
        }
        std::size_t value = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            value = value * 10 + static_cast<std::size_t>(bytes_[pos_] - '0');
            if (value > 1u << 24) throw PnmError(PnmErrorKind::bad_header, std::string(field) + " too large", start);
            ++pos_;
        }
        if (pos_ == start) throw PnmError(PnmErrorKind::bad_header, std::string("expected ") + field, start);
        return value;
    }

    void single_whitespace() {
        if (pos_ >= bytes_.size()) throw PnmError(PnmErrorKind::truncated, "header ends before pixel data", pos_);
        if (!is_space(bytes_[pos_])) {
            throw PnmError(PnmErrorKind::bad_header, "expected whitespace after maxval", pos_);
        }
        ++pos_;
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 2;
};

}  // namespace

PnmImage decode_pnm(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P') throw PnmError(PnmErrorKind::bad_magic, "not a PNM file", 0);
    PnmImage img;
    if (bytes[1] == '5') {
        img.channels = 1;
    } else if (bytes[1] == '6') {
        img.channels = 3;
    } else {
        throw PnmError(PnmErrorKind::unsupported_format,
                       std::string("unsupported PNM format P") + static_cast<char>(bytes[1]), 0);
    }
    HeaderReader hdr(bytes);
    img.width = hdr.number("width");
    img.height = hdr.number("height");
    if (img.width == 0 || img.height == 0) throw PnmError(PnmErrorKind::bad_header, "zero image extent", hdr.pos());
    const std::size_t maxval_pos = hdr.pos();
    const std::size_t maxval = hdr.number("maxval");
    if (maxval != 255) {
        throw PnmError(PnmErrorKind::bad_maxval, "maxval " + std::to_string(maxval) + " unsupported (need 255)",
                       maxval_pos);
    }
    hdr.single_whitespace();
    const std::size_t start = hdr.pos();
    const std::size_t need = img.width * img.height * img.channels;
    if (bytes.size() - start < need) {
        throw PnmError(PnmErrorKind::truncated,
                       "pixel payload truncated (" + std::to_string(bytes.size() - start) + " of " +
                           std::to_string(need) + " bytes)",
                       bytes.size());
    }
    img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(start),
                      bytes.begin() + static_cast<std::ptrdiff_t>(start + need));
    return img;
}

std::vector<std::uint8_t> encode_pnm(const PnmImage& img) {
    if (img.channels != 1 && img.channels != 3) throw ValidationError("PNM images have 1 or 3 channels");
    if (img.pixels.size() != img.width * img.height * img.channels) {
        throw ShapeError("PNM pixel buffer size does not match its header");
    }
    const std::string header = std::string(img.channels == 3 ? "P6" : "P5") + "\n" + std::to_string(img.width) +
                               " " + std::to_string(img.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.pixels.begin(), img.pixels.end());
    return out;
}

Tensor pnm_to_tensor(const PnmImage& img) {
    Tensor t({img.channels, img.height, img.width});
    const std::size_t plane = img.width * img.height;
    for (std::size_t i = 0; i < plane; ++i)
        for (std::size_t c = 0; c < img.channels; ++c) t[c * plane + i] = img.pixels[i * img.channels + c] / 255.0;
    return t;
}

PnmImage tensor_to_pnm(const Tensor& t) {
    if (t.rank() != 3 || (t.dim(0) != 1 && t.dim(0) != 3)) {
        throw ShapeError("image tensors must be 1xHxW or 3xHxW, got " + shape_str(t.shape()));
    }
    PnmImage img{t.dim(0), t.dim(2), t.dim(1), {}};
    const std::size_t plane = img.width * img.height;
    img.pixels.resize(plane * img.channels);
    for (std::size_t i = 0; i < plane; ++i) {
        for (std::size_t c = 0; c < img.channels; ++c) {
            const double v = std::clamp(t[c * plane + i], 0.0, 1.0);
            img.pixels[i * img.channels + c] = static_cast<std::uint8_t>(std::floor(v * 255.0 + 0.5));
        }
    }
    return img;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed: " + path.string());
    return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

Tensor load_image(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    return pnm_to_tensor(decode_pnm(bytes));
}

void save_image(const std::filesystem::path& path, const Tensor& t) { write_file(path, encode_pnm(tensor_to_pnm(t))); }

ObjectMask load_mask(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    const PnmImage img = decode_pnm(bytes);
    if (img.channels != 1) throw PnmError(PnmErrorKind::unsupported_format, "masks must be P5 grayscale", 0);
    return ObjectMask::from_labels(img.height, img.width, std::vector<int>(img.pixels.begin(), img.pixels.end()));
}

void save_mask(const std::filesystem::path& path, const ObjectMask& m) {
    PnmImage img{1, m.width, m.height, {}};
    img.pixels.reserve(m.labels.size());
    for (int v : m.labels) {
        if (v < 0 || v > 255) throw ValidationError("object id " + std::to_string(v) + " does not fit in 8 bits");
        img.pixels.push_back(static_cast<std::uint8_t>(v));
    }
    write_file(path, encode_pnm(img));
}

}  // namespace muvos
