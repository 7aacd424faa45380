#pragma once

// Reader and writer for the NumPy .npy array format (version 1.0 written;
// 1.0, 2.0 and 3.0 read). Only little-endian float32/float64 in C order.

#include <actfeat/audio_io.hpp>
#include <actfeat/error.hpp>
#include <actfeat/tensor.hpp>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace actfeat {

namespace detail {

inline constexpr unsigned char kNpyMagic[6] = {0x93, 'N', 'U', 'M', 'P', 'Y'};

struct NpyHeader {
    std::string descr;
    bool fortran_order = false;
    Shape shape;
};

/// Parser for the Python-literal dictionary stored in the header.
class NpyHeaderParser {
public:
    explicit NpyHeaderParser(std::string_view text) : s_(text) {}

    NpyHeader parse() {
        NpyHeader h;
        bool have_descr = false, have_order = false, have_shape = false;
        expect('{');
        while (true) {
            skip_ws();
            if (peek() == '}') {
                ++i_;
                break;
            }
            const std::string key = parse_string();
            expect(':');
            skip_ws();
            if (key == "descr") {
                h.descr = parse_string();
                have_descr = true;
            } else if (key == "fortran_order") {
                h.fortran_order = parse_bool();
                have_order = true;
            } else if (key == "shape") {
                h.shape = parse_tuple();
                have_shape = true;
            } else {
                throw FormatError("unexpected npy header key '" + key + "'");
            }
            skip_ws();
            if (peek() == ',')
                ++i_;
        }
        if (!have_descr || !have_order || !have_shape)
            throw FormatError("npy header lacks descr, fortran_order or shape");
        return h;
    }

private:
    char peek() const {
        if (i_ >= s_.size())
            throw FormatError("truncated npy header");
        return s_[i_];
    }
    void skip_ws() {
        while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_])))
            ++i_;
    }
    void expect(char c) {
        skip_ws();
        if (peek() != c)
            throw FormatError(std::string("npy header: expected '") + c + "'");
        ++i_;
    }
    std::string parse_string() {
        skip_ws();
        const char quote = peek();
        if (quote != '\'' && quote != '"')
            throw FormatError("npy header: expected string literal");
        const auto end = s_.find(quote, i_ + 1);
        if (end == std::string_view::npos)
            throw FormatError("npy header: unterminated string");
        std::string out(s_.substr(i_ + 1, end - i_ - 1));
        i_ = end + 1;
        return out;
    }
    bool parse_bool() {
        if (s_.substr(i_, 4) == "True") {
            i_ += 4;
            return true;
        }
        if (s_.substr(i_, 5) == "False") {
            i_ += 5;
            return false;
        }
        throw FormatError("npy header: expected True or False");
    }
    Shape parse_tuple() {
        Shape shape;
        expect('(');
        while (true) {
            skip_ws();
            if (peek() == ')') {
                ++i_;
                return shape;
            }
            if (!std::isdigit(static_cast<unsigned char>(peek())))
                throw FormatError("npy header: bad shape entry");
            std::size_t v = 0;
            while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_])))
                v = v * 10 + static_cast<std::size_t>(s_[i_++] - '0');
            shape.push_back(v);
            skip_ws();
            if (peek() == ',')
                ++i_;
        }
    }

    std::string_view s_;
    std::size_t i_ = 0;
};

} // namespace detail

/// Decodes an in-memory .npy image; float32 payloads are widened to double.
inline Tensor parse_npy(std::span<const unsigned char> bytes) {
    if (bytes.size() < 10 || !std::equal(std::begin(detail::kNpyMagic), std::end(detail::kNpyMagic), bytes.begin()))
        throw FormatError("missing npy magic");
    const unsigned major = bytes[6];
    std::size_t header_len = 0;
    std::size_t header_start = 0;
    if (major == 1) {
        header_len = detail::read_u16le(bytes, 8);
        header_start = 10;
    } else if (major == 2 || major == 3) {
        if (bytes.size() < 12)
            throw FormatError("truncated npy preamble");
        header_len = detail::read_u32le(bytes, 8);
        header_start = 12;
    } else {
        throw FormatError("unsupported npy version " + std::to_string(major));
    }
    if (header_start + header_len > bytes.size())
        throw FormatError("npy header overruns file");

    const std::string_view text(reinterpret_cast<const char*>(bytes.data() + header_start), header_len);
    const auto header = detail::NpyHeaderParser(text).parse();
    if (header.fortran_order)
        throw Unsupported("column-major (fortran_order) arrays are not supported");
    std::size_t item = 0;
    if (header.descr == "<f8")
        item = 8;
    else if (header.descr == "<f4")
        item = 4;
    else
        throw Unsupported("unsupported dtype '" + header.descr + "'");
    for (auto d : header.shape)
        if (d == 0)
            throw FormatError("zero-length axis in npy shape");

    const std::size_t count = shape_volume(header.shape);
    const auto payload = bytes.subspan(header_start + header_len);
    if (payload.size() != count * item)
        throw FormatError("npy payload is " + std::to_string(payload.size()) + " bytes, expected " +
                          std::to_string(count * item));

    std::vector<double> data(count);
    for (std::size_t i = 0; i < count; ++i) {
        if (item == 8) {
            const std::uint64_t lo = detail::read_u32le(payload, 8 * i);
            const std::uint64_t hi = detail::read_u32le(payload, 8 * i + 4);
            data[i] = std::bit_cast<double>(lo | (hi << 32));
        } else {
            data[i] = static_cast<double>(std::bit_cast<float>(detail::read_u32le(payload, 4 * i)));
        }
    }
    return Tensor(header.shape, std::move(data));
}

/// Encodes a tensor as a version 1.0 .npy image with float64 payload. The
/// header is space-padded so the payload starts on a 64-byte boundary.
inline std::vector<unsigned char> encode_npy(const Tensor& t) {
    std::string dict = "{'descr': '<f8', 'fortran_order': False, 'shape': " + shape_string(t.shape()) + ", }";
    const std::size_t unpadded = 10 + dict.size() + 1;
    dict.append((64 - unpadded % 64) % 64, ' ');
    dict.push_back('\n');
    if (dict.size() > 0xffff)
        throw Unsupported("npy header too long for version 1.0");

    std::vector<unsigned char> out(std::begin(detail::kNpyMagic), std::end(detail::kNpyMagic));
    out.push_back(1);
    out.push_back(0);
    detail::put_u16le(out, static_cast<std::uint16_t>(dict.size()));
    out.insert(out.end(), dict.begin(), dict.end());
    out.reserve(out.size() + 8 * t.size());
    for (double v : t.data()) {
        const auto bits = std::bit_cast<std::uint64_t>(v);
        detail::put_u32le(out, static_cast<std::uint32_t>(bits & 0xffffffffu));
        detail::put_u32le(out, static_cast<std::uint32_t>(bits >> 32));
    }
    return out;
}

inline Tensor read_tensor_file(const std::filesystem::path& path) {
    const auto bytes = detail::read_file_bytes(path);
    try {
        return parse_npy(bytes);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

inline void write_tensor_file(const Tensor& t, const std::filesystem::path& path) {
    detail::write_file_bytes(path, encode_npy(t));
}

} // namespace actfeat
