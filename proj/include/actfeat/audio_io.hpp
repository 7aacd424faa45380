#pragma once

#include <actfeat/error.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace actfeat {

inline constexpr int kDefaultAnalysisRate = 16000;

/// Decoded audio. Multi-channel data is interleaved; after `preprocess`
/// the clip is always mono.
struct AudioClip {
    std::vector<double> samples;
    int sample_rate = kDefaultAnalysisRate;
    int channels = 1;
    std::string source_path;

    std::size_t frames() const noexcept {
        return channels > 0 ? samples.size() / static_cast<std::size_t>(channels) : 0;
    }
    double duration() const noexcept {
        return static_cast<double>(frames()) / static_cast<double>(sample_rate);
    }
};

namespace detail {

inline std::uint16_t read_u16le(std::span<const unsigned char> b, std::size_t at) {
    return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

inline std::uint32_t read_u32le(std::span<const unsigned char> b, std::size_t at) {
    return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
           (static_cast<std::uint32_t>(b[at + 2]) << 16) |
           (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

inline void put_u16le(std::vector<unsigned char>& out, std::uint16_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>(v >> 8));
}

inline void put_u32le(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

inline bool tag_equals(std::span<const unsigned char> b, std::size_t at, const char* tag) {
    return std::memcmp(b.data() + at, tag, 4) == 0;
}

inline std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::filesystem::path& path,
                             std::span<const unsigned char> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot create " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw IoError("write failed for " + path.string());
}

} // namespace detail

/// Decodes an in-memory RIFF/WAVE image. Accepts PCM-16 (format 1) and
/// IEEE float-32 (format 3); chunks other than "fmt " and "data" are skipped.
inline AudioClip parse_wav(std::span<const unsigned char> bytes, std::string label = {}) {
    if (bytes.size() < 12 || !detail::tag_equals(bytes, 0, "RIFF") ||
        !detail::tag_equals(bytes, 8, "WAVE"))
        throw FormatError("not a RIFF/WAVE file: " + label);

    struct Fmt {
        std::uint16_t format;
        std::uint16_t channels;
        std::uint32_t rate;
        std::uint16_t block_align;
        std::uint16_t bits;
    };
    std::optional<Fmt> fmt;
    std::optional<std::span<const unsigned char>> data;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const std::uint32_t size = detail::read_u32le(bytes, pos + 4);
        const std::size_t body = pos + 8;
        if (size > bytes.size() - body)
            throw FormatError("chunk overruns file: " + label);
        if (detail::tag_equals(bytes, pos, "fmt ")) {
            if (fmt)
                throw FormatError("duplicate fmt chunk: " + label);
            if (size < 16)
                throw FormatError("fmt chunk too small: " + label);
            fmt = Fmt{detail::read_u16le(bytes, body), detail::read_u16le(bytes, body + 2),
                      detail::read_u32le(bytes, body + 4), detail::read_u16le(bytes, body + 12),
                      detail::read_u16le(bytes, body + 14)};
        } else if (detail::tag_equals(bytes, pos, "data")) {
            if (data)
                throw FormatError("duplicate data chunk: " + label);
            data = bytes.subspan(body, size);
        }
        pos = body + size + (size & 1u);
    }
    if (!fmt || !data)
        throw FormatError("missing fmt or data chunk: " + label);
    if (fmt->channels == 0 || fmt->rate == 0)
        throw FormatError("zero channels or sample rate: " + label);

    const bool pcm16 = fmt->format == 1 && fmt->bits == 16;
    const bool float32 = fmt->format == 3 && fmt->bits == 32;
    if (!pcm16 && !float32)
        throw UnsupportedEncoding("format tag " + std::to_string(fmt->format) + " with " +
                                  std::to_string(fmt->bits) + " bits: " + label);

    const std::size_t width = pcm16 ? 2 : 4;
    if (fmt->block_align != width * fmt->channels)
        throw FormatError("inconsistent block alignment: " + label);

    AudioClip clip;
    clip.sample_rate = static_cast<int>(fmt->rate);
    clip.channels = fmt->channels;
    clip.source_path = std::move(label);

    // Trailing partial frames are dropped.
    const std::size_t n = (data->size() / fmt->block_align) * fmt->channels;
    clip.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (pcm16) {
            const auto raw = static_cast<std::int16_t>(detail::read_u16le(*data, 2 * i));
            clip.samples[i] = static_cast<double>(raw) / 32768.0;
        } else {
            const float v = std::bit_cast<float>(detail::read_u32le(*data, 4 * i));
            if (!std::isfinite(v))
                throw FormatError("non-finite float sample: " + clip.source_path);
            clip.samples[i] = std::clamp(static_cast<double>(v), -1.0, 1.0);
        }
    }
    return clip;
}

/// Reads and decodes a WAV file.
inline AudioClip load_wav(const std::filesystem::path& path) {
    const auto bytes = detail::read_file_bytes(path);
    return parse_wav(bytes, path.string());
}

/// Encodes a clip as IEEE float-32 WAV. Samples are narrowed to float.
inline std::vector<unsigned char> encode_wav_float32(const AudioClip& clip) {
    if (clip.channels <= 0 || clip.sample_rate <= 0)
        throw InvalidArgument("clip has no channels or sample rate");
    const auto channels = static_cast<std::uint16_t>(clip.channels);
    const auto data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 4);

    std::vector<unsigned char> out;
    out.reserve(44 + data_bytes);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    detail::put_u32le(out, 36 + data_bytes);
    out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    detail::put_u32le(out, 16);
    detail::put_u16le(out, 3);
    detail::put_u16le(out, channels);
    detail::put_u32le(out, static_cast<std::uint32_t>(clip.sample_rate));
    detail::put_u32le(out, static_cast<std::uint32_t>(clip.sample_rate) * 4u * channels);
    detail::put_u16le(out, static_cast<std::uint16_t>(4 * channels));
    detail::put_u16le(out, 32);
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    detail::put_u32le(out, data_bytes);
    for (double s : clip.samples)
        detail::put_u32le(out, std::bit_cast<std::uint32_t>(static_cast<float>(s)));
    return out;
}

inline void write_wav_float32(const AudioClip& clip, const std::filesystem::path& path) {
    detail::write_file_bytes(path, encode_wav_float32(clip));
}

/// Mixes down to mono and resamples to `target_rate` by linear interpolation.
/// Output length is round(n * target / source).
inline AudioClip preprocess(const AudioClip& clip, int target_rate = kDefaultAnalysisRate) {
    if (target_rate <= 0 || clip.sample_rate <= 0 || clip.channels <= 0)
        throw InvalidArgument("sample rates and channel count must be positive");
    const std::size_t n = clip.frames();
    if (n == 0)
        throw EmptyInput("clip has no samples: " + clip.source_path);

    const auto ch = static_cast<std::size_t>(clip.channels);
    std::vector<double> mono(n);
    if (ch == 1) {
        mono.assign(clip.samples.begin(), clip.samples.begin() + static_cast<std::ptrdiff_t>(n));
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t c = 0; c < ch; ++c)
                acc += clip.samples[i * ch + c];
            mono[i] = acc / static_cast<double>(ch);
        }
    }

    AudioClip out;
    out.sample_rate = target_rate;
    out.channels = 1;
    out.source_path = clip.source_path;
    if (target_rate == clip.sample_rate) {
        out.samples = std::move(mono);
        return out;
    }

    const double ratio = static_cast<double>(clip.sample_rate) / target_rate;
    const auto m = static_cast<std::size_t>(
        std::llround(static_cast<double>(n) * target_rate / clip.sample_rate));
    if (m == 0)
        throw EmptyInput("resampled clip would be empty: " + clip.source_path);
    out.samples.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double t = static_cast<double>(i) * ratio;
        const auto k = static_cast<std::size_t>(t);
        if (k + 1 >= n) {
            out.samples[i] = mono[n - 1];
            continue;
        }
        const double frac = t - static_cast<double>(k);
        out.samples[i] = mono[k] + frac * (mono[k + 1] - mono[k]);
    }
    return out;
}

} // namespace actfeat
