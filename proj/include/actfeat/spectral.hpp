#pragma once

#include <actfeat/audio_io.hpp>
#include <actfeat/error.hpp>
#include <actfeat/matrix.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace actfeat {

/// STFT framing. `frame_length` samples are Hann-windowed and zero-padded
/// to `fft_size`; a zero `frame_length` means "equal to fft_size".
struct StftParams {
    std::size_t fft_size = 512;
    std::size_t frame_length = 400;
    std::size_t hop = 160;

    std::size_t window() const noexcept { return frame_length == 0 ? fft_size : frame_length; }
    std::size_t bins() const noexcept { return fft_size / 2 + 1; }
};

struct MelParams {
    std::size_t n_mels = 64;
    double fmin = 125.0;
    double fmax = 7500.0;
    double offset = 0.01;
};

/// Magnitude spectrogram, [frames x bins].
struct Spectrogram {
    Matrix values;
    std::size_t hop = 0;
    std::size_t fft_size = 0;
    std::size_t frame_length = 0;
    int sample_rate = 0;

    double bin_frequency(std::size_t k) const noexcept {
        return static_cast<double>(k) * sample_rate / static_cast<double>(fft_size);
    }
};

/// Natural-log mel spectrogram, [frames x n_mels].
struct MelSpectrogram {
    Matrix values;
    MelParams mel;
    std::size_t hop = 0;
    int sample_rate = 0;
};

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

namespace detail {

inline bool is_power_of_two(std::size_t n) { return n >= 1 && (n & (n - 1)) == 0; }

/// In-place iterative radix-2 FFT; size must be a power of two.
inline void fft_inplace(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1)
            j ^= bit;
        j ^= bit;
        if (i < j)
            std::swap(a[i], a[j]);
    }
    std::vector<std::complex<double>> twiddle(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
        const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
        twiddle[k] = {std::cos(angle), std::sin(angle)};
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t step = n / len;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t j = 0; j < len / 2; ++j) {
                const auto u = a[i + j];
                const auto v = a[i + j + len / 2] * twiddle[j * step];
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
            }
        }
    }
}

inline std::vector<double> periodic_hann(std::size_t length) {
    std::vector<double> w(length);
    for (std::size_t i = 0; i < length; ++i)
        w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                    static_cast<double>(length));
    return w;
}

} // namespace detail

/// Number of full frames the STFT produces for `n` samples.
inline std::size_t stft_frame_count(std::size_t n, std::size_t window, std::size_t hop) {
    return n < window ? 0 : 1 + (n - window) / hop;
}

/// Hann-windowed magnitude STFT without centering or padding.
inline Spectrogram stft_magnitude(const AudioClip& clip, const StftParams& params) {
    const std::size_t window = params.window();
    if (params.fft_size < 2 || !detail::is_power_of_two(params.fft_size))
        throw InvalidArgument("fft size must be a power of two >= 2");
    if (window < 2 || window > params.fft_size)
        throw InvalidArgument("frame length must lie in [2, fft_size]");
    if (params.hop == 0 || params.hop > window)
        throw InvalidArgument("hop must lie in (0, frame_length]");
    if (clip.channels != 1)
        throw InvalidArgument("stft expects a mono clip");
    const std::size_t n = clip.samples.size();
    if (n < window)
        throw TooShort("clip shorter than one analysis window: " + clip.source_path);

    const std::size_t frames = stft_frame_count(n, window, params.hop);
    const std::size_t bins = params.bins();
    const auto hann = detail::periodic_hann(window);

    Spectrogram spec;
    spec.values = Matrix(frames, bins);
    spec.hop = params.hop;
    spec.fft_size = params.fft_size;
    spec.frame_length = window;
    spec.sample_rate = clip.sample_rate;

    std::vector<std::complex<double>> buf(params.fft_size);
    for (std::size_t t = 0; t < frames; ++t) {
        const std::size_t start = t * params.hop;
        for (std::size_t i = 0; i < params.fft_size; ++i)
            buf[i] = i < window ? clip.samples[start + i] * hann[i] : 0.0;
        detail::fft_inplace(buf);
        for (std::size_t k = 0; k < bins; ++k)
            spec.values(t, k) = std::abs(buf[k]);
    }
    return spec;
}

/// Convenience overload with the frame length equal to the DFT size.
inline Spectrogram stft_magnitude(const AudioClip& clip, std::size_t window_size, std::size_t hop) {
    return stft_magnitude(clip, StftParams{window_size, window_size, hop});
}

/// Triangular HTK-mel filterbank, [n_mels x bins]. Triangles are evaluated
/// in the mel domain at each bin's centre frequency.
inline Matrix mel_filterbank(std::size_t bins, std::size_t fft_size, int sample_rate,
                             const MelParams& mel) {
    if (mel.fmin < 0.0 || mel.fmin >= mel.fmax)
        throw BadBand("mel band requires 0 <= fmin < fmax");
    if (mel.fmax > sample_rate / 2.0)
        throw BadBand("fmax exceeds the Nyquist frequency");
    if (mel.n_mels < 2)
        throw InvalidArgument("at least two mel bands are required");

    const double lo = hz_to_mel(mel.fmin);
    const double hi = hz_to_mel(mel.fmax);
    std::vector<double> edges(mel.n_mels + 2);
    for (std::size_t i = 0; i < edges.size(); ++i)
        edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(mel.n_mels + 1);

    Matrix fb(mel.n_mels, bins);
    for (std::size_t k = 0; k < bins; ++k) {
        const double m = hz_to_mel(static_cast<double>(k) * sample_rate / static_cast<double>(fft_size));
        for (std::size_t j = 0; j < mel.n_mels; ++j) {
            const double rise = (m - edges[j]) / (edges[j + 1] - edges[j]);
            const double fall = (edges[j + 2] - m) / (edges[j + 2] - edges[j + 1]);
            fb(j, k) = std::max(0.0, std::min(rise, fall));
        }
    }
    return fb;
}

/// ln(melfilterbank * magnitude + offset).
inline MelSpectrogram log_mel(const Spectrogram& spec, const MelParams& mel = {}) {
    if (mel.offset <= 0.0)
        throw InvalidArgument("log offset must be positive");
    const Matrix fb = mel_filterbank(spec.values.cols(), spec.fft_size, spec.sample_rate, mel);

    MelSpectrogram out;
    out.values = Matrix(spec.values.rows(), mel.n_mels);
    out.mel = mel;
    out.hop = spec.hop;
    out.sample_rate = spec.sample_rate;
    for (std::size_t t = 0; t < spec.values.rows(); ++t) {
        const auto frame = spec.values.row(t);
        for (std::size_t j = 0; j < mel.n_mels; ++j) {
            const auto weights = fb.row(j);
            double acc = 0.0;
            for (std::size_t k = 0; k < frame.size(); ++k)
                acc += weights[k] * frame[k];
            out.values(t, j) = std::log(acc + mel.offset);
        }
    }
    return out;
}

} // namespace actfeat
