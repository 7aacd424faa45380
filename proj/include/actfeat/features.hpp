#pragma once

#include <actfeat/audio_io.hpp>
#include <actfeat/error.hpp>
#include <actfeat/matrix.hpp>
#include <actfeat/spectral.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string_view>
#include <vector>

namespace actfeat {

enum class MapAxes { TimeFrequency, TimePitchClass };
enum class MapKind { Harmonic, Percussive, Hpcp };

inline std::string_view to_string(MapKind kind) {
    switch (kind) {
    case MapKind::Harmonic: return "harmonic";
    case MapKind::Percussive: return "percussive";
    case MapKind::Hpcp: return "hpcp";
    }
    return "unknown";
}

/// A non-negative 2-D feature map, rows are time frames.
struct FeatureMap2D {
    Matrix values;
    MapAxes axes = MapAxes::TimeFrequency;
    MapKind kind = MapKind::Harmonic;
};

struct HpssParams {
    std::size_t kernel_time = 31;
    std::size_t kernel_freq = 31;
    double mask_power = 2.0;
};

struct HpssResult {
    FeatureMap2D harmonic;
    FeatureMap2D percussive;
};

struct OnsetParams {
    double threshold = 1.5;
    double min_gap = 0.030; // seconds
};

struct OnsetRate {
    double rate = 0.0; // onsets per second
    std::size_t onsets = 0;
    bool low_confidence = false; // clip shorter than one second
};

struct LoudnessParams {
    std::size_t frame = 1024;
    std::size_t hop = 512;
};

struct HpcpParams {
    double ref_freq = 440.0;
    double peak_floor_db = -40.0;
    double min_freq = 50.0;
    double max_freq = 5000.0;
};

/// Fixed exponent of the Stevens power law applied to frame energy.
inline constexpr double kStevensExponent = 0.67;

namespace detail {

/// Half-sample symmetric reflection ("d c b a | a b c d | d c b a").
inline std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
    const auto period = static_cast<std::ptrdiff_t>(2 * n);
    std::ptrdiff_t m = i % period;
    if (m < 0)
        m += period;
    return m < static_cast<std::ptrdiff_t>(n) ? static_cast<std::size_t>(m)
                                              : static_cast<std::size_t>(period - 1 - m);
}

/// Running median along rows (axis 0) or columns (axis 1), reflect-padded.
inline Matrix median_filter(const Matrix& in, std::size_t length, int axis) {
    Matrix out(in.rows(), in.cols());
    const auto half = static_cast<std::ptrdiff_t>(length / 2);
    std::vector<double> window(length);
    const std::size_t lines = axis == 0 ? in.cols() : in.rows();
    const std::size_t extent = axis == 0 ? in.rows() : in.cols();
    for (std::size_t line = 0; line < lines; ++line) {
        for (std::size_t pos = 0; pos < extent; ++pos) {
            for (std::size_t w = 0; w < length; ++w) {
                const auto idx = reflect_index(static_cast<std::ptrdiff_t>(pos) + static_cast<std::ptrdiff_t>(w) - half, extent);
                window[w] = axis == 0 ? in(idx, line) : in(line, idx);
            }
            auto mid = window.begin() + half;
            std::nth_element(window.begin(), mid, window.end());
            (axis == 0 ? out(pos, line) : out(line, pos)) = *mid;
        }
    }
    return out;
}

inline void check_kernel(std::size_t k, const char* name) {
    if (k < 3 || k % 2 == 0)
        throw BadKernel(std::string(name) + " kernel must be odd and >= 3");
}

} // namespace detail

/// Median-filtering harmonic/percussive separation with soft masks.
/// Bins where both enhanced spectra vanish are zero in both outputs.
inline HpssResult hpss(const Spectrogram& spec, const HpssParams& params = {}) {
    detail::check_kernel(params.kernel_time, "time");
    detail::check_kernel(params.kernel_freq, "frequency");
    if (!(params.mask_power > 0.0))
        throw InvalidArgument("mask power must be positive");

    const Matrix& s = spec.values;
    const Matrix h_enh = detail::median_filter(s, params.kernel_time, 0);
    const Matrix p_enh = detail::median_filter(s, params.kernel_freq, 1);

    HpssResult out{{Matrix(s.rows(), s.cols()), MapAxes::TimeFrequency, MapKind::Harmonic},
                   {Matrix(s.rows(), s.cols()), MapAxes::TimeFrequency, MapKind::Percussive}};
    auto& h = out.harmonic.values.data();
    auto& p = out.percussive.values.data();
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double hp = std::pow(h_enh.data()[i], params.mask_power);
        const double pp = std::pow(p_enh.data()[i], params.mask_power);
        const double denom = hp + pp;
        if (denom <= 0.0)
            continue;
        const double mask_h = hp / denom;
        h[i] = mask_h * s.data()[i];
        p[i] = (1.0 - mask_h) * s.data()[i];
    }
    return out;
}

/// Half-wave rectified spectral flux over log-mel frames; frame 0 is 0.
inline std::vector<double> spectral_flux(const Matrix& log_mel_values) {
    std::vector<double> odf(log_mel_values.rows(), 0.0);
    for (std::size_t t = 1; t < log_mel_values.rows(); ++t) {
        double acc = 0.0;
        for (std::size_t b = 0; b < log_mel_values.cols(); ++b)
            acc += std::max(0.0, log_mel_values(t, b) - log_mel_values(t - 1, b));
        odf[t] = acc;
    }
    return odf;
}

/// Frame indexes picked from an onset detection function: local maxima
/// above mean + threshold * std of a centred window, at least `min_gap_frames`
/// apart.
inline std::vector<std::size_t> pick_onsets(const std::vector<double>& odf, std::size_t half_window,
                                            double threshold, double min_gap_frames) {
    std::vector<std::size_t> onsets;
    const std::size_t n = odf.size();
    for (std::size_t t = 1; t < n; ++t) {
        if (!(odf[t] > odf[t - 1]))
            continue;
        if (t + 1 < n && odf[t] < odf[t + 1])
            continue;
        const std::size_t lo = t >= half_window ? t - half_window : 0;
        const std::size_t hi = std::min(n - 1, t + half_window);
        double mean = 0.0;
        for (std::size_t i = lo; i <= hi; ++i)
            mean += odf[i];
        const double count = static_cast<double>(hi - lo + 1);
        mean /= count;
        double var = 0.0;
        for (std::size_t i = lo; i <= hi; ++i)
            var += (odf[i] - mean) * (odf[i] - mean);
        const double std_dev = std::sqrt(var / count);
        if (!(odf[t] > mean + threshold * std_dev))
            continue;
        if (!onsets.empty() && static_cast<double>(t - onsets.back()) < min_gap_frames)
            continue;
        onsets.push_back(t);
    }
    return onsets;
}

/// Onsets per second of a mono clip.
inline OnsetRate onset_rate(const AudioClip& clip, const StftParams& stft = {},
                            const MelParams& mel = {}, const OnsetParams& params = {}) {
    const auto spec = stft_magnitude(clip, stft);
    const auto lm = log_mel(spec, mel);
    const auto odf = spectral_flux(lm.values);

    const double frame_rate = static_cast<double>(clip.sample_rate) / static_cast<double>(stft.hop);
    const auto half_window = static_cast<std::size_t>(std::llround(0.5 * frame_rate));
    const auto onsets = pick_onsets(odf, half_window, params.threshold, params.min_gap * frame_rate);

    OnsetRate out;
    out.onsets = onsets.size();
    out.rate = static_cast<double>(onsets.size()) / clip.duration();
    out.low_confidence = clip.duration() < 1.0;
    return out;
}

/// Mean Stevens loudness: average over frames of (sum of squares)^0.67.
inline double loudness(const AudioClip& clip, const LoudnessParams& params = {}) {
    if (params.frame == 0 || params.hop == 0)
        throw InvalidArgument("loudness frame and hop must be positive");
    if (clip.channels != 1)
        throw InvalidArgument("loudness expects a mono clip");
    const std::size_t n = clip.samples.size();
    if (n < params.frame)
        throw TooShort("clip shorter than one loudness frame: " + clip.source_path);
    const std::size_t frames = stft_frame_count(n, params.frame, params.hop);
    double total = 0.0;
    for (std::size_t t = 0; t < frames; ++t) {
        double energy = 0.0;
        for (std::size_t i = 0; i < params.frame; ++i) {
            const double x = clip.samples[t * params.hop + i];
            energy += x * x;
        }
        total += std::pow(energy, kStevensExponent);
    }
    return total / static_cast<double>(frames);
}

/// Pitch class of `freq` relative to `ref_freq`, in [0, 12).
inline std::size_t pitch_class(double freq, double ref_freq) {
    const auto semis = static_cast<long long>(std::llround(12.0 * std::log2(freq / ref_freq)));
    return static_cast<std::size_t>(((semis % 12) + 12) % 12);
}

/// Simplified 12-bin HPCP: spectral peaks (log-parabolic interpolation)
/// within the frequency range and above the relative floor add their squared
/// magnitude to the nearest pitch class. Each frame is max-normalised.
inline FeatureMap2D hpcp(const Spectrogram& spec, const HpcpParams& params = {}) {
    if (!(params.ref_freq > 0.0))
        throw InvalidArgument("HPCP reference frequency must be positive");
    const Matrix& s = spec.values;
    FeatureMap2D out{Matrix(s.rows(), 12), MapAxes::TimePitchClass, MapKind::Hpcp};
    const double floor_ratio = std::pow(10.0, params.peak_floor_db / 20.0);
    const double bin_hz = static_cast<double>(spec.sample_rate) / static_cast<double>(spec.fft_size);

    for (std::size_t t = 0; t < s.rows(); ++t) {
        const auto frame = s.row(t);
        const double frame_max = *std::max_element(frame.begin(), frame.end());
        if (frame_max <= 0.0)
            continue;
        auto profile = out.values.row(t);
        for (std::size_t k = 1; k + 1 < frame.size(); ++k) {
            const double m = frame[k];
            if (!(m > frame[k - 1] && m >= frame[k + 1]) || m < floor_ratio * frame_max)
                continue;
            double offset = 0.0;
            double mag = m;
            if (frame[k - 1] > 0.0 && frame[k + 1] > 0.0) {
                const double a = std::log(frame[k - 1]);
                const double b = std::log(m);
                const double c = std::log(frame[k + 1]);
                const double curvature = a - 2.0 * b + c;
                if (curvature < 0.0) {
                    offset = 0.5 * (a - c) / curvature;
                    mag = std::exp(b - 0.25 * (a - c) * offset);
                }
            }
            const double freq = (static_cast<double>(k) + offset) * bin_hz;
            if (freq < params.min_freq || freq > params.max_freq)
                continue;
            profile[pitch_class(freq, params.ref_freq)] += mag * mag;
        }
        const double peak = *std::max_element(profile.begin(), profile.end());
        if (peak > 0.0)
            for (double& v : profile)
                v /= peak;
    }
    return out;
}

} // namespace actfeat
