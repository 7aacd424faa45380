#pragma once

// Upright SIFT for spectrogram-like maps. Rows are the y axis (time) and
// columns the x axis (frequency or pitch class). Orientation assignment is
// deliberately absent: both axes carry fixed meaning, so descriptors are
// taken in the map's own frame.

#include <actfeat/error.hpp>
#include <actfeat/features.hpp>
#include <actfeat/matrix.hpp>

#include <nlohmann/json.hpp>

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <set>
#include <tuple>
#include <vector>

namespace actfeat {

struct SiftParams {
    int scales_per_octave = 3;
    double base_sigma = 1.6;
    double assumed_blur = 0.5;
    double contrast_threshold = 0.03;
    double edge_ratio = 10.0;
    std::size_t min_side = 16;
    int max_refine_steps = 5;
};

struct Keypoint {
    double x = 0.0;     // column, sub-pixel
    double y = 0.0;     // row, sub-pixel
    double scale = 0.0; // blur sigma in input pixels
    double response = 0.0;
    int octave = 0;
    int layer = 0;
};

inline constexpr std::size_t kDescriptorSize = 128;

struct Descriptor {
    std::array<double, kDescriptorSize> values{};
    std::size_t keypoint = 0; // index into the keypoint list it was computed from
};

struct Match {
    std::size_t index_a = 0;
    std::size_t index_b = 0;
    double distance = 0.0;
};

struct KeypointDetection {
    std::vector<Keypoint> keypoints;
    bool degenerate = false; // constant input
};

/// Keypoints plus the descriptors that survived border dropping.
struct SiftFeatures {
    std::vector<Keypoint> keypoints;
    std::vector<Descriptor> descriptors;
    bool degenerate = false;
};

struct MapSimilarity {
    std::size_t n_keypoints_a = 0;
    std::size_t n_keypoints_b = 0;
    std::size_t n_matches = 0;
    double coverage = 0.0;
    std::optional<double> mean_match_distance;
    bool degenerate = false;
};

namespace detail {

/// Min-max normalisation to [0,1]; empty when the map is constant.
inline std::optional<Matrix> minmax_normalize(const Matrix& map) {
    if (map.empty())
        return std::nullopt;
    const double lo = map.min();
    const double hi = map.max();
    if (!(hi > lo))
        return std::nullopt;
    Matrix out(map.rows(), map.cols());
    const double span = hi - lo;
    for (std::size_t i = 0; i < map.size(); ++i)
        out.data()[i] = (map.data()[i] - lo) / span;
    return out;
}

inline std::vector<double> gaussian_kernel(double sigma) {
    const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
        k[static_cast<std::size_t>(i + radius)] = v;
        sum += v;
    }
    for (double& v : k)
        v /= sum;
    return k;
}

/// Separable Gaussian blur with half-sample symmetric borders.
inline Matrix gaussian_blur(const Matrix& in, double sigma) {
    if (sigma <= 0.0)
        return in;
    const auto k = gaussian_kernel(sigma);
    const auto radius = static_cast<std::ptrdiff_t>(k.size() / 2);
    const std::size_t rows = in.rows(), cols = in.cols();
    Matrix tmp(rows, cols), out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            double acc = 0.0;
            for (std::ptrdiff_t i = -radius; i <= radius; ++i)
                acc += k[static_cast<std::size_t>(i + radius)] *
                       in(r, reflect_index(static_cast<std::ptrdiff_t>(c) + i, cols));
            tmp(r, c) = acc;
        }
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            double acc = 0.0;
            for (std::ptrdiff_t i = -radius; i <= radius; ++i)
                acc += k[static_cast<std::size_t>(i + radius)] *
                       tmp(reflect_index(static_cast<std::ptrdiff_t>(r) + i, rows), c);
            out(r, c) = acc;
        }
    return out;
}

inline Matrix downsample2(const Matrix& in) {
    Matrix out((in.rows() + 1) / 2, (in.cols() + 1) / 2);
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t c = 0; c < out.cols(); ++c)
            out(r, c) = in(2 * r, 2 * c);
    return out;
}

struct Octave {
    std::vector<Matrix> dog;
};

inline std::vector<Octave> build_dog_pyramid(const Matrix& normalized, const SiftParams& p) {
    const int S = p.scales_per_octave;
    const double k = std::pow(2.0, 1.0 / S);
    std::vector<double> sigma(static_cast<std::size_t>(S + 3));
    for (int i = 0; i < S + 3; ++i)
        sigma[static_cast<std::size_t>(i)] = p.base_sigma * std::pow(k, i);

    std::vector<Octave> octaves;
    Matrix base = gaussian_blur(normalized, std::sqrt(std::max(0.0, p.base_sigma * p.base_sigma -
                                                                         p.assumed_blur * p.assumed_blur)));
    while (std::min(base.rows(), base.cols()) >= p.min_side) {
        std::vector<Matrix> gauss{base};
        for (int i = 1; i < S + 3; ++i) {
            const double prev = sigma[static_cast<std::size_t>(i - 1)];
            const double cur = sigma[static_cast<std::size_t>(i)];
            gauss.push_back(gaussian_blur(gauss.back(), std::sqrt(cur * cur - prev * prev)));
        }
        Octave oct;
        for (int i = 0; i + 1 < S + 3; ++i) {
            const auto& a = gauss[static_cast<std::size_t>(i)];
            const auto& b = gauss[static_cast<std::size_t>(i + 1)];
            Matrix d(a.rows(), a.cols());
            for (std::size_t j = 0; j < a.size(); ++j)
                d.data()[j] = b.data()[j] - a.data()[j];
            oct.dog.push_back(std::move(d));
        }
        octaves.push_back(std::move(oct));
        base = downsample2(gauss[static_cast<std::size_t>(S)]);
    }
    return octaves;
}

inline bool is_extremum(const std::vector<Matrix>& dog, std::size_t l, std::size_t r, std::size_t c) {
    const double v = dog[l](r, c);
    bool is_max = true, is_min = true;
    for (std::size_t dl = l - 1; dl <= l + 1; ++dl)
        for (std::size_t dr = r - 1; dr <= r + 1; ++dr)
            for (std::size_t dc = c - 1; dc <= c + 1; ++dc) {
                if (dl == l && dr == r && dc == c)
                    continue;
                const double n = dog[dl](dr, dc);
                is_max = is_max && v > n;
                is_min = is_min && v < n;
                if (!is_max && !is_min)
                    return false;
            }
    return true;
}

/// Solves the 3x3 system h * x = b by Cramer's rule.
inline std::optional<std::array<double, 3>> solve3(const std::array<std::array<double, 3>, 3>& h,
                                                   const std::array<double, 3>& b) {
    auto det3 = [](const std::array<std::array<double, 3>, 3>& m) {
        return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
               m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
               m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    };
    const double det = det3(h);
    if (std::abs(det) < 1e-15)
        return std::nullopt;
    std::array<double, 3> x{};
    for (int col = 0; col < 3; ++col) {
        auto m = h;
        for (int row = 0; row < 3; ++row)
            m[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)] = b[static_cast<std::size_t>(row)];
        x[static_cast<std::size_t>(col)] = det3(m) / det;
    }
    return x;
}

struct Refined {
    std::size_t layer, row, col;
    double off_s, off_y, off_x;
    double contrast;
};

inline std::optional<Refined> refine_extremum(const std::vector<Matrix>& dog, std::size_t layer, std::size_t row,
                                              std::size_t col, const SiftParams& p) {
    const std::size_t rows = dog[0].rows(), cols = dog[0].cols();
    const auto S = static_cast<std::size_t>(p.scales_per_octave);
    for (int step = 0; step < p.max_refine_steps; ++step) {
        const auto& d = dog[layer];
        const auto& dp = dog[layer + 1];
        const auto& dm = dog[layer - 1];
        const double v = d(row, col);
        const std::array<double, 3> g{0.5 * (d(row, col + 1) - d(row, col - 1)),
                                      0.5 * (d(row + 1, col) - d(row - 1, col)),
                                      0.5 * (dp(row, col) - dm(row, col))};
        const double dxx = d(row, col + 1) + d(row, col - 1) - 2.0 * v;
        const double dyy = d(row + 1, col) + d(row - 1, col) - 2.0 * v;
        const double dss = dp(row, col) + dm(row, col) - 2.0 * v;
        const double dxy = 0.25 * (d(row + 1, col + 1) - d(row + 1, col - 1) - d(row - 1, col + 1) + d(row - 1, col - 1));
        const double dxs = 0.25 * (dp(row, col + 1) - dp(row, col - 1) - dm(row, col + 1) + dm(row, col - 1));
        const double dys = 0.25 * (dp(row + 1, col) - dp(row - 1, col) - dm(row + 1, col) + dm(row - 1, col));
        const auto off = solve3({{{dxx, dxy, dxs}, {dxy, dyy, dys}, {dxs, dys, dss}}}, {-g[0], -g[1], -g[2]});
        if (!off)
            return std::nullopt;
        const auto [ox, oy, os] = *off;
        if (std::abs(ox) < 0.5 && std::abs(oy) < 0.5 && std::abs(os) < 0.5) {
            const double contrast = v + 0.5 * (g[0] * ox + g[1] * oy + g[2] * os);
            if (std::abs(contrast) < p.contrast_threshold)
                return std::nullopt;
            const double trace = dxx + dyy;
            const double det = dxx * dyy - dxy * dxy;
            const double r = p.edge_ratio;
            if (det <= 0.0 || trace * trace * r >= (r + 1.0) * (r + 1.0) * det)
                return std::nullopt;
            return Refined{layer, row, col, os, oy, ox, contrast};
        }
        const auto next_layer = static_cast<std::ptrdiff_t>(layer) + std::lround(os);
        const auto next_row = static_cast<std::ptrdiff_t>(row) + std::lround(oy);
        const auto next_col = static_cast<std::ptrdiff_t>(col) + std::lround(ox);
        if (next_layer < 1 || next_layer > static_cast<std::ptrdiff_t>(S) || next_row < 1 ||
            next_row > static_cast<std::ptrdiff_t>(rows) - 2 || next_col < 1 ||
            next_col > static_cast<std::ptrdiff_t>(cols) - 2)
            return std::nullopt;
        layer = static_cast<std::size_t>(next_layer);
        row = static_cast<std::size_t>(next_row);
        col = static_cast<std::size_t>(next_col);
    }
    return std::nullopt;
}

} // namespace detail

/// Difference-of-Gaussians keypoints on the min-max normalised map.
/// A constant map yields no keypoints and sets `degenerate`.
inline KeypointDetection detect_keypoints(const Matrix& map, const SiftParams& p = {}) {
    if (map.rows() < p.min_side || map.cols() < p.min_side)
        throw MapTooSmall("map " + std::to_string(map.rows()) + "x" + std::to_string(map.cols()) +
                          " is smaller than " + std::to_string(p.min_side) + "x" + std::to_string(p.min_side));
    KeypointDetection out;
    const auto normalized = detail::minmax_normalize(map);
    if (!normalized) {
        out.degenerate = true;
        return out;
    }

    const auto octaves = detail::build_dog_pyramid(*normalized, p);
    const auto S = static_cast<std::size_t>(p.scales_per_octave);
    const double prefilter = 0.5 * p.contrast_threshold;
    for (std::size_t o = 0; o < octaves.size(); ++o) {
        const auto& dog = octaves[o].dog;
        const std::size_t rows = dog[0].rows(), cols = dog[0].cols();
        const double step = std::ldexp(1.0, static_cast<int>(o));
        std::set<std::tuple<std::size_t, std::size_t, std::size_t>> seen;
        for (std::size_t l = 1; l <= S; ++l)
            for (std::size_t r = 1; r + 1 < rows; ++r)
                for (std::size_t c = 1; c + 1 < cols; ++c) {
                    if (std::abs(dog[l](r, c)) < prefilter || !detail::is_extremum(dog, l, r, c))
                        continue;
                    const auto refined = detail::refine_extremum(dog, l, r, c, p);
                    if (!refined || !seen.emplace(refined->layer, refined->row, refined->col).second)
                        continue;
                    Keypoint kp;
                    kp.x = (static_cast<double>(refined->col) + refined->off_x) * step;
                    kp.y = (static_cast<double>(refined->row) + refined->off_y) * step;
                    kp.scale = p.base_sigma *
                               std::pow(2.0, static_cast<double>(o) +
                                                 (static_cast<double>(refined->layer) + refined->off_s) / p.scales_per_octave);
                    kp.response = std::abs(refined->contrast);
                    kp.octave = static_cast<int>(o);
                    kp.layer = static_cast<int>(refined->layer);
                    if (kp.x < 0.0 || kp.y < 0.0 || kp.x > static_cast<double>(map.cols() - 1) ||
                        kp.y > static_cast<double>(map.rows() - 1))
                        continue;
                    out.keypoints.push_back(kp);
                }
    }
    return out;
}

/// Upright 4x4x8 gradient-histogram descriptors from a 16x16 sample grid
/// spaced at 3/4 of the keypoint scale. The map is blurred locally to the
/// keypoint scale; keypoints whose support leaves the map are dropped.
inline std::vector<Descriptor> compute_descriptors(const Matrix& map, const std::vector<Keypoint>& keypoints,
                                                   const SiftParams& p = {}) {
    std::vector<Descriptor> out;
    const auto normalized = detail::minmax_normalize(map);
    if (!normalized)
        return out;
    const Matrix& img = *normalized;
    const auto rows = static_cast<std::ptrdiff_t>(img.rows());
    const auto cols = static_cast<std::ptrdiff_t>(img.cols());
    constexpr int kGrid = 16;
    constexpr double kHalf = 7.5;
    constexpr double kWeightSigma = 8.0;

    for (std::size_t ki = 0; ki < keypoints.size(); ++ki) {
        const Keypoint& kp = keypoints[ki];
        const double step = 0.75 * kp.scale;
        const double sigma = std::sqrt(std::max(kp.scale * kp.scale - p.assumed_blur * p.assumed_blur, 0.01));
        const auto kernel = detail::gaussian_kernel(sigma);
        const auto radius = static_cast<std::ptrdiff_t>(kernel.size() / 2);
        const double reach = kHalf * step + 2.0;

        const auto r0 = static_cast<std::ptrdiff_t>(std::floor(kp.y - reach));
        const auto r1 = static_cast<std::ptrdiff_t>(std::ceil(kp.y + reach));
        const auto c0 = static_cast<std::ptrdiff_t>(std::floor(kp.x - reach));
        const auto c1 = static_cast<std::ptrdiff_t>(std::ceil(kp.x + reach));
        if (r0 - radius < 0 || c0 - radius < 0 || r1 + radius >= rows || c1 + radius >= cols)
            continue;

        // Blurred patch over [r0, r1] x [c0, c1].
        const auto pr = static_cast<std::size_t>(r1 - r0 + 1);
        const auto pc = static_cast<std::size_t>(c1 - c0 + 1);
        Matrix horiz(pr + 2 * static_cast<std::size_t>(radius), pc);
        for (std::size_t i = 0; i < horiz.rows(); ++i) {
            const auto src_r = static_cast<std::size_t>(r0 - radius + static_cast<std::ptrdiff_t>(i));
            for (std::size_t j = 0; j < pc; ++j) {
                double acc = 0.0;
                const auto src_c = c0 + static_cast<std::ptrdiff_t>(j) - radius;
                for (std::size_t t = 0; t < kernel.size(); ++t)
                    acc += kernel[t] * img(src_r, static_cast<std::size_t>(src_c + static_cast<std::ptrdiff_t>(t)));
                horiz(i, j) = acc;
            }
        }
        Matrix patch(pr, pc);
        for (std::size_t i = 0; i < pr; ++i)
            for (std::size_t j = 0; j < pc; ++j) {
                double acc = 0.0;
                for (std::size_t t = 0; t < kernel.size(); ++t)
                    acc += kernel[t] * horiz(i + t, j);
                patch(i, j) = acc;
            }
        auto sample = [&](double y, double x) {
            const double ly = y - static_cast<double>(r0);
            const double lx = x - static_cast<double>(c0);
            const auto iy = static_cast<std::size_t>(std::floor(ly));
            const auto ix = static_cast<std::size_t>(std::floor(lx));
            const double fy = ly - static_cast<double>(iy);
            const double fx = lx - static_cast<double>(ix);
            const std::size_t iy1 = std::min(iy + 1, pr - 1);
            const std::size_t ix1 = std::min(ix + 1, pc - 1);
            return (1 - fy) * ((1 - fx) * patch(iy, ix) + fx * patch(iy, ix1)) +
                   fy * ((1 - fx) * patch(iy1, ix) + fx * patch(iy1, ix1));
        };

        Descriptor desc;
        desc.keypoint = ki;
        auto& hist = desc.values;
        for (int i = 0; i < kGrid; ++i) {
            for (int j = 0; j < kGrid; ++j) {
                const double y = kp.y + (i - kHalf) * step;
                const double x = kp.x + (j - kHalf) * step;
                const double gx = sample(y, x + 1.0) - sample(y, x - 1.0);
                const double gy = sample(y + 1.0, x) - sample(y - 1.0, x);
                const double mag = std::hypot(gx, gy);
                if (mag == 0.0)
                    continue;
                const double di = i - kHalf, dj = j - kHalf;
                const double w = mag * std::exp(-(di * di + dj * dj) / (2.0 * kWeightSigma * kWeightSigma));
                double theta = std::atan2(gy, gx);
                if (theta < 0.0)
                    theta += 2.0 * std::numbers::pi;
                double obin = theta * 8.0 / (2.0 * std::numbers::pi);
                if (obin >= 8.0)
                    obin -= 8.0;
                const double rbin = (i - 1.5) / 4.0;
                const double cbin = (j - 1.5) / 4.0;
                const int r_lo = static_cast<int>(std::floor(rbin));
                const int c_lo = static_cast<int>(std::floor(cbin));
                const int o_lo = static_cast<int>(std::floor(obin));
                const double fr = rbin - r_lo, fc = cbin - c_lo, fo = obin - o_lo;
                for (int dr = 0; dr < 2; ++dr) {
                    const int rr = r_lo + dr;
                    if (rr < 0 || rr > 3)
                        continue;
                    const double wr = dr ? fr : 1.0 - fr;
                    for (int dc = 0; dc < 2; ++dc) {
                        const int cc = c_lo + dc;
                        if (cc < 0 || cc > 3)
                            continue;
                        const double wc = dc ? fc : 1.0 - fc;
                        for (int dor = 0; dor < 2; ++dor) {
                            const int oo = (o_lo + dor) % 8;
                            const double wo = dor ? fo : 1.0 - fo;
                            hist[static_cast<std::size_t>((rr * 4 + cc) * 8 + oo)] += w * wr * wc * wo;
                        }
                    }
                }
            }
        }

        auto normalize = [&hist]() {
            double norm = 0.0;
            for (double v : hist)
                norm += v * v;
            norm = std::sqrt(norm);
            if (norm == 0.0)
                return false;
            for (double& v : hist)
                v /= norm;
            return true;
        };
        if (!normalize())
            continue;
        for (double& v : hist)
            v = std::min(v, 0.2);
        normalize();
        out.push_back(desc);
    }
    return out;
}

inline double descriptor_distance(const Descriptor& a, const Descriptor& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < kDescriptorSize; ++i) {
        const double d = a.values[i] - b.values[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

/// Brute-force nearest-neighbour matching with Lowe's ratio test, then
/// one-to-one pruning: each b index keeps only its closest a (lower a index
/// on ties). Result is ordered by a index.
inline std::vector<Match> match_descriptors(const std::vector<Descriptor>& a, const std::vector<Descriptor>& b,
                                            double ratio = 0.8) {
    if (!(ratio > 0.0 && ratio <= 1.0))
        throw InvalidArgument("ratio must lie in (0, 1]");
    std::vector<std::optional<Match>> best_for_b(b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d1 = std::numeric_limits<double>::infinity();
        double d2 = std::numeric_limits<double>::infinity();
        std::size_t nearest = 0;
        for (std::size_t j = 0; j < b.size(); ++j) {
            const double d = descriptor_distance(a[i], b[j]);
            if (d < d1) {
                d2 = d1;
                d1 = d;
                nearest = j;
            } else if (d < d2) {
                d2 = d;
            }
        }
        if (b.empty() || !(d1 < ratio * d2))
            continue;
        auto& slot = best_for_b[nearest];
        if (!slot || d1 < slot->distance)
            slot = Match{i, nearest, d1};
    }
    std::vector<Match> matches;
    for (const auto& m : best_for_b)
        if (m)
            matches.push_back(*m);
    std::sort(matches.begin(), matches.end(), [](const Match& x, const Match& y) { return x.index_a < y.index_a; });
    return matches;
}

inline SiftFeatures extract_sift(const Matrix& map, const SiftParams& p = {}) {
    auto detection = detect_keypoints(map, p);
    SiftFeatures f;
    f.degenerate = detection.degenerate;
    f.descriptors = compute_descriptors(map, detection.keypoints, p);
    f.keypoints = std::move(detection.keypoints);
    return f;
}

/// Similarity from precomputed features; `a` is matched against `b`.
inline MapSimilarity compare_sift(const SiftFeatures& a, const SiftFeatures& b, double ratio = 0.8,
                                  std::vector<Match>* matches_out = nullptr) {
    MapSimilarity s;
    s.degenerate = a.degenerate || b.degenerate;
    s.n_keypoints_a = a.descriptors.size();
    s.n_keypoints_b = b.descriptors.size();
    const auto matches = match_descriptors(a.descriptors, b.descriptors, ratio);
    s.n_matches = matches.size();
    if (s.n_keypoints_a + s.n_keypoints_b > 0)
        s.coverage = 2.0 * static_cast<double>(s.n_matches) / static_cast<double>(s.n_keypoints_a + s.n_keypoints_b);
    if (!matches.empty()) {
        double total = 0.0;
        for (const auto& m : matches)
            total += m.distance;
        s.mean_match_distance = total / static_cast<double>(matches.size());
    }
    if (matches_out)
        *matches_out = matches;
    return s;
}

/// Bilinear resize with pixel-centre alignment; same-shape resize is exact.
inline Matrix resize_bilinear(const Matrix& in, std::size_t rows, std::size_t cols) {
    if (in.empty() || rows == 0 || cols == 0)
        throw InvalidArgument("cannot resize an empty map");
    Matrix out(rows, cols);
    const double sy = static_cast<double>(in.rows()) / static_cast<double>(rows);
    const double sx = static_cast<double>(in.cols()) / static_cast<double>(cols);
    auto coord = [](std::size_t dst, double scale, std::size_t extent) {
        const double src = std::clamp((static_cast<double>(dst) + 0.5) * scale - 0.5, 0.0,
                                      static_cast<double>(extent - 1));
        const auto lo = static_cast<std::size_t>(src);
        return std::tuple{lo, std::min(lo + 1, extent - 1), src - static_cast<double>(lo)};
    };
    for (std::size_t r = 0; r < rows; ++r) {
        const auto [y0, y1, fy] = coord(r, sy, in.rows());
        for (std::size_t c = 0; c < cols; ++c) {
            const auto [x0, x1, fx] = coord(c, sx, in.cols());
            const double top = in(y0, x0) + fx * (in(y0, x1) - in(y0, x0));
            const double bottom = in(y1, x0) + fx * (in(y1, x1) - in(y1, x0));
            out(r, c) = top + fy * (bottom - top);
        }
    }
    return out;
}

/// Feature map vs activation map: the activation map is resized to the
/// feature map's shape, then both go through detect, describe and match.
inline MapSimilarity map_similarity(const Matrix& feature_map, const Matrix& activation_map, double ratio = 0.8,
                                    const SiftParams& p = {}) {
    if (feature_map.rows() < p.min_side || feature_map.cols() < p.min_side)
        throw MapTooSmall("feature map " + std::to_string(feature_map.rows()) + "x" +
                          std::to_string(feature_map.cols()) + " is below the minimum SIFT size");
    const Matrix resized = resize_bilinear(activation_map, feature_map.rows(), feature_map.cols());
    return compare_sift(extract_sift(feature_map, p), extract_sift(resized, p), ratio);
}

inline MapSimilarity map_similarity(const FeatureMap2D& feature_map, const Matrix& activation_map,
                                    double ratio = 0.8, const SiftParams& p = {}) {
    return map_similarity(feature_map.values, activation_map, ratio, p);
}

/// Keypoints of both maps and their matches, for external visualisation.
inline nlohmann::json sift_debug_json(const SiftFeatures& a, const SiftFeatures& b, const std::vector<Match>& matches) {
    auto keypoints = [](const SiftFeatures& f) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& d : f.descriptors) {
            const auto& kp = f.keypoints[d.keypoint];
            arr.push_back({{"x", kp.x}, {"y", kp.y}, {"scale", kp.scale}, {"response", kp.response}});
        }
        return arr;
    };
    nlohmann::json m = nlohmann::json::array();
    for (const auto& match : matches)
        m.push_back({{"index_a", match.index_a}, {"index_b", match.index_b}, {"distance", match.distance}});
    return {{"keypoints_a", keypoints(a)}, {"keypoints_b", keypoints(b)}, {"matches", m}};
}

} // namespace actfeat
