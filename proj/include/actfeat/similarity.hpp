#pragma once

#include <actfeat/error.hpp>
#include <actfeat/matrix.hpp>

#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string_view>
#include <vector>

namespace actfeat {

struct Correlation {
    double r = 0.0;
    double p_value = 1.0;
};

struct CorrelationResult {
    std::size_t neuron_index = 0;
    double r = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
    bool significant = false;
};

struct CorrespondenceSearch {
    std::vector<CorrelationResult> ranked;
    std::size_t skipped_constant = 0;
};

enum class NormalizationMode { ZScore, UnitNorm };

inline std::string_view to_string(NormalizationMode mode) {
    return mode == NormalizationMode::ZScore ? "zscore" : "unitnorm";
}

struct Histogram {
    std::vector<double> bin_edges;
    std::vector<std::size_t> counts;
};

namespace detail {

inline double mean(std::span<const double> x) {
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Centred sum of squares.
inline double centred_ss(std::span<const double> x, double mu) {
    double acc = 0.0;
    for (double v : x)
        acc += (v - mu) * (v - mu);
    return acc;
}

} // namespace detail

/// Two-tailed p-value of a sample correlation r over n observations under the
/// t distribution with n - 2 degrees of freedom. The tail probability
/// P(|T| >= t) with t^2 = r^2 (n-2) / (1-r^2) equals I_{1-r^2}((n-2)/2, 1/2).
inline double correlation_p_value(double r, std::size_t n) {
    const double r2 = r * r;
    if (r2 >= 1.0)
        return 0.0;
    const double df = static_cast<double>(n - 2);
    return std::clamp(boost::math::ibeta(0.5 * df, 0.5, 1.0 - r2), 0.0, 1.0);
}

/// Sample Pearson correlation with its two-tailed p-value.
inline Correlation pearson_r(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw LengthMismatch("pearson_r: vectors of length " + std::to_string(x.size()) + " and " +
                             std::to_string(y.size()));
    if (x.size() < 3)
        throw InvalidArgument("pearson_r needs at least 3 observations");
    const double mx = detail::mean(x), my = detail::mean(y);
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        sxy += (x[i] - mx) * (y[i] - my);
    const double sxx = detail::centred_ss(x, mx);
    const double syy = detail::centred_ss(y, my);
    if (sxx == 0.0 || syy == 0.0)
        throw DegenerateVariance("pearson_r: constant input vector");
    const double r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    return {r, correlation_p_value(r, x.size())};
}

/// Euclidean distance after normalising both vectors. ZScore centres and
/// divides by the sample standard deviation (n - 1); UnitNorm divides by the
/// L2 norm without centring.
inline double normalized_l2(std::span<const double> x, std::span<const double> y,
                            NormalizationMode mode = NormalizationMode::ZScore) {
    if (x.size() != y.size())
        throw LengthMismatch("normalized_l2: vectors of different length");
    if (x.empty())
        throw EmptyInput("normalized_l2: empty vectors");
    auto normalise = [mode](std::span<const double> v) {
        std::vector<double> out(v.begin(), v.end());
        if (mode == NormalizationMode::ZScore) {
            if (v.size() < 2)
                throw DegenerateVariance("zscore needs at least two values");
            const double mu = detail::mean(v);
            const double ss = detail::centred_ss(v, mu);
            if (ss == 0.0)
                throw DegenerateVariance("zscore of a constant vector");
            const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
            for (double& e : out)
                e = (e - mu) / sd;
        } else {
            double norm = 0.0;
            for (double e : v)
                norm += e * e;
            if (norm == 0.0)
                throw ZeroVector("unit normalisation of a zero vector");
            norm = std::sqrt(norm);
            for (double& e : out)
                e /= norm;
        }
        return out;
    };
    const auto a = normalise(x);
    const auto b = normalise(y);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        acc += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(acc);
}

/// Benjamini-Hochberg step-up procedure; returns one flag per p-value.
inline std::vector<bool> benjamini_hochberg(std::span<const double> p_values, double alpha) {
    const std::size_t m = p_values.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
    std::size_t cutoff = 0;
    for (std::size_t k = 1; k <= m; ++k)
        if (p_values[order[k - 1]] <= alpha * static_cast<double>(k) / static_cast<double>(m))
            cutoff = k;
    std::vector<bool> significant(m, false);
    for (std::size_t k = 0; k < cutoff; ++k)
        significant[order[k]] = true;
    return significant;
}

/// Correlates every neuron (column of `activations`, one row per clip) with
/// `feature`. Constant neurons are skipped and counted; significance uses BH
/// at level `alpha`; results are ordered by |r| descending, then index.
inline CorrespondenceSearch correspondence_search(const Matrix& activations, std::span<const double> feature,
                                                  double alpha = 0.05) {
    if (activations.rows() != feature.size())
        throw LengthMismatch("activation rows (" + std::to_string(activations.rows()) +
                             ") differ from feature length (" + std::to_string(feature.size()) + ")");
    if (feature.size() < 3)
        throw InvalidArgument("correspondence search needs at least 3 clips");

    CorrespondenceSearch out;
    std::vector<double> column(activations.rows());
    for (std::size_t j = 0; j < activations.cols(); ++j) {
        for (std::size_t i = 0; i < activations.rows(); ++i)
            column[i] = activations(i, j);
        if (detail::centred_ss(column, detail::mean(column)) == 0.0) {
            ++out.skipped_constant;
            continue;
        }
        const auto c = pearson_r(column, feature);
        out.ranked.push_back({j, c.r, c.p_value, feature.size(), false});
    }

    std::vector<double> p(out.ranked.size());
    std::transform(out.ranked.begin(), out.ranked.end(), p.begin(), [](const auto& r) { return r.p_value; });
    const auto flags = benjamini_hochberg(p, alpha);
    for (std::size_t i = 0; i < flags.size(); ++i)
        out.ranked[i].significant = flags[i];

    std::sort(out.ranked.begin(), out.ranked.end(), [](const CorrelationResult& a, const CorrelationResult& b) {
        const double ra = std::abs(a.r), rb = std::abs(b.r);
        if (ra != rb)
            return ra > rb;
        return a.neuron_index < b.neuron_index;
    });
    return out;
}

/// Equal-width histogram over [min, max]; the last bin is closed on the right.
/// A constant sample gets a unit-width range centred on its value.
inline Histogram build_histogram(std::span<const double> values, std::size_t n_bins) {
    if (values.empty())
        throw EmptyInput("histogram of an empty sample");
    if (n_bins == 0)
        throw InvalidArgument("histogram needs at least one bin");
    auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    double lo = *lo_it, hi = *hi_it;
    if (!(hi > lo)) {
        lo -= 0.5;
        hi += 0.5;
    }
    Histogram h;
    h.bin_edges.resize(n_bins + 1);
    for (std::size_t i = 0; i <= n_bins; ++i)
        h.bin_edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_bins);
    h.bin_edges.back() = hi;
    h.counts.assign(n_bins, 0);
    for (double v : values) {
        auto bin = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(n_bins));
        bin = std::min(bin, n_bins - 1);
        ++h.counts[bin];
    }
    return h;
}

} // namespace actfeat
