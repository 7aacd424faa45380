#include <actfeat/similarity.hpp>

#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace actfeat;
using actfeat::testkit::normal_vector;
using actfeat::testkit::planted_matrix;
using actfeat::testkit::reference_r;

TEST(Pearson, ExactIdentities) {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        const auto x = normal_vector(50, rng);
        std::vector<double> neg(x.size());
        std::transform(x.begin(), x.end(), neg.begin(), [](double v) { return -v; });
        EXPECT_EQ(pearson_r(x, x).r, 1.0);
        EXPECT_EQ(pearson_r(x, neg).r, -1.0);
        EXPECT_EQ(pearson_r(x, x).p_value, 0.0);
    }
    const std::vector<double> a{1, 2, 3, 4}, b{1, 3, 2, 4};
    EXPECT_EQ(pearson_r(a, b).r, 0.8);
}

TEST(Pearson, MatchesReferenceAndIsSymmetric) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        const auto x = normal_vector(30, rng), y = normal_vector(30, rng);
        const auto xy = pearson_r(x, y), yx = pearson_r(y, x);
        EXPECT_NEAR(xy.r, reference_r(x, y), 1e-12);
        EXPECT_EQ(xy.r, yx.r);
        EXPECT_GE(xy.p_value, 0.0);
        EXPECT_LE(xy.p_value, 1.0);
    }
}

TEST(Pearson, PValueMatchesTTest) {
    // n = 4, r = 0.8: t = 0.8*sqrt(2/0.36) = 1.8856; two-tailed p for 2 df is 1 - t/sqrt(t^2+2).
    const double t = 0.8 * std::sqrt(2.0 / 0.36);
    EXPECT_NEAR(correlation_p_value(0.8, 4), 1.0 - t / std::sqrt(t * t + 2.0), 1e-12);
    // 1 df: p = 1 - (2/pi) atan(|t|).
    const double t1 = 0.5 * std::sqrt(1.0 / 0.75);
    EXPECT_NEAR(correlation_p_value(0.5, 3), 1.0 - 2.0 / std::numbers::pi * std::atan(t1), 1e-12);
    EXPECT_EQ(correlation_p_value(0.0, 10), 1.0);
}

TEST(Pearson, Errors) {
    const std::vector<double> x{1, 2, 3}, c{2, 2, 2};
    EXPECT_THROW(pearson_r(x, c), DegenerateVariance);
    EXPECT_THROW(pearson_r(x, std::vector<double>{1, 2}), LengthMismatch);
    EXPECT_THROW(pearson_r(std::vector<double>{1, 2}, std::vector<double>{2, 1}), InvalidArgument);
}

TEST(NormalizedL2, Examples) {
    const std::vector<double> a{1, 2, 3, 4}, b{1, 3, 2, 4};
    EXPECT_NEAR(normalized_l2(a, b), std::sqrt(1.2), 1e-12);
    EXPECT_EQ(normalized_l2(a, a), 0.0);
    EXPECT_EQ(normalized_l2(a, a, NormalizationMode::UnitNorm), 0.0);
    const std::vector<double> twice{2, 4, 6, 8};
    EXPECT_NEAR(normalized_l2(a, twice, NormalizationMode::UnitNorm), 0.0, 1e-15);
    EXPECT_THROW(normalized_l2(a, std::vector<double>{5, 5, 5, 5}), DegenerateVariance);
    EXPECT_THROW(normalized_l2(a, std::vector<double>{0, 0, 0, 0}, NormalizationMode::UnitNorm), ZeroVector);
    EXPECT_THROW(normalized_l2(a, std::vector<double>{1, 2}), LengthMismatch);
}

TEST(NormalizedL2, ZScoreDistanceTracksCorrelation) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 5 + trial;
        const auto x = normal_vector(n, rng), y = normal_vector(n, rng);
        const double d = normalized_l2(x, y);
        EXPECT_NEAR(d * d, 2.0 * static_cast<double>(n - 1) * (1.0 - reference_r(x, y)), 1e-9);
    }
}

TEST(Correspondence, PlantedIdentityRanksFirst) {
    std::mt19937_64 rng(4);
    const auto feature = normal_vector(40, rng);
    Matrix acts(40, 30);
    for (double& v : acts.data())
        v = std::normal_distribution<double>()(rng);
    for (std::size_t i = 0; i < 40; ++i)
        acts(i, 17) = feature[i];
    const auto res = correspondence_search(acts, feature);
    ASSERT_EQ(res.ranked.size(), 30u);
    EXPECT_EQ(res.ranked[0].neuron_index, 17u);
    EXPECT_EQ(res.ranked[0].r, 1.0);
    EXPECT_TRUE(res.ranked[0].significant);
    for (std::size_t i = 1; i < res.ranked.size(); ++i)
        EXPECT_GE(std::abs(res.ranked[i - 1].r), std::abs(res.ranked[i].r));
}

TEST(Correspondence, ConstantNeuronsAreSkipped) {
    const std::vector<double> feature{1, 5, 2, 8, 3};
    const auto res = correspondence_search(Matrix(5, 9, 0.25), feature);
    EXPECT_TRUE(res.ranked.empty());
    EXPECT_EQ(res.skipped_constant, 9u);
    EXPECT_THROW(correspondence_search(Matrix(4, 2, 1.0), feature), LengthMismatch);
}

TEST(Correspondence, PlantedCorrelationRecovered) {
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(seed);
        const auto feature = normal_vector(200, rng);
        const auto acts = planted_matrix(200, 512, 137, feature, rng);
        const auto res = correspondence_search(acts, feature);
        hits += res.ranked[0].neuron_index == 137 && std::abs(res.ranked[0].r - 0.8) <= 0.1;
    }
    EXPECT_GE(hits, 19);
}

TEST(Correspondence, AffineFeatureTransformPreservesRanking) {
    std::mt19937_64 rng(5);
    const auto feature = normal_vector(60, rng);
    const auto acts = planted_matrix(60, 40, 3, feature, rng);
    const auto base = correspondence_search(acts, feature);
    for (double slope : {2.5, -0.7}) {
        std::vector<double> g(feature.size());
        std::transform(feature.begin(), feature.end(), g.begin(), [&](double f) { return 4.0 + slope * f; });
        const auto other = correspondence_search(acts, g);
        ASSERT_EQ(other.ranked.size(), base.ranked.size());
        for (std::size_t i = 0; i < base.ranked.size(); ++i) {
            EXPECT_EQ(other.ranked[i].neuron_index, base.ranked[i].neuron_index);
            EXPECT_NEAR(std::abs(other.ranked[i].r), std::abs(base.ranked[i].r), 1e-12);
            EXPECT_NEAR(other.ranked[i].p_value, base.ranked[i].p_value, 1e-9);
        }
    }
}

TEST(BenjaminiHochberg, StepUpAndMonotone) {
    // Sorted p = .01 .02 .03 .5 with m = 4 at alpha .05: thresholds .0125 .025 .0375 .05.
    const std::vector<double> p{0.5, 0.03, 0.01, 0.02};
    EXPECT_EQ(benjamini_hochberg(p, 0.05), (std::vector<bool>{false, true, true, true}));
    // Step-up: .03 misses its own threshold .02 but is carried by .035 <= .04.
    const std::vector<double> q{0.035, 0.03};
    EXPECT_EQ(benjamini_hochberg(q, 0.04), (std::vector<bool>{true, true}));

    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 0.2);
    std::vector<double> ps(200);
    for (double& v : ps)
        v = u(rng);
    std::size_t previous = ps.size();
    for (double alpha : {0.2, 0.1, 0.05, 0.01, 0.001}) {
        const auto flags = benjamini_hochberg(ps, alpha);
        const auto count = static_cast<std::size_t>(std::count(flags.begin(), flags.end(), true));
        EXPECT_LE(count, previous);
        previous = count;
    }
}

TEST(Histogram, Examples) {
    const std::vector<double> zeros{0, 0, 0};
    EXPECT_EQ(build_histogram(zeros, 1).counts, std::vector<std::size_t>{3});
    const std::vector<double> four{0, 1, 2, 3};
    const auto h = build_histogram(four, 2);
    EXPECT_EQ(h.counts, (std::vector<std::size_t>{2, 2}));
    EXPECT_EQ(h.bin_edges, (std::vector<double>{0, 1.5, 3}));
    EXPECT_THROW(build_histogram(std::vector<double>{}, 3), EmptyInput);
}

TEST(Histogram, UniformSampleIsFlat) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> v(1000);
    for (double& e : v)
        e = u(rng);
    const auto h = build_histogram(v, 10);
    ASSERT_EQ(h.bin_edges.size(), 11u);
    std::size_t total = 0;
    for (auto c : h.counts) {
        EXPECT_GE(c, 60u);
        EXPECT_LE(c, 140u);
        total += c;
    }
    EXPECT_EQ(total, v.size());
    EXPECT_TRUE(std::is_sorted(h.bin_edges.begin(), h.bin_edges.end()));
}
