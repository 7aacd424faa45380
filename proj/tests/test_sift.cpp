#include <actfeat/sift.hpp>

#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace actfeat;
using actfeat::testkit::blob_field;
using actfeat::testkit::place;

namespace {

Matrix circular_shift_cols(const Matrix& m, std::size_t k) {
    Matrix out(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c)
            out(r, (c + k) % m.cols()) = m(r, c);
    return out;
}

Descriptor unit_descriptor(std::size_t hot, double spill = 0.0) {
    Descriptor d;
    d.values.fill(0.0);
    d.values[hot] = 1.0;
    d.values[(hot + 1) % kDescriptorSize] = spill;
    return d;
}

} // namespace

TEST(SiftDetect, ConstantMapIsDegenerate) {
    const auto det = detect_keypoints(Matrix(32, 40, 0.3));
    EXPECT_TRUE(det.keypoints.empty());
    EXPECT_TRUE(det.degenerate);
    const auto sim = map_similarity(Matrix(32, 32, 1.0), blob_field(32, 32, 1));
    EXPECT_TRUE(sim.degenerate);
    EXPECT_EQ(sim.coverage, 0.0);
}

TEST(SiftDetect, BlobCentreIsLocalised) {
    Matrix m(64, 64);
    testkit::add_blob(m, 32.0, 32.0, 4.0);
    const auto det = detect_keypoints(m);
    ASSERT_FALSE(det.keypoints.empty());
    bool near_centre = false;
    for (const auto& kp : det.keypoints)
        near_centre |= std::hypot(kp.x - 32.0, kp.y - 32.0) <= 2.0;
    EXPECT_TRUE(near_centre);
}

TEST(SiftDetect, RejectsSmallMaps) {
    EXPECT_THROW(detect_keypoints(Matrix(15, 64, 1.0)), MapTooSmall);
    EXPECT_THROW(map_similarity(Matrix(64, 12, 1.0), Matrix(64, 64, 1.0)), MapTooSmall);
}

TEST(SiftDetect, AffineIntensityInvariance) {
    const auto a = blob_field(64, 80, 7);
    for (auto [scale, offset] : {std::pair{0.5, 0.0}, {3.0, -2.0}, {1e-3, 10.0}}) {
        Matrix b = a;
        for (double& v : b.data())
            v = scale * v + offset;
        const auto fa = extract_sift(a), fb = extract_sift(b);
        ASSERT_EQ(fa.keypoints.size(), fb.keypoints.size());
        ASSERT_EQ(fa.descriptors.size(), fb.descriptors.size());
        for (std::size_t i = 0; i < fa.keypoints.size(); ++i) {
            EXPECT_NEAR(fa.keypoints[i].x, fb.keypoints[i].x, 1e-6);
            EXPECT_NEAR(fa.keypoints[i].y, fb.keypoints[i].y, 1e-6);
            EXPECT_NEAR(fa.keypoints[i].scale, fb.keypoints[i].scale, 1e-6);
        }
        for (std::size_t i = 0; i < fa.descriptors.size(); ++i)
            for (std::size_t k = 0; k < kDescriptorSize; ++k)
                ASSERT_NEAR(fa.descriptors[i].values[k], fb.descriptors[i].values[k], 1e-6);
    }
}

TEST(SiftDetect, IntegerShiftMovesKeypoints) {
    // Shifts are multiples of the coarsest octave's stride so every octave grid aligns.
    const auto content = blob_field(56, 56, 11);
    const auto a = detect_keypoints(place(content, 112, 112, 24, 24)).keypoints;
    const auto b = detect_keypoints(place(content, 112, 112, 24 + 8, 24 + 4)).keypoints;
    ASSERT_FALSE(a.empty());
    ASSERT_EQ(a.size(), b.size());
    for (const auto& ka : a) {
        double best = INFINITY;
        for (const auto& kb : b)
            best = std::min(best, std::hypot(kb.x - (ka.x + 4.0), kb.y - (ka.y + 8.0)));
        EXPECT_LE(best, 0.5);
    }
}

TEST(SiftDescribe, UnitNormAndDeterministic) {
    const auto m = blob_field(80, 96, 3);
    const auto f1 = extract_sift(m), f2 = extract_sift(m);
    ASSERT_FALSE(f1.descriptors.empty());
    ASSERT_EQ(f1.descriptors.size(), f2.descriptors.size());
    for (std::size_t i = 0; i < f1.descriptors.size(); ++i) {
        EXPECT_EQ(f1.descriptors[i].values, f2.descriptors[i].values);
        double norm = 0.0;
        for (double v : f1.descriptors[i].values) {
            EXPECT_GE(v, 0.0);
            norm += v * v;
        }
        EXPECT_NEAR(std::sqrt(norm), 1.0, 1e-6);
        EXPECT_LT(f1.descriptors[i].keypoint, f1.keypoints.size());
    }
}

TEST(SiftDescribe, TranslationEquivariant) {
    const auto m = place(blob_field(48, 48, 5), 80, 96, 16, 16);
    const auto shifted = circular_shift_cols(m, 5);
    const auto kps = detect_keypoints(m).keypoints;
    auto moved = kps;
    for (auto& kp : moved)
        kp.x += 5.0;
    const auto da = compute_descriptors(m, kps), db = compute_descriptors(shifted, moved);
    ASSERT_FALSE(da.empty());
    std::size_t compared = 0;
    for (const auto& x : da)
        for (const auto& y : db)
            if (x.keypoint == y.keypoint) {
                ++compared;
                for (std::size_t k = 0; k < kDescriptorSize; ++k)
                    ASSERT_NEAR(x.values[k], y.values[k], 1e-6);
            }
    EXPECT_EQ(compared, da.size());
}

TEST(SiftMatch, IdentityEmptyAndRatioRejection) {
    std::vector<Descriptor> a;
    for (std::size_t i = 0; i < 6; ++i)
        a.push_back(unit_descriptor(i * 20));
    const auto same = match_descriptors(a, a);
    ASSERT_EQ(same.size(), a.size());
    for (std::size_t i = 0; i < same.size(); ++i) {
        EXPECT_EQ(same[i].index_a, i);
        EXPECT_EQ(same[i].index_b, i);
        EXPECT_EQ(same[i].distance, 0.0);
    }
    EXPECT_TRUE(match_descriptors(a, {}).empty());
    EXPECT_TRUE(match_descriptors({}, a).empty());

    // Two near-duplicates of the query: d1/d2 close to 1 fails the ratio test.
    const std::vector<Descriptor> query{unit_descriptor(0)};
    const std::vector<Descriptor> twins{unit_descriptor(0, 0.10), unit_descriptor(0, 0.11)};
    EXPECT_TRUE(match_descriptors(query, twins, 0.8).empty());
    // A single candidate has no second neighbour, so it always passes.
    EXPECT_EQ(match_descriptors(query, {twins[0]}).size(), 1u);
    EXPECT_THROW(match_descriptors(a, a, 0.0), InvalidArgument);
    EXPECT_THROW(match_descriptors(a, a, 1.5), InvalidArgument);
}

TEST(SiftMatch, CollisionKeepsCloserQuery) {
    const std::vector<Descriptor> a{unit_descriptor(0, 0.3), unit_descriptor(0, 0.1)};
    const std::vector<Descriptor> b{unit_descriptor(0), unit_descriptor(64)};
    const auto m = match_descriptors(a, b);
    ASSERT_EQ(m.size(), 1u);
    EXPECT_EQ(m[0].index_a, 1u);
    EXPECT_EQ(m[0].index_b, 0u);
}

TEST(SiftSimilarity, SelfMatchIsComplete) {
    const auto m = blob_field(96, 128, 21);
    const auto s = map_similarity(m, m);
    ASSERT_GT(s.n_keypoints_a, 0u);
    EXPECT_EQ(s.coverage, 1.0);
    ASSERT_TRUE(s.mean_match_distance.has_value());
    EXPECT_EQ(*s.mean_match_distance, 0.0);
    EXPECT_EQ(resize_bilinear(m, m.rows(), m.cols()), m);
}

TEST(SiftSimilarity, UpsampledCopyMatches) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto m = blob_field(96, 128, seed);
        const auto s = compare_sift(extract_sift(m), extract_sift(testkit::upsample2(m)));
        EXPECT_GE(s.coverage, 0.5) << "seed " << seed;
        EXPECT_LE(s.n_matches, std::min(s.n_keypoints_a, s.n_keypoints_b));
    }
}

TEST(SiftSimilarity, NoiseFallsBelowSelfMatchQuantile) {
    std::vector<double> self, noise;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto m = blob_field(96, 128, seed);
        const auto fm = extract_sift(m);
        self.push_back(compare_sift(fm, extract_sift(testkit::upsample2(m))).coverage);
        noise.push_back(map_similarity(m, testkit::white_noise(96, 128, 1000 + seed)).coverage);
    }
    std::sort(self.begin(), self.end());
    const double p5 = self[self.size() / 20];
    for (double c : noise)
        EXPECT_LT(c, p5);
}
