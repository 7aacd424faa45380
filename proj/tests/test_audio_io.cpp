#include <actfeat/audio_io.hpp>

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cstring>

using namespace actfeat;

namespace {

std::vector<unsigned char> pcm16_wav(const std::vector<std::int16_t>& samples, std::uint16_t channels = 1,
                                     std::uint32_t rate = 16000) {
    std::vector<unsigned char> b;
    const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
    b.insert(b.end(), {'R', 'I', 'F', 'F'});
    detail::put_u32le(b, 36 + data_bytes);
    b.insert(b.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    detail::put_u32le(b, 16);
    detail::put_u16le(b, 1);
    detail::put_u16le(b, channels);
    detail::put_u32le(b, rate);
    detail::put_u32le(b, rate * 2u * channels);
    detail::put_u16le(b, static_cast<std::uint16_t>(2 * channels));
    detail::put_u16le(b, 16);
    b.insert(b.end(), {'d', 'a', 't', 'a'});
    detail::put_u32le(b, data_bytes);
    for (auto s : samples)
        detail::put_u16le(b, static_cast<std::uint16_t>(s));
    return b;
}

} // namespace

TEST(LoadWav, DecodesPcm16ByScalingWith32768) {
    const auto clip = parse_wav(pcm16_wav({0, 16384, -16384, 32767}, 1, 22050));
    ASSERT_EQ(clip.samples.size(), 4u);
    EXPECT_EQ(clip.sample_rate, 22050);
    EXPECT_EQ(clip.channels, 1);
    EXPECT_EQ(clip.samples[0], 0.0);
    EXPECT_EQ(clip.samples[1], 0.5);
    EXPECT_EQ(clip.samples[2], -0.5);
    EXPECT_EQ(clip.samples[3], 32767.0 / 32768.0);
}

TEST(LoadWav, AllZeroPcm) {
    const auto clip = parse_wav(pcm16_wav(std::vector<std::int16_t>(100, 0)));
    for (double s : clip.samples)
        EXPECT_EQ(s, 0.0);
}

TEST(LoadWav, RejectsRifx) {
    auto bytes = pcm16_wav({1, 2, 3});
    bytes[3] = 'X';
    EXPECT_THROW(parse_wav(bytes), FormatError);
}

TEST(LoadWav, RejectsOtherEncodings) {
    auto bytes = pcm16_wav({1, 2, 3, 4});
    bytes[20] = 2; // ADPCM
    EXPECT_THROW(parse_wav(bytes), UnsupportedEncoding);
    auto pcm8 = pcm16_wav({1, 2});
    pcm8[34] = 8;
    EXPECT_THROW(parse_wav(pcm8), UnsupportedEncoding);
}

TEST(LoadWav, RejectsTruncatedChunk) {
    auto bytes = pcm16_wav({1, 2, 3, 4});
    bytes.resize(bytes.size() - 3);
    EXPECT_THROW(parse_wav(bytes), FormatError);
}

TEST(LoadWav, SkipsUnknownChunksAndReadsStereo) {
    auto bytes = pcm16_wav({100, -100, 200, -200}, 2);
    // Splice a LIST chunk (odd length, padded) in front of "fmt ".
    std::vector<unsigned char> extra{'L', 'I', 'S', 'T', 3, 0, 0, 0, 'a', 'b', 'c', 0};
    bytes.insert(bytes.begin() + 12, extra.begin(), extra.end());
    const auto clip = parse_wav(bytes);
    EXPECT_EQ(clip.channels, 2);
    EXPECT_EQ(clip.frames(), 2u);
}

TEST(LoadWav, MissingFile) { EXPECT_THROW(load_wav("/nonexistent/file.wav"), IoError); }

TEST(LoadWav, Float32RoundTripIsBitExact) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    AudioClip clip;
    clip.sample_rate = 44100;
    clip.channels = 2;
    for (int i = 0; i < 1000; ++i)
        clip.samples.push_back(static_cast<double>(u(rng)));
    const auto dir = testkit::scratch_dir("wav_roundtrip");
    write_wav_float32(clip, dir / "a.wav");
    const auto back = load_wav(dir / "a.wav");
    EXPECT_EQ(back.sample_rate, 44100);
    EXPECT_EQ(back.channels, 2);
    EXPECT_EQ(back.samples, clip.samples);
}

TEST(Preprocess, StereoCancellationGivesSilence) {
    AudioClip clip;
    clip.channels = 2;
    for (int i = 0; i < 50; ++i) {
        const double x = std::sin(i * 0.3) * 0.7;
        clip.samples.push_back(x);
        clip.samples.push_back(-x);
    }
    const auto mono = preprocess(clip, 16000);
    ASSERT_EQ(mono.samples.size(), 50u);
    for (double s : mono.samples)
        EXPECT_EQ(s, 0.0);
}

TEST(Preprocess, IdentityAtEqualRate) {
    auto clip = testkit::sine(440.0, 0.1);
    const auto out = preprocess(clip, 16000);
    EXPECT_EQ(out.samples, clip.samples);
    EXPECT_EQ(preprocess(out, 16000).samples, out.samples);
}

TEST(Preprocess, ConstantStaysConstantWithRescaledLength) {
    for (auto [from, to] : {std::pair{44100, 16000}, {8000, 16000}, {16000, 22050}}) {
        AudioClip clip = testkit::make_clip(std::vector<double>(1234, 0.5), from);
        const auto out = preprocess(clip, to);
        EXPECT_EQ(out.samples.size(), static_cast<std::size_t>(std::llround(1234.0 * to / from)));
        for (double s : out.samples)
            ASSERT_EQ(s, 0.5);
    }
}

TEST(Preprocess, MixdownPreservesMean) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    AudioClip clip;
    clip.channels = 3;
    for (int i = 0; i < 3000; ++i)
        clip.samples.push_back(u(rng));
    std::vector<double> channel_means(3, 0.0);
    for (std::size_t i = 0; i < clip.samples.size(); ++i)
        channel_means[i % 3] += clip.samples[i] / 1000.0;
    const double expected = (channel_means[0] + channel_means[1] + channel_means[2]) / 3.0;
    const auto mono = preprocess(clip, clip.sample_rate);
    double mean = 0.0;
    for (double s : mono.samples)
        mean += s;
    mean /= static_cast<double>(mono.samples.size());
    EXPECT_NEAR(mean, expected, 1e-12);
}

TEST(Preprocess, EmptyInputThrows) {
    AudioClip clip;
    EXPECT_THROW(preprocess(clip, 16000), EmptyInput);
}
