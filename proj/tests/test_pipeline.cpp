#include <actfeat/pipeline.hpp>

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace actfeat;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigDir = ACTFEAT_CONFIG_DIR;

struct Workspace {
    fs::path root;
    RunConfig config;
    std::ostringstream out, err;
    RunOptions opt;

    explicit Workspace(const std::string& name) : root(testkit::scratch_dir("pipeline_" + name)) {
        fs::create_directories(root / "clips");
        config.input_dir = root / "clips";
        config.output_dir = root / "out";
        opt.out = &out;
        opt.err = &err;
    }

    void add_clip(const std::string& rel, std::uint64_t seed, double seconds = 1.5) {
        fs::create_directories((root / "clips" / rel).parent_path());
        write_wav_float32(testkit::note_clip(seed, seconds), root / "clips" / rel);
    }

    void use_toy_network(std::vector<std::size_t> layers, std::optional<std::size_t> frames = 96) {
        const auto manifest = cmd_init_weights(kConfigDir / "toy_net.json", root / "weights", 7);
        config.network = NetworkSource{kConfigDir / "toy_net.json", manifest, std::move(layers), frames};
    }
};

std::size_t count_files(const fs::path& dir, const std::string& suffix) {
    std::size_t n = 0;
    for (const auto& e : fs::directory_iterator(dir)) {
        const auto name = e.path().filename().string();
        n += name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
    }
    return n;
}

std::size_t csv_rows(const fs::path& path) {
    std::istringstream in(read_text_file(path));
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line))
        n += !line.empty();
    return n - 1;
}

void write_scalars(const fs::path& out_dir, const std::vector<std::string>& ids, const std::vector<double>& onset,
                   const std::vector<double>& loud) {
    std::string csv = "clip_id,onset_rate,loudness,onset_low_confidence\n";
    for (std::size_t i = 0; i < ids.size(); ++i)
        csv += ids[i] + "," + format_number(onset[i]) + "," + format_number(loud[i]) + ",0\n";
    write_text_file(out_dir / "features" / "scalars.csv", csv);
}

} // namespace

TEST(RunConfig, ParsesAndResolvesPaths) {
    const auto j = nlohmann::json::parse(R"({
        "input_dir": "clips", "activations_dir": "/abs/acts",
        "stft": {"hop": 256}, "similarity": {"normalization": "unitnorm", "map_layers": [0, 3]}
    })");
    const auto c = parse_run_config(j, "/base");
    EXPECT_EQ(c.input_dir, fs::path("/base/clips"));
    EXPECT_EQ(c.output_dir, fs::path("/base/out"));
    EXPECT_EQ(c.activations_dir, fs::path("/abs/acts"));
    EXPECT_EQ(c.stft.hop, 256u);
    EXPECT_EQ(c.stft.fft_size, 512u);
    EXPECT_EQ(c.similarity.normalization, NormalizationMode::UnitNorm);
    EXPECT_EQ(c.similarity.map_layers, (std::vector<std::size_t>{0, 3}));
    EXPECT_FALSE(c.similarity.embedding_layers.has_value());
}

TEST(RunConfig, RejectsInvalidConfigs) {
    auto parse = [](const char* text) { return parse_run_config(nlohmann::json::parse(text), "/base"); };
    EXPECT_THROW(parse(R"({"input_dir": "x"})"), ConfigError);
    EXPECT_THROW(parse(R"({"input_dir": "x", "activations_dir": "a", "network": {"config": "n", "manifest": "m"}})"),
                 ConfigError);
    EXPECT_THROW(parse(R"({"input_dir": "x", "activations_dir": "a", "colour": 3})"), ConfigError);
    EXPECT_THROW(parse(R"({"input_dir": "x", "activations_dir": "a", "mel": {"n_mels": "many"}})"), ConfigError);
    EXPECT_THROW(parse(R"({"input_dir": "x", "activations_dir": "a", "similarity": {"normalization": "l1"}})"),
                 ConfigError);
    auto c = parse(R"({"input_dir": "x", "activations_dir": "a", "similarity": {"ratio": 1.5}})");
    EXPECT_THROW(check_run_config(c), ConfigError);
    c = parse(R"({"input_dir": "x", "activations_dir": "a", "features": {"hpss": {"kernel_time": 4}}})");
    EXPECT_THROW(check_run_config(c), ConfigError);
    c = parse(R"({"input_dir": "/definitely/not/here", "activations_dir": "a"})");
    EXPECT_THROW(check_run_paths(c), ConfigError);
    EXPECT_THROW(load_run_config("/definitely/not/here.json"), ConfigError);
}

TEST(RunConfig, ExitCodes) {
    EXPECT_EQ(exit_code_for(ConfigError("x")), 2);
    EXPECT_EQ(exit_code_for(NoInput("x")), 3);
    EXPECT_EQ(exit_code_for(ShapeMismatch(0, "x")), 4);
    EXPECT_EQ(exit_code_for(Misalignment("x")), 5);
    EXPECT_EQ(exit_code_for(MapTooSmall("x")), 6);
    EXPECT_EQ(exit_code_for(FormatError("x")), 1);
}

TEST(Clips, DiscoveryIsSortedAndNamesAreStable) {
    Workspace ws("discover");
    ws.add_clip("b.wav", 1, 0.5);
    ws.add_clip("a/x.WAV", 2, 0.5);
    write_text_file(ws.root / "clips" / "notes.txt", "ignored");
    const auto clips = discover_clips(ws.config.input_dir);
    ASSERT_EQ(clips.size(), 2u);
    EXPECT_EQ(clips[0].id, "a/x");
    EXPECT_EQ(clips[0].stem, "a__x");
    EXPECT_EQ(clips[1].id, "b");
}

TEST(WorkerPool, IndexKeyedAndLowestErrorWins) {
    std::vector<std::size_t> out(100);
    parallel_for(out.size(), 4, [&](std::size_t i) { out[i] = i * i; });
    for (std::size_t i = 0; i < out.size(); ++i)
        EXPECT_EQ(out[i], i * i);
    try {
        parallel_for(10, 3, [](std::size_t i) {
            if (i == 3 || i == 7)
                throw InvalidArgument(std::to_string(i));
        });
        FAIL();
    } catch (const InvalidArgument& e) {
        EXPECT_STREQ(e.what(), "3");
    }
}

TEST(Features, ThreeClipsGiveNineMapsAndThreeRows) {
    Workspace ws("features3");
    for (int i = 0; i < 3; ++i)
        ws.add_clip("c" + std::to_string(i) + ".wav", static_cast<std::uint64_t>(i));
    ws.config.activations_dir = ws.root;
    const auto summary = cmd_features(ws.config, ws.opt);
    EXPECT_EQ(summary.processed, 3u);
    EXPECT_EQ(count_files(ws.config.output_dir / "features", ".npy"), 9u);
    EXPECT_EQ(csv_rows(ws.config.output_dir / "features" / "scalars.csv"), 3u);
    const auto h = read_tensor_file(ws.config.output_dir / "features" / "c0.harmonic.npy");
    EXPECT_EQ(h.dim(1), 257u);
    EXPECT_EQ(read_tensor_file(ws.config.output_dir / "features" / "c0.hpcp.npy").dim(1), 12u);

    const auto manifest = nlohmann::json::parse(read_text_file(ws.config.output_dir / "manifest.json"));
    EXPECT_EQ(manifest["config_hash"], config_hash(ws.config));
    EXPECT_EQ(manifest["outputs"]["features"].size(), 10u);
    EXPECT_EQ(manifest["decisions"]["similarity_scalar"].get<std::string>().rfind("coverage", 0), 0u);
}

TEST(Features, EmptyDirectoryWritesNothing) {
    Workspace ws("empty");
    EXPECT_THROW(cmd_features(ws.config, ws.opt), NoInput);
    EXPECT_FALSE(fs::exists(ws.config.output_dir));
}

TEST(Features, CorruptClipIsSkipped) {
    Workspace ws("corrupt");
    ws.add_clip("good.wav", 3);
    write_text_file(ws.root / "clips" / "bad.wav", "RIFF....WAVEnot really");
    const auto summary = cmd_features(ws.config, ws.opt);
    EXPECT_EQ(summary.processed, 1u);
    ASSERT_EQ(summary.skipped.size(), 1u);
    EXPECT_EQ(summary.skipped[0].first, "bad");
    EXPECT_EQ(csv_rows(ws.config.output_dir / "features" / "scalars.csv"), 1u);
    EXPECT_NE(ws.out.str().find("1 skipped"), std::string::npos);
}

TEST(Activations, RequestedLayersAreWrittenPerClip) {
    Workspace ws("activations");
    for (int i = 0; i < 3; ++i)
        ws.add_clip("c" + std::to_string(i) + ".wav", static_cast<std::uint64_t>(10 + i));
    ws.use_toy_network({0, 2, 3, 7});
    cmd_activations(ws.config, ws.opt);
    const auto dir = ws.config.output_dir / "activations";
    EXPECT_EQ(count_files(dir, ".npy") - count_files(dir, ".input.npy"), 12u);
    EXPECT_EQ(read_tensor_file(dir / "c0.input.npy").shape(), (Shape{1, 96, 64}));
    EXPECT_EQ(read_tensor_file(dir / "c0.layer0.npy").shape(), (Shape{8, 96, 64}));
    EXPECT_EQ(read_tensor_file(dir / "c0.layer7.npy").shape(), Shape{32});

    const auto first = read_text_file(dir / "c1.layer3.npy");
    cmd_activations(ws.config, ws.opt);
    EXPECT_EQ(read_text_file(dir / "c1.layer3.npy"), first);
}

TEST(Activations, WrongInputHeightNamesLayerZero) {
    Workspace ws("activations_bad");
    ws.add_clip("c.wav", 1);
    ws.use_toy_network({0}, 80);
    try {
        cmd_activations(ws.config, ws.opt);
        FAIL();
    } catch (const ShapeMismatch& e) {
        EXPECT_EQ(e.layer(), 0u);
        EXPECT_NE(std::string(e.what()).find("layer 0"), std::string::npos);
    }
}

TEST(CompareEmbeddings, PlantedNeuronTopsReport) {
    Workspace ws("embeddings");
    const fs::path acts = ws.root / "acts";
    fs::create_directories(acts);
    ws.config.activations_dir = acts;
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd;
    const std::size_t clips = 60;
    std::vector<std::string> ids;
    std::vector<double> onset(clips), loud(clips);
    for (std::size_t i = 0; i < clips; ++i) {
        ids.push_back("clip" + std::to_string(i));
        onset[i] = 2.0 + nd(rng);
        loud[i] = 50.0 + 10.0 * nd(rng);
        for (std::size_t layer : {4u, 9u}) {
            Tensor v({24});
            for (double& x : v.data())
                x = nd(rng);
            v[13] = 0.1 * loud[i] + 0.3 * nd(rng);
            v[5] = onset[i] + 0.3 * nd(rng);
            write_tensor_file(v, acts / (ids[i] + ".layer" + std::to_string(layer) + ".npy"));
        }
    }
    write_scalars(ws.config.output_dir, ids, onset, loud);
    const auto report = cmd_compare_embeddings(ws.config, ws.opt);
    ASSERT_EQ(report["sections"].size(), 4u);
    for (const auto& s : report["sections"]) {
        const auto expected = s["feature"] == "loudness" ? 13 : 5;
        EXPECT_EQ(s["ranked"][0]["neuron_index"], expected);
        EXPECT_TRUE(s["ranked"][0]["significant"].get<bool>());
        EXPECT_EQ(s["ranked"].size(), 24u);
        EXPECT_EQ(s["scatter"].size(), 10u);
    }
    EXPECT_EQ(csv_rows(ws.config.output_dir / "reports" / "embeddings.csv"), 4u * 24u);
    EXPECT_NE(ws.out.str().find("1. neuron 13"), std::string::npos);

    fs::remove(acts / "clip7.layer9.npy");
    EXPECT_THROW(cmd_compare_embeddings(ws.config, ws.opt), Misalignment);
}

namespace {

struct MapFixture {
    Workspace ws;
    Matrix harmonic;

    explicit MapFixture(const std::string& name, std::size_t rows = 64, std::size_t cols = 72) : ws(name) {
        ws.config.activations_dir = ws.root / "acts";
        fs::create_directories(*ws.config.activations_dir);
        std::vector<std::string> ids;
        for (std::uint64_t i = 0; i < 3; ++i) {
            const std::string id = "m" + std::to_string(i);
            ids.push_back(id);
            const auto h = testkit::blob_field(rows, cols, 100 + i);
            const auto p = testkit::blob_field(rows, cols, 200 + i);
            const auto pc = testkit::blob_field(rows, 12, 300 + i, 5.0);
            const auto dir = ws.config.output_dir / "features";
            fs::create_directories(dir);
            write_tensor_file(tensor_from_matrix(h), dir / (id + ".harmonic.npy"));
            write_tensor_file(tensor_from_matrix(p), dir / (id + ".percussive.npy"));
            write_tensor_file(tensor_from_matrix(pc), dir / (id + ".hpcp.npy"));

            // Channel 2 is the harmonic map as the comparison sees it; channel 1 is silent.
            const auto planted = comparison_map(tensor_from_matrix(h), 0, ws.config.similarity);
            Tensor acts({4, rows / 2, cols / 2});
            const auto noise = testkit::white_noise(rows / 2, cols / 2, 400 + i);
            const auto shrunk = resize_bilinear(planted, rows / 2, cols / 2);
            for (std::size_t r = 0; r < rows / 2; ++r)
                for (std::size_t c = 0; c < cols / 2; ++c) {
                    acts.at(0, r, c) = noise(r, c);
                    acts.at(2, r, c) = shrunk(r, c);
                    acts.at(3, r, c) = noise(c % (rows / 2), r % (cols / 2));
                }
            write_tensor_file(acts, detail::activation_file(*ws.config.activations_dir, id, 0));
            // Same-shape layer with the exact planted copy.
            Tensor exact({2, rows, cols});
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < cols; ++c) {
                    exact.at(0, r, c) = noise(r / 2, c / 2);
                    exact.at(1, r, c) = planted(r, c);
                }
            write_tensor_file(exact, detail::activation_file(*ws.config.activations_dir, id, 5));
        }
        std::vector<double> z(ids.size(), 0.0);
        write_scalars(ws.config.output_dir, ids, z, z);
    }
};

const nlohmann::json& section_for(const nlohmann::json& report, std::size_t layer, const std::string& feature) {
    for (const auto& s : report["sections"])
        if (s["layer"] == layer && s["feature"] == feature)
            return s;
    throw std::runtime_error("section missing");
}

} // namespace

TEST(CompareMaps, PlantedCopyRanksFirstAndSilentChannelIsDegenerate) {
    MapFixture fx("maps");
    fx.ws.opt.plots = true;
    const auto report = cmd_compare_maps(fx.ws.config, fx.ws.opt);
    ASSERT_EQ(report["sections"].size(), 6u);

    const auto& exact = section_for(report, 5, "harmonic");
    EXPECT_EQ(exact["ranking"][0]["channel"], 1);
    EXPECT_EQ(exact["ranking"][0]["coverage"], 1.0);
    EXPECT_EQ(exact["ranking"][0]["mean_match_distance"], 0.0);

    const auto& halved = section_for(report, 0, "harmonic");
    EXPECT_EQ(halved["ranking"][0]["channel"], 2);
    for (const auto& r : halved["ranking"])
        if (r["channel"] == 1) {
            EXPECT_EQ(r["coverage"], 0.0);
            EXPECT_EQ(r["n_degenerate"], 3);
        }
    for (const auto& s : report["sections"]) {
        std::size_t total = 0;
        for (const auto& c : s["histogram"]["counts"])
            total += c.get<std::size_t>();
        EXPECT_EQ(total, s["n_channels"].get<std::size_t>());
    }
    EXPECT_EQ(csv_rows(fx.ws.config.output_dir / "reports" / "maps.csv"), 6u * 4u / 2u + 3u * 2u);
    EXPECT_EQ(csv_rows(fx.ws.config.output_dir / "reports" / "maps_pairs.csv"), 3u * 3u * (4u + 2u));
    EXPECT_TRUE(fs::exists(fx.ws.config.output_dir / "plots" / "maps_hist_layer0_harmonic.svg"));
    EXPECT_TRUE(fs::exists(fx.ws.config.output_dir / "plots" / "maps_match_layer5_harmonic.svg"));
}

TEST(CompareMaps, DeterministicAcrossWorkerCounts) {
    MapFixture fx("maps_jobs");
    cmd_compare_maps(fx.ws.config, fx.ws.opt);
    const auto reports = fx.ws.config.output_dir / "reports";
    const auto csv1 = read_text_file(reports / "maps_pairs.csv"), json1 = read_text_file(reports / "maps.json");
    fx.ws.opt.jobs = 3;
    cmd_compare_maps(fx.ws.config, fx.ws.opt);
    EXPECT_EQ(read_text_file(reports / "maps_pairs.csv"), csv1);
    EXPECT_EQ(read_text_file(reports / "maps.json"), json1);
}

TEST(CompareMaps, SmallMapsFail) {
    MapFixture fx("maps_small", 14, 40);
    EXPECT_THROW(cmd_compare_maps(fx.ws.config, fx.ws.opt), MapTooSmall);
}
