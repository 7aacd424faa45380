#pragma once

// Batch orchestration over a directory of clips: feature extraction, network
// activations, and the two comparison reports. Every verb writes under the
// output directory and records its files in <out>/manifest.json.
//
// Output layout:
//   features/<stem>.{harmonic,percussive,hpcp}.npy   [frames x bins|12]
//   features/scalars.csv                              clip_id,onset_rate,loudness,onset_low_confidence
//   activations/<stem>.input.npy                      [1 x frames x mels]
//   activations/<stem>.layer<i>.npy
//   reports/embeddings.{csv,json}, reports/maps.{csv,json}, reports/maps_pairs.csv
//   plots/*.svg                                       only with plots enabled
// A clip's stem is its path relative to the input directory without the
// extension, with '/' written as "__".

#include <actfeat/audio_io.hpp>
#include <actfeat/error.hpp>
#include <actfeat/features.hpp>
#include <actfeat/nn.hpp>
#include <actfeat/npy.hpp>
#include <actfeat/report.hpp>
#include <actfeat/sift.hpp>
#include <actfeat/similarity.hpp>
#include <actfeat/spectral.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <variant>
#include <vector>

namespace actfeat {

namespace fs = std::filesystem;

/// Invalid or inconsistent run configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Nothing to process: no clips found, or every clip failed.
class NoInput : public Error {
public:
    using Error::Error;
};

/// Clip sets of two pipeline stages disagree.
class Misalignment : public Error {
public:
    using Error::Error;
};

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int failure = 1;
inline constexpr int config = 2;
inline constexpr int empty_input = 3;
inline constexpr int shape_mismatch = 4;
inline constexpr int misaligned = 5;
inline constexpr int map_too_small = 6;
} // namespace exit_code

inline int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e))
        return exit_code::config;
    if (dynamic_cast<const NoInput*>(&e))
        return exit_code::empty_input;
    if (dynamic_cast<const ShapeMismatch*>(&e))
        return exit_code::shape_mismatch;
    if (dynamic_cast<const Misalignment*>(&e))
        return exit_code::misaligned;
    if (dynamic_cast<const MapTooSmall*>(&e))
        return exit_code::map_too_small;
    return exit_code::failure;
}

// ---------------------------------------------------------------------------
// Configuration

struct NetworkSource {
    fs::path config;
    fs::path manifest;
    std::vector<std::size_t> layers; // empty: every layer
    std::optional<std::size_t> input_frames;
};

struct SimilaritySettings {
    double ratio = 0.8;
    double alpha = 0.05;
    NormalizationMode normalization = NormalizationMode::ZScore;
    std::size_t top_k = 10;
    std::size_t histogram_bins = 10;
    std::optional<std::vector<std::size_t>> embedding_layers; // default: every rank-1 layer found
    std::optional<std::vector<std::size_t>> map_layers;       // default: every rank-2/3 layer found
    std::size_t hpcp_upsample = 4; // pitch-class columns are repeated to clear the SIFT minimum size
    double hpss_log_offset = 0.01; // HPSS maps are compared as ln(x + offset); 0 compares raw magnitudes
};

struct RunConfig {
    fs::path input_dir;
    int analysis_rate = kDefaultAnalysisRate;
    StftParams stft;
    MelParams mel;
    HpssParams hpss;
    OnsetParams onset;
    LoudnessParams loudness;
    HpcpParams hpcp;
    std::optional<NetworkSource> network;
    std::optional<fs::path> activations_dir;
    SimilaritySettings similarity;
    fs::path output_dir;
};

struct RunOptions {
    std::size_t jobs = 1;
    bool plots = false;
    std::ostream* out = &std::cout;
    std::ostream* err = &std::cerr;
};

namespace detail {

template <typename T>
void read_field(const nlohmann::json& obj, const char* key, T& target, const std::string& where) {
    if (!obj.contains(key))
        return;
    try {
        target = obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(where + "." + key + " has the wrong type");
    }
}

inline void reject_unknown(const nlohmann::json& obj, std::initializer_list<std::string_view> known,
                           const std::string& where) {
    if (!obj.is_object())
        throw ConfigError(where + " must be an object");
    for (const auto& [key, value] : obj.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ConfigError("unknown key '" + key + "' in " + where);
}

inline const nlohmann::json& section(const nlohmann::json& obj, const char* key) {
    static const nlohmann::json empty = nlohmann::json::object();
    return obj.contains(key) ? obj.at(key) : empty;
}

inline fs::path resolve(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    return (path.is_absolute() ? path : base / path).lexically_normal();
}

} // namespace detail

/// Builds a RunConfig from JSON. Relative paths are resolved against `base_dir`.
inline RunConfig parse_run_config(const nlohmann::json& j, const fs::path& base_dir) {
    using detail::read_field;
    using detail::reject_unknown;
    using detail::section;
    reject_unknown(j, {"input_dir", "analysis_rate", "stft", "mel", "features", "network", "activations_dir",
                       "similarity", "output_dir"},
                   "config");
    RunConfig c;
    std::string input_dir, output_dir = "out";
    read_field(j, "input_dir", input_dir, "config");
    if (input_dir.empty())
        throw ConfigError("config.input_dir is required");
    c.input_dir = detail::resolve(base_dir, input_dir);
    read_field(j, "output_dir", output_dir, "config");
    c.output_dir = detail::resolve(base_dir, output_dir);
    read_field(j, "analysis_rate", c.analysis_rate, "config");

    const auto& stft = section(j, "stft");
    reject_unknown(stft, {"fft_size", "frame_length", "hop"}, "stft");
    read_field(stft, "fft_size", c.stft.fft_size, "stft");
    read_field(stft, "frame_length", c.stft.frame_length, "stft");
    read_field(stft, "hop", c.stft.hop, "stft");

    const auto& mel = section(j, "mel");
    reject_unknown(mel, {"n_mels", "fmin", "fmax", "offset"}, "mel");
    read_field(mel, "n_mels", c.mel.n_mels, "mel");
    read_field(mel, "fmin", c.mel.fmin, "mel");
    read_field(mel, "fmax", c.mel.fmax, "mel");
    read_field(mel, "offset", c.mel.offset, "mel");

    const auto& feat = section(j, "features");
    reject_unknown(feat, {"hpss", "onset", "loudness", "hpcp"}, "features");
    const auto& hp = section(feat, "hpss");
    reject_unknown(hp, {"kernel_time", "kernel_freq", "mask_power"}, "features.hpss");
    read_field(hp, "kernel_time", c.hpss.kernel_time, "features.hpss");
    read_field(hp, "kernel_freq", c.hpss.kernel_freq, "features.hpss");
    read_field(hp, "mask_power", c.hpss.mask_power, "features.hpss");
    const auto& on = section(feat, "onset");
    reject_unknown(on, {"threshold", "min_gap"}, "features.onset");
    read_field(on, "threshold", c.onset.threshold, "features.onset");
    read_field(on, "min_gap", c.onset.min_gap, "features.onset");
    const auto& ld = section(feat, "loudness");
    reject_unknown(ld, {"frame", "hop"}, "features.loudness");
    read_field(ld, "frame", c.loudness.frame, "features.loudness");
    read_field(ld, "hop", c.loudness.hop, "features.loudness");
    const auto& pc = section(feat, "hpcp");
    reject_unknown(pc, {"ref_freq", "peak_floor_db", "min_freq", "max_freq"}, "features.hpcp");
    read_field(pc, "ref_freq", c.hpcp.ref_freq, "features.hpcp");
    read_field(pc, "peak_floor_db", c.hpcp.peak_floor_db, "features.hpcp");
    read_field(pc, "min_freq", c.hpcp.min_freq, "features.hpcp");
    read_field(pc, "max_freq", c.hpcp.max_freq, "features.hpcp");

    const bool has_net = j.contains("network"), has_dir = j.contains("activations_dir");
    if (has_net == has_dir)
        throw ConfigError("config needs exactly one of 'network' and 'activations_dir'");
    if (has_net) {
        const auto& n = j.at("network");
        reject_unknown(n, {"config", "manifest", "layers", "input_frames"}, "network");
        NetworkSource src;
        std::string cfg, manifest;
        read_field(n, "config", cfg, "network");
        read_field(n, "manifest", manifest, "network");
        if (cfg.empty() || manifest.empty())
            throw ConfigError("network.config and network.manifest are required");
        src.config = detail::resolve(base_dir, cfg);
        src.manifest = detail::resolve(base_dir, manifest);
        read_field(n, "layers", src.layers, "network");
        std::size_t frames = 0;
        read_field(n, "input_frames", frames, "network");
        if (n.contains("input_frames"))
            src.input_frames = frames;
        c.network = std::move(src);
    } else {
        std::string dir;
        read_field(j, "activations_dir", dir, "config");
        c.activations_dir = detail::resolve(base_dir, dir);
    }

    const auto& sim = section(j, "similarity");
    reject_unknown(sim, {"ratio", "alpha", "normalization", "top_k", "histogram_bins", "embedding_layers",
                         "map_layers", "hpcp_upsample", "hpss_log_offset"},
                   "similarity");
    read_field(sim, "ratio", c.similarity.ratio, "similarity");
    read_field(sim, "alpha", c.similarity.alpha, "similarity");
    std::string mode = "zscore";
    read_field(sim, "normalization", mode, "similarity");
    if (mode == "zscore")
        c.similarity.normalization = NormalizationMode::ZScore;
    else if (mode == "unitnorm")
        c.similarity.normalization = NormalizationMode::UnitNorm;
    else
        throw ConfigError("similarity.normalization must be 'zscore' or 'unitnorm'");
    read_field(sim, "top_k", c.similarity.top_k, "similarity");
    read_field(sim, "histogram_bins", c.similarity.histogram_bins, "similarity");
    read_field(sim, "hpcp_upsample", c.similarity.hpcp_upsample, "similarity");
    read_field(sim, "hpss_log_offset", c.similarity.hpss_log_offset, "similarity");
    if (sim.contains("embedding_layers")) {
        std::vector<std::size_t> v;
        read_field(sim, "embedding_layers", v, "similarity");
        c.similarity.embedding_layers = v;
    }
    if (sim.contains("map_layers")) {
        std::vector<std::size_t> v;
        read_field(sim, "map_layers", v, "similarity");
        c.similarity.map_layers = v;
    }
    return c;
}

/// Value checks that do not touch the filesystem.
inline void check_run_config(const RunConfig& c) {
    if (c.analysis_rate <= 0)
        throw ConfigError("analysis_rate must be positive");
    if (c.stft.hop == 0 || c.stft.frame_length == 0 || c.stft.frame_length > c.stft.fft_size)
        throw ConfigError("stft needs hop > 0 and 0 < frame_length <= fft_size");
    if (!(c.similarity.ratio > 0.0 && c.similarity.ratio <= 1.0))
        throw ConfigError("similarity.ratio must lie in (0, 1]");
    if (!(c.similarity.alpha > 0.0 && c.similarity.alpha < 1.0))
        throw ConfigError("similarity.alpha must lie in (0, 1)");
    if (c.similarity.histogram_bins == 0 || c.similarity.hpcp_upsample == 0)
        throw ConfigError("similarity.histogram_bins and hpcp_upsample must be positive");
    if (!(c.similarity.hpss_log_offset >= 0.0))
        throw ConfigError("similarity.hpss_log_offset must be non-negative");
    if (c.network && c.network->input_frames && *c.network->input_frames == 0)
        throw ConfigError("network.input_frames must be positive");
    try {
        (void)mel_filterbank(c.stft.fft_size / 2 + 1, c.stft.fft_size, c.analysis_rate, c.mel);
        detail::check_kernel(c.hpss.kernel_time, "hpss.kernel_time");
        detail::check_kernel(c.hpss.kernel_freq, "hpss.kernel_freq");
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
}

/// Every path the config names must exist.
inline void check_run_paths(const RunConfig& c) {
    if (!fs::is_directory(c.input_dir))
        throw ConfigError("input_dir does not exist: " + c.input_dir.string());
    if (c.network) {
        if (!fs::is_regular_file(c.network->config))
            throw ConfigError("network config not found: " + c.network->config.string());
        if (!fs::is_regular_file(c.network->manifest))
            throw ConfigError("weight manifest not found: " + c.network->manifest.string());
    }
    if (c.activations_dir && !fs::is_directory(*c.activations_dir))
        throw ConfigError("activations_dir does not exist: " + c.activations_dir->string());
}

inline RunConfig load_run_config(const fs::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    } catch (const IoError& e) {
        throw ConfigError(e.what());
    }
    auto c = parse_run_config(j, fs::absolute(path).parent_path());
    check_run_config(c);
    check_run_paths(c);
    return c;
}

/// Canonical JSON of the resolved configuration; the input to the config hash.
inline nlohmann::json run_config_to_json(const RunConfig& c) {
    nlohmann::json j;
    j["input_dir"] = c.input_dir.generic_string();
    j["output_dir"] = c.output_dir.generic_string();
    j["analysis_rate"] = c.analysis_rate;
    j["stft"] = {{"fft_size", c.stft.fft_size}, {"frame_length", c.stft.frame_length}, {"hop", c.stft.hop}};
    j["mel"] = {{"n_mels", c.mel.n_mels}, {"fmin", c.mel.fmin}, {"fmax", c.mel.fmax}, {"offset", c.mel.offset}};
    j["features"] = {
        {"hpss", {{"kernel_time", c.hpss.kernel_time}, {"kernel_freq", c.hpss.kernel_freq}, {"mask_power", c.hpss.mask_power}}},
        {"onset", {{"threshold", c.onset.threshold}, {"min_gap", c.onset.min_gap}}},
        {"loudness", {{"frame", c.loudness.frame}, {"hop", c.loudness.hop}}},
        {"hpcp",
         {{"ref_freq", c.hpcp.ref_freq},
          {"peak_floor_db", c.hpcp.peak_floor_db},
          {"min_freq", c.hpcp.min_freq},
          {"max_freq", c.hpcp.max_freq}}}};
    if (c.network) {
        j["network"] = {{"config", c.network->config.generic_string()},
                        {"manifest", c.network->manifest.generic_string()},
                        {"layers", c.network->layers}};
        if (c.network->input_frames)
            j["network"]["input_frames"] = *c.network->input_frames;
    } else if (c.activations_dir) {
        j["activations_dir"] = c.activations_dir->generic_string();
    }
    const auto& s = c.similarity;
    j["similarity"] = {{"ratio", s.ratio},
                       {"alpha", s.alpha},
                       {"normalization", std::string(to_string(s.normalization))},
                       {"top_k", s.top_k},
                       {"histogram_bins", s.histogram_bins},
                       {"hpcp_upsample", s.hpcp_upsample},
                       {"hpss_log_offset", s.hpss_log_offset}};
    if (s.embedding_layers)
        j["similarity"]["embedding_layers"] = *s.embedding_layers;
    if (s.map_layers)
        j["similarity"]["map_layers"] = *s.map_layers;
    return j;
}

inline std::string config_hash(const RunConfig& c) { return hex64(fnv1a64(run_config_to_json(c).dump())); }

// ---------------------------------------------------------------------------
// Clip discovery and naming

struct ClipEntry {
    std::string id;   // relative path without extension, '/'-separated
    std::string stem; // id with '/' replaced by "__"
    fs::path path;
};

inline std::string stem_for_id(const std::string& id) {
    std::string out;
    for (char c : id)
        out += c == '/' ? std::string("__") : std::string(1, c);
    return out;
}

/// Every *.wav (any case) below `dir`, sorted by clip id.
inline std::vector<ClipEntry> discover_clips(const fs::path& dir) {
    std::vector<ClipEntry> clips;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file())
            continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
        if (ext != ".wav")
            continue;
        auto rel = entry.path().lexically_relative(dir);
        rel.replace_extension();
        const std::string id = rel.generic_string();
        clips.push_back({id, stem_for_id(id), entry.path()});
    }
    std::sort(clips.begin(), clips.end(), [](const ClipEntry& a, const ClipEntry& b) { return a.id < b.id; });
    return clips;
}

inline fs::path features_dir(const RunConfig& c) { return c.output_dir / "features"; }
inline fs::path reports_dir(const RunConfig& c) { return c.output_dir / "reports"; }
inline fs::path plots_dir(const RunConfig& c) { return c.output_dir / "plots"; }
inline fs::path activation_source_dir(const RunConfig& c) {
    return c.activations_dir ? *c.activations_dir : c.output_dir / "activations";
}

// ---------------------------------------------------------------------------
// Worker pool

/// Runs body(i) for i in [0, n) on up to `jobs` threads. Results must be
/// written to index-keyed slots; the lowest-index exception is rethrown.
template <typename Body>
void parallel_for(std::size_t n, std::size_t jobs, Body&& body) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                body(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t)
            pool.emplace_back(worker);
    }
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// Run manifest

/// Fixed analysis choices recorded alongside every run.
inline nlohmann::json decision_flags(const RunConfig& c) {
    return {{"loudness_variant", "mean over frames of frame energy^0.67"},
            {"normalization", std::string(to_string(c.similarity.normalization))},
            {"similarity_scalar", "coverage = 2 * matches / (descriptors_feature + descriptors_activation)"},
            {"sift_orientation", "upright"},
            {"activation_resize", "bilinear to feature-map shape"},
            {"match_direction", "feature map -> activation map"},
            {"hpcp_map_upsample", c.similarity.hpcp_upsample},
            {"hpss_map_compression",
             c.similarity.hpss_log_offset > 0.0 ? "ln(x + " + format_number(c.similarity.hpss_log_offset) + ")" : "none"},
            {"significance", "two-tailed t test, Benjamini-Hochberg"}};
}

/// Records the files a verb produced. A manifest written under a different
/// config hash is replaced rather than merged.
inline void record_outputs(const RunConfig& c, const std::string& verb, std::vector<fs::path> files) {
    const auto path = c.output_dir / "manifest.json";
    const auto hash = config_hash(c);
    nlohmann::json m;
    if (fs::exists(path)) {
        try {
            m = nlohmann::json::parse(read_text_file(path));
        } catch (const nlohmann::json::exception&) {
            m = nullptr;
        }
        if (!m.is_object() || m.value("config_hash", "") != hash)
            m = nullptr;
    }
    if (m.is_null())
        m = {{"config_hash", hash}, {"config", run_config_to_json(c)}, {"outputs", nlohmann::json::object()}};
    m["decisions"] = decision_flags(c);
    std::vector<std::string> rel;
    for (const auto& f : files)
        rel.push_back(f.lexically_relative(c.output_dir).generic_string());
    std::sort(rel.begin(), rel.end());
    m["outputs"][verb] = rel;
    write_text_file(path, m.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Per-clip analysis

struct ClipFeatures {
    Matrix harmonic;
    Matrix percussive;
    Matrix hpcp;
    OnsetRate onset;
    double loudness = 0.0;
};

inline ClipFeatures analyse_clip(const AudioClip& raw, const RunConfig& c) {
    const auto clip = preprocess(raw, c.analysis_rate);
    const auto spec = stft_magnitude(clip, c.stft);
    auto parts = hpss(spec, c.hpss);
    ClipFeatures f;
    f.harmonic = std::move(parts.harmonic.values);
    f.percussive = std::move(parts.percussive.values);
    f.hpcp = hpcp(spec, c.hpcp).values;
    f.onset = onset_rate(clip, c.stft, c.mel, c.onset);
    f.loudness = loudness(clip, c.loudness);
    return f;
}

/// Log-mel network input [1 x frames x mels]. With `frames`, the clip is
/// cropped or padded with the log of the silence offset.
inline Tensor network_input(const AudioClip& raw, const RunConfig& c, std::optional<std::size_t> frames) {
    const auto clip = preprocess(raw, c.analysis_rate);
    const auto lm = log_mel(stft_magnitude(clip, c.stft), c.mel).values;
    const std::size_t rows = frames.value_or(lm.rows());
    Tensor t({1, rows, lm.cols()}, std::log(c.mel.offset));
    for (std::size_t r = 0; r < std::min(rows, lm.rows()); ++r)
        for (std::size_t m = 0; m < lm.cols(); ++m)
            t.at(0, r, m) = lm(r, m);
    return t;
}

/// HPCP map with each pitch-class column repeated `factor` times.
inline Matrix widen_columns(const Matrix& m, std::size_t factor) {
    Matrix out(m.rows(), m.cols() * factor);
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < out.cols(); ++c)
            out(r, c) = m(r, c / factor);
    return out;
}

struct MapFeature {
    const char* name;
    const char* file_suffix;
};

inline constexpr MapFeature kMapFeatures[] = {
    {"harmonic", ".harmonic.npy"}, {"percussive", ".percussive.npy"}, {"hpcp", ".hpcp.npy"}};

/// The matrix SIFT sees for a stored feature map: HPSS maps log-compressed,
/// HPCP columns widened.
inline Matrix comparison_map(const Tensor& stored, std::size_t feature_index, const SimilaritySettings& s) {
    if (stored.rank() != 2)
        throw ShapeMismatch(std::string("feature map ") + kMapFeatures[feature_index].name + " is " +
                            shape_string(stored.shape()) + ", expected a matrix");
    Matrix m(stored.dim(0), stored.dim(1), stored.data());
    if (feature_index == 2)
        return widen_columns(m, s.hpcp_upsample);
    if (s.hpss_log_offset > 0.0)
        for (double& v : m.data())
            v = std::log(v + s.hpss_log_offset);
    return m;
}

namespace detail {

inline bool is_decode_failure(const std::exception& e) {
    return dynamic_cast<const FormatError*>(&e) || dynamic_cast<const UnsupportedEncoding*>(&e) ||
           dynamic_cast<const IoError*>(&e) || dynamic_cast<const TooShort*>(&e) ||
           dynamic_cast<const EmptyInput*>(&e);
}

inline std::vector<ClipEntry> require_clips(const RunConfig& c) {
    auto clips = discover_clips(c.input_dir);
    if (clips.empty())
        throw NoInput("no .wav files under " + c.input_dir.string());
    return clips;
}

struct ScalarRow {
    std::string id;
    double onset_rate = 0.0;
    double loudness = 0.0;
    bool low_confidence = false;
};

inline std::vector<ScalarRow> read_scalars(const RunConfig& c) {
    const auto path = features_dir(c) / "scalars.csv";
    if (!fs::exists(path))
        throw NoInput("missing " + path.string() + "; run the features verb first");
    std::istringstream in(read_text_file(path));
    std::string line;
    std::getline(in, line);
    if (split_csv_line(line) != std::vector<std::string>{"clip_id", "onset_rate", "loudness", "onset_low_confidence"})
        throw FormatError(path.string() + ": unexpected header");
    std::vector<ScalarRow> rows;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        const auto f = split_csv_line(line);
        if (f.size() != 4)
            throw FormatError(path.string() + ": malformed row '" + line + "'");
        rows.push_back({f[0], parse_number(f[1]), parse_number(f[2]), f[3] == "1"});
    }
    if (rows.empty())
        throw NoInput(path.string() + " has no rows");
    return rows;
}

/// Layer index -> stems having a `<stem>.layer<i>.npy` file.
inline std::map<std::size_t, std::set<std::string>> index_activation_files(const fs::path& dir) {
    std::map<std::size_t, std::set<std::string>> out;
    if (!fs::is_directory(dir))
        return out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (!entry.is_regular_file() || name.size() < 4 || name.substr(name.size() - 4) != ".npy")
            continue;
        const std::string base = name.substr(0, name.size() - 4);
        const auto dot = base.rfind(".layer");
        if (dot == std::string::npos)
            continue;
        const std::string digits = base.substr(dot + 6);
        if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](unsigned char ch) { return std::isdigit(ch); }))
            continue;
        out[std::stoul(digits)].insert(base.substr(0, dot));
    }
    return out;
}

inline fs::path activation_file(const fs::path& dir, const std::string& stem, std::size_t layer) {
    return dir / (stem + ".layer" + std::to_string(layer) + ".npy");
}

/// Every requested layer must exist for exactly the clips in `stems`.
inline void check_alignment(const std::map<std::size_t, std::set<std::string>>& index,
                            const std::vector<std::size_t>& layers, const std::set<std::string>& stems) {
    for (auto layer : layers) {
        const auto it = index.find(layer);
        const std::set<std::string> empty;
        const auto& have = it == index.end() ? empty : it->second;
        if (have == stems)
            continue;
        std::vector<std::string> missing, extra;
        std::set_difference(stems.begin(), stems.end(), have.begin(), have.end(), std::back_inserter(missing));
        std::set_difference(have.begin(), have.end(), stems.begin(), stems.end(), std::back_inserter(extra));
        std::string msg = "layer " + std::to_string(layer) + " activations do not align with the feature clips";
        if (!missing.empty())
            msg += "; missing " + std::to_string(missing.size()) + " (first: " + missing.front() + ")";
        if (!extra.empty())
            msg += "; unexpected " + std::to_string(extra.size()) + " (first: " + extra.front() + ")";
        throw Misalignment(msg);
    }
}

/// Requested layers, or every indexed layer whose tensor rank satisfies `accept`.
inline std::vector<std::size_t> pick_layers(const std::optional<std::vector<std::size_t>>& requested,
                                            const std::map<std::size_t, std::set<std::string>>& index,
                                            const fs::path& dir, const std::function<bool(std::size_t)>& accept) {
    if (requested)
        return *requested;
    std::vector<std::size_t> layers;
    for (const auto& [layer, stems] : index)
        if (!stems.empty() && accept(read_tensor_file(activation_file(dir, *stems.begin(), layer)).rank()))
            layers.push_back(layer);
    return layers;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Verbs

struct FeaturesSummary {
    std::size_t processed = 0;
    std::vector<std::pair<std::string, std::string>> skipped; // clip id, reason
};

inline FeaturesSummary cmd_features(const RunConfig& c, const RunOptions& opt = {}) {
    const auto clips = detail::require_clips(c);
    const auto dir = features_dir(c);
    const bool existed = fs::exists(dir);
    fs::create_directories(dir);

    std::vector<std::optional<detail::ScalarRow>> rows(clips.size());
    std::vector<std::string> failures(clips.size());
    parallel_for(clips.size(), opt.jobs, [&](std::size_t i) {
        const auto& clip = clips[i];
        try {
            const auto f = analyse_clip(load_wav(clip.path), c);
            write_tensor_file(tensor_from_matrix(f.harmonic), dir / (clip.stem + ".harmonic.npy"));
            write_tensor_file(tensor_from_matrix(f.percussive), dir / (clip.stem + ".percussive.npy"));
            write_tensor_file(tensor_from_matrix(f.hpcp), dir / (clip.stem + ".hpcp.npy"));
            rows[i] = detail::ScalarRow{clip.id, f.onset.rate, f.loudness, f.onset.low_confidence};
        } catch (const Error& e) {
            if (!detail::is_decode_failure(e))
                throw;
            failures[i] = e.what();
        }
    });

    FeaturesSummary summary;
    std::string csv = "clip_id,onset_rate,loudness,onset_low_confidence\n";
    std::vector<fs::path> files;
    for (std::size_t i = 0; i < clips.size(); ++i) {
        if (!rows[i]) {
            summary.skipped.emplace_back(clips[i].id, failures[i]);
            *opt.err << "skipped " << clips[i].id << ": " << failures[i] << "\n";
            continue;
        }
        ++summary.processed;
        const auto& r = *rows[i];
        csv += csv_field(r.id) + "," + format_number(r.onset_rate) + "," + format_number(r.loudness) + "," +
               (r.low_confidence ? "1" : "0") + "\n";
        for (const char* kind : {".harmonic.npy", ".percussive.npy", ".hpcp.npy"})
            files.push_back(dir / (clips[i].stem + kind));
    }
    if (summary.processed == 0) {
        if (!existed)
            fs::remove_all(dir);
        throw NoInput("none of the " + std::to_string(clips.size()) + " clips could be decoded");
    }
    write_text_file(dir / "scalars.csv", csv);
    files.push_back(dir / "scalars.csv");
    record_outputs(c, "features", files);
    *opt.out << "features: " << summary.processed << " clips processed, " << summary.skipped.size() << " skipped\n";
    return summary;
}

struct ActivationsSummary {
    std::size_t processed = 0;
    std::size_t skipped = 0;
    std::vector<std::size_t> layers;
};

inline ActivationsSummary cmd_activations(const RunConfig& c, const RunOptions& opt = {}) {
    if (!c.network)
        throw ConfigError("the activations verb needs a 'network' section");
    NetworkConfig net;
    NetworkWeights weights;
    try {
        net = load_network_config(c.network->config);
        weights = load_weights(c.network->manifest);
    } catch (const ShapeMismatch&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    std::vector<std::size_t> layers = c.network->layers;
    if (layers.empty())
        for (std::size_t i = 0; i < net.layers.size(); ++i)
            layers.push_back(i);
    for (auto l : layers)
        if (l >= net.layers.size())
            throw ConfigError("network.layers names layer " + std::to_string(l) + " but the network has " +
                              std::to_string(net.layers.size()));
    if (c.network->input_frames)
        validate_weights(net, weights, {1, *c.network->input_frames, c.mel.n_mels});

    const auto clips = detail::require_clips(c);
    const auto dir = c.output_dir / "activations";
    fs::create_directories(dir);
    std::vector<char> ok(clips.size(), 0);
    std::vector<std::string> failures(clips.size());
    parallel_for(clips.size(), opt.jobs, [&](std::size_t i) {
        const auto& clip = clips[i];
        Tensor input;
        try {
            input = network_input(load_wav(clip.path), c, c.network->input_frames);
        } catch (const Error& e) {
            if (!detail::is_decode_failure(e))
                throw;
            failures[i] = e.what();
            return;
        }
        const auto outputs = forward(net, weights, input);
        write_tensor_file(input, dir / (clip.stem + ".input.npy"));
        for (auto l : layers)
            write_tensor_file(outputs[l], detail::activation_file(dir, clip.stem, l));
        ok[i] = 1;
    });

    ActivationsSummary summary;
    summary.layers = layers;
    std::vector<fs::path> files;
    for (std::size_t i = 0; i < clips.size(); ++i) {
        if (!ok[i]) {
            ++summary.skipped;
            *opt.err << "skipped " << clips[i].id << ": " << failures[i] << "\n";
            continue;
        }
        ++summary.processed;
        files.push_back(dir / (clips[i].stem + ".input.npy"));
        for (auto l : layers)
            files.push_back(detail::activation_file(dir, clips[i].stem, l));
    }
    if (summary.processed == 0)
        throw NoInput("none of the " + std::to_string(clips.size()) + " clips could be decoded");
    record_outputs(c, "activations", files);
    *opt.out << "activations: " << summary.processed << " clips, " << layers.size() << " layers, " << summary.skipped
             << " skipped\n";
    return summary;
}

struct EmbeddingSection {
    std::size_t layer = 0;
    std::string feature;
    bool feature_constant = false;
    CorrespondenceSearch search;
    std::vector<std::optional<double>> distances; // parallel to search.ranked
};

inline nlohmann::json cmd_compare_embeddings(const RunConfig& c, const RunOptions& opt = {}) {
    const auto scalars = detail::read_scalars(c);
    if (scalars.size() < 3)
        throw NoInput("correlation needs at least 3 clips, found " + std::to_string(scalars.size()));
    std::set<std::string> stems;
    for (const auto& r : scalars)
        stems.insert(stem_for_id(r.id));
    const auto act_dir = activation_source_dir(c);
    const auto index = detail::index_activation_files(act_dir);
    const auto layers = detail::pick_layers(c.similarity.embedding_layers, index, act_dir,
                                            [](std::size_t rank) { return rank == 1; });
    if (layers.empty())
        throw NoInput("no vector-shaped activation layers in " + act_dir.string());
    detail::check_alignment(index, layers, stems);

    const std::vector<std::pair<std::string, std::function<double(const detail::ScalarRow&)>>> features{
        {"onset_rate", [](const detail::ScalarRow& r) { return r.onset_rate; }},
        {"loudness", [](const detail::ScalarRow& r) { return r.loudness; }}};

    // Load each layer as a [clips x neurons] matrix, clip order = scalars order.
    std::vector<Matrix> matrices(layers.size());
    parallel_for(layers.size(), opt.jobs, [&](std::size_t li) {
        std::vector<Tensor> rows(scalars.size());
        for (std::size_t i = 0; i < scalars.size(); ++i) {
            rows[i] = read_tensor_file(detail::activation_file(act_dir, stem_for_id(scalars[i].id), layers[li]));
            if (rows[i].rank() != 1)
                throw ShapeMismatch(layers[li], "embedding comparison needs vector activations, got " +
                                                    shape_string(rows[i].shape()) + " for " + scalars[i].id);
            if (rows[i].size() != rows[0].size())
                throw ShapeMismatch(layers[li], "activation length differs across clips (" + scalars[i].id + ")");
        }
        Matrix m(scalars.size(), rows[0].size());
        for (std::size_t i = 0; i < rows.size(); ++i)
            std::copy(rows[i].data().begin(), rows[i].data().end(), m.row(i).begin());
        matrices[li] = std::move(m);
    });

    std::vector<EmbeddingSection> sections(layers.size() * features.size());
    parallel_for(sections.size(), opt.jobs, [&](std::size_t si) {
        const std::size_t li = si / features.size(), fi = si % features.size();
        auto& s = sections[si];
        s.layer = layers[li];
        s.feature = features[fi].first;
        std::vector<double> f(scalars.size());
        std::transform(scalars.begin(), scalars.end(), f.begin(), features[fi].second);
        if (std::all_of(f.begin(), f.end(), [&](double v) { return v == f[0]; })) {
            s.feature_constant = true;
            return;
        }
        s.search = correspondence_search(matrices[li], f, c.similarity.alpha);
        std::vector<double> column(scalars.size());
        for (const auto& r : s.search.ranked) {
            for (std::size_t i = 0; i < scalars.size(); ++i)
                column[i] = matrices[li](i, r.neuron_index);
            try {
                s.distances.push_back(normalized_l2(column, f, c.similarity.normalization));
            } catch (const Error&) {
                s.distances.push_back(std::nullopt);
            }
        }
    });

    std::string csv = "layer,feature,rank,neuron_index,r,p_value,significant,distance\n";
    nlohmann::json report;
    report["normalization"] = std::string(to_string(c.similarity.normalization));
    report["alpha"] = c.similarity.alpha;
    report["n_clips"] = scalars.size();
    std::vector<std::string> ids;
    for (const auto& r : scalars)
        ids.push_back(r.id);
    report["clips"] = ids;
    report["sections"] = nlohmann::json::array();
    std::vector<fs::path> files;
    auto& out = *opt.out;
    for (std::size_t si = 0; si < sections.size(); ++si) {
        const auto& s = sections[si];
        const auto& m = matrices[si / features.size()];
        std::vector<double> f(scalars.size());
        std::transform(scalars.begin(), scalars.end(), f.begin(), features[si % features.size()].second);
        nlohmann::json js;
        js["layer"] = s.layer;
        js["feature"] = s.feature;
        js["n_neurons"] = m.cols();
        js["skipped_constant"] = s.search.skipped_constant;
        js["feature_constant"] = s.feature_constant;
        js["ranked"] = nlohmann::json::array();
        std::size_t significant = 0;
        for (std::size_t k = 0; k < s.search.ranked.size(); ++k) {
            const auto& r = s.search.ranked[k];
            significant += r.significant;
            csv += std::to_string(s.layer) + "," + s.feature + "," + std::to_string(k + 1) + "," +
                   std::to_string(r.neuron_index) + "," + format_number(r.r) + "," + format_number(r.p_value) + "," +
                   (r.significant ? "1" : "0") + "," + format_number(s.distances[k]) + "\n";
            nlohmann::json e = {{"neuron_index", r.neuron_index},
                                {"r", r.r},
                                {"p_value", r.p_value},
                                {"significant", r.significant}};
            e["distance"] = s.distances[k] ? nlohmann::json(*s.distances[k]) : nlohmann::json(nullptr);
            js["ranked"].push_back(e);
        }
        js["n_significant"] = significant;
        js["scatter"] = nlohmann::json::array();
        const std::size_t top = std::min(c.similarity.top_k, s.search.ranked.size());
        for (std::size_t k = 0; k < top; ++k) {
            const auto n = s.search.ranked[k].neuron_index;
            std::vector<double> act(scalars.size());
            for (std::size_t i = 0; i < scalars.size(); ++i)
                act[i] = m(i, n);
            js["scatter"].push_back({{"neuron_index", n}, {"feature", f}, {"activation", act}});
            if (opt.plots && k == 0) {
                const auto svg = plots_dir(c) / ("embedding_layer" + std::to_string(s.layer) + "_" + s.feature + ".svg");
                write_text_file(svg, scatter_svg(f, act,
                                                 "layer " + std::to_string(s.layer) + " neuron " + std::to_string(n) +
                                                     ", r = " + detail::fixed(s.search.ranked[k].r, 3),
                                                 s.feature, "activation"));
                files.push_back(svg);
            }
        }
        report["sections"].push_back(js);

        out << "layer " << s.layer << " vs " << s.feature << ": " << s.search.ranked.size() << " neurons ranked, "
            << s.search.skipped_constant << " constant, " << significant << " significant (BH alpha "
            << format_number(c.similarity.alpha) << ")\n";
        if (s.feature_constant)
            out << "  feature is constant across clips; nothing to correlate\n";
        for (std::size_t k = 0; k < top; ++k) {
            const auto& r = s.search.ranked[k];
            out << "  " << (k + 1) << ". neuron " << r.neuron_index << "  r=" << detail::fixed(r.r, 4)
                << "  p=" << format_number(r.p_value) << (r.significant ? "  *" : "") << "\n";
        }
    }
    const auto rdir = reports_dir(c);
    write_text_file(rdir / "embeddings.csv", csv);
    write_text_file(rdir / "embeddings.json", report.dump(2) + "\n");
    files.push_back(rdir / "embeddings.csv");
    files.push_back(rdir / "embeddings.json");
    record_outputs(c, "compare-embeddings", files);
    return report;
}

inline nlohmann::json cmd_compare_maps(const RunConfig& c, const RunOptions& opt = {}) {
    const auto scalars = detail::read_scalars(c);
    std::set<std::string> stems;
    for (const auto& r : scalars)
        stems.insert(stem_for_id(r.id));
    const auto act_dir = activation_source_dir(c);
    const auto index = detail::index_activation_files(act_dir);
    const auto layers = detail::pick_layers(c.similarity.map_layers, index, act_dir,
                                            [](std::size_t rank) { return rank == 2 || rank == 3; });
    if (layers.empty())
        throw NoInput("no map-shaped activation layers in " + act_dir.string());
    detail::check_alignment(index, layers, stems);
    constexpr std::size_t F = std::size(kMapFeatures);
    const double ratio = c.similarity.ratio;

    // results[clip][layer][feature][channel]
    using PerChannel = std::vector<MapSimilarity>;
    std::vector<std::vector<std::array<PerChannel, F>>> results(scalars.size(),
                                                               std::vector<std::array<PerChannel, F>>(layers.size()));
    parallel_for(scalars.size(), opt.jobs, [&](std::size_t ci) {
        const auto stem = stem_for_id(scalars[ci].id);
        std::array<Matrix, F> maps;
        std::array<SiftFeatures, F> feats;
        for (std::size_t fi = 0; fi < F; ++fi) {
            maps[fi] = comparison_map(read_tensor_file(features_dir(c) / (stem + kMapFeatures[fi].file_suffix)), fi,
                                      c.similarity);
            if (maps[fi].rows() < 16 || maps[fi].cols() < 16)
                throw MapTooSmall(std::string(kMapFeatures[fi].name) + " map of " + scalars[ci].id + " is " +
                                  std::to_string(maps[fi].rows()) + "x" + std::to_string(maps[fi].cols()) +
                                  ", below the 16x16 SIFT minimum");
            feats[fi] = extract_sift(maps[fi]);
        }
        for (std::size_t li = 0; li < layers.size(); ++li) {
            const auto t = read_tensor_file(detail::activation_file(act_dir, stem, layers[li]));
            if (t.rank() != 2 && t.rank() != 3)
                throw ShapeMismatch(layers[li], "map comparison needs 2-D or 3-D activations, got " +
                                                    shape_string(t.shape()));
            const Tensor chw = t.rank() == 2 ? t.reshaped({1, t.dim(0), t.dim(1)}) : t;
            for (std::size_t ch = 0; ch < chw.dim(0); ++ch) {
                const Matrix a = chw.channel(ch);
                // Harmonic and percussive maps share a shape, so one resized copy serves both.
                std::optional<std::pair<std::size_t, std::size_t>> cached_shape;
                SiftFeatures cached;
                for (std::size_t fi = 0; fi < F; ++fi) {
                    const std::pair shape{maps[fi].rows(), maps[fi].cols()};
                    if (cached_shape != shape) {
                        cached = extract_sift(resize_bilinear(a, shape.first, shape.second));
                        cached_shape = shape;
                    }
                    results[ci][li][fi].push_back(compare_sift(feats[fi], cached, ratio));
                }
            }
        }
    });

    std::vector<std::size_t> channels(layers.size());
    for (std::size_t li = 0; li < layers.size(); ++li) {
        channels[li] = results[0][li][0].size();
        for (std::size_t ci = 0; ci < scalars.size(); ++ci)
            if (results[ci][li][0].size() != channels[li])
                throw ShapeMismatch(layers[li], "channel count differs across clips (" + scalars[ci].id + ")");
    }

    std::string pairs = "clip_id,layer,channel,feature,coverage,mean_match_distance,n_keypoints_feature,"
                        "n_keypoints_activation,n_matches,degenerate\n";
    for (std::size_t ci = 0; ci < scalars.size(); ++ci)
        for (std::size_t li = 0; li < layers.size(); ++li)
            for (std::size_t ch = 0; ch < channels[li]; ++ch)
                for (std::size_t fi = 0; fi < F; ++fi) {
                    const auto& s = results[ci][li][fi][ch];
                    pairs += csv_field(scalars[ci].id) + "," + std::to_string(layers[li]) + "," + std::to_string(ch) +
                             "," + kMapFeatures[fi].name + "," + format_number(s.coverage) + "," +
                             format_number(s.mean_match_distance) + "," + std::to_string(s.n_keypoints_a) + "," +
                             std::to_string(s.n_keypoints_b) + "," + std::to_string(s.n_matches) + "," +
                             (s.degenerate ? "1" : "0") + "\n";
                }

    std::string csv = "layer,channel,feature,coverage,mean_match_distance,rank,n_clips,n_degenerate\n";
    nlohmann::json report;
    report["similarity_scalar"] = "coverage";
    report["ratio"] = ratio;
    report["hpcp_upsample"] = c.similarity.hpcp_upsample;
    report["hpss_log_offset"] = c.similarity.hpss_log_offset;
    report["n_clips"] = scalars.size();
    report["sections"] = nlohmann::json::array();
    std::vector<fs::path> files;
    for (std::size_t li = 0; li < layers.size(); ++li)
        for (std::size_t fi = 0; fi < F; ++fi) {
            struct Row {
                std::size_t channel;
                double coverage;
                std::optional<double> distance;
                std::size_t degenerate;
            };
            std::vector<Row> rows;
            for (std::size_t ch = 0; ch < channels[li]; ++ch) {
                double cov = 0.0, dist = 0.0;
                std::size_t with_matches = 0, degenerate = 0;
                for (std::size_t ci = 0; ci < scalars.size(); ++ci) {
                    const auto& s = results[ci][li][fi][ch];
                    cov += s.coverage;
                    degenerate += s.degenerate;
                    if (s.mean_match_distance) {
                        dist += *s.mean_match_distance;
                        ++with_matches;
                    }
                }
                rows.push_back({ch, cov / static_cast<double>(scalars.size()),
                                with_matches ? std::optional<double>(dist / static_cast<double>(with_matches))
                                             : std::nullopt,
                                degenerate});
            }
            std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.coverage > b.coverage; });
            std::vector<double> coverages;
            nlohmann::json ranking = nlohmann::json::array();
            for (std::size_t k = 0; k < rows.size(); ++k) {
                const auto& r = rows[k];
                coverages.push_back(r.coverage);
                csv += std::to_string(layers[li]) + "," + std::to_string(r.channel) + "," + kMapFeatures[fi].name + "," +
                       format_number(r.coverage) + "," + format_number(r.distance) + "," + std::to_string(k + 1) + "," +
                       std::to_string(scalars.size()) + "," + std::to_string(r.degenerate) + "\n";
                nlohmann::json e = {{"channel", r.channel}, {"coverage", r.coverage}, {"n_degenerate", r.degenerate}};
                e["mean_match_distance"] = r.distance ? nlohmann::json(*r.distance) : nlohmann::json(nullptr);
                ranking.push_back(e);
            }
            const auto hist = build_histogram(coverages, c.similarity.histogram_bins);
            report["sections"].push_back({{"layer", layers[li]},
                                          {"feature", kMapFeatures[fi].name},
                                          {"n_channels", channels[li]},
                                          {"histogram", {{"bin_edges", hist.bin_edges}, {"counts", hist.counts}}},
                                          {"ranking", ranking}});
            *opt.out << "layer " << layers[li] << " vs " << kMapFeatures[fi].name << ": best channel "
                     << rows.front().channel << " coverage " << detail::fixed(rows.front().coverage, 4) << "\n";
            if (opt.plots) {
                const std::string tag = "layer" + std::to_string(layers[li]) + "_" + kMapFeatures[fi].name;
                const auto hpath = plots_dir(c) / ("maps_hist_" + tag + ".svg");
                write_text_file(hpath, histogram_svg(hist, "layer " + std::to_string(layers[li]) + " vs " +
                                                               kMapFeatures[fi].name,
                                                     "mean coverage per channel"));
                files.push_back(hpath);

                // Match overlay of the best channel on the first clip.
                const auto stem = stem_for_id(scalars[0].id);
                const auto fmap = comparison_map(
                    read_tensor_file(features_dir(c) / (stem + kMapFeatures[fi].file_suffix)), fi, c.similarity);
                const auto t = read_tensor_file(detail::activation_file(act_dir, stem, layers[li]));
                const Tensor chw = t.rank() == 2 ? t.reshaped({1, t.dim(0), t.dim(1)}) : t;
                const auto a = extract_sift(fmap);
                const auto b = extract_sift(resize_bilinear(chw.channel(rows.front().channel), fmap.rows(), fmap.cols()));
                std::vector<Match> matches;
                compare_sift(a, b, ratio, &matches);
                const auto opath = plots_dir(c) / ("maps_match_" + tag + ".svg");
                write_text_file(opath, match_overlay_svg(a, b, matches, fmap.rows(), fmap.cols(),
                                                         scalars[0].id + ": " + kMapFeatures[fi].name + " vs channel " +
                                                             std::to_string(rows.front().channel)));
                files.push_back(opath);
            }
        }
    const auto rdir = reports_dir(c);
    write_text_file(rdir / "maps.csv", csv);
    write_text_file(rdir / "maps_pairs.csv", pairs);
    write_text_file(rdir / "maps.json", report.dump(2) + "\n");
    files.push_back(rdir / "maps.csv");
    files.push_back(rdir / "maps_pairs.csv");
    files.push_back(rdir / "maps.json");
    record_outputs(c, "compare-maps", files);
    return report;
}

/// Writes deterministic He-uniform weights for `network_config` into `dest`.
inline fs::path cmd_init_weights(const fs::path& network_config, const fs::path& dest, std::uint64_t seed) {
    NetworkConfig net;
    try {
        net = load_network_config(network_config);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    if (net.input_shape.empty())
        throw ConfigError("network config needs input_shape to size the weights");
    save_weights(init_weights(net, net.input_shape, seed), dest);
    return dest / "manifest.json";
}

} // namespace actfeat
