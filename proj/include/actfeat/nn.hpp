#pragma once

#include <actfeat/error.hpp>
#include <actfeat/npy.hpp>
#include <actfeat/tensor.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace actfeat {

struct Conv2D {
    std::size_t out_channels = 1;
    std::size_t kernel_h = 3;
    std::size_t kernel_w = 3;
    std::size_t stride = 1;
    std::size_t padding = 0;
};
struct ReLU {};
struct MaxPool2D {
    std::size_t pool_h = 2;
    std::size_t pool_w = 2;
    std::size_t stride = 2;
};
struct Flatten {};
struct Dense {
    std::size_t out_features = 1;
};

using Layer = std::variant<Conv2D, ReLU, MaxPool2D, Flatten, Dense>;

/// Ordered layer stack. An empty `input_shape` disables the input check.
struct NetworkConfig {
    Shape input_shape;
    std::vector<Layer> layers;
};

struct LayerWeights {
    Tensor weight;
    Tensor bias;
};

/// Parameters keyed by layer index; only Conv2D and Dense layers carry any.
using NetworkWeights = std::map<std::size_t, LayerWeights>;

inline bool has_parameters(const Layer& layer) {
    return std::holds_alternative<Conv2D>(layer) || std::holds_alternative<Dense>(layer);
}

inline std::string layer_name(const Layer& layer) {
    return std::visit(
        [](const auto& l) -> std::string {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, Conv2D>) return "conv2d";
            else if constexpr (std::is_same_v<T, ReLU>) return "relu";
            else if constexpr (std::is_same_v<T, MaxPool2D>) return "maxpool2d";
            else if constexpr (std::is_same_v<T, Flatten>) return "flatten";
            else return "dense";
        },
        layer);
}

// ---------------------------------------------------------------------------
// Kernels

/// Cross-correlation (no kernel flip) with zero padding.
/// input [C,H,W], kernels [K,C,kh,kw], bias [K] -> [K,H',W'].
inline Tensor conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias,
                     std::size_t stride, std::size_t padding) {
    if (input.rank() != 3 || kernels.rank() != 4 || bias.rank() != 1)
        throw ShapeMismatch("conv2d expects input [C,H,W], kernels [K,C,kh,kw], bias [K]");
    if (stride == 0)
        throw ShapeMismatch("conv2d stride must be >= 1");
    const std::size_t C = input.dim(0), H = input.dim(1), W = input.dim(2);
    const std::size_t K = kernels.dim(0), kh = kernels.dim(2), kw = kernels.dim(3);
    if (kernels.dim(1) != C)
        throw ShapeMismatch("conv2d kernel expects " + std::to_string(kernels.dim(1)) +
                            " input channels, got " + std::to_string(C));
    if (bias.dim(0) != K)
        throw ShapeMismatch("conv2d bias length does not match output channels");
    if (H + 2 * padding < kh || W + 2 * padding < kw)
        throw ShapeMismatch("conv2d kernel larger than padded input " + shape_string(input.shape()));
    const std::size_t Ho = (H + 2 * padding - kh) / stride + 1;
    const std::size_t Wo = (W + 2 * padding - kw) / stride + 1;

    Tensor out({K, Ho, Wo});
    const auto pad = static_cast<std::ptrdiff_t>(padding);
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t oy = 0; oy < Ho; ++oy) {
            for (std::size_t ox = 0; ox < Wo; ++ox) {
                double acc = bias[k];
                for (std::size_t c = 0; c < C; ++c) {
                    for (std::size_t dy = 0; dy < kh; ++dy) {
                        const auto iy = static_cast<std::ptrdiff_t>(oy * stride + dy) - pad;
                        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H))
                            continue;
                        const double* krow = kernels.data().data() + ((k * C + c) * kh + dy) * kw;
                        const double* irow = input.data().data() + (c * H + static_cast<std::size_t>(iy)) * W;
                        for (std::size_t dx = 0; dx < kw; ++dx) {
                            const auto ix = static_cast<std::ptrdiff_t>(ox * stride + dx) - pad;
                            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(W))
                                continue;
                            acc += krow[dx] * irow[ix];
                        }
                    }
                }
                out.at(k, oy, ox) = acc;
            }
        }
    }
    return out;
}

/// Max pooling over [C,H,W] (or [H,W]); windows overrunning an edge are dropped.
inline Tensor maxpool2d(const Tensor& input, std::size_t pool_h, std::size_t pool_w, std::size_t stride) {
    if (input.rank() != 2 && input.rank() != 3)
        throw ShapeMismatch("maxpool2d expects [C,H,W] or [H,W]");
    if (pool_h == 0 || pool_w == 0 || stride == 0)
        throw ShapeMismatch("maxpool2d extents and stride must be >= 1");
    const bool planar = input.rank() == 2;
    const std::size_t C = planar ? 1 : input.dim(0);
    const std::size_t H = input.dim(planar ? 0 : 1), W = input.dim(planar ? 1 : 2);
    if (H < pool_h || W < pool_w)
        throw ShapeMismatch("maxpool2d window larger than input " + shape_string(input.shape()));
    const std::size_t Ho = (H - pool_h) / stride + 1;
    const std::size_t Wo = (W - pool_w) / stride + 1;

    Tensor out(planar ? Shape{Ho, Wo} : Shape{C, Ho, Wo});
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t oy = 0; oy < Ho; ++oy)
            for (std::size_t ox = 0; ox < Wo; ++ox) {
                double best = -std::numeric_limits<double>::infinity();
                for (std::size_t dy = 0; dy < pool_h; ++dy)
                    for (std::size_t dx = 0; dx < pool_w; ++dx)
                        best = std::max(best, input[(c * H + oy * stride + dy) * W + ox * stride + dx]);
                out[(c * Ho + oy) * Wo + ox] = best;
            }
    return out;
}

/// Affine map: weights [m,n] * input [n] + bias [m].
inline Tensor dense(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    if (input.rank() != 1 || weights.rank() != 2 || bias.rank() != 1)
        throw ShapeMismatch("dense expects input [n], weights [m,n], bias [m]");
    const std::size_t m = weights.dim(0), n = weights.dim(1);
    if (input.dim(0) != n)
        throw ShapeMismatch("dense expects " + std::to_string(n) + " inputs, got " +
                            std::to_string(input.dim(0)));
    if (bias.dim(0) != m)
        throw ShapeMismatch("dense bias length does not match output features");
    Tensor out({m});
    for (std::size_t i = 0; i < m; ++i) {
        double acc = bias[i];
        for (std::size_t j = 0; j < n; ++j)
            acc += weights[i * n + j] * input[j];
        out[i] = acc;
    }
    return out;
}

inline Tensor relu(Tensor t) {
    for (double& v : t.data())
        v = std::max(v, 0.0);
    return t;
}

inline Tensor flatten(const Tensor& t) { return t.reshaped({t.size()}); }

// ---------------------------------------------------------------------------
// Shape inference and forward pass

namespace detail {

inline Shape output_shape(const Layer& layer, const Shape& in, std::size_t index) {
    auto fail = [&](const std::string& why) -> Shape {
        throw ShapeMismatch(index, layer_name(layer) + " " + why + " (input " + shape_string(in) + ")");
    };
    if (const auto* conv = std::get_if<Conv2D>(&layer)) {
        if (in.size() != 3)
            return fail("expects a rank-3 input");
        if (conv->stride == 0 || conv->kernel_h == 0 || conv->kernel_w == 0 || conv->out_channels == 0)
            return fail("has a zero extent");
        if (in[1] + 2 * conv->padding < conv->kernel_h || in[2] + 2 * conv->padding < conv->kernel_w)
            return fail("kernel exceeds padded input");
        return {conv->out_channels, (in[1] + 2 * conv->padding - conv->kernel_h) / conv->stride + 1,
                (in[2] + 2 * conv->padding - conv->kernel_w) / conv->stride + 1};
    }
    if (const auto* pool = std::get_if<MaxPool2D>(&layer)) {
        if (in.size() != 3)
            return fail("expects a rank-3 input");
        if (pool->stride == 0 || pool->pool_h == 0 || pool->pool_w == 0)
            return fail("has a zero extent");
        if (in[1] < pool->pool_h || in[2] < pool->pool_w)
            return fail("window exceeds input");
        return {in[0], (in[1] - pool->pool_h) / pool->stride + 1, (in[2] - pool->pool_w) / pool->stride + 1};
    }
    if (std::holds_alternative<Flatten>(layer))
        return {shape_volume(in)};
    if (const auto* fc = std::get_if<Dense>(&layer)) {
        if (in.size() != 1)
            return fail("expects a rank-1 input; add a flatten layer");
        if (fc->out_features == 0)
            return fail("has zero output features");
        return {fc->out_features};
    }
    return in; // ReLU
}

inline Shape expected_weight_shape(const Layer& layer, const Shape& in) {
    if (const auto* conv = std::get_if<Conv2D>(&layer))
        return {conv->out_channels, in[0], conv->kernel_h, conv->kernel_w};
    const auto& fc = std::get<Dense>(layer);
    return {fc.out_features, in[0]};
}

} // namespace detail

/// Output shape of every layer for `input`; throws ShapeMismatch naming the
/// first incompatible layer.
inline std::vector<Shape> infer_shapes(const NetworkConfig& net, const Shape& input) {
    if (!net.input_shape.empty() && net.input_shape != input)
        throw ShapeMismatch(0, "network expects input " + shape_string(net.input_shape) + ", got " +
                                   shape_string(input));
    std::vector<Shape> shapes;
    Shape cur = input;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        cur = detail::output_shape(net.layers[i], cur, i);
        shapes.push_back(cur);
    }
    return shapes;
}

/// Checks that every parameterised layer has weights of the right shape.
inline void validate_weights(const NetworkConfig& net, const NetworkWeights& weights, const Shape& input) {
    const auto shapes = infer_shapes(net, input);
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        if (!has_parameters(net.layers[i]))
            continue;
        const auto found = weights.find(i);
        if (found == weights.end())
            throw ShapeMismatch(i, "missing weights");
        const Shape& in = i == 0 ? input : shapes[i - 1];
        const Shape want = detail::expected_weight_shape(net.layers[i], in);
        if (found->second.weight.shape() != want)
            throw ShapeMismatch(i, "weight shape " + shape_string(found->second.weight.shape()) +
                                       " != expected " + shape_string(want));
        if (found->second.bias.shape() != Shape{want[0]})
            throw ShapeMismatch(i, "bias shape " + shape_string(found->second.bias.shape()) +
                                       " != expected " + shape_string(Shape{want[0]}));
    }
}

/// Runs the stack and returns every layer's output in order.
inline std::vector<Tensor> forward(const NetworkConfig& net, const NetworkWeights& weights, const Tensor& input) {
    validate_weights(net, weights, input.shape());
    std::vector<Tensor> outputs;
    outputs.reserve(net.layers.size());
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const Tensor& x = i == 0 ? input : outputs.back();
        const Layer& layer = net.layers[i];
        if (const auto* conv = std::get_if<Conv2D>(&layer)) {
            const auto& w = weights.at(i);
            outputs.push_back(conv2d(x, w.weight, w.bias, conv->stride, conv->padding));
        } else if (const auto* pool = std::get_if<MaxPool2D>(&layer)) {
            outputs.push_back(maxpool2d(x, pool->pool_h, pool->pool_w, pool->stride));
        } else if (std::holds_alternative<ReLU>(layer)) {
            outputs.push_back(relu(x));
        } else if (std::holds_alternative<Flatten>(layer)) {
            outputs.push_back(flatten(x));
        } else {
            const auto& w = weights.at(i);
            outputs.push_back(dense(x, w.weight, w.bias));
        }
    }
    return outputs;
}

// ---------------------------------------------------------------------------
// Serialisation: JSON layer list, JSON manifest of per-parameter .npy files

inline NetworkConfig parse_network_config(const nlohmann::json& j) {
    NetworkConfig net;
    try {
        if (j.contains("input_shape"))
            net.input_shape = j.at("input_shape").get<Shape>();
        for (const auto& l : j.at("layers")) {
            const auto type = l.at("type").get<std::string>();
            if (type == "conv2d") {
                Conv2D c;
                c.out_channels = l.at("out_channels").get<std::size_t>();
                c.kernel_h = l.at("kernel_h").get<std::size_t>();
                c.kernel_w = l.at("kernel_w").get<std::size_t>();
                c.stride = l.value("stride", std::size_t{1});
                c.padding = l.value("padding", std::size_t{0});
                net.layers.emplace_back(c);
            } else if (type == "relu") {
                net.layers.emplace_back(ReLU{});
            } else if (type == "maxpool2d") {
                MaxPool2D p;
                p.pool_h = l.at("pool_h").get<std::size_t>();
                p.pool_w = l.at("pool_w").get<std::size_t>();
                p.stride = l.value("stride", p.pool_h);
                net.layers.emplace_back(p);
            } else if (type == "flatten") {
                net.layers.emplace_back(Flatten{});
            } else if (type == "dense") {
                net.layers.emplace_back(Dense{l.at("out_features").get<std::size_t>()});
            } else {
                throw InvalidArgument("unknown layer type '" + type + "'");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("malformed network config: ") + e.what());
    }
    return net;
}

inline nlohmann::json network_config_to_json(const NetworkConfig& net) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& layer : net.layers) {
        nlohmann::json l{{"type", layer_name(layer)}};
        if (const auto* c = std::get_if<Conv2D>(&layer)) {
            l["out_channels"] = c->out_channels;
            l["kernel_h"] = c->kernel_h;
            l["kernel_w"] = c->kernel_w;
            l["stride"] = c->stride;
            l["padding"] = c->padding;
        } else if (const auto* p = std::get_if<MaxPool2D>(&layer)) {
            l["pool_h"] = p->pool_h;
            l["pool_w"] = p->pool_w;
            l["stride"] = p->stride;
        } else if (const auto* d = std::get_if<Dense>(&layer)) {
            l["out_features"] = d->out_features;
        }
        layers.push_back(std::move(l));
    }
    nlohmann::json j{{"layers", std::move(layers)}};
    if (!net.input_shape.empty())
        j["input_shape"] = net.input_shape;
    return j;
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(path.string() + ": " + e.what());
    }
}

inline NetworkConfig load_network_config(const std::filesystem::path& path) {
    return parse_network_config(read_json_file(path));
}

/// Manifest layout: {"<layer index>": {"weight": "<file>", "bias": "<file>"}};
/// relative paths resolve against the manifest's directory.
inline NetworkWeights load_weights(const std::filesystem::path& manifest_path) {
    const auto manifest = read_json_file(manifest_path);
    const auto base = manifest_path.parent_path();
    NetworkWeights weights;
    try {
        for (const auto& [key, entry] : manifest.items()) {
            const auto index = static_cast<std::size_t>(std::stoul(key));
            weights[index] = LayerWeights{read_tensor_file(base / entry.at("weight").get<std::string>()),
                                          read_tensor_file(base / entry.at("bias").get<std::string>())};
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(manifest_path.string() + ": " + e.what());
    } catch (const std::logic_error& e) {
        throw InvalidArgument(manifest_path.string() + ": bad layer index: " + e.what());
    }
    return weights;
}

inline void save_weights(const NetworkWeights& weights, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest = nlohmann::json::object();
    for (const auto& [index, w] : weights) {
        const std::string stem = "layer" + std::to_string(index);
        write_tensor_file(w.weight, dir / (stem + ".weight.npy"));
        write_tensor_file(w.bias, dir / (stem + ".bias.npy"));
        manifest[std::to_string(index)] = {{"weight", stem + ".weight.npy"}, {"bias", stem + ".bias.npy"}};
    }
    std::ofstream out(dir / "manifest.json");
    out << manifest.dump(2) << '\n';
    if (!out)
        throw IoError("cannot write " + (dir / "manifest.json").string());
}

/// Deterministic He-uniform initialisation (bias zero) for every
/// parameterised layer. Uses only the raw 64-bit engine output so the values
/// do not depend on the standard library's distribution implementations.
inline NetworkWeights init_weights(const NetworkConfig& net, const Shape& input, std::uint64_t seed) {
    const auto shapes = infer_shapes(net, input);
    std::mt19937_64 rng(seed);
    NetworkWeights weights;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        if (!has_parameters(net.layers[i]))
            continue;
        const Shape& in = i == 0 ? input : shapes[i - 1];
        const Shape ws = detail::expected_weight_shape(net.layers[i], in);
        const double fan_in = static_cast<double>(shape_volume(ws) / ws[0]);
        const double bound = std::sqrt(6.0 / fan_in);
        Tensor w(ws);
        for (double& v : w.data()) {
            const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            v = (2.0 * u - 1.0) * bound;
        }
        weights[i] = LayerWeights{std::move(w), Tensor({ws[0]})};
    }
    return weights;
}

} // namespace actfeat
