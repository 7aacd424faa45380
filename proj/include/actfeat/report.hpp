#pragma once

// Text output helpers shared by the pipeline verbs: locale-independent number
// formatting, minimal CSV quoting/splitting, and small self-contained SVG plots.

#include <actfeat/error.hpp>
#include <actfeat/similarity.hpp>
#include <actfeat/sift.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace actfeat {

/// Shortest decimal that parses back to the same double.
inline std::string format_number(double v) {
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::string format_number(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

inline double parse_number(std::string_view s) {
    if (s == "nan")
        return std::nan("");
    if (s == "inf" || s == "-inf")
        return s[0] == '-' ? -INFINITY : INFINITY;
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw FormatError("not a number: '" + std::string(s) + "'");
    return v;
}

inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos)
        return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    out += '"';
    return out;
}

/// Splits one CSV record; double quotes escape embedded separators.
inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                fields.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                fields.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back();
        } else if (c != '\r') {
            fields.back() += c;
        }
    }
    if (quoted)
        throw FormatError("unterminated quote in CSV record");
    return fields;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw IoError("cannot write " + path.string());
    f << text;
    if (!f)
        throw IoError("write failed for " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot read " + path.string());
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

/// 64-bit FNV-1a, used as a stable content fingerprint (not for security).
inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4)
        s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    return s;
}

// ---------------------------------------------------------------------------
// SVG plots

namespace detail {

inline std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

inline std::string svg_open(int w, int h) {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) + "\" height=\"" +
           std::to_string(h) + "\" viewBox=\"0 0 " + std::to_string(w) + " " + std::to_string(h) +
           "\" font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

inline std::string fixed(double v, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

} // namespace detail

inline std::string histogram_svg(const Histogram& h, std::string_view title, std::string_view x_label) {
    constexpr int W = 480, H = 300, L = 50, R = 20, T = 30, B = 45;
    const double pw = W - L - R, ph = H - T - B;
    const std::size_t peak = h.counts.empty() ? 1 : std::max<std::size_t>(1, *std::max_element(h.counts.begin(), h.counts.end()));
    std::string s = detail::svg_open(W, H);
    s += "<text x=\"" + std::to_string(W / 2) + "\" y=\"18\" text-anchor=\"middle\">" + detail::xml_escape(title) + "</text>\n";
    const double bw = pw / static_cast<double>(std::max<std::size_t>(h.counts.size(), 1));
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        const double bh = ph * static_cast<double>(h.counts[i]) / static_cast<double>(peak);
        s += "<rect x=\"" + detail::fixed(L + bw * static_cast<double>(i)) + "\" y=\"" + detail::fixed(T + ph - bh) +
             "\" width=\"" + detail::fixed(bw * 0.95) + "\" height=\"" + detail::fixed(bh) +
             "\" fill=\"#4878a8\"/>\n";
    }
    s += "<line x1=\"" + std::to_string(L) + "\" y1=\"" + detail::fixed(T + ph) + "\" x2=\"" + detail::fixed(L + pw) +
         "\" y2=\"" + detail::fixed(T + ph) + "\" stroke=\"black\"/>\n";
    if (!h.bin_edges.empty()) {
        s += "<text x=\"" + std::to_string(L) + "\" y=\"" + detail::fixed(T + ph + 14) + "\">" +
             detail::fixed(h.bin_edges.front(), 3) + "</text>\n";
        s += "<text x=\"" + detail::fixed(L + pw) + "\" y=\"" + detail::fixed(T + ph + 14) + "\" text-anchor=\"end\">" +
             detail::fixed(h.bin_edges.back(), 3) + "</text>\n";
    }
    s += "<text x=\"" + detail::fixed(L + pw / 2) + "\" y=\"" + std::to_string(H - 10) + "\" text-anchor=\"middle\">" +
         detail::xml_escape(x_label) + "</text>\n";
    s += "<text x=\"12\" y=\"" + std::to_string(T + 10) + "\">" + std::to_string(peak) + "</text>\n";
    return s + "</svg>\n";
}

inline std::string scatter_svg(const std::vector<double>& x, const std::vector<double>& y, std::string_view title,
                               std::string_view x_label, std::string_view y_label) {
    constexpr int W = 420, H = 340, L = 55, R = 20, T = 30, B = 45;
    const double pw = W - L - R, ph = H - T - B;
    auto range = [](const std::vector<double>& v) {
        if (v.empty())
            return std::pair{0.0, 1.0};
        auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        return *hi > *lo ? std::pair{*lo, *hi} : std::pair{*lo - 0.5, *lo + 0.5};
    };
    const auto [x0, x1] = range(x);
    const auto [y0, y1] = range(y);
    std::string s = detail::svg_open(W, H);
    s += "<text x=\"" + std::to_string(W / 2) + "\" y=\"18\" text-anchor=\"middle\">" + detail::xml_escape(title) + "</text>\n";
    s += "<rect x=\"" + std::to_string(L) + "\" y=\"" + std::to_string(T) + "\" width=\"" + detail::fixed(pw) +
         "\" height=\"" + detail::fixed(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
    for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
        const double px = L + pw * (x[i] - x0) / (x1 - x0);
        const double py = T + ph - ph * (y[i] - y0) / (y1 - y0);
        s += "<circle cx=\"" + detail::fixed(px) + "\" cy=\"" + detail::fixed(py) + "\" r=\"3\" fill=\"#c04040\" fill-opacity=\"0.7\"/>\n";
    }
    s += "<text x=\"" + detail::fixed(L + pw / 2) + "\" y=\"" + std::to_string(H - 10) + "\" text-anchor=\"middle\">" +
         detail::xml_escape(x_label) + "</text>\n";
    s += "<text x=\"14\" y=\"" + detail::fixed(T + ph / 2) + "\" transform=\"rotate(-90 14 " + detail::fixed(T + ph / 2) +
         ")\" text-anchor=\"middle\">" + detail::xml_escape(y_label) + "</text>\n";
    return s + "</svg>\n";
}

/// Two map outlines side by side with keypoints and match lines. Maps are
/// drawn with time running down, matching the [frames x bins] layout.
inline std::string match_overlay_svg(const SiftFeatures& a, const SiftFeatures& b, const std::vector<Match>& matches,
                                     std::size_t rows, std::size_t cols, std::string_view title) {
    const double scale = std::min(2.0, 360.0 / static_cast<double>(std::max(rows, cols)));
    const double mw = static_cast<double>(cols) * scale, mh = static_cast<double>(rows) * scale;
    constexpr double gap = 30, top = 30, left = 10;
    const int W = static_cast<int>(2 * mw + gap + 2 * left), H = static_cast<int>(mh + top + 10);
    std::string s = detail::svg_open(W, H);
    s += "<text x=\"" + std::to_string(W / 2) + "\" y=\"18\" text-anchor=\"middle\">" + detail::xml_escape(title) + "</text>\n";
    const double ox[2] = {left, left + mw + gap};
    for (double o : ox)
        s += "<rect x=\"" + detail::fixed(o) + "\" y=\"" + detail::fixed(top) + "\" width=\"" + detail::fixed(mw) +
             "\" height=\"" + detail::fixed(mh) + "\" fill=\"#f4f4f4\" stroke=\"black\"/>\n";
    auto point = [&](const SiftFeatures& f, std::size_t desc, double o) {
        const auto& kp = f.keypoints[f.descriptors[desc].keypoint];
        return std::pair{o + kp.x * scale, top + kp.y * scale};
    };
    const SiftFeatures* sides[2] = {&a, &b};
    for (int side = 0; side < 2; ++side)
        for (std::size_t d = 0; d < sides[side]->descriptors.size(); ++d) {
            const auto [px, py] = point(*sides[side], d, ox[side]);
            const double r = sides[side]->keypoints[sides[side]->descriptors[d].keypoint].scale * scale;
            s += "<circle cx=\"" + detail::fixed(px) + "\" cy=\"" + detail::fixed(py) + "\" r=\"" + detail::fixed(r) +
                 "\" fill=\"none\" stroke=\"#2060c0\"/>\n";
        }
    for (const auto& m : matches) {
        const auto [ax, ay] = point(a, m.index_a, ox[0]);
        const auto [bx, by] = point(b, m.index_b, ox[1]);
        s += "<line x1=\"" + detail::fixed(ax) + "\" y1=\"" + detail::fixed(ay) + "\" x2=\"" + detail::fixed(bx) +
             "\" y2=\"" + detail::fixed(by) + "\" stroke=\"#c04040\" stroke-opacity=\"0.6\"/>\n";
    }
    return s + "</svg>\n";
}

} // namespace actfeat
