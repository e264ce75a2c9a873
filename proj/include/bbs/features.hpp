#pragma once

// Image and feature-map ingestion: binary PPM (P6), the BFM float format,
// RGB->HSV conversion and per-window channel normalization.

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "bbs/errors.hpp"
#include "bbs/feature_grid.hpp"
#include "bbs/io.hpp"

namespace bbs {

inline constexpr std::array<char, 4> kBfmMagic = {'B', 'F', 'M', '1'};

namespace detail {

inline void put_u32_le(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

inline std::uint32_t get_u32_le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

// Reads one whitespace-delimited PNM header token, skipping '#' comments.
inline std::string pnm_token(const std::string& bytes, std::size_t& pos, const std::string& name) {
    for (;;) {
        while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
        if (pos < bytes.size() && bytes[pos] == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            continue;
        }
        break;
    }
    std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos])) && bytes[pos] != '#')
        ++pos;
    if (start == pos) throw IoError(name + ": malformed PPM header");
    return bytes.substr(start, pos - start);
}

inline std::size_t pnm_number(const std::string& bytes, std::size_t& pos, const std::string& name) {
    std::string tok = pnm_token(bytes, pos, name);
    if (!std::all_of(tok.begin(), tok.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
        throw IoError(name + ": malformed PPM header field '" + tok + "'");
    return static_cast<std::size_t>(std::stoull(tok));
}

}  // namespace detail

/// Parses an 8-bit binary PPM held in memory. Values are scaled to [0,1].
inline FeatureGrid parse_ppm(const std::string& bytes, const std::string& name = "<memory>") {
    std::size_t pos = 0;
    if (detail::pnm_token(bytes, pos, name) != "P6") throw IoError(name + ": not a binary PPM (P6)");
    std::size_t width = detail::pnm_number(bytes, pos, name);
    std::size_t height = detail::pnm_number(bytes, pos, name);
    std::size_t maxval = detail::pnm_number(bytes, pos, name);
    if (width == 0 || height == 0) throw IoError(name + ": zero-sized image");
    if (maxval == 0 || maxval > 255) throw IoError(name + ": only 8-bit PPM is supported");
    if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos])))
        throw IoError(name + ": malformed PPM header");
    ++pos;
    if (width > bytes.size() || height > bytes.size() || width * height > bytes.size())
        throw IoError(name + ": truncated PPM payload");
    std::size_t n = width * height * 3;
    if (bytes.size() - pos < n) throw IoError(name + ": truncated PPM payload");
    std::vector<float> data(n);
    const float scale = static_cast<float>(maxval);
    for (std::size_t i = 0; i < n; ++i)
        data[i] = static_cast<float>(static_cast<unsigned char>(bytes[pos + i])) / scale;
    return FeatureGrid(height, width, 3, std::move(data));
}

inline FeatureGrid load_image(const std::filesystem::path& path) {
    return parse_ppm(read_file(path), path.string());
}

/// Encodes a 3-channel grid with values in [0,1] as P6, rounding to 8 bits.
inline std::string encode_ppm(const FeatureGrid& grid) {
    if (grid.channels() != 3) throw DimensionError("PPM output needs 3 channels");
    std::string out = "P6\n" + std::to_string(grid.width()) + " " + std::to_string(grid.height()) + "\n255\n";
    out.reserve(out.size() + grid.data().size());
    for (float v : grid.data()) {
        float c = std::clamp(v, 0.0f, 1.0f);
        out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(c * 255.0f))));
    }
    return out;
}

inline void save_image(const FeatureGrid& grid, const std::filesystem::path& path) {
    write_file_atomic(path, encode_ppm(grid));
}

inline std::string encode_bfm(const FeatureGrid& grid) {
    std::string out(kBfmMagic.begin(), kBfmMagic.end());
    detail::put_u32_le(out, static_cast<std::uint32_t>(grid.height()));
    detail::put_u32_le(out, static_cast<std::uint32_t>(grid.width()));
    detail::put_u32_le(out, static_cast<std::uint32_t>(grid.channels()));
    out.reserve(out.size() + 4 * grid.data().size());
    for (float v : grid.data()) detail::put_u32_le(out, std::bit_cast<std::uint32_t>(v));
    return out;
}

inline FeatureGrid parse_bfm(const std::string& bytes, const std::string& name = "<memory>") {
    if (bytes.size() < 16 || !std::equal(kBfmMagic.begin(), kBfmMagic.end(), bytes.begin()))
        throw IoError(name + ": bad BFM magic");
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    std::uint64_t h = detail::get_u32_le(p + 4);
    std::uint64_t w = detail::get_u32_le(p + 8);
    std::uint64_t d = detail::get_u32_le(p + 12);
    if (h == 0 || w == 0 || d == 0) throw IoError(name + ": BFM header has a zero dimension");
    const std::uint64_t payload = (bytes.size() - 16) / 4;
    std::uint64_t n = h * w;  // both below 2^32
    n = n > payload / d ? payload + 1 : n * d;
    if (bytes.size() - 16 != 4 * n)
        throw IoError(name + ": BFM payload holds " + std::to_string(payload) + " floats, header declares " +
                      std::to_string(h) + "x" + std::to_string(w) + "x" + std::to_string(d));
    std::vector<float> data(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        float v = std::bit_cast<float>(detail::get_u32_le(p + 16 + 4 * i));
        if (!std::isfinite(v)) throw IoError(name + ": BFM payload contains non-finite values");
        data[i] = v;
    }
    return FeatureGrid(h, w, d, std::move(data));
}

inline FeatureGrid load_feature_grid(const std::filesystem::path& path) {
    return parse_bfm(read_file(path), path.string());
}

inline void save_feature_grid(const FeatureGrid& grid, const std::filesystem::path& path) {
    write_file_atomic(path, encode_bfm(grid));
}

/// Hexcone HSV with all channels in [0,1] (hue divided by 360 degrees).
/// Hue is 0 for achromatic pixels.
inline FeatureGrid rgb_to_hsv(const FeatureGrid& rgb) {
    if (rgb.channels() != 3)
        throw DimensionError("rgb_to_hsv expects 3 channels, got " + std::to_string(rgb.channels()));
    FeatureGrid out(rgb.height(), rgb.width(), 3);
    auto src = rgb.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < src.size(); i += 3) {
        double r = src[i], g = src[i + 1], b = src[i + 2];
        double mx = std::max({r, g, b});
        double mn = std::min({r, g, b});
        double delta = mx - mn;
        double hue = 0.0;
        if (delta > 0.0) {
            if (mx == r)
                hue = std::fmod((g - b) / delta, 6.0);
            else if (mx == g)
                hue = (b - r) / delta + 2.0;
            else
                hue = (r - g) / delta + 4.0;
            if (hue < 0.0) hue += 6.0;
            hue /= 6.0;
            if (hue >= 1.0) hue = 0.0;
        }
        double sat = mx > 0.0 ? delta / mx : 0.0;
        dst[i] = static_cast<float>(hue);
        dst[i + 1] = static_cast<float>(sat);
        dst[i + 2] = static_cast<float>(mx);
    }
    return out;
}

/// Channel variances below this are treated as constant and zeroed.
inline constexpr double kDegenerateVariance = 1e-12;

/// Shifts and scales every channel to zero mean and unit population variance
/// over the whole grid.
inline FeatureGrid normalize_per_window(const FeatureGrid& window) {
    const std::size_t d = window.channels();
    const std::size_t cells = window.height() * window.width();
    std::vector<double> mean(d, 0.0), var(d, 0.0);
    auto src = window.data();
    for (std::size_t i = 0; i < cells; ++i)
        for (std::size_t c = 0; c < d; ++c) mean[c] += src[i * d + c];
    for (auto& m : mean) m /= static_cast<double>(cells);
    for (std::size_t i = 0; i < cells; ++i)
        for (std::size_t c = 0; c < d; ++c) {
            double dv = src[i * d + c] - mean[c];
            var[c] += dv * dv;
        }
    for (auto& v : var) v /= static_cast<double>(cells);

    FeatureGrid out(window.height(), window.width(), d);
    auto dst = out.data();
    for (std::size_t c = 0; c < d; ++c) {
        const bool degenerate = var[c] < kDegenerateVariance;
        const double inv_sd = degenerate ? 0.0 : 1.0 / std::sqrt(var[c]);
        for (std::size_t i = 0; i < cells; ++i)
            dst[i * d + c] = degenerate ? 0.0f : static_cast<float>((src[i * d + c] - mean[c]) * inv_sd);
    }
    return out;
}

}  // namespace bbs
