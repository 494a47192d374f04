#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "idlewave/topology.hpp"
#include "idlewave/trace.hpp"
#include "idlewave/types.hpp"

namespace idlewave {

struct Image {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

    Image() = default;
    Image(std::uint32_t w, std::uint32_t h) : width(w), height(h), rgb(std::size_t(w) * h * 3) {}

    std::uint8_t* pixel(std::uint32_t x, std::uint32_t y) {
        return &rgb[(std::size_t(y) * width + x) * 3];
    }
    const std::uint8_t* pixel(std::uint32_t x, std::uint32_t y) const {
        return &rgb[(std::size_t(y) * width + x) * 3];
    }

    bool operator==(const Image&) const = default;
};

// Fixed palette; a cell interpolates busy -> idle by its idle fraction.
inline constexpr std::uint8_t kBusyColor[3] = {236, 200, 80};
inline constexpr std::uint8_t kIdleColor[3] = {24, 60, 212};
inline constexpr std::uint8_t kNodeSepColor[3] = {0, 0, 0};
inline constexpr std::uint8_t kSocketSepColor[3] = {120, 120, 120};

struct RenderConfig {
    std::uint32_t width = 1024;
    std::uint32_t height = 0;  ///< 0: one pixel row per rank
    Cycles threshold = 0;      ///< idle periods below this are drawn as busy
    Cycles time_bin = 0;       ///< 0: span/width, at least 1
    bool separators = true;    ///< node/socket boundary lines (needs a topology)
};

namespace detail {

inline void blend_pixel(std::uint8_t* px, double idle_fraction) {
    const double f = std::clamp(idle_fraction, 0.0, 1.0);
    for (int c = 0; c < 3; ++c) {
        const double v = double(kBusyColor[c]) + f * (double(kIdleColor[c]) - double(kBusyColor[c]));
        px[c] = std::uint8_t(std::llround(v));
    }
}

inline Image render_grid(const std::vector<IdleRecord>& records, Rank ranks, Cycles span,
                         const RenderConfig& cfg, const std::optional<Topology>& topo) {
    if (ranks == 0) throw ArgumentError("trace has no ranks");
    if (span == 0) throw ArgumentError("trace covers no time, nothing to render");
    if (cfg.width == 0) throw ArgumentError("width must be positive");
    const std::uint32_t H = cfg.height == 0 ? ranks : cfg.height;
    if (H < ranks)
        throw ArgumentError("height " + std::to_string(H) + " is smaller than the rank count " +
                            std::to_string(ranks) + "; each rank needs a pixel row");
    Cycles tb = cfg.time_bin;
    if (tb == 0) tb = std::max<Cycles>(1, span / cfg.width);
    const std::uint64_t B = (span + tb - 1) / tb;

    // idle cycles per (rank, time bin)
    std::vector<std::uint64_t> cell(std::size_t(ranks) * B, 0);
    for (const auto& r : records) {
        const Cycles len = r.length();
        if (len == 0 || len < cfg.threshold) continue;
        if (r.start >= span) continue;
        const Cycles end = std::min(r.end, span);
        const std::uint64_t b0 = r.start / tb;
        const std::uint64_t b1 = (end - 1) / tb;
        for (std::uint64_t b = b0; b <= b1; ++b) {
            const Cycles lo = std::max(r.start, b * tb);
            const Cycles hi = std::min(end, (b + 1) * tb);
            cell[std::size_t(r.rank) * B + b] += hi - lo;
        }
    }

    Image img(cfg.width, H);
    for (std::uint32_t y = 0; y < H; ++y) {
        const Rank rank = Rank(std::uint64_t(y) * ranks / H);
        const auto* row = &cell[std::size_t(rank) * B];
        for (std::uint32_t x = 0; x < cfg.width; ++x) {
            const std::uint64_t lo = std::uint64_t(x) * B / cfg.width;
            std::uint64_t hi = std::uint64_t(x + 1) * B / cfg.width;
            if (hi <= lo) hi = lo + 1;
            std::uint64_t idle = 0;
            for (std::uint64_t b = lo; b < hi; ++b) idle += row[b];
            // the last bin may extend past the span; scale by covered time only
            const Cycles covered = std::min(hi * tb, span) - lo * tb;
            const double frac = double(idle) / double(covered);
            detail::blend_pixel(img.pixel(x, y), frac);
        }
    }

    if (topo && cfg.separators) {
        const std::uint32_t per_socket = topo->cores_per_socket;
        const std::uint32_t per_node = topo->ranks_per_node();
        const auto paint_row = [&](Rank boundary, const std::uint8_t* color) {
            const std::uint32_t y = std::uint32_t((std::uint64_t(boundary) * H + ranks - 1) / ranks);
            if (y >= H) return;
            for (std::uint32_t x = 0; x < cfg.width; ++x) {
                auto* px = img.pixel(x, y);
                px[0] = color[0];
                px[1] = color[1];
                px[2] = color[2];
            }
        };
        for (Rank b = per_socket; b < ranks; b += per_socket) {
            if (b % per_node != 0) paint_row(b, kSocketSepColor);
        }
        for (Rank b = per_node; b < ranks; b += per_node) paint_row(b, kNodeSepColor);
    }
    return img;
}

}  // namespace detail

/// Rank/time heatmap of idle fraction: busy yellow, idle blue, one row per
/// rank (or more with an explicit height). Node boundaries are black lines,
/// socket boundaries grey, when a topology is given.
inline Image render_heatmap(const Trace& trace, const RenderConfig& cfg = {},
                            const std::optional<Topology>& topo = std::nullopt) {
    return detail::render_grid(trace.records, trace.header.ranks, trace.span_end(), cfg, topo);
}

/// Same grid with each rank's time axis translated by its shift (positive
/// shift moves the signal earlier). Parts pushed before t=0 are dropped.
/// Aligning with the phases of a sync report turns a synchronized pattern
/// into vertical stripes.
inline Image render_shifted_timelines(const Trace& trace,
                                      const std::vector<SignedCycles>& shifts,
                                      const RenderConfig& cfg = {},
                                      const std::optional<Topology>& topo = std::nullopt) {
    if (shifts.size() != trace.header.ranks)
        throw ArgumentError("need one shift per rank: " + std::to_string(shifts.size()) +
                            " shifts for " + std::to_string(trace.header.ranks) + " ranks");
    std::vector<IdleRecord> moved;
    moved.reserve(trace.records.size());
    Cycles span = 0;
    for (const auto& r : trace.records) {
        const SignedCycles sh = shifts[r.rank];
        const SignedCycles s = SignedCycles(r.start) - sh;
        const SignedCycles e = SignedCycles(r.end) - sh;
        if (e <= 0) continue;
        IdleRecord m = r;
        m.start = s < 0 ? 0 : Cycles(s);
        m.end = Cycles(e);
        moved.push_back(m);
        span = std::max(span, m.end);
    }
    return detail::render_grid(moved, trace.header.ranks, span, cfg, topo);
}

// --- encoders ---------------------------------------------------------------

inline std::string encode_ppm(const Image& img) {
    std::string out = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) +
                      "\n255\n";
    out.append(reinterpret_cast<const char*>(img.rgb.data()), img.rgb.size());
    return out;
}

/// SVG 1.1, one rect per horizontal run of equal color.
inline std::string encode_svg(const Image& img) {
    auto hex = [](const std::uint8_t* px) {
        static const char* digits = "0123456789abcdef";
        std::string s = "#......";
        for (int c = 0; c < 3; ++c) {
            s[std::size_t(1 + 2 * c)] = digits[px[c] >> 4];
            s[std::size_t(2 + 2 * c)] = digits[px[c] & 0xF];
        }
        return s;
    };
    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(img.width) +
           "\" height=\"" + std::to_string(img.height) + "\" viewBox=\"0 0 " +
           std::to_string(img.width) + " " + std::to_string(img.height) +
           "\" shape-rendering=\"crispEdges\">\n";
    for (std::uint32_t y = 0; y < img.height; ++y) {
        std::uint32_t x = 0;
        while (x < img.width) {
            std::uint32_t run = 1;
            while (x + run < img.width &&
                   std::equal(img.pixel(x, y), img.pixel(x, y) + 3, img.pixel(x + run, y))) {
                ++run;
            }
            out += "<rect x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y) +
                   "\" width=\"" + std::to_string(run) + "\" height=\"1\" fill=\"" +
                   hex(img.pixel(x, y)) + "\"/>\n";
            x += run;
        }
    }
    out += "</svg>\n";
    return out;
}

/// Text rendering: ten shades from busy (space) to fully idle (@).
inline std::string encode_ascii(const Image& img) {
    static const char shades[] = " .:-=+*#%@";
    std::string out;
    out.reserve((img.width + 1) * std::size_t(img.height));
    const double span = double(kBusyColor[0]) - double(kIdleColor[0]);
    for (std::uint32_t y = 0; y < img.height; ++y) {
        for (std::uint32_t x = 0; x < img.width; ++x) {
            const double f =
                std::clamp((double(kBusyColor[0]) - double(img.pixel(x, y)[0])) / span, 0.0, 1.0);
            out += shades[std::size_t(std::llround(f * 9))];
        }
        out += '\n';
    }
    return out;
}

enum class ImageFormat { Ppm, Svg, Ascii };

inline void write_image_file(const Image& img, const std::string& path, ImageFormat fmt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    std::string data;
    switch (fmt) {
        case ImageFormat::Ppm: data = encode_ppm(img); break;
        case ImageFormat::Svg: data = encode_svg(img); break;
        case ImageFormat::Ascii: data = encode_ascii(img); break;
    }
    out.write(data.data(), std::streamsize(data.size()));
    if (!out) throw Error("short write to '" + path + "'");
}

}  // namespace idlewave
