// Regenerates the fixtures under data/: planted-template pairs in
// data/synthetic/ and an occluded, background-swapped pair in data/robustness/.
//
//   make_fixtures [data_dir]

#include <cmath>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>

#include <json.hpp>

#include "bbs/bbs.hpp"

namespace fs = std::filesystem;
using bbs::Box;
using bbs::FeatureGrid;

namespace {

using Rng = std::mt19937_64;

// Piecewise-constant colored blocks with per-pixel noise.
FeatureGrid clutter(std::size_t h, std::size_t w, std::size_t block, Rng& rng) {
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    std::normal_distribution<float> noise(0.0f, 0.03f);
    const std::size_t bh = (h + block - 1) / block, bw = (w + block - 1) / block;
    std::vector<float> colors(bh * bw * 3);
    for (auto& c : colors) c = u(rng);
    FeatureGrid g(h, w, 3);
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c)
            for (std::size_t ch = 0; ch < 3; ++ch)
                g.at(r, c, ch) = std::clamp(colors[((r / block) * bw + c / block) * 3 + ch] + noise(rng), 0.0f, 1.0f);
    return g;
}

// Blocks of saturated color, clear of the gray range.
FeatureGrid saturated_clutter(std::size_t h, std::size_t w, std::size_t block, Rng& rng) {
    std::uniform_real_distribution<float> hue(0.0f, 6.0f), sat(0.8f, 1.0f), val(0.6f, 1.0f);
    std::normal_distribution<float> noise(0.0f, 0.02f);
    const std::size_t bh = (h + block - 1) / block, bw = (w + block - 1) / block;
    std::vector<float> colors(bh * bw * 3);
    for (std::size_t b = 0; b < bh * bw; ++b) {
        const float hh = hue(rng), s = sat(rng), v = val(rng);
        const float f = hh - std::floor(hh);
        const float p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
        const float rgb[6][3] = {{v, t, p}, {q, v, p}, {p, v, t}, {p, q, v}, {t, p, v}, {v, p, q}};
        const auto& c = rgb[static_cast<std::size_t>(hh) % 6];
        for (std::size_t ch = 0; ch < 3; ++ch) colors[b * 3 + ch] = c[ch];
    }
    FeatureGrid g(h, w, 3);
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c)
            for (std::size_t ch = 0; ch < 3; ++ch)
                g.at(r, c, ch) = std::clamp(colors[((r / block) * bw + c / block) * 3 + ch] + noise(rng), 0.0f, 1.0f);
    return g;
}

// Muted, low-saturation noise.
FeatureGrid plain(std::size_t h, std::size_t w, float level, Rng& rng) {
    std::normal_distribution<float> noise(0.0f, 0.04f);
    FeatureGrid g(h, w, 3);
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) {
            float base = level + noise(rng);
            for (std::size_t ch = 0; ch < 3; ++ch) g.at(r, c, ch) = std::clamp(base + noise(rng) * 0.3f, 0.0f, 1.0f);
        }
    return g;
}

// Smooth color field: a random sum of plane waves per channel.
FeatureGrid object(std::size_t size, Rng& rng) {
    std::uniform_real_distribution<double> freq(0.08, 0.3), phase(0.0, 6.283185307179586), sign(-1.0, 1.0);
    std::normal_distribution<float> noise(0.0f, 0.01f);
    double fx[3][2], fy[3][2], ph[3][2];
    for (std::size_t ch = 0; ch < 3; ++ch)
        for (std::size_t w = 0; w < 2; ++w) {
            fx[ch][w] = freq(rng) * (sign(rng) < 0 ? -1.0 : 1.0);
            fy[ch][w] = freq(rng) * (sign(rng) < 0 ? -1.0 : 1.0);
            ph[ch][w] = phase(rng);
        }
    FeatureGrid g(size, size, 3);
    for (std::size_t r = 0; r < size; ++r)
        for (std::size_t c = 0; c < size; ++c)
            for (std::size_t ch = 0; ch < 3; ++ch) {
                double v = 0.5;
                for (std::size_t w = 0; w < 2; ++w)
                    v += 0.22 * std::sin(fx[ch][w] * static_cast<double>(c) + fy[ch][w] * static_cast<double>(r) + ph[ch][w]);
                g.at(r, c, ch) = std::clamp(static_cast<float>(v) + noise(rng), 0.0f, 1.0f);
            }
    return g;
}

void paste(FeatureGrid& dst, const FeatureGrid& src, std::size_t row, std::size_t col) {
    for (std::size_t r = 0; r < src.height(); ++r)
        for (std::size_t c = 0; c < src.width(); ++c)
            for (std::size_t ch = 0; ch < src.channels(); ++ch) dst.at(row + r, col + c, ch) = src.at(r, c, ch);
}

nlohmann::json annotation(const std::string& id, const std::string& templ, const std::string& target,
                          const Box& tbox, const Box& gt) {
    return {{"id", id},
            {"template_image", templ},
            {"target_image", target},
            {"template_box", bbs::to_json(tbox)},
            {"gt_box", bbs::to_json(gt)}};
}

void write_jsonl(const fs::path& path, const std::vector<nlohmann::json>& rows) {
    std::string text;
    for (const auto& r : rows) text += r.dump() + "\n";
    bbs::write_file_atomic(path, text);
}

void make_synthetic(const fs::path& dir) {
    fs::create_directories(dir);
    Rng rng = bbs::stats::make_rng(2024, 1);
    std::uniform_int_distribution<std::size_t> cell(0, 24);
    std::vector<nlohmann::json> rows;
    for (int i = 0; i < 6; ++i) {
        const std::size_t size = 24;
        FeatureGrid obj = object(size, rng);
        FeatureGrid templ = clutter(48, 48, 6, rng);
        FeatureGrid target = clutter(96, 96, 6, rng);
        const std::size_t tr = 12, tc = 12;
        // Multiples of 3 keep the object on the default color stride.
        const std::size_t gr = 3 * cell(rng), gc = 3 * cell(rng);
        paste(templ, obj, tr, tc);
        paste(target, obj, gr, gc);
        const std::string stem = "pair" + std::to_string(i);
        bbs::save_image(templ, dir / (stem + "_template.ppm"));
        bbs::save_image(target, dir / (stem + "_target.ppm"));
        rows.push_back(annotation(stem, stem + "_template.ppm", stem + "_target.ppm",
                                  Box{static_cast<std::int64_t>(tc), static_cast<std::int64_t>(tr), 24, 24},
                                  Box{static_cast<std::int64_t>(gc), static_cast<std::int64_t>(gr), 24, 24}));
    }
    write_jsonl(dir / "annotations.jsonl", rows);
}

// The object is an octagon filling its box; the cut corners show background.
// In the target the background is replaced and 30% of the object is covered.
void make_robustness(const fs::path& dir) {
    fs::create_directories(dir);
    Rng rng = bbs::stats::make_rng(2024, 2);
    const std::size_t box = 60, cut = 24;
    FeatureGrid obj = object(box, rng);
    auto on_object = [&](std::size_t r, std::size_t c) {
        const std::size_t rr = std::min(r, box - 1 - r), cc = std::min(c, box - 1 - c);
        return rr + cc >= cut;
    };
    auto place = [&](FeatureGrid& dst, std::size_t row, std::size_t col) {
        for (std::size_t r = 0; r < box; ++r)
            for (std::size_t c = 0; c < box; ++c)
                if (on_object(r, c))
                    for (std::size_t ch = 0; ch < 3; ++ch) dst.at(row + r, col + c, ch) = obj.at(r, c, ch);
    };

    FeatureGrid templ = plain(90, 90, 0.55f, rng);
    const std::size_t tr = 15, tc = 15;
    place(templ, tr, tc);

    FeatureGrid target = saturated_clutter(150, 150, 10, rng);
    const std::size_t gr = 51, gc = 72;
    place(target, gr, gc);

    std::size_t object_px = 0;
    for (std::size_t r = 0; r < box; ++r)
        for (std::size_t c = 0; c < box; ++c) object_px += on_object(r, c) ? 1 : 0;
    // Centered square occluder covering 30% of the object pixels.
    const auto side = static_cast<std::size_t>(std::lround(std::sqrt(0.3 * static_cast<double>(object_px))));
    const std::size_t o0 = (box - side) / 2;
    std::normal_distribution<float> noise(0.0f, 0.03f);
    const float occ[3] = {0.95f, 0.9f, 0.1f};
    for (std::size_t r = o0; r < o0 + side; ++r)
        for (std::size_t c = o0; c < o0 + side; ++c)
            for (std::size_t ch = 0; ch < 3; ++ch)
                target.at(gr + r, gc + c, ch) = std::clamp(occ[ch] + noise(rng), 0.0f, 1.0f);

    bbs::save_image(templ, dir / "template.ppm");
    bbs::save_image(target, dir / "target.ppm");
    const auto b = static_cast<std::int64_t>(box);
    write_jsonl(dir / "annotations.jsonl",
                {annotation("occluded", "template.ppm", "target.ppm",
                            Box{static_cast<std::int64_t>(tc), static_cast<std::int64_t>(tr), b, b},
                            Box{static_cast<std::int64_t>(gc), static_cast<std::int64_t>(gr), b, b})});
}

}  // namespace

int main(int argc, char** argv) {
    const fs::path data = argc > 1 ? fs::path(argv[1]) : fs::path("data");
    try {
        make_synthetic(data / "synthetic");
        make_robustness(data / "robustness");
    } catch (const std::exception& e) {
        std::cerr << "make_fixtures: " << e.what() << "\n";
        return 1;
    }
    std::cout << "fixtures written to " << data.string() << "\n";
    return 0;
}
