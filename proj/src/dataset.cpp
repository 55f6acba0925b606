#include "advforge/dataset.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "advforge/common.hpp"

namespace advforge::data {

namespace fs = std::filesystem;
using imaging::Image;
using imaging::Mask;
using nlohmann::json;

namespace {

// 5x7 digit bitmaps, one byte per row, low 5 bits used.
constexpr uint8_t kDigitRows[10][7] = {
    {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}, // 0
    {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}, // 1
    {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}, // 2
    {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}, // 3
    {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}, // 4
    {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}, // 5
    {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}, // 6
    {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}, // 7
    {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}, // 8
    {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}, // 9
};

void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
    h = h - std::floor(h);
    const double c = v * s;
    const double hp = h * 6.0;
    const double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
    double rr = 0, gg = 0, bb = 0;
    switch (int(hp)) {
        case 0: rr = c; gg = x; break;
        case 1: rr = x; gg = c; break;
        case 2: gg = c; bb = x; break;
        case 3: gg = x; bb = c; break;
        case 4: rr = x; bb = c; break;
        default: rr = c; bb = x; break;
    }
    const double m = v - c;
    r = rr + m;
    g = gg + m;
    b = bb + m;
}

} // namespace

Image sign_template(int label, int num_classes, int size) {
    if (label < 0 || num_classes < 1 || label >= num_classes)
        throw InvalidInput("sign label out of range");
    if (size < 16) throw InvalidInput("sign size must be at least 16");
    double ring_r, ring_g, ring_b;
    hsv_to_rgb(double(label) / num_classes, 0.85, 0.8, ring_r, ring_g, ring_b);
    const uint8_t* digit = kDigitRows[label % 10];
    // Digit cell box inside the interior, normalized template coordinates.
    const double dx0 = 0.5 - 0.15, dy0 = 0.5 - 0.21, cell_w = 0.30 / 5, cell_h = 0.42 / 7;
    const int ss = 3; // supersampling factor
    Image out(size, size);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            double acc[3] = {0, 0, 0};
            for (int sy = 0; sy < ss; ++sy)
                for (int sx = 0; sx < ss; ++sx) {
                    const double u = (x + (sx + 0.5) / ss) / size;
                    const double v = (y + (sy + 0.5) / ss) / size;
                    const double r = std::hypot(u - 0.5, v - 0.5);
                    double c[3];
                    if (r > 0.48) {
                        c[0] = c[1] = c[2] = 0.4; // backdrop corners
                    } else if (r > 0.34) {
                        c[0] = ring_r; c[1] = ring_g; c[2] = ring_b;
                    } else {
                        c[0] = c[1] = c[2] = 0.95; // interior
                        const int col = int(std::floor((u - dx0) / cell_w));
                        const int row = int(std::floor((v - dy0) / cell_h));
                        if (col >= 0 && col < 5 && row >= 0 && row < 7 &&
                            (digit[row] >> (4 - col)) & 1)
                            c[0] = c[1] = c[2] = 0.08;
                    }
                    for (int ch = 0; ch < 3; ++ch) acc[ch] += c[ch];
                }
            for (int ch = 0; ch < 3; ++ch) out.at(ch, y, x) = acc[ch] / (ss * ss);
        }
    return out;
}

Mask disc_mask(int size, double radius_frac) {
    if (size < 16) throw InvalidInput("mask size must be at least 16");
    if (!(radius_frac > 0.0)) throw InvalidInput("mask radius must be positive");
    Mask m(size, size, 0);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const double u = (x + 0.5) / size, v = (y + 0.5) / size;
            if (std::hypot(u - 0.5, v - 0.5) <= radius_frac) m.at(y, x) = 1;
        }
    return m;
}

Image random_background(Rng& rng, int size) {
    Image out(size, size);
    // Two-color gradient along a random direction.
    double c0[3], c1[3];
    for (int ch = 0; ch < 3; ++ch) {
        c0[ch] = rng.uniform(0.1, 0.9);
        c1[ch] = rng.uniform(0.1, 0.9);
    }
    const double ang = rng.uniform(0.0, 6.283185307179586);
    const double dx = std::cos(ang), dy = std::sin(ang);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            double t = ((x + 0.5) / size - 0.5) * dx + ((y + 0.5) / size - 0.5) * dy + 0.5;
            t = clamp01(t);
            for (int ch = 0; ch < 3; ++ch)
                out.at(ch, y, x) = c0[ch] * (1.0 - t) + c1[ch] * t;
        }
    // Two octaves of value noise, upsampled from coarse random grids.
    for (int octave = 0; octave < 2; ++octave) {
        const int g = octave == 0 ? 8 : 24;
        const double amp = octave == 0 ? 0.08 : 0.04;
        Image coarse(g, g);
        for (double& p : coarse.v) p = rng.uniform(0.0, 1.0);
        const Image up = imaging::resize_bilinear(coarse, size, size);
        for (size_t i = 0; i < out.v.size(); ++i) out.v[i] += amp * (up.v[i] - 0.5);
    }
    // A few translucent rectangles.
    const int n_rects = 2 + int(rng.index(4));
    for (int r = 0; r < n_rects; ++r) {
        const int rw = 4 + int(rng.index(uint64_t(size / 2)));
        const int rh = 4 + int(rng.index(uint64_t(size / 2)));
        const int rx = int(rng.index(uint64_t(std::max(1, size - rw))));
        const int ry = int(rng.index(uint64_t(std::max(1, size - rh))));
        double rc[3];
        for (double& c : rc) c = rng.uniform(0.15, 0.85);
        for (int y = ry; y < ry + rh && y < size; ++y)
            for (int x = rx; x < rx + rw && x < size; ++x)
                for (int ch = 0; ch < 3; ++ch)
                    out.at(ch, y, x) = 0.5 * out.at(ch, y, x) + 0.5 * rc[ch];
    }
    for (double& p : out.v) p = clamp01(p + rng.normal(0.0, 0.01));
    return out;
}

std::vector<detect::LabeledFrame> synthesize_dataset(const DatasetConfig& cfg) {
    if (cfg.count < 1) throw InvalidInput("dataset count must be positive");
    cfg.ratios.validate();
    cfg.transforms.validate();
    Rng rng(cfg.seed);
    std::vector<Image> templates;
    for (int c = 0; c < cfg.num_classes; ++c)
        templates.push_back(sign_template(c, cfg.num_classes, cfg.sign_size));
    std::vector<detect::LabeledFrame> frames;
    frames.reserve(cfg.count);
    for (int i = 0; i < cfg.count; ++i) {
        detect::LabeledFrame f;
        f.label = int(rng.index(uint64_t(cfg.num_classes)));
        f.box = imaging::place_foreground(rng, cfg.frame_size, cfg.ratios);
        Image bg = random_background(rng, cfg.frame_size);
        const imaging::TransformSpec spec = imaging::sample_transform(rng, cfg.transforms);
        const Image sign = imaging::apply_transform(templates[f.label], spec);
        f.image = imaging::embed(bg, sign, f.box);
        frames.push_back(std::move(f));
    }
    return frames;
}

void save_dataset(const std::vector<detect::LabeledFrame>& frames, const std::string& dir) {
    if (frames.empty()) throw InvalidInput("refusing to save an empty dataset");
    fs::create_directories(fs::path(dir) / "frames");
    std::ofstream manifest(fs::path(dir) / "manifest.jsonl");
    if (!manifest) throw InvalidInput("cannot write manifest in " + dir);
    json header = {{"count", frames.size()},
                   {"frame_size", frames.front().image.h},
                   {"kind", "dataset"}};
    manifest << header.dump() << "\n";
    char name[64];
    for (size_t i = 0; i < frames.size(); ++i) {
        std::snprintf(name, sizeof name, "frames/%05zu.png", i);
        imaging::write_png((fs::path(dir) / name).string(), frames[i].image);
        const auto& b = frames[i].box;
        json row = {{"box", {{"cx", b.cx}, {"cy", b.cy}, {"h", b.h}, {"w", b.w}}},
                    {"file", name},
                    {"label", frames[i].label}};
        manifest << row.dump() << "\n";
    }
}

std::vector<detect::LabeledFrame> load_dataset(const std::string& dir) {
    std::ifstream manifest(fs::path(dir) / "manifest.jsonl");
    if (!manifest) throw InvalidInput("cannot open manifest in " + dir);
    std::string line;
    if (!std::getline(manifest, line)) throw InvalidInput("empty manifest in " + dir);
    const json header = json::parse(line);
    if (header.value("kind", "") != "dataset")
        throw InvalidInput("manifest header is not a dataset header");
    std::vector<detect::LabeledFrame> frames;
    while (std::getline(manifest, line)) {
        if (line.empty()) continue;
        const json row = json::parse(line);
        detect::LabeledFrame f;
        f.label = row.at("label").get<int>();
        const json& b = row.at("box");
        f.box.cx = b.at("cx").get<double>();
        f.box.cy = b.at("cy").get<double>();
        f.box.h = b.at("h").get<double>();
        f.box.w = b.at("w").get<double>();
        f.image = imaging::read_png((fs::path(dir) / row.at("file").get<std::string>()).string());
        frames.push_back(std::move(f));
    }
    if (frames.size() != header.at("count").get<size_t>())
        throw InvalidInput("manifest count mismatch in " + dir);
    return frames;
}

} // namespace advforge::data
