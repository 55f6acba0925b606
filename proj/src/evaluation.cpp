#include "advforge/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "advforge/common.hpp"
#include "advforge/dataset.hpp"
#include "advforge/parallel.hpp"

namespace advforge::evaluation {

using attack::AttackConfig;
using imaging::Image;

namespace {

constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

struct Photometrics {
    double brightness_lo, brightness_hi;
    double contrast_lo, contrast_hi;
    double noise_lo, noise_hi;
};

Photometrics illumination_preset(const std::string& name) {
    if (name == "sunny") return {0.05, 0.2, 1.0, 1.3, 0.0, 0.02};
    if (name == "cloudy") return {-0.05, 0.05, 0.85, 1.1, 0.0, 0.02};
    if (name == "night") return {-0.35, -0.15, 0.6, 0.9, 0.02, 0.06};
    throw InvalidInput("unknown illumination preset: " + name);
}

// Perspective corner displacements for a horizontal viewing angle: symmetric
// width squeeze by cos(angle) plus a vertical taper on the receding edge.
void angle_perspective(double angle_deg, std::array<double, 8>& p) {
    const double c = std::cos(angle_deg * kDegToRad);
    const double squeeze = 0.5 * (1.0 - c);
    const double taper = 0.15 * (1.0 - c);
    p.fill(0.0);
    p[0] = squeeze;  // TL.dx
    p[2] = -squeeze; // TR.dx
    p[4] = -squeeze; // BR.dx
    p[6] = squeeze;  // BL.dx
    if (angle_deg >= 0.0) {
        p[3] = taper;  // TR.dy
        p[5] = -taper; // BR.dy
    } else {
        p[1] = taper;  // TL.dy
        p[7] = -taper; // BL.dy
    }
}

struct GlareSpec {
    bool active = false;
    double cx = 0, cy = 0, rx = 1, ry = 1, gain = 0;
};

GlareSpec draw_glare(Rng& rng, int size) {
    GlareSpec g;
    g.active = rng.unit() < 0.3;
    g.cx = rng.uniform(0.2, 0.8) * size;
    g.cy = rng.uniform(0.2, 0.8) * size;
    g.rx = rng.uniform(0.10, 0.30) * size;
    g.ry = rng.uniform(0.05, 0.15) * size;
    g.gain = rng.uniform(0.3, 0.6);
    return g;
}

void apply_glare(Image& img, const GlareSpec& g) {
    if (!g.active) return;
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) {
            const double dx = (x - g.cx) / g.rx, dy = (y - g.cy) / g.ry;
            const double d2 = dx * dx + dy * dy;
            if (d2 > 9.0) continue;
            const double add = g.gain * std::exp(-0.5 * d2);
            for (int c = 0; c < 3; ++c)
                img.at(c, y, x) = clamp01(img.at(c, y, x) + add);
        }
}

} // namespace

Verdict judge_frame(Vector vec, const FramePrediction& clean, const FramePrediction& adv,
                    int y, int y_prime, double th) {
    if (!(th > 0.0 && th < 1.0)) throw InvalidInput("judge threshold must lie in (0, 1)");
    if (clean.cell_id != adv.cell_id)
        throw InvalidInput("paired frames come from different grid cells");
    Verdict v;
    switch (vec) {
        case Vector::HA:
            v.counts = true;
            v.success = clean.z > th && adv.z < th;
            break;
        case Vector::AA:
            v.counts = true;
            v.success = adv.top_class == y_prime;
            break;
        case Vector::NTA:
            v.counts = clean.top_class == y;
            v.success = v.counts && adv.top_class != y;
            break;
        case Vector::TA:
            v.counts = clean.top_class == y;
            v.success = v.counts && adv.top_class == y_prime;
            break;
    }
    return v;
}

FramePrediction extract_prediction(const detect::Detector& model, const Image& frame,
                                   const geometry::BBox& bbox_real, int cell_id,
                                   double det_conf, double det_nms, double overlap_iou) {
    FramePrediction out;
    out.cell_id = cell_id;
    for (const detect::Detection& d : model.predict(frame, det_conf, det_nms)) {
        if (geometry::iou(d.box, bbox_real) <= overlap_iou) continue;
        if (d.score > out.z) {
            out.z = d.score;
            out.top_class = d.label;
        }
    }
    return out;
}

void GridSpec::validate() const {
    if (distance_bins.empty() || angle_bins.empty() || illuminations.empty())
        throw InvalidInput("grid spec must have at least one bin per axis");
    for (const auto& b : distance_bins)
        if (!(b.first < b.second) || b.first < 0.0)
            throw InvalidInput("distance bins must be non-negative with lo < hi");
    for (const auto& b : angle_bins)
        if (!(b.first < b.second))
            throw InvalidInput("angle bins must satisfy lo < hi");
    for (const auto& name : illuminations) illumination_preset(name);
    if (frames_per_cell < 1) throw InvalidInput("frames_per_cell must be at least 1");
    if (!(th > 0.0 && th < 1.0)) throw InvalidInput("grid th must lie in (0, 1)");
    if (!(rho0 > 0.0)) throw InvalidInput("rho0 must be positive");
    if (!(ratio_min > 0.0 && ratio_min <= ratio_max && ratio_max <= 1.0))
        throw InvalidInput("ratio clamp range must satisfy 0 < min <= max <= 1");
}

double distance_ratio(double d, double rho0, double ratio_min, double ratio_max) {
    if (!(d > 0.0)) return ratio_max;
    return std::clamp(rho0 / d, ratio_min, ratio_max);
}

std::vector<CellResult> drive_by_grid(const attack::PatchArtifact& patch,
                                      const detect::Detector& model, const GridSpec& spec,
                                      const std::vector<Image>& backgrounds,
                                      std::vector<FrameRecord>* records) {
    spec.validate();
    if (backgrounds.empty()) throw InvalidInput("background corpus is empty");
    const int size = model.config().input_size;
    for (const Image& b : backgrounds)
        if (b.h != size || b.w != size)
            throw InvalidInput("background size does not match detector input_size");
    const size_t n_cells =
        spec.illuminations.size() * spec.distance_bins.size() * spec.angle_bins.size();
    std::vector<CellResult> cells(n_cells);
    std::vector<std::vector<FrameRecord>> cell_records(records ? n_cells : 0);
    const double s_f = 3.0 / size;
    const AttackConfig& acfg = patch.config;
    parallel_for(n_cells, [&](size_t cell) {
        const size_t per_ill = spec.distance_bins.size() * spec.angle_bins.size();
        const size_t ill_idx = cell / per_ill;
        const size_t d_idx = (cell % per_ill) / spec.angle_bins.size();
        const size_t a_idx = cell % spec.angle_bins.size();
        CellResult& res = cells[cell];
        res.distance_bin = spec.distance_bins[d_idx];
        res.angle_bin = spec.angle_bins[a_idx];
        res.illumination = spec.illuminations[ill_idx];
        const Photometrics photo = illumination_preset(res.illumination);
        const bool glare_cell = spec.night_glare && res.illumination == "night";
        uint64_t mix[2] = {spec.seed, uint64_t(cell)};
        Rng rng(fnv1a64(mix, sizeof mix));
        for (int f = 0; f < spec.frames_per_cell; ++f) {
            const double d = rng.uniform(res.distance_bin.first, res.distance_bin.second);
            const double ang = rng.uniform(res.angle_bin.first, res.angle_bin.second);
            const double side = distance_ratio(d, spec.rho0, spec.ratio_min, spec.ratio_max);
            const double span = 1.0 - side - 2.0 * s_f;
            geometry::BBox bbox;
            bbox.w = side;
            bbox.h = side;
            bbox.cx = rng.unit() * span + 0.5 * side + s_f;
            bbox.cy = rng.unit() * span + 0.5 * side + s_f;
            imaging::TransformSpec t;
            t.rotation_deg = rng.uniform(-5.0, 5.0);
            angle_perspective(ang, t.perspective);
            t.brightness = rng.uniform(photo.brightness_lo, photo.brightness_hi);
            t.contrast = rng.uniform(photo.contrast_lo, photo.contrast_hi);
            t.saturation = rng.uniform(0.85, 1.15);
            t.hue = rng.uniform(-0.02, 0.02);
            t.noise_sigma = rng.uniform(photo.noise_lo, photo.noise_hi);
            t.blur_kernel = rng.unit() < 0.5 ? 1 : 3;
            t.resolution_scale = rng.uniform(0.8, 1.0);
            t.noise_seed = rng.raw();
            const size_t bg = size_t(rng.index(backgrounds.size()));
            const GlareSpec glare = glare_cell ? draw_glare(rng, size) : GlareSpec{};
            Image frame_clean =
                imaging::embed(backgrounds[bg], imaging::apply_transform(patch.base, t), bbox);
            Image frame_adv =
                imaging::embed(backgrounds[bg], imaging::apply_transform(patch.patched, t), bbox);
            apply_glare(frame_clean, glare);
            apply_glare(frame_adv, glare);
            const FramePrediction pc = extract_prediction(model, frame_clean, bbox, int(cell));
            const FramePrediction pa = extract_prediction(model, frame_adv, bbox, int(cell));
            const Verdict v = judge_frame(acfg.vector, pc, pa, acfg.source_label,
                                          acfg.target_label, spec.th);
            if (v.counts) ++res.n_a;
            if (v.success) ++res.n_s;
            if (records)
                cell_records[cell].push_back({int(cell), pc.z, pa.z, pc.top_class,
                                              pa.top_class, v.counts, v.success});
        }
    });
    if (records)
        for (const auto& rc : cell_records)
            records->insert(records->end(), rc.begin(), rc.end());
    return cells;
}

PairStats success_rate_over_pairs(const attack::PatchArtifact& patch,
                                  const detect::Detector& model, int pairs, uint64_t seed,
                                  double th) {
    if (pairs < 1) throw InvalidInput("pair count must be at least 1");
    const int size = model.config().input_size;
    const AttackConfig& acfg = patch.config;
    Rng rng(seed);
    PairStats stats;
    for (int i = 0; i < pairs; ++i) {
        const Image bg = data::random_background(rng, size);
        const geometry::BBox bbox = imaging::place_foreground(rng, size, acfg.ratios);
        const imaging::TransformSpec t = imaging::sample_transform(rng, acfg.transforms);
        const Image frame_clean = imaging::embed(bg, imaging::apply_transform(patch.base, t), bbox);
        const Image frame_adv =
            imaging::embed(bg, imaging::apply_transform(patch.patched, t), bbox);
        const FramePrediction pc = extract_prediction(model, frame_clean, bbox, 0);
        const FramePrediction pa = extract_prediction(model, frame_adv, bbox, 0);
        const Verdict v =
            judge_frame(acfg.vector, pc, pa, acfg.source_label, acfg.target_label, th);
        if (v.counts) ++stats.n_a;
        if (v.success) ++stats.n_s;
    }
    return stats;
}

namespace {

std::string fmt_bin(const std::pair<double, double>& bin) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g..%g", bin.first, bin.second);
    return buf;
}

std::pair<double, double> parse_bin(const std::string& s) {
    const size_t sep = s.find("..");
    if (sep == std::string::npos) throw InvalidInput("malformed bin: " + s);
    return {std::stod(s.substr(0, sep)), std::stod(s.substr(sep + 2))};
}

} // namespace

void emit_report(const std::vector<CellResult>& cells, const std::string& csv_path) {
    std::ofstream f(csv_path);
    if (!f) throw std::runtime_error("cannot write report: " + csv_path);
    f << "distance_bin,angle_bin,illumination,N_a,N_s,R_s\n";
    char buf[64];
    for (const CellResult& c : cells) {
        std::snprintf(buf, sizeof buf, "%.6f", c.r_s());
        f << fmt_bin(c.distance_bin) << ',' << fmt_bin(c.angle_bin) << ',' << c.illumination
          << ',' << c.n_a << ',' << c.n_s << ',' << buf << "\n";
    }
    if (!f) throw std::runtime_error("report write failed: " + csv_path);
}

std::vector<CellResult> parse_report(const std::string& csv_path) {
    std::ifstream f(csv_path);
    if (!f) throw InvalidInput("cannot open report: " + csv_path);
    std::string line;
    if (!std::getline(f, line) || line != "distance_bin,angle_bin,illumination,N_a,N_s,R_s")
        throw InvalidInput("unexpected report header in " + csv_path);
    std::vector<CellResult> cells;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 6) throw InvalidInput("malformed report row: " + line);
        CellResult c;
        c.distance_bin = parse_bin(fields[0]);
        c.angle_bin = parse_bin(fields[1]);
        c.illumination = fields[2];
        c.n_a = std::stol(fields[3]);
        c.n_s = std::stol(fields[4]);
        if (c.n_s > c.n_a) throw InvalidInput("report row has N_s > N_a: " + line);
        cells.push_back(std::move(c));
    }
    return cells;
}

void render_heatmap(const std::vector<CellResult>& cells, const std::string& illumination,
                    const std::string& png_path) {
    std::vector<const CellResult*> sel;
    for (const CellResult& c : cells)
        if (c.illumination == illumination) sel.push_back(&c);
    if (sel.empty()) throw InvalidInput("no cells for illumination: " + illumination);
    // Recover the grid extents from the distinct bins, in order of appearance.
    std::vector<std::pair<double, double>> d_bins, a_bins;
    for (const CellResult* c : sel) {
        if (std::find(d_bins.begin(), d_bins.end(), c->distance_bin) == d_bins.end())
            d_bins.push_back(c->distance_bin);
        if (std::find(a_bins.begin(), a_bins.end(), c->angle_bin) == a_bins.end())
            a_bins.push_back(c->angle_bin);
    }
    const int block = 48, border = 2;
    Image img(int(a_bins.size()) * block, int(d_bins.size()) * block, 1.0);
    for (const CellResult* c : sel) {
        const size_t dx = std::find(d_bins.begin(), d_bins.end(), c->distance_bin) -
                          d_bins.begin();
        const size_t ay = std::find(a_bins.begin(), a_bins.end(), c->angle_bin) -
                          a_bins.begin();
        const double r = c->r_s();
        // Cold blue (0) to warm red (1).
        const double col[3] = {0.15 + 0.8 * r, 0.2, 0.95 - 0.8 * r};
        for (int y = int(ay) * block + border; y < int(ay + 1) * block - border; ++y)
            for (int x = int(dx) * block + border; x < int(dx + 1) * block - border; ++x)
                for (int ch = 0; ch < 3; ++ch) img.at(ch, y, x) = col[ch];
    }
    imaging::write_png(png_path, img);
}

} // namespace advforge::evaluation
