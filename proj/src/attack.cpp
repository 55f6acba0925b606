#include "advforge/attack.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "advforge/common.hpp"
#include "advforge/dataset.hpp"
#include "advforge/filters.hpp"
#include "advforge/parallel.hpp"

namespace advforge::attack {

namespace fs = std::filesystem;
using imaging::Image;
using imaging::Mask;
using nlohmann::json;

AttackConfig AttackConfig::defaults_for(Vector v) {
    AttackConfig cfg;
    cfg.vector = v;
    switch (v) {
        case Vector::HA:
            cfg.c = 1e2; cfg.learning_rate = 0.1; cfg.k = 10;
            break;
        case Vector::AA:
            cfg.c = 1e5; cfg.learning_rate = 0.2; cfg.k = 1;
            break;
        case Vector::NTA:
            cfg.c = 1e5; cfg.learning_rate = 0.1; cfg.k = 3;
            break;
        case Vector::TA:
            cfg.c = 1e3; cfg.learning_rate = 0.1; cfg.k = 1;
            break;
    }
    return cfg;
}

void AttackConfig::validate(int num_classes) const {
    if (!(c > 0.0)) throw InvalidInput("attack.c must be positive");
    if (k < 1) throw InvalidInput("attack.k must be at least 1");
    if (n < 1) throw InvalidInput("attack.n must be at least 1");
    if (steps < 0) throw InvalidInput("attack.steps must be non-negative");
    if (!(learning_rate > 0.0)) throw InvalidInput("attack.learning_rate must be positive");
    if (patch_size < 16) throw InvalidInput("attack.patch_size must be at least 16");
    if (!(conf_threshold > 0.0 && conf_threshold < 1.0))
        throw InvalidInput("attack.conf_threshold must lie in (0, 1)");
    const bool need_target = (vector == Vector::AA || vector == Vector::TA);
    if (vector != Vector::AA && (source_label < 0 || source_label >= num_classes))
        throw InvalidInput("attack.source_label out of class range");
    if (need_target && (target_label < 0 || target_label >= num_classes))
        throw InvalidInput("attack.target_label is required and must be a valid class");
    if (vector == Vector::TA && source_label == target_label)
        throw InvalidInput("attack.target_label must differ from source_label");
    if (mask.h != 0 && (mask.h != patch_size || mask.w != patch_size))
        throw InvalidInput("attack.mask size must match patch_size");
    ratios.validate();
    transforms.validate();
}

std::vector<double> PatchArtifact::delta() const {
    std::vector<double> d(patched.v.size());
    for (size_t i = 0; i < d.size(); ++i) d[i] = patched.v[i] - base.v[i];
    return d;
}

double PatchArtifact::masked_l2() const { return losses::l2_distance(base, patched, mask); }

namespace {

Mask default_mask(const AttackConfig& cfg) {
    if (cfg.mask.h != 0) return cfg.mask;
    if (cfg.vector == Vector::AA) return Mask(cfg.patch_size, cfg.patch_size, 1);
    return data::disc_mask(cfg.patch_size);
}

Image base_patch(const AttackConfig& cfg, int num_classes, Rng& rng) {
    if (cfg.vector == Vector::AA) {
        Image x(cfg.patch_size, cfg.patch_size);
        for (double& p : x.v) p = rng.unit();
        return x;
    }
    return data::sign_template(cfg.source_label, num_classes, cfg.patch_size);
}

// One (background, placement, transform) draw.
struct SampleDraw {
    size_t background;
    geometry::BBox bbox;
    imaging::TransformSpec spec;
};

// Per-sample contribution before the batch-level c / row-count scaling.
struct SampleResult {
    int rows = 0;
    double term_sum = 0.0;
    Image grad; // d(term_sum) / d(patched pixels)
};

} // namespace

PatchArtifact train_patch(const AttackConfig& cfg_in, const detect::Detector& model,
                          const std::vector<Image>& backgrounds) {
    const detect::DetectorConfig& dc = model.config();
    AttackConfig cfg = cfg_in;
    cfg.validate(dc.num_classes);
    if (backgrounds.empty()) throw InvalidInput("background corpus is empty");
    for (const Image& b : backgrounds)
        if (b.h != dc.input_size || b.w != dc.input_size)
            throw InvalidInput("background size does not match detector input_size");
    cfg.mask = default_mask(cfg);
    imaging::validate_mask(cfg.mask, "attack mask");

    Rng rng(cfg.seed);
    const Image x = base_patch(cfg, dc.num_classes, rng);
    const size_t px = x.v.size();
    std::vector<double> delta(px, 0.0);
    const bool has_l2 = (cfg.vector != Vector::AA);

    // Channel-expanded mask lookup for the update/projection loops.
    std::vector<uint8_t> mask3(px, 0);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < cfg.patch_size; ++y)
            for (int xx = 0; xx < cfg.patch_size; ++xx)
                mask3[(size_t(c) * cfg.patch_size + y) * cfg.patch_size + xx] =
                    cfg.mask.at(y, xx);

    std::vector<double> trace;
    trace.reserve(cfg.steps);
    int consecutive_empty = 0;
    for (int step = 0; step < cfg.steps; ++step) {
        Image patched = x;
        for (size_t i = 0; i < px; ++i)
            if (mask3[i]) patched.v[i] = clamp01(x.v[i] + delta[i]);
        // Draw the whole batch from the master rng first so results do not
        // depend on the worker count.
        std::vector<SampleDraw> draws(cfg.n);
        for (int s = 0; s < cfg.n; ++s) {
            draws[s].background = size_t(rng.index(backgrounds.size()));
            draws[s].bbox = imaging::place_foreground(rng, dc.input_size, cfg.ratios);
            draws[s].spec = imaging::sample_transform(rng, cfg.transforms);
        }
        std::vector<SampleResult> results(cfg.n);
        parallel_for(size_t(cfg.n), [&](size_t s) {
            const SampleDraw& d = draws[s];
            const Image x_t = imaging::apply_transform(patched, d.spec);
            const Image frame = imaging::embed(backgrounds[d.background], x_t, d.bbox);
            detect::ForwardCache cache;
            const detect::DetectionMatrix m = model.forward_cached(frame, cache);
            filters::FilterOutput f;
            try {
                switch (cfg.vector) {
                    case Vector::TA:
                        f = filters::s_bbox(m, model.anchors(), d.bbox, cfg.conf_threshold);
                        break;
                    case Vector::HA:
                        f = filters::m_bbox(m, model.anchors(), d.bbox,
                                            filters::MBoxMode::Hiding, cfg.k);
                        break;
                    default:
                        f = filters::m_bbox(m, model.anchors(), d.bbox,
                                            filters::MBoxMode::NonHiding, cfg.k);
                }
            } catch (const EmptyCandidate&) {
                results[s].rows = 0;
                return;
            }
            const losses::RowTerms terms =
                losses::raw_terms(cfg.vector, f, cfg.source_label, cfg.target_label,
                                  cfg.ta_literal_suppression);
            // Route the row gradients back into matrix coordinates.
            detect::DetectionMatrix dm(m.rows, m.cols);
            for (int j = 0; j < f.k(); ++j) {
                const int q = f.indices[j];
                dm.at(q, 0) = terms.d_p[j];
                for (int z = 0; z < dc.num_classes; ++z) dm.at(q, 5 + z) = terms.d_v[j][z];
            }
            const Image g_frame = model.input_gradient(cache, m, dm);
            const Image g_xt = imaging::embed_sign_grad(g_frame, x_t, d.bbox);
            const Image g_patched = imaging::transform_input_grad(g_xt, x_t, d.spec);
            SampleResult& r = results[s];
            r.rows = f.k();
            r.term_sum = terms.sum;
            r.grad = imaging::apply_mask_patch_grad(g_patched, x, patched, cfg.mask);
        });
        int total_rows = 0;
        for (const SampleResult& r : results) total_rows += r.rows;
        const double l2 = has_l2 ? losses::l2_distance(x, patched, cfg.mask) : 0.0;
        if (total_rows == 0) {
            if (++consecutive_empty > 50)
                throw NonConvergence(
                    "filters yielded no candidate rows for " + std::to_string(consecutive_empty) +
                    " consecutive steps (step " + std::to_string(step) + ", vector " +
                    losses::vector_name(cfg.vector) + ")");
            trace.push_back(l2);
            continue;
        }
        consecutive_empty = 0;
        const double scale = cfg.c / double(total_rows);
        double loss = l2;
        std::vector<double> grad(px, 0.0);
        for (const SampleResult& r : results) {
            if (r.rows == 0) continue;
            loss += scale * r.term_sum;
            for (size_t i = 0; i < px; ++i) grad[i] += scale * r.grad.v[i];
        }
        if (has_l2)
            for (size_t i = 0; i < px; ++i)
                if (mask3[i]) grad[i] += 2.0 * (patched.v[i] - x.v[i]);
        trace.push_back(loss);
        for (size_t i = 0; i < px; ++i) {
            if (!mask3[i]) continue;
            delta[i] -= cfg.learning_rate * grad[i];
            // Projection: keep x + delta inside [0,1].
            delta[i] = clamp01(x.v[i] + delta[i]) - x.v[i];
        }
    }

    PatchArtifact art;
    art.base = x;
    art.patched = x;
    for (size_t i = 0; i < px; ++i)
        if (mask3[i]) art.patched.v[i] = clamp01(x.v[i] + delta[i]);
    art.mask = cfg.mask;
    art.config = cfg;
    art.loss_trace = std::move(trace);
    art.detector_hash = model.weight_hash();
    return art;
}

namespace {

json ranges_to_json(const imaging::TransformRanges& r) {
    return {{"rotation", {r.rotation_lo, r.rotation_hi}},
            {"perspective", {r.perspective_lo, r.perspective_hi}},
            {"brightness", {r.brightness_lo, r.brightness_hi}},
            {"contrast", {r.contrast_lo, r.contrast_hi}},
            {"saturation", {r.saturation_lo, r.saturation_hi}},
            {"hue", {r.hue_lo, r.hue_hi}},
            {"noise_sigma", {r.noise_sigma_lo, r.noise_sigma_hi}},
            {"blur_kernels", r.blur_kernels},
            {"resolution", {r.resolution_lo, r.resolution_hi}}};
}

imaging::TransformRanges ranges_from_json(const json& j) {
    imaging::TransformRanges r;
    auto pair = [&](const char* key, double& lo, double& hi) {
        lo = j.at(key).at(0).get<double>();
        hi = j.at(key).at(1).get<double>();
    };
    pair("rotation", r.rotation_lo, r.rotation_hi);
    pair("perspective", r.perspective_lo, r.perspective_hi);
    pair("brightness", r.brightness_lo, r.brightness_hi);
    pair("contrast", r.contrast_lo, r.contrast_hi);
    pair("saturation", r.saturation_lo, r.saturation_hi);
    pair("hue", r.hue_lo, r.hue_hi);
    pair("noise_sigma", r.noise_sigma_lo, r.noise_sigma_hi);
    r.blur_kernels = j.at("blur_kernels").get<std::vector<int>>();
    pair("resolution", r.resolution_lo, r.resolution_hi);
    return r;
}

json config_to_json(const AttackConfig& cfg) {
    return {{"vector", losses::vector_name(cfg.vector)},
            {"c", cfg.c},
            {"k", cfg.k},
            {"learning_rate", cfg.learning_rate},
            {"n", cfg.n},
            {"steps", cfg.steps},
            {"source_label", cfg.source_label},
            {"target_label", cfg.target_label},
            {"conf_threshold", cfg.conf_threshold},
            {"patch_size", cfg.patch_size},
            {"ta_literal_suppression", cfg.ta_literal_suppression},
            {"seed", cfg.seed},
            {"ratios",
             {{"r1", cfg.ratios.r1},
              {"r2", cfg.ratios.r2},
              {"r3", cfg.ratios.r3},
              {"p_small", cfg.ratios.p_small}}},
            {"transforms", ranges_to_json(cfg.transforms)}};
}

AttackConfig config_from_json(const json& j) {
    AttackConfig cfg;
    cfg.vector = losses::vector_from_name(j.at("vector").get<std::string>());
    cfg.c = j.at("c").get<double>();
    cfg.k = j.at("k").get<int>();
    cfg.learning_rate = j.at("learning_rate").get<double>();
    cfg.n = j.at("n").get<int>();
    cfg.steps = j.at("steps").get<int>();
    cfg.source_label = j.at("source_label").get<int>();
    cfg.target_label = j.at("target_label").get<int>();
    cfg.conf_threshold = j.at("conf_threshold").get<double>();
    cfg.patch_size = j.at("patch_size").get<int>();
    cfg.ta_literal_suppression = j.at("ta_literal_suppression").get<bool>();
    cfg.seed = j.at("seed").get<uint64_t>();
    cfg.ratios.r1 = j.at("ratios").at("r1").get<double>();
    cfg.ratios.r2 = j.at("ratios").at("r2").get<double>();
    cfg.ratios.r3 = j.at("ratios").at("r3").get<double>();
    cfg.ratios.p_small = j.at("ratios").at("p_small").get<double>();
    cfg.transforms = ranges_from_json(j.at("transforms"));
    return cfg;
}

} // namespace

void save_artifact(const PatchArtifact& artifact, const std::string& dir) {
    fs::create_directories(dir);
    imaging::write_png((fs::path(dir) / "patch.png").string(), artifact.patched);
    imaging::write_png((fs::path(dir) / "base.png").string(), artifact.base);
    imaging::write_mask_png((fs::path(dir) / "mask.png").string(), artifact.mask);
    json meta = {{"schema", 1},
                 {"kind", "patch"},
                 {"attack", config_to_json(artifact.config)},
                 {"detector_hash", artifact.detector_hash},
                 {"loss_trace", artifact.loss_trace}};
    std::ofstream f(fs::path(dir) / "metadata.json");
    if (!f) throw InvalidInput("cannot write artifact metadata in " + dir);
    f << meta.dump(2) << "\n";
}

PatchArtifact load_artifact(const std::string& dir) {
    std::ifstream f(fs::path(dir) / "metadata.json");
    if (!f) throw InvalidInput("cannot open artifact metadata in " + dir);
    json meta;
    f >> meta;
    if (meta.value("kind", "") != "patch")
        throw InvalidInput("metadata in " + dir + " is not a patch artifact");
    PatchArtifact art;
    art.config = config_from_json(meta.at("attack"));
    art.detector_hash = meta.at("detector_hash").get<std::string>();
    art.loss_trace = meta.at("loss_trace").get<std::vector<double>>();
    art.patched = imaging::read_png((fs::path(dir) / "patch.png").string());
    art.base = imaging::read_png((fs::path(dir) / "base.png").string());
    art.mask = imaging::read_mask_png((fs::path(dir) / "mask.png").string());
    art.config.mask = art.mask;
    return art;
}

} // namespace advforge::attack
