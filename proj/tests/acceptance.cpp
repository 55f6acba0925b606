// Acceptance suite: nine functional targets, one PASS/FAIL line each.
//
//   acceptance --cli <path-to-advforge-binary> --work <scratch-dir> [--only N]
//
// Criteria 6-9 share a trained toy checkpoint kept under the work directory;
// criterion 9 shells out to the real CLI and byte-compares repeated runs.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "advforge/attack.hpp"
#include "advforge/config.hpp"
#include "advforge/dataset.hpp"
#include "advforge/detector.hpp"
#include "advforge/embedding.hpp"
#include "advforge/evaluation.hpp"
#include "advforge/filters.hpp"
#include "advforge/geometry.hpp"
#include "advforge/losses.hpp"
#include "advforge/transform.hpp"
#include "reference.hpp"

using namespace advforge;
using geometry::BBox;
using geometry::ScoredBox;
using imaging::Image;
using imaging::Mask;
using losses::Vector;

namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

namespace {

template <typename... A>
std::string fmt(const char* f, A... a) {
    char buf[768];
    std::snprintf(buf, sizeof buf, f, a...);
    return buf;
}

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

struct Ctx {
    std::string cli;
    std::string work;
    std::unique_ptr<detect::Detector> model; // trained toy detector (criterion 6)
};

std::string checkpoint_path(const Ctx& ctx) { return ctx.work + "/checkpoint.bin"; }

// Trains the toy detector on the synthetic corpus, saves the checkpoint into
// the work directory, and returns the validation mAP@0.5.
double train_toy_model(Ctx& ctx, bool verbose) {
    data::DatasetConfig dcfg;
    dcfg.count = 500;
    dcfg.seed = 11;
    const std::vector<detect::LabeledFrame> train = data::synthesize_dataset(dcfg);
    dcfg.count = 100;
    dcfg.seed = 12;
    const std::vector<detect::LabeledFrame> val = data::synthesize_dataset(dcfg);

    detect::Detector det = detect::Detector::random_init(detect::DetectorConfig::toy(), 7);
    detect::TrainingConfig tcfg;
    tcfg.epochs = 30;
    tcfg.verbose = verbose;
    detect::train_detector(det, train, tcfg);
    const double map50 = detect::evaluate_map50(det, val);
    det.save(checkpoint_path(ctx));
    ctx.model = std::make_unique<detect::Detector>(std::move(det));
    return map50;
}

const detect::Detector& ensure_model(Ctx& ctx) {
    if (!ctx.model) {
        if (fs::exists(checkpoint_path(ctx))) {
            try {
                ctx.model = std::make_unique<detect::Detector>(
                    detect::Detector::load(checkpoint_path(ctx)));
            } catch (const std::exception&) {
                // stale checkpoint from an older layout; retrain
                train_toy_model(ctx, false);
            }
        } else {
            train_toy_model(ctx, false);
        }
    }
    return *ctx.model;
}

// ---------------------------------------------------------------- criterion 1

bool c1_geometry(Ctx&, std::string& detail) {
    const auto t0 = clock_type::now();
    Rng rng(101);
    auto rand_box = [&rng]() {
        BBox b;
        b.w = 0.05 + 0.45 * rng.unit();
        b.h = 0.05 + 0.45 * rng.unit();
        b.cx = 0.5 * b.w + (1.0 - b.w) * rng.unit();
        b.cy = 0.5 * b.h + (1.0 - b.h) * rng.unit();
        return b;
    };
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const BBox a = rand_box();
        BBox b = rand_box();
        if (i % 4 == 0) {
            // Force heavy overlap so both branches of the formula get exercised.
            b = a;
            b.cx = std::min(1.0 - 0.5 * b.w, a.cx + 0.05 * rng.unit());
            b.cy = std::max(0.5 * b.h, a.cy - 0.05 * rng.unit());
        }
        worst = std::max(worst, std::abs(geometry::iou(a, b) - testref::iou_raster(a, b, 1000)));
    }
    if (worst > 2e-2) {
        detail = fmt("iou deviates from the rasterized oracle by %.4g (limit 2e-2)", worst);
        return false;
    }
    for (int set = 0; set < 200; ++set) {
        std::vector<ScoredBox> boxes(50);
        for (size_t j = 0; j < boxes.size(); ++j) {
            boxes[j].box = rand_box();
            boxes[j].score = rng.unit();
            if (j % 6 == 0) boxes[j].score = 0.5; // score ties
            if (j % 9 == 0 && j > 0) boxes[j].box = boxes[j - 1].box; // identical boxes
        }
        if (geometry::nms_indices(boxes, 0.45) != testref::nms_greedy(boxes, 0.45)) {
            detail = fmt("nms disagrees with the brute-force reference on set %d", set);
            return false;
        }
    }
    const double secs = seconds_since(t0);
    detail = fmt("worst iou deviation %.4g, 200 nms sets exact, %.1fs", worst, secs);
    return secs < 60.0;
}

// ---------------------------------------------------------------- criterion 2

bool c2_placement(Ctx&, std::string& detail) {
    const imaging::EmbeddingRatios ratios{0.01, 0.1, 0.5, 0.2};
    Rng rng(202);
    const double margin = 3.0 / 640.0 - 1e-9;
    int violations = 0;
    long small = 0;
    const int samples = 100000;
    for (int i = 0; i < samples; ++i) {
        const BBox b = imaging::place_foreground(rng, 640, ratios);
        if (!b.inside_frame(margin)) ++violations;
        if (b.w < ratios.r2) ++small;
    }
    const double freq = double(small) / samples;
    const BBox t = imaging::place_from_draws(0.9, 0.5, 0.0, 0.0, 640, ratios);
    const bool trace_ok = std::abs(t.w - 0.055) <= 1e-15 && std::abs(t.h - 0.055) <= 1e-15;
    detail = fmt("margin violations %d, small-band frequency %.4f, traced side %.17g", violations,
                 freq, t.w);
    return violations == 0 && std::abs(freq - 0.20) <= 0.02 && trace_ok;
}

// ---------------------------------------------------------------- criterion 3

bool c3_detector_shape(Ctx&, std::string& detail) {
    const detect::DetectorConfig full = detect::DetectorConfig::full();
    const detect::DetectorConfig toy = detect::DetectorConfig::toy();
    if (full.rows() != 25200 || full.cols() != 55 || toy.rows() != 1575 || toy.cols() != 13) {
        detail = fmt("matrix shape full %dx%d toy %dx%d", full.rows(), full.cols(), toy.rows(),
                     toy.cols());
        return false;
    }
    Rng rng(303);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        BBox anchor;
        anchor.w = 0.05 + 0.8 * rng.unit();
        anchor.h = 0.05 + 0.8 * rng.unit();
        anchor.cx = 0.1 + 0.8 * rng.unit();
        anchor.cy = 0.1 + 0.8 * rng.unit();
        BBox box;
        box.w = 0.02 + 0.9 * rng.unit();
        box.h = 0.02 + 0.9 * rng.unit();
        box.cx = 0.05 + 0.9 * rng.unit();
        box.cy = 0.05 + 0.9 * rng.unit();
        const BBox back = geometry::plus(anchor, detect::encode_offset(box, anchor));
        worst = std::max({worst, std::abs(back.cx - box.cx), std::abs(back.cy - box.cy),
                          std::abs(back.h - box.h), std::abs(back.w - box.w)});
    }
    detail = fmt("full 25200x55, toy 1575x13, round-trip error %.3g", worst);
    return worst <= 1e-6;
}

// ---------------------------------------------------------------- criterion 4

filters::FilterOutput random_rows(Rng& rng, int k, int classes) {
    filters::FilterOutput f;
    f.P.resize(size_t(k));
    f.V.assign(size_t(k), std::vector<double>(size_t(classes)));
    f.indices.resize(size_t(k));
    for (int j = 0; j < k; ++j) {
        f.P[size_t(j)] = 0.05 + 0.9 * rng.unit();
        f.indices[size_t(j)] = j;
        for (int z = 0; z < classes; ++z) f.V[size_t(j)][size_t(z)] = 0.05 + 0.9 * rng.unit();
    }
    return f;
}

losses::LossResult eval_loss(Vector vec, const filters::FilterOutput& f, double c, int source,
                             int target, double l2) {
    switch (vec) {
        case Vector::HA: return losses::loss_hiding(f, c, l2);
        case Vector::AA: return losses::loss_appearance(f, c, target);
        case Vector::NTA: return losses::loss_nontarget(f, c, source, l2);
        case Vector::TA: return losses::loss_target(f, c, source, target, l2);
    }
    throw InvalidInput("unknown vector");
}

// Finite-difference check of a loss in isolation, over `coords` randomly
// sampled (P, V) coordinates. Returns the number of agreeing coordinates.
int fd_loss(Vector vec, Rng& rng, int coords, double tol) {
    const int k = 4, classes = 6, source = 1, target = 3;
    const double c = 10.0, l2 = 0.37, h = 1e-7;
    filters::FilterOutput f = random_rows(rng, k, classes);
    const losses::LossResult res = eval_loss(vec, f, c, source, target, l2);
    int good = 0;
    for (int t = 0; t < coords; ++t) {
        const int idx = int(rng.index(uint64_t(k + k * classes)));
        double* slot = nullptr;
        double ana = 0.0;
        if (idx < k) {
            slot = &f.P[size_t(idx)];
            ana = res.d_p[size_t(idx)];
        } else {
            const int j = (idx - k) / classes, z = (idx - k) % classes;
            slot = &f.V[size_t(j)][size_t(z)];
            ana = res.d_v[size_t(j)][size_t(z)];
        }
        const double saved = *slot;
        *slot = saved + h;
        const double up = eval_loss(vec, f, c, source, target, l2).value;
        *slot = saved - h;
        const double dn = eval_loss(vec, f, c, source, target, l2).value;
        *slot = saved;
        const double fd = (up - dn) / (2.0 * h);
        const double den = std::max({std::abs(ana), std::abs(fd), 1e-9});
        if (std::abs(ana - fd) <= tol * den) ++good;
    }
    return good;
}

// Finite-difference check of the full render chain: patch -> mask -> transform
// -> embed -> detector -> filtered rows -> loss. The candidate rows are frozen
// from the unperturbed forward pass so the scalar stays smooth.
int fd_chain(const detect::Detector& model, Vector vec, int coords, double tol) {
    const detect::DetectorConfig& dcfg = model.config();
    const int ps = 32, source = 2, target = 5;
    const double c = 10.0, h = 1e-5;
    const bool has_l2 = vec != Vector::AA;

    Image x = vec == Vector::AA ? Image(ps, ps, 0.5) : data::sign_template(source, dcfg.num_classes, ps);
    for (double& v : x.v) v = 0.5 + 0.75 * (v - 0.5); // keep the clamp inactive
    const Mask mask = vec == Vector::AA ? Mask(ps, ps, 1) : data::disc_mask(ps);

    Rng rng(515 + int(vec));
    Image p0 = x;
    for (size_t i = 0; i < p0.v.size(); ++i)
        p0.v[i] = std::min(0.9, std::max(0.1, p0.v[i] + 0.2 * (rng.unit() - 0.5)));

    Rng bg_rng(77);
    const Image bg = data::random_background(bg_rng, dcfg.input_size);
    const BBox bbox{0.5, 0.5, 0.3, 0.3};
    imaging::TransformSpec spec;
    spec.rotation_deg = 8.0;
    spec.perspective = {0.02, -0.01, -0.015, 0.02, 0.01, -0.02, -0.01, 0.015};
    spec.brightness = 0.03;
    spec.contrast = 0.95;
    spec.saturation = 0.9;
    spec.hue = 0.02;
    spec.noise_sigma = 0.01;
    spec.blur_kernel = 3;
    spec.resolution_scale = 0.7;
    spec.noise_seed = 99;

    const Image patched0 = imaging::apply_mask(x, p0, mask);
    const Image xt0 = imaging::apply_transform(patched0, spec);
    const Image frame0 = imaging::embed(bg, xt0, bbox);
    detect::ForwardCache cache;
    const detect::DetectionMatrix m0 = model.forward_cached(frame0, cache);
    // Freeze the candidate rows from the unperturbed pass by overlap rank so
    // the scalar under test stays smooth; the selection rules themselves are
    // covered by the filter-oracle criterion.
    const int k = vec == Vector::HA ? 10 : vec == Vector::NTA ? 3 : 1;
    const std::vector<int> rows =
        filters::m_bbox(m0, model.anchors(), bbox, filters::MBoxMode::NonHiding, k).indices;

    auto scalar = [&](const Image& p) {
        const Image patched = imaging::apply_mask(x, p, mask);
        const Image frame = imaging::embed(bg, imaging::apply_transform(patched, spec), bbox);
        const filters::FilterOutput f = filters::split(model.forward(frame), rows);
        const double l2 = has_l2 ? losses::l2_distance(x, patched, mask) : 0.0;
        return eval_loss(vec, f, c, source, target, l2).value;
    };

    // Analytic gradient mirroring the optimizer's chain.
    const filters::FilterOutput f0 = filters::split(m0, rows);
    const double l2_0 = has_l2 ? losses::l2_distance(x, patched0, mask) : 0.0;
    const losses::LossResult res = eval_loss(vec, f0, c, source, target, l2_0);
    detect::DetectionMatrix dm(m0.rows, m0.cols);
    for (int j = 0; j < f0.k(); ++j) {
        const int q = f0.indices[size_t(j)];
        dm.at(q, 0) = res.d_p[size_t(j)];
        for (int z = 0; z < dcfg.num_classes; ++z) dm.at(q, 5 + z) = res.d_v[size_t(j)][size_t(z)];
    }
    const Image g_frame = model.input_gradient(cache, m0, dm);
    const Image g_xt = imaging::embed_sign_grad(g_frame, xt0, bbox);
    Image g_patched = imaging::transform_input_grad(g_xt, xt0, spec);
    if (has_l2) {
        const Image g_l2 = losses::l2_distance_grad(x, patched0, mask);
        for (size_t i = 0; i < g_patched.v.size(); ++i) g_patched.v[i] += g_l2.v[i];
    }
    const Image g_p = imaging::apply_mask_patch_grad(g_patched, x, patched0, mask);

    std::vector<size_t> live;
    for (int ch = 0; ch < 3; ++ch)
        for (int y = 0; y < ps; ++y)
            for (int xx = 0; xx < ps; ++xx)
                if (mask.at(y, xx)) live.push_back((size_t(ch) * ps + size_t(y)) * ps + size_t(xx));
    double maxg = 0.0;
    for (double g : g_p.v) maxg = std::max(maxg, std::abs(g));

    int good = 0;
    Image probe = p0;
    for (int t = 0; t < coords; ++t) {
        const size_t i = live[size_t(rng.index(live.size()))];
        probe.v[i] = p0.v[i] + h;
        const double up = scalar(probe);
        probe.v[i] = p0.v[i] - h;
        const double dn = scalar(probe);
        probe.v[i] = p0.v[i];
        const double fd = (up - dn) / (2.0 * h);
        const double ana = g_p.v[i];
        const double den = std::max({std::abs(ana), std::abs(fd), 1e-6 * maxg + 1e-9});
        if (std::abs(ana - fd) <= tol * den) ++good;
    }
    return good;
}

bool c4_gradients(Ctx&, std::string& detail) {
    const auto t0 = clock_type::now();
    const detect::Detector frozen =
        detect::Detector::random_init(detect::DetectorConfig::toy(), 515);
    const Vector vecs[] = {Vector::HA, Vector::AA, Vector::NTA, Vector::TA};
    bool ok = true;
    Rng rng(404);
    detail = "good/100:";
    for (Vector v : vecs) {
        const int direct = fd_loss(v, rng, 100, 1e-3);
        const int chain = fd_chain(frozen, v, 100, 1e-3);
        detail += fmt(" %s loss %d chain %d", losses::vector_name(v).c_str(), direct, chain);
        ok = ok && direct >= 99 && chain >= 99;
    }
    const double secs = seconds_since(t0);
    detail += fmt(", %.0fs", secs);
    return ok && secs < 600.0;
}

// ---------------------------------------------------------------- criterion 5

bool c5_filters(Ctx&, std::string& detail) {
    Rng rng(505);
    for (int iter = 0; iter < 1000; ++iter) {
        const int rows = 5 + int(rng.index(60));
        const int classes = 2 + int(rng.index(5));
        BBox real;
        real.w = 0.1 + 0.2 * rng.unit();
        real.h = real.w;
        real.cx = 0.3 + 0.4 * rng.unit();
        real.cy = 0.3 + 0.4 * rng.unit();
        detect::DetectionMatrix m(rows, 5 + classes);
        std::vector<BBox> anchors(static_cast<size_t>(rows));
        for (int q = 0; q < rows; ++q) {
            BBox& a = anchors[size_t(q)];
            if (rng.index(2) == 0) {
                a.cx = real.cx + 0.2 * (rng.unit() - 0.5);
                a.cy = real.cy + 0.2 * (rng.unit() - 0.5);
                a.w = real.w * (0.5 + rng.unit());
            } else {
                a.cx = 0.1 + 0.8 * rng.unit();
                a.cy = 0.1 + 0.8 * rng.unit();
                a.w = 0.08 + 0.4 * rng.unit();
            }
            a.h = a.w;
            if (q > 0 && rng.index(5) == 0) a = anchors[size_t(q) - 1]; // overlap ties
            double obj = 0.05 + 0.9 * rng.unit();
            if (rng.index(4) == 0) obj = std::round(obj * 10.0) / 10.0; // objectness ties
            m.at(q, 0) = obj;
            for (int s = 1; s < 5; ++s) {
                m.at(q, s) = 0.1 * (rng.unit() - 0.5);
                if (q > 0 && anchors[size_t(q)].cx == anchors[size_t(q) - 1].cx)
                    m.at(q, s) = m.at(q - 1, s);
            }
            for (int z = 0; z < classes; ++z) m.at(q, 5 + z) = rng.unit();
        }
        const double conf = 0.05 + 0.9 * rng.unit();
        const int k = 1 + int(rng.index(8));

        auto run = [&](auto&& fn) -> std::vector<int> {
            try {
                return fn().indices;
            } catch (const EmptyCandidate&) {
                return {};
            }
        };
        const std::vector<int> s_got =
            run([&] { return filters::s_bbox(m, anchors, real, conf); });
        if (s_got != testref::s_bbox_ref(m, anchors, real, conf)) {
            detail = fmt("s_bbox disagrees on instance %d", iter);
            return false;
        }
        const std::vector<int> h_got = run(
            [&] { return filters::m_bbox(m, anchors, real, filters::MBoxMode::Hiding, k); });
        if (h_got != testref::m_bbox_ref(m, anchors, real, true, k)) {
            detail = fmt("hiding m_bbox disagrees on instance %d", iter);
            return false;
        }
        const std::vector<int> n_got = run(
            [&] { return filters::m_bbox(m, anchors, real, filters::MBoxMode::NonHiding, k); });
        if (n_got != testref::m_bbox_ref(m, anchors, real, false, k)) {
            detail = fmt("non-hiding m_bbox disagrees on instance %d", iter);
            return false;
        }
    }

    // Hand trace: three concentric anchors at known overlaps and objectness.
    const BBox real{0.5, 0.5, 0.2, 0.2};
    const double ious[3] = {0.9, 0.6, 0.4};
    const double objs[3] = {0.2, 0.8, 0.99};
    detect::DetectionMatrix m(3, 5 + 3);
    std::vector<BBox> anchors(3);
    for (int q = 0; q < 3; ++q) {
        const double side = 0.2 * std::sqrt(ious[q]);
        anchors[size_t(q)] = BBox{0.5, 0.5, side, side};
        m.at(q, 0) = objs[q];
        for (int z = 0; z < 3; ++z) m.at(q, 5 + z) = 0.5;
    }
    const std::vector<int> hide =
        filters::m_bbox(m, anchors, real, filters::MBoxMode::Hiding, 2).indices;
    const std::vector<int> keep =
        filters::m_bbox(m, anchors, real, filters::MBoxMode::NonHiding, 2).indices;
    const std::vector<int> single = filters::s_bbox(m, anchors, real, 0.45).indices;
    if (hide != std::vector<int>{1, 0} || keep != std::vector<int>{0, 1} ||
        single != std::vector<int>{1}) {
        detail = "hand-traced selection order is wrong";
        return false;
    }
    detail = "1000 random instances exact, hand trace reproduced";
    return true;
}

// ---------------------------------------------------------------- criterion 6

bool c6_train(Ctx& ctx, std::string& detail) {
    const auto t0 = clock_type::now();
    const double map50 = train_toy_model(ctx, false);
    const double secs = seconds_since(t0);
    detail = fmt("mAP@0.5 = %.4f (target 0.85), 30 epochs, %.0fs", map50, secs);
    return map50 >= 0.85 && secs < 1800.0;
}

// ---------------------------------------------------------------- criterion 7

bool c7_attacks(Ctx& ctx, std::string& detail) {
    const detect::Detector& model = ensure_model(ctx);
    const std::vector<Image> bgs = toolkit::load_backgrounds("procedural:64", 160, 33);
    struct Job {
        Vector vec;
        int source, target;
        double floor;
        uint64_t holdout_seed;
    };
    const Job jobs[] = {
        {Vector::HA, 2, -1, 0.70, 901},
        {Vector::NTA, 2, -1, 0.60, 902},
        {Vector::TA, 2, 5, 0.40, 903},
        {Vector::AA, 0, 5, 0.40, 904},
    };
    bool ok = true;
    for (const Job& job : jobs) {
        attack::AttackConfig cfg = attack::AttackConfig::defaults_for(job.vec);
        cfg.source_label = job.source;
        cfg.target_label = job.target;
        cfg.seed = 7;
        const attack::PatchArtifact art = attack::train_patch(cfg, model, bgs);
        attack::save_artifact(art, ctx.work + "/attack_" + losses::vector_name(job.vec));
        const evaluation::PairStats st =
            evaluation::success_rate_over_pairs(art, model, 500, job.holdout_seed, 0.25);
        detail += fmt("%s %.1f%% (floor %.0f%%, %d/%d) ", losses::vector_name(job.vec).c_str(),
                      100.0 * st.r_s(), 100.0 * job.floor, st.n_s, st.n_a);
        ok = ok && st.r_s() >= job.floor;
    }
    return ok;
}

// ---------------------------------------------------------------- criterion 8

bool c8_weight_sweep(Ctx& ctx, std::string& detail) {
    const detect::Detector& model = ensure_model(ctx);
    const std::vector<Image> bgs = toolkit::load_backgrounds("procedural:32", 160, 44);
    std::vector<double> norms;
    for (double c : {1e1, 1e2, 1e3}) {
        attack::AttackConfig cfg = attack::AttackConfig::defaults_for(Vector::HA);
        cfg.c = c;
        cfg.steps = 400;
        cfg.source_label = 2;
        cfg.seed = 7;
        norms.push_back(attack::train_patch(cfg, model, bgs).masked_l2());
    }
    detail = fmt("masked L2 %.5f -> %.5f -> %.5f for c 1e1/1e2/1e3", norms[0], norms[1], norms[2]);
    return norms[0] < norms[1] && norms[1] < norms[2];
}

// ---------------------------------------------------------------- criterion 9

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) return "<missing " + path + ">";
    return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

bool same_bytes(const std::string& a, const std::string& b, std::string& detail) {
    if (read_file(a) == read_file(b)) return true;
    detail = "files differ: " + a + " vs " + b;
    return false;
}

bool run_cli(const Ctx& ctx, const std::string& args, const std::string& log,
             std::string& detail) {
    const std::string cmd = "\"" + ctx.cli + "\" " + args + " > \"" + log + "\" 2>&1";
    if (std::system(cmd.c_str()) == 0) return true;
    detail = "command failed: " + cmd;
    return false;
}

bool c9_reproducibility(Ctx& ctx, std::string& detail) {
    if (ctx.cli.empty()) {
        detail = "pass --cli to enable this criterion";
        return false;
    }
    ensure_model(ctx);
    const std::string ck = checkpoint_path(ctx);
    const std::string cfg = ctx.work + "/repro.ini";
    {
        std::ofstream f(cfg);
        f << "[run]\nprofile = toy\nseed = 11\nbackgrounds = procedural:8\n"
          << "[attack]\nvector = nta\nsteps = 30\nn = 4\nsource_label = 2\n"
          << "[grid]\nframes_per_cell = 4\ndistances = 5, 15, 25\nangles = -30, 0, 30\n"
          << "illuminations = sunny\nholdout_pairs = 20\n";
    }
    const std::string g1 = ctx.work + "/gen1", g2 = ctx.work + "/gen2";
    const std::string e1 = ctx.work + "/eval1", e2 = ctx.work + "/eval2";
    for (const std::string& d : {g1, g2, e1, e2}) fs::remove_all(d);
    for (const std::string& d : {g1, g2})
        if (!run_cli(ctx,
                     "gen-ae --attack nta --config \"" + cfg + "\" --checkpoint \"" + ck +
                         "\" --out \"" + d + "\"",
                     d + ".log", detail))
            return false;
    for (const char* name : {"patch.png", "base.png", "mask.png", "metadata.json", "run.lock"})
        if (!same_bytes(g1 + "/" + name, g2 + "/" + name, detail)) return false;
    for (const std::string& d : {e1, e2})
        if (!run_cli(ctx,
                     "evaluate --config \"" + cfg + "\" --artifact \"" + g1 +
                         "\" --checkpoint \"" + ck + "\" --out \"" + d + "\"",
                     d + ".log", detail))
            return false;
    for (const char* name : {"grid.csv", "verdicts.jsonl", "summary.json", "run.lock"})
        if (!same_bytes(e1 + "/" + name, e2 + "/" + name, detail)) return false;
    detail = "repeated gen-ae and evaluate runs are byte-identical";
    return true;
}

} // namespace

int main(int argc, char** argv) {
    Ctx ctx;
    ctx.work = "acceptance_work";
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--cli" && i + 1 < argc) ctx.cli = argv[++i];
        else if (arg == "--work" && i + 1 < argc) ctx.work = argv[++i];
        else if (arg == "--only" && i + 1 < argc) only = std::atoi(argv[++i]);
        else {
            std::fprintf(stderr, "usage: acceptance --cli <binary> --work <dir> [--only N]\n");
            return 2;
        }
    }
    fs::create_directories(ctx.work);

    struct Criterion {
        int id;
        const char* what;
        bool (*run)(Ctx&, std::string&);
    };
    const Criterion table[] = {
        {1, "box overlap and suppression match rasterized oracles", c1_geometry},
        {2, "placement margins, band frequency, and hand trace", c2_placement},
        {3, "prediction matrix shape and offset round-trip", c3_detector_shape},
        {4, "loss and render-chain gradients match finite differences", c4_gradients},
        {5, "candidate filters match brute-force references", c5_filters},
        {6, "toy detector reaches the mAP@0.5 target", c6_train},
        {7, "digital attack success rates over held-out pairs", c7_attacks},
        {8, "perturbation size grows with the loss weight", c8_weight_sweep},
        {9, "seeded runs reproduce byte-identical outputs", c9_reproducibility},
    };
    int failures = 0;
    for (const Criterion& cr : table) {
        if (only != 0 && cr.id != only) continue;
        const auto t0 = clock_type::now();
        bool ok = false;
        std::string detail;
        try {
            ok = cr.run(ctx, detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        std::printf("criterion %d: %s — %s [%s] (%.1fs)\n", cr.id, ok ? "PASS" : "FAIL", cr.what,
                    detail.c_str(), seconds_since(t0));
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    if (failures > 0) std::printf("acceptance: %d criterion(s) failed\n", failures);
    else std::printf("acceptance: all criteria passed\n");
    return failures == 0 ? 0 : 1;
}
