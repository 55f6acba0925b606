#include "advforge/detector.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>

#include "advforge/common.hpp"
#include "advforge/transform.hpp"

namespace advforge::detect {

namespace {

constexpr char kMagic[4] = {'A', 'F', 'C', 'K'};
constexpr uint32_t kVersion = 1;
// Trunk widths and strides. Stride-2 layers halve the resolution; the two
// stride-1 layers refine the grids the detection heads read, doubling the
// receptive field at those scales.
constexpr int kTrunkChannels[8] = {3, 8, 16, 32, 32, 48, 48, 64};
constexpr int kTrunkStride[7] = {2, 2, 2, 1, 2, 1, 2};
// Trunk activation index each detection scale reads.
constexpr int kHeadTap[3] = {3, 5, 6};

double bce(double p, double target) {
    const double q = std::clamp(p, 1e-12, 1.0 - 1e-12);
    return target > 0.5 ? -std::log(q) : -std::log(1.0 - q);
}

template <typename T>
void put(std::vector<char>& buf, const T& v) {
    const char* p = reinterpret_cast<const char*>(&v);
    buf.insert(buf.end(), p, p + sizeof(T));
}

template <typename T>
T take(const std::vector<char>& buf, size_t& pos) {
    if (pos + sizeof(T) > buf.size()) throw InvalidInput("checkpoint truncated");
    T v;
    std::memcpy(&v, buf.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
}

} // namespace

DetectorConfig DetectorConfig::toy() { return DetectorConfig{}; }

DetectorConfig DetectorConfig::full() {
    DetectorConfig c;
    c.input_size = 640;
    c.num_classes = 50;
    c.anchor_sizes = {{
        {0.02, 0.05, 0.08},
        {0.12, 0.20, 0.30},
        {0.40, 0.55, 0.70},
    }};
    return c;
}

void DetectorConfig::validate() const {
    if (input_size < 32 || input_size % 32 != 0)
        throw InvalidInput("input_size must be a positive multiple of 32");
    if (num_classes < 1) throw InvalidInput("num_classes must be at least 1");
    if (strides != std::array<int, 3>{8, 16, 32})
        throw InvalidInput("strides must be {8, 16, 32}");
    for (const auto& scale : anchor_sizes)
        for (double a : scale)
            if (!(a > 0.0 && a <= 1.0))
                throw InvalidInput("anchor sides must lie in (0, 1]");
}

std::array<int, 3> DetectorConfig::grid_sizes() const {
    return {input_size / strides[0], input_size / strides[1], input_size / strides[2]};
}

int DetectorConfig::rows() const {
    const auto g = grid_sizes();
    return 3 * (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
}

int DetectorConfig::cols() const { return 1 + 4 + num_classes; }

Detector::Detector(const DetectorConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    for (int i = 0; i < 7; ++i)
        layers_.emplace_back(kTrunkChannels[i], kTrunkChannels[i + 1], 3, kTrunkStride[i], 1);
    const int head_out = 3 * cfg_.cols();
    for (int s = 0; s < 3; ++s)
        layers_.emplace_back(kTrunkChannels[kHeadTap[s] + 1], head_out, 1, 1, 0);
    rebuild_anchors();
}

Detector Detector::random_init(const DetectorConfig& cfg, uint64_t seed) {
    Detector det(cfg);
    Rng rng(seed);
    for (auto& layer : det.layers_) layer.init(rng);
    // Heads start near zero so decoded boxes sit on their anchors at first and
    // the box regression cannot swamp early training; near-zero initial
    // objectness and low class logits keep the BCE terms stable too.
    for (int h = 7; h < 10; ++h)
        for (double& w : det.layers_[size_t(h)].weight) w *= 0.01;
    const int s_cols = det.cfg_.cols();
    for (int h = 7; h < 10; ++h)
        for (int a = 0; a < 3; ++a) {
            det.layers_[h].bias[size_t(a) * s_cols] = -4.6;
            for (int j = 0; j < det.cfg_.num_classes; ++j)
                det.layers_[h].bias[size_t(a) * s_cols + 5 + j] = -2.0;
        }
    return det;
}

void Detector::rebuild_anchors() {
    anchors_.clear();
    anchors_.reserve(cfg_.rows());
    const auto grids = cfg_.grid_sizes();
    for (int s = 0; s < 3; ++s) {
        const int g = grids[s];
        for (int a = 0; a < 3; ++a)
            for (int y = 0; y < g; ++y)
                for (int x = 0; x < g; ++x) {
                    BBox b;
                    b.cx = (x + 0.5) / g;
                    b.cy = (y + 0.5) / g;
                    b.h = cfg_.anchor_sizes[s][a];
                    b.w = cfg_.anchor_sizes[s][a];
                    anchors_.push_back(b);
                }
    }
}

DetectionMatrix Detector::forward(const Image& frame) const {
    ForwardCache cache;
    return forward_cached(frame, cache);
}

DetectionMatrix Detector::forward_cached(const Image& frame, ForwardCache& cache) const {
    if (frame.h != cfg_.input_size || frame.w != cfg_.input_size)
        throw InvalidInput("detector frame size mismatch");
    cache.input = nn::tensor_from_image(frame);
    const nn::Tensor* cur = &cache.input;
    for (int i = 0; i < 7; ++i) {
        cache.pre[i] = layers_[i].forward(*cur);
        cache.act[i] = nn::leaky_relu(cache.pre[i]);
        cur = &cache.act[i];
    }
    DetectionMatrix m(cfg_.rows(), cfg_.cols());
    const auto grids = cfg_.grid_sizes();
    const int s_cols = cfg_.cols();
    int base = 0;
    for (int s = 0; s < 3; ++s) {
        const nn::Tensor head = layers_[7 + s].forward(cache.act[kHeadTap[s]]);
        const int g = grids[s];
        for (int a = 0; a < 3; ++a)
            for (int y = 0; y < g; ++y)
                for (int x = 0; x < g; ++x) {
                    const int q = base + (a * g + y) * g + x;
                    m.at(q, 0) = nn::sigmoid(head.at(a * s_cols, y, x));
                    for (int j = 1; j < 5; ++j) m.at(q, j) = head.at(a * s_cols + j, y, x);
                    for (int j = 5; j < s_cols; ++j)
                        m.at(q, j) = nn::sigmoid(head.at(a * s_cols + j, y, x));
                }
        base += 3 * g * g;
    }
    return m;
}

Image Detector::input_gradient(const ForwardCache& cache, const DetectionMatrix& matrix,
                               const DetectionMatrix& matrix_grad) const {
    if (matrix.rows != cfg_.rows() || matrix_grad.rows != matrix.rows ||
        matrix_grad.cols != matrix.cols)
        throw InvalidInput("matrix gradient shape mismatch");
    const auto grids = cfg_.grid_sizes();
    const int s_cols = cfg_.cols();
    // Head logit gradients: sigmoid columns get p*(1-p), offsets pass through.
    std::array<nn::Tensor, 3> head_grads;
    int base = 0;
    for (int s = 0; s < 3; ++s) {
        const int g = grids[s];
        head_grads[s] = nn::Tensor(3 * s_cols, g, g);
        for (int a = 0; a < 3; ++a)
            for (int y = 0; y < g; ++y)
                for (int x = 0; x < g; ++x) {
                    const int q = base + (a * g + y) * g + x;
                    for (int j = 0; j < s_cols; ++j) {
                        double gv = matrix_grad.at(q, j);
                        if (j == 0 || j >= 5) {
                            const double p = matrix.at(q, j);
                            gv *= p * (1.0 - p);
                        }
                        head_grads[s].at(a * s_cols + j, y, x) = gv;
                    }
                }
        base += 3 * g * g;
    }
    // Trunk gradient, deepest scale first; each detection scale taps the trunk
    // at act[kHeadTap[s]].
    std::array<nn::Tensor, 7> g_act;
    for (int s = 0; s < 3; ++s)
        g_act[kHeadTap[s]] = layers_[7 + s].backward_input(
            head_grads[s], cache.act[kHeadTap[s]].h, cache.act[kHeadTap[s]].w);
    for (int i = 6; i >= 1; --i) {
        const nn::Tensor g_pre = nn::leaky_relu_grad(g_act[i], cache.pre[i]);
        nn::Tensor down = layers_[i].backward_input(g_pre, cache.act[i - 1].h, cache.act[i - 1].w);
        if (g_act[i - 1].size() == 0)
            g_act[i - 1] = std::move(down);
        else
            for (size_t j = 0; j < down.size(); ++j) g_act[i - 1].v[j] += down.v[j];
    }
    const nn::Tensor g_pre0 = nn::leaky_relu_grad(g_act[0], cache.pre[0]);
    return nn::image_from_tensor(
        layers_[0].backward_input(g_pre0, cache.input.h, cache.input.w));
}

std::vector<Detection> Detector::predict(const Image& frame, double conf_threshold,
                                         double nms_iou) const {
    const DetectionMatrix m = forward(frame);
    std::vector<Detection> cands;
    std::vector<geometry::ScoredBox> boxes;
    for (int q = 0; q < m.rows; ++q) {
        const double p = m.objectness(q);
        if (p < conf_threshold) continue;
        Detection d;
        d.box = geometry::plus(anchors_[q], m.offset(q));
        d.objectness = p;
        d.probs.resize(cfg_.num_classes);
        for (int j = 0; j < cfg_.num_classes; ++j) d.probs[j] = m.cls(q, j);
        d.label = int(std::max_element(d.probs.begin(), d.probs.end()) - d.probs.begin());
        d.score = p * d.probs[d.label];
        boxes.push_back({d.box, d.score});
        cands.push_back(std::move(d));
    }
    std::vector<Detection> out;
    for (size_t idx : geometry::nms_indices(boxes, nms_iou)) out.push_back(cands[idx]);
    return out;
}

namespace {

std::vector<char> serialize_detector(const DetectorConfig& cfg,
                                     const std::vector<nn::Conv>& layers) {
    std::vector<char> buf;
    put(buf, kVersion);
    put(buf, int32_t(cfg.input_size));
    put(buf, int32_t(cfg.num_classes));
    for (int s : cfg.strides) put(buf, int32_t(s));
    for (const auto& scale : cfg.anchor_sizes)
        for (double a : scale) put(buf, a);
    put(buf, uint32_t(layers.size()));
    for (const auto& l : layers) {
        put(buf, int32_t(l.in_c));
        put(buf, int32_t(l.out_c));
        put(buf, int32_t(l.k));
        put(buf, int32_t(l.stride));
        put(buf, int32_t(l.pad));
        for (double w : l.weight) put(buf, w);
        for (double b : l.bias) put(buf, b);
    }
    return buf;
}

} // namespace

void Detector::save(const std::string& path) const {
    const std::vector<char> payload = serialize_detector(cfg_, layers_);
    const uint64_t hash = fnv1a64(payload.data(), payload.size());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InvalidInput("cannot open checkpoint for writing: " + path);
    f.write(kMagic, 4);
    f.write(payload.data(), std::streamsize(payload.size()));
    f.write(reinterpret_cast<const char*>(&hash), sizeof hash);
    if (!f) throw InvalidInput("checkpoint write failed: " + path);
}

Detector Detector::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InvalidInput("cannot open checkpoint: " + path);
    std::vector<char> all((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (all.size() < 4 + sizeof(uint64_t) || std::memcmp(all.data(), kMagic, 4) != 0)
        throw InvalidInput("not a detector checkpoint: " + path);
    const size_t payload_len = all.size() - 4 - sizeof(uint64_t);
    uint64_t stored_hash;
    std::memcpy(&stored_hash, all.data() + 4 + payload_len, sizeof stored_hash);
    if (fnv1a64(all.data() + 4, payload_len) != stored_hash)
        throw InvalidInput("checkpoint hash mismatch: " + path);
    std::vector<char> payload(all.begin() + 4, all.begin() + 4 + payload_len);
    size_t pos = 0;
    if (take<uint32_t>(payload, pos) != kVersion)
        throw InvalidInput("unsupported checkpoint version");
    DetectorConfig cfg;
    cfg.input_size = take<int32_t>(payload, pos);
    cfg.num_classes = take<int32_t>(payload, pos);
    for (int& s : cfg.strides) s = take<int32_t>(payload, pos);
    for (auto& scale : cfg.anchor_sizes)
        for (double& a : scale) a = take<double>(payload, pos);
    Detector det(cfg);
    const uint32_t nlayers = take<uint32_t>(payload, pos);
    if (nlayers != det.layers_.size()) throw InvalidInput("checkpoint layer count mismatch");
    for (auto& l : det.layers_) {
        const int in_c = take<int32_t>(payload, pos);
        const int out_c = take<int32_t>(payload, pos);
        const int k = take<int32_t>(payload, pos);
        const int stride = take<int32_t>(payload, pos);
        const int pad = take<int32_t>(payload, pos);
        if (in_c != l.in_c || out_c != l.out_c || k != l.k || stride != l.stride || pad != l.pad)
            throw InvalidInput("checkpoint layer shape mismatch");
        for (double& w : l.weight) w = take<double>(payload, pos);
        for (double& b : l.bias) b = take<double>(payload, pos);
    }
    if (pos != payload.size()) throw InvalidInput("checkpoint has trailing bytes");
    return det;
}

std::string Detector::weight_hash() const {
    const std::vector<char> payload = serialize_detector(cfg_, layers_);
    return fnv1a64_hex(payload.data(), payload.size());
}

std::array<double, 4> encode_offset(const BBox& box, const BBox& anchor) {
    return {box.cx - anchor.cx, box.cy - anchor.cy, box.h - anchor.h, box.w - anchor.w};
}

int assign_row(const Detector& det, const BBox& truth) {
    const auto grids = det.config().grid_sizes();
    const auto& anchors = det.anchors();
    int best_q = -1;
    double best_iou = -1.0;
    int base = 0;
    for (int s = 0; s < 3; ++s) {
        const int g = grids[s];
        const int cx = std::clamp(int(truth.cx * g), 0, g - 1);
        const int cy = std::clamp(int(truth.cy * g), 0, g - 1);
        for (int a = 0; a < 3; ++a) {
            const int q = base + (a * g + cy) * g + cx;
            const double v = geometry::iou(anchors[q], truth);
            if (v > best_iou) {
                best_iou = v;
                best_q = q;
            }
        }
        base += 3 * g * g;
    }
    return best_q;
}

namespace {

// Fresh photometric jitter plus a small translation per visit, so a static
// frame set does not get memorized pixel-for-pixel.
LabeledFrame jitter_frame(Rng& rng, const LabeledFrame& frame) {
    imaging::TransformSpec spec;
    spec.brightness = rng.uniform(-0.12, 0.12);
    spec.contrast = rng.uniform(0.85, 1.15);
    spec.saturation = rng.uniform(0.85, 1.15);
    spec.hue = rng.uniform(-0.02, 0.02);
    spec.noise_sigma = rng.uniform(0.0, 0.02);
    spec.noise_seed = rng.raw();
    LabeledFrame out;
    out.label = frame.label;
    Image lit = imaging::apply_transform(frame.image, spec);
    const int h = lit.h, w = lit.w;
    // Shift only as far as keeps the box inside the frame, so the label stays
    // aligned with the pixels instead of getting clamped away from them.
    const auto span = [](double c, double side, int px) {
        const int lo = -int(std::floor((c - side / 2.0) * px));
        const int hi = int(std::floor((1.0 - c - side / 2.0) * px));
        return std::pair<int, int>{std::max(lo, -6), std::min(hi, 6)};
    };
    const auto [dx_lo, dx_hi] = span(frame.box.cx, frame.box.w, w);
    const auto [dy_lo, dy_hi] = span(frame.box.cy, frame.box.h, h);
    const int dx = dx_lo >= dx_hi ? 0 : dx_lo + int(rng.index(uint64_t(dx_hi - dx_lo + 1)));
    const int dy = dy_lo >= dy_hi ? 0 : dy_lo + int(rng.index(uint64_t(dy_hi - dy_lo + 1)));
    Image shifted(h, w);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < h; ++y) {
            const int sy = std::clamp(y - dy, 0, h - 1);
            for (int x = 0; x < w; ++x)
                shifted.at(c, y, x) = lit.at(c, sy, std::clamp(x - dx, 0, w - 1));
        }
    out.image = std::move(shifted);
    BBox b = frame.box;
    b.cx += double(dx) / w;
    b.cy += double(dy) / h;
    out.box = b;
    return out;
}

} // namespace

TrainingStats train_detector(Detector& det, const std::vector<LabeledFrame>& frames,
                             const TrainingConfig& cfg) {
    if (frames.empty()) throw InvalidInput("training set is empty");
    auto& layers = det.layers();
    std::vector<std::vector<double>> vel_w(layers.size()), vel_b(layers.size());
    std::vector<std::vector<double>> grad_w(layers.size()), grad_b(layers.size());
    for (size_t i = 0; i < layers.size(); ++i) {
        vel_w[i].assign(layers[i].weight.size(), 0.0);
        vel_b[i].assign(layers[i].bias.size(), 0.0);
        grad_w[i].assign(layers[i].weight.size(), 0.0);
        grad_b[i].assign(layers[i].bias.size(), 0.0);
    }
    Rng rng(cfg.seed);
    Rng aug_rng(cfg.seed ^ 0x6a697474ull);
    std::vector<size_t> order(frames.size());
    std::iota(order.begin(), order.end(), size_t(0));
    const DetectorConfig& dc = det.config();
    const int q_total = dc.rows();
    const int s_cols = dc.cols();
    const auto grids = dc.grid_sizes();
    double epoch_loss = 0.0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Fisher-Yates shuffle driven by the run rng.
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.index(i)]);
        double lr = cfg.lr;
        if (epoch >= (cfg.epochs * 4) / 5) lr *= cfg.final_lr_fraction;
        epoch_loss = 0.0;
        int in_batch = 0;
        auto step = [&](int batch_n) {
            double sq = 0.0;
            for (size_t i = 0; i < layers.size(); ++i) {
                for (double g : grad_w[i]) sq += (g / batch_n) * (g / batch_n);
                for (double g : grad_b[i]) sq += (g / batch_n) * (g / batch_n);
            }
            const double norm = std::sqrt(sq);
            const double clip =
                (cfg.grad_clip > 0.0 && norm > cfg.grad_clip) ? cfg.grad_clip / norm : 1.0;
            for (size_t i = 0; i < layers.size(); ++i) {
                for (size_t j = 0; j < vel_w[i].size(); ++j) {
                    vel_w[i][j] = cfg.momentum * vel_w[i][j] - lr * clip * grad_w[i][j] / batch_n -
                                  lr * cfg.weight_decay * layers[i].weight[j];
                    layers[i].weight[j] += vel_w[i][j];
                    grad_w[i][j] = 0.0;
                }
                for (size_t j = 0; j < vel_b[i].size(); ++j) {
                    vel_b[i][j] = cfg.momentum * vel_b[i][j] - lr * clip * grad_b[i][j] / batch_n;
                    layers[i].bias[j] += vel_b[i][j];
                    grad_b[i][j] = 0.0;
                }
            }
        };
        for (size_t oi = 0; oi < order.size(); ++oi) {
            LabeledFrame jittered;
            if (cfg.augment) jittered = jitter_frame(aug_rng, frames[order[oi]]);
            const LabeledFrame& frame = cfg.augment ? jittered : frames[order[oi]];
            ForwardCache cache;
            const DetectionMatrix m = det.forward_cached(frame.image, cache);
            // Every anchor overlapping the truth well is a positive; anchors
            // that overlap it loosely are ignored so jittered frames do not
            // flip the same row between positive and negative across visits.
            const auto& anchors = det.anchors();
            std::vector<int> pos;
            std::vector<char> skip(size_t(q_total), 0);
            int top1 = -1;
            double iou1 = -1.0;
            for (int q = 0; q < q_total; ++q) {
                const double v = geometry::iou(anchors[size_t(q)], frame.box);
                if (v >= cfg.pos_iou)
                    pos.push_back(q);
                else if (v >= cfg.ignore_iou)
                    skip[size_t(q)] = 1;
                if (v > iou1) {
                    iou1 = v;
                    top1 = q;
                }
            }
            // Small signs may overlap no anchor strongly; the best row trains
            // as a positive regardless so every frame has one.
            if (std::find(pos.begin(), pos.end(), top1) == pos.end())
                pos.push_back(top1);
            for (int q : pos) skip[size_t(q)] = 1;
            // Logit-space gradients: (p - t) for sigmoid columns, 2*(z - t)
            // for the raw offsets. Both sides are averaged within their group.
            DetectionMatrix dz(m.rows, m.cols);
            double loss = 0.0;
            int n_neg = 0;
            for (int q = 0; q < q_total; ++q)
                if (!skip[size_t(q)]) ++n_neg;
            const double pos_scale = 1.0 / double(pos.size());
            const double neg_scale = cfg.neg_weight / double(std::max(1, n_neg));
            for (int q = 0; q < q_total; ++q) {
                if (skip[size_t(q)]) continue;
                const double p = m.objectness(q);
                dz.at(q, 0) = neg_scale * p;
                loss += neg_scale * bce(p, 0.0);
            }
            const double cls_scale =
                cfg.cls_weight * pos_scale / double(dc.num_classes);
            for (int q : pos) {
                const double p = m.objectness(q);
                dz.at(q, 0) = pos_scale * (p - 1.0);
                loss += pos_scale * bce(p, 1.0);
                const auto target = encode_offset(frame.box, anchors[size_t(q)]);
                for (int j = 0; j < 4; ++j) {
                    const double diff = m.at(q, 1 + j) - target[j];
                    dz.at(q, 1 + j) = cfg.box_weight * pos_scale * 2.0 * diff;
                    loss += cfg.box_weight * pos_scale * diff * diff;
                }
                for (int j = 0; j < dc.num_classes; ++j) {
                    const double pc = m.cls(q, j);
                    const double t = (j == frame.label) ? 1.0 : 0.0;
                    dz.at(q, 5 + j) = cls_scale * (pc - t);
                    loss += cls_scale * bce(pc, t);
                }
            }
            epoch_loss += loss;
            // Scatter dz into per-scale head tensors and backpropagate to the
            // parameters (no input gradient needed during training).
            std::array<nn::Tensor, 7> g_act;
            int base = 0;
            for (int s = 0; s < 3; ++s) {
                const int g = grids[s];
                nn::Tensor hg(3 * s_cols, g, g);
                for (int a = 0; a < 3; ++a)
                    for (int y = 0; y < g; ++y)
                        for (int x = 0; x < g; ++x) {
                            const int q = base + (a * g + y) * g + x;
                            for (int j = 0; j < s_cols; ++j)
                                hg.at(a * s_cols + j, y, x) = dz.at(q, j);
                        }
                base += 3 * g * g;
                const int tap = kHeadTap[s];
                layers[7 + s].accumulate_param_grad(cache.act[tap], hg, grad_w[7 + s],
                                                    grad_b[7 + s]);
                g_act[tap] = layers[7 + s].backward_input(hg, cache.act[tap].h,
                                                          cache.act[tap].w);
            }
            for (int i = 6; i >= 0; --i) {
                const nn::Tensor g_pre = nn::leaky_relu_grad(g_act[i], cache.pre[i]);
                const nn::Tensor& input = (i == 0) ? cache.input : cache.act[i - 1];
                layers[i].accumulate_param_grad(input, g_pre, grad_w[i], grad_b[i]);
                if (i > 0) {
                    nn::Tensor down = layers[i].backward_input(g_pre, input.h, input.w);
                    if (g_act[i - 1].size() == 0)
                        g_act[i - 1] = std::move(down);
                    else
                        for (size_t j = 0; j < down.size(); ++j) g_act[i - 1].v[j] += down.v[j];
                }
            }
            if (++in_batch == cfg.batch_size || oi + 1 == order.size()) {
                step(in_batch);
                in_batch = 0;
            }
        }
        epoch_loss /= double(frames.size());
        if (cfg.verbose)
            std::fprintf(stderr, "epoch %d/%d loss %.4f lr %.4f\n", epoch + 1, cfg.epochs,
                         epoch_loss, lr);
    }
    return {epoch_loss, cfg.epochs};
}

double evaluate_map50(const Detector& det, const std::vector<LabeledFrame>& frames,
                      double conf_threshold, double nms_iou) {
    if (frames.empty()) throw InvalidInput("evaluation set is empty");
    struct Det {
        double score;
        int frame;
        int label;
        BBox box;
    };
    std::vector<Det> dets;
    for (size_t i = 0; i < frames.size(); ++i)
        for (const Detection& d : det.predict(frames[i].image, conf_threshold, nms_iou))
            dets.push_back({d.score, int(i), d.label, d.box});
    const int n_cls = det.config().num_classes;
    std::vector<int> gt_count(n_cls, 0);
    for (const auto& f : frames) ++gt_count[f.label];
    double ap_sum = 0.0;
    int cls_present = 0;
    for (int c = 0; c < n_cls; ++c) {
        if (gt_count[c] == 0) continue;
        ++cls_present;
        std::vector<const Det*> cls_dets;
        for (const auto& d : dets)
            if (d.label == c) cls_dets.push_back(&d);
        std::stable_sort(cls_dets.begin(), cls_dets.end(),
                         [](const Det* a, const Det* b) { return a->score > b->score; });
        std::vector<char> gt_used(frames.size(), 0);
        std::vector<double> precision, recall;
        int tp = 0, fp = 0;
        for (const Det* d : cls_dets) {
            const LabeledFrame& f = frames[d->frame];
            bool matched = false;
            if (!gt_used[d->frame] && f.label == c && geometry::iou(d->box, f.box) >= 0.5) {
                gt_used[d->frame] = 1;
                matched = true;
            }
            matched ? ++tp : ++fp;
            precision.push_back(double(tp) / (tp + fp));
            recall.push_back(double(tp) / gt_count[c]);
        }
        // Area under the precision-recall curve with ceiling interpolation.
        double ap = 0.0, max_p = 0.0;
        for (size_t i = precision.size(); i-- > 0;) {
            max_p = std::max(max_p, precision[i]);
            const double r_lo = (i == 0) ? 0.0 : recall[i - 1];
            ap += (recall[i] - r_lo) * max_p;
        }
        ap_sum += ap;
    }
    return cls_present == 0 ? 0.0 : ap_sum / cls_present;
}

} // namespace advforge::detect
