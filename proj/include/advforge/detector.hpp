#pragma once

#include <array>
#include <string>
#include <vector>

#include "advforge/geometry.hpp"
#include "advforge/image.hpp"
#include "advforge/net.hpp"
#include "advforge/rng.hpp"

namespace advforge::detect {

using geometry::BBox;
using imaging::Image;

// One-stage anchor-based detector over square frames. Three detection scales
// (strides 8/16/32), three square anchors per scale.
struct DetectorConfig {
    int input_size = 160;
    int num_classes = 8;
    std::array<int, 3> strides = {8, 16, 32};
    // Normalized anchor side length per [scale][anchor slot].
    std::array<std::array<double, 3>, 3> anchor_sizes = {{
        {0.10, 0.14, 0.20},
        {0.26, 0.34, 0.42},
        {0.52, 0.64, 0.80},
    }};

    // 160-pixel profile with 8 classes: cheap enough to train and attack on CPU.
    static DetectorConfig toy();
    // 640-pixel profile with 50 classes.
    static DetectorConfig full();

    void validate() const;
    std::array<int, 3> grid_sizes() const;
    // Total prediction rows: 3 anchors x sum of squared grid sizes.
    int rows() const;
    // Columns per row: objectness + 4 box offsets + one score per class.
    int cols() const;
};

// Prediction matrix, one row per anchor slot. Column layout:
//   [0]    objectness (sigmoid activated)
//   [1..4] box offset (dcx, dcy, dh, dw), raw linear values
//   [5..]  per-class scores (sigmoid activated)
// Rows are ordered scale-major (stride 8, 16, 32), anchor-major within a
// scale, then row-major over grid cells.
struct DetectionMatrix {
    int rows = 0, cols = 0;
    std::vector<double> v;

    DetectionMatrix() = default;
    DetectionMatrix(int r, int c, double fill = 0.0) : rows(r), cols(c), v(size_t(r) * c, fill) {}

    double& at(int q, int s) { return v[size_t(q) * cols + s]; }
    double at(int q, int s) const { return v[size_t(q) * cols + s]; }
    double objectness(int q) const { return at(q, 0); }
    std::array<double, 4> offset(int q) const {
        return {at(q, 1), at(q, 2), at(q, 3), at(q, 4)};
    }
    double cls(int q, int j) const { return at(q, 5 + j); }
    int num_classes() const { return cols - 5; }
};

struct Detection {
    BBox box;
    double objectness = 0.0;
    std::vector<double> probs; // per-class scores
    int label = -1;            // argmax of probs
    double score = 0.0;        // objectness * probs[label]
};

// Single-object training/evaluation frame.
struct LabeledFrame {
    Image image;
    BBox box;
    int label = 0;
};

// Activations retained by forward_cached for the input-gradient pass.
struct ForwardCache {
    nn::Tensor input;
    std::array<nn::Tensor, 7> pre;  // trunk pre-activations
    std::array<nn::Tensor, 7> act;  // trunk post-activations
};

class Detector {
public:
    explicit Detector(const DetectorConfig& cfg);

    // He-initialized weights; objectness biases start strongly negative so an
    // untrained net predicts near-zero objectness everywhere.
    static Detector random_init(const DetectorConfig& cfg, uint64_t seed);

    const DetectorConfig& config() const { return cfg_; }
    // Anchor box for every prediction row (cell center + anchor side).
    const std::vector<BBox>& anchors() const { return anchors_; }

    DetectionMatrix forward(const Image& frame) const;
    DetectionMatrix forward_cached(const Image& frame, ForwardCache& cache) const;

    // Backpropagates a gradient over the activated prediction matrix to the
    // input pixels. `matrix` must be the forward output for the same cache.
    Image input_gradient(const ForwardCache& cache, const DetectionMatrix& matrix,
                         const DetectionMatrix& matrix_grad) const;

    // Thresholds objectness, decodes boxes against the anchors, and applies
    // class-agnostic NMS.
    std::vector<Detection> predict(const Image& frame, double conf_threshold = 0.25,
                                   double nms_iou = 0.45) const;

    void save(const std::string& path) const;
    static Detector load(const std::string& path);
    // FNV-1a hash over the serialized parameters, hex encoded.
    std::string weight_hash() const;

    // 7 trunk layers then 3 head layers; exposed for the training loop.
    std::vector<nn::Conv>& layers() { return layers_; }
    const std::vector<nn::Conv>& layers() const { return layers_; }

private:
    void rebuild_anchors();

    DetectorConfig cfg_;
    std::vector<nn::Conv> layers_;
    std::vector<BBox> anchors_;
};

// Box offset so that plus(anchor, offset) reproduces `box` exactly.
std::array<double, 4> encode_offset(const BBox& box, const BBox& anchor);

// Row whose anchor best matches the truth box: candidates are the 3x3
// (scale, anchor slot) rows at the cell containing the box center; best IOU
// wins, ties by lower row index.
int assign_row(const Detector& det, const BBox& truth);

struct TrainingConfig {
    int epochs = 30;
    int batch_size = 2;
    double lr = 4e-3;
    double momentum = 0.9;
    double neg_weight = 20.0; // weight on mean negative-objectness BCE
    double box_weight = 5.0;  // weight on squared offset error
    double cls_weight = 12.0; // weight on mean per-class BCE
    double final_lr_fraction = 0.1; // lr multiplier over the last 20% of epochs
    double grad_clip = 10.0;  // global-norm ceiling on the averaged batch gradient
    double weight_decay = 1e-4;
    bool augment = true;      // photometric + shift jitter on each frame visit
    double pos_iou = 0.45;    // anchors at or above this IOU train as positives
    double ignore_iou = 0.30; // anchors between the thresholds get no objectness push
    uint64_t seed = 7;
    bool verbose = false;
};

struct TrainingStats {
    double final_loss = 0.0;
    int epochs_run = 0;
};

// Seeded SGD-with-momentum training on single-object frames. Deterministic for
// a fixed config and frame order.
TrainingStats train_detector(Detector& det, const std::vector<LabeledFrame>& frames,
                             const TrainingConfig& cfg);

// Mean average precision at IOU 0.5 over classes present in the truth set
// (VOC-style continuous interpolation, greedy matching).
double evaluate_map50(const Detector& det, const std::vector<LabeledFrame>& frames,
                      double conf_threshold = 0.001, double nms_iou = 0.45);

} // namespace advforge::detect
