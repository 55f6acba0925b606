#pragma once

#include <string>
#include <vector>

#include "advforge/detector.hpp"
#include "advforge/embedding.hpp"
#include "advforge/transform.hpp"

namespace advforge::data {

// Canonical sign image for a class: colored ring (hue spread evenly over the
// class count), white interior, dark class digit. Square, supersampled.
imaging::Image sign_template(int label, int num_classes, int size);

// Disc covering the sign face; the default radius matches the template ring.
imaging::Mask disc_mask(int size, double radius_frac = 0.46);

// Procedural scene: color gradient, low-frequency value noise, a few
// rectangles, light pixel noise.
imaging::Image random_background(Rng& rng, int size);

struct DatasetConfig {
    int frame_size = 160;
    int num_classes = 8;
    int count = 800;
    int sign_size = 64; // template resolution before embedding
    imaging::EmbeddingRatios ratios{0.1, 0.2, 0.6, 0.2};
    imaging::TransformRanges transforms; // applied to the sign before embedding
    uint64_t seed = 1;
};

// Single-object frames: transformed sign template embedded in a random
// background at a sampled placement. Deterministic for a fixed config.
std::vector<detect::LabeledFrame> synthesize_dataset(const DatasetConfig& cfg);

// Writes frames/<index>.png plus manifest.jsonl (header line with the frame
// geometry, then one line per frame with path, label, and box).
void save_dataset(const std::vector<detect::LabeledFrame>& frames, const std::string& dir);
std::vector<detect::LabeledFrame> load_dataset(const std::string& dir);

} // namespace advforge::data
