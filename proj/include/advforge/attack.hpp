#pragma once

#include <string>
#include <vector>

#include "advforge/detector.hpp"
#include "advforge/embedding.hpp"
#include "advforge/losses.hpp"
#include "advforge/transform.hpp"

namespace advforge::attack {

using losses::Vector;

struct AttackConfig {
    Vector vector = Vector::HA;
    double c = 1e2;
    int k = 10;                   // boxes per transformation sample
    double learning_rate = 0.1;
    int n = 16;                   // transformation batch size
    int steps = 3000;
    int source_label = 0;         // y
    int target_label = -1;        // y' (aa/ta)
    double conf_threshold = 0.45; // s_bbox prefilter (ta)
    int patch_size = 64;
    bool ta_literal_suppression = false;
    uint64_t seed = 7;
    imaging::Mask mask; // empty -> default (full for aa, disc otherwise)
    imaging::EmbeddingRatios ratios{0.1, 0.2, 0.6, 0.2};
    imaging::TransformRanges transforms;

    // Published per-vector hyper-parameters (c, k, learning rate).
    static AttackConfig defaults_for(Vector v);
    void validate(int num_classes) const;
};

struct PatchArtifact {
    imaging::Image base;    // x
    imaging::Image patched; // x' = x + delta on masked pixels
    imaging::Mask mask;
    AttackConfig config;
    std::vector<double> loss_trace; // one scalar per optimization step
    std::string detector_hash;

    // patched - base; zero outside the mask by construction.
    std::vector<double> delta() const;
    double masked_l2() const;
};

// Optimizes the masked perturbation with SGD over sampled (background,
// placement, transform) batches. Deterministic for a fixed seed, config,
// detector, and background order. Throws NonConvergence after more than 50
// consecutive steps in which no sample yields a filter candidate.
PatchArtifact train_patch(const AttackConfig& cfg, const detect::Detector& model,
                          const std::vector<imaging::Image>& backgrounds);

// Artifact directory: patch.png, base.png, mask.png, metadata.json.
void save_artifact(const PatchArtifact& artifact, const std::string& dir);
PatchArtifact load_artifact(const std::string& dir);

} // namespace advforge::attack
