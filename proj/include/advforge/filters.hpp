#pragma once

#include <vector>

#include "advforge/detector.hpp"
#include "advforge/geometry.hpp"

namespace advforge::filters {

using detect::DetectionMatrix;
using geometry::BBox;

// Rows of a prediction matrix selected for the attack loss, already split into
// class confidences V and objectness P; `indices` keeps the source rows for
// traceability and for routing gradients back into the matrix.
struct FilterOutput {
    std::vector<std::vector<double>> V; // k x N
    std::vector<double> P;              // k
    std::vector<int> indices;           // k source row ids
    int k() const { return int(P.size()); }
};

// Single best row for targeted attacks: among rows whose objectness passes
// conf_threshold, pick the one whose decoded box has the highest IOU with
// bbox_real. Ties: higher objectness, then lower row index. Throws
// EmptyCandidate when nothing passes the threshold.
FilterOutput s_bbox(const DetectionMatrix& pred, const std::vector<BBox>& anchors,
                    const BBox& bbox_real, double conf_threshold = 0.45);

enum class MBoxMode {
    Hiding,    // gate IOU > 0.5, then top-k by objectness
    NonHiding, // top-k by IOU, no gate
};

// Top-k rows for the multi-box attacks. Under-full selections return k' < k
// rows instead of padding; hiding mode with an empty gate throws
// EmptyCandidate. Ties: objectness descending, then row index ascending.
FilterOutput m_bbox(const DetectionMatrix& pred, const std::vector<BBox>& anchors,
                    const BBox& bbox_real, MBoxMode mode, int k);

// Slices the given rows into (V, P); box offsets are discarded.
FilterOutput split(const DetectionMatrix& pred, const std::vector<int>& rows);

} // namespace advforge::filters
