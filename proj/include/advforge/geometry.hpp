#pragma once

#include <array>
#include <vector>

#include "advforge/common.hpp"

namespace advforge::geometry {

// Axis-aligned box in normalized image coordinates, center/size form.
struct BBox {
    double cx = 0.0;
    double cy = 0.0;
    double h = 0.0;
    double w = 0.0;

    double x0() const { return cx - 0.5 * w; }
    double x1() const { return cx + 0.5 * w; }
    double y0() const { return cy - 0.5 * h; }
    double y1() const { return cy + 0.5 * h; }
    double area() const { return h * w; }

    // true when the box (plus optional margin) lies fully inside the unit frame
    bool inside_frame(double margin = 0.0) const {
        return x0() >= margin && y0() >= margin && x1() <= 1.0 - margin && y1() <= 1.0 - margin;
    }
};

struct ScoredBox {
    BBox box;
    double score = 0.0;
};

// Intersection over union. Throws InvalidInput on degenerate boxes (h or w <= 0).
double iou(const BBox& a, const BBox& b);

// Component-wise box shift: result = anchor + (dcx, dcy, dh, dw), with h and w
// clamped to a 1e-4 floor so downstream IOU never sees a zero-area box.
BBox plus(const BBox& anchor, const std::array<double, 4>& offset);

// Greedy non-maximum suppression by descending score; ties broken by lower
// original index. Survivors are returned in suppression order.
std::vector<ScoredBox> nms(const std::vector<ScoredBox>& boxes, double iou_threshold);
// Same procedure returning the surviving input indices instead of the boxes.
std::vector<size_t> nms_indices(const std::vector<ScoredBox>& boxes, double iou_threshold);

} // namespace advforge::geometry
