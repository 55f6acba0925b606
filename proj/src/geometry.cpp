#include "advforge/geometry.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "advforge/common.hpp"

namespace advforge {

std::string fnv1a64_hex(const void* data, size_t n) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(data, n)));
    return std::string(buf);
}

std::string fnv1a64_file_hex(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw InvalidInput("cannot open file for hashing: " + path);
    uint64_t h = 0xcbf29ce484222325ull;
    unsigned char buf[65536];
    size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) h = fnv1a64(buf, n, h);
    std::fclose(f);
    char out[17];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
    return std::string(out);
}

} // namespace advforge

namespace advforge::geometry {

double iou(const BBox& a, const BBox& b) {
    if (a.h <= 0.0 || a.w <= 0.0 || b.h <= 0.0 || b.w <= 0.0)
        throw InvalidInput("iou: degenerate box (h or w <= 0)");
    const double iw = std::min(a.x1(), b.x1()) - std::max(a.x0(), b.x0());
    if (iw <= 0.0) return 0.0;
    const double ih = std::min(a.y1(), b.y1()) - std::max(a.y0(), b.y0());
    if (ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    return inter / (a.area() + b.area() - inter);
}

BBox plus(const BBox& anchor, const std::array<double, 4>& offset) {
    BBox r;
    r.cx = anchor.cx + offset[0];
    r.cy = anchor.cy + offset[1];
    r.h = std::max(anchor.h + offset[2], 1e-4);
    r.w = std::max(anchor.w + offset[3], 1e-4);
    return r;
}

std::vector<size_t> nms_indices(const std::vector<ScoredBox>& boxes, double iou_threshold) {
    std::vector<size_t> order(boxes.size());
    std::iota(order.begin(), order.end(), size_t(0));
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return boxes[a].score > boxes[b].score;
    });
    std::vector<size_t> kept;
    for (size_t idx : order) {
        bool suppressed = false;
        for (size_t k : kept) {
            if (iou(boxes[idx].box, boxes[k].box) > iou_threshold) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(idx);
    }
    return kept;
}

std::vector<ScoredBox> nms(const std::vector<ScoredBox>& boxes, double iou_threshold) {
    std::vector<ScoredBox> kept;
    for (size_t idx : nms_indices(boxes, iou_threshold)) kept.push_back(boxes[idx]);
    return kept;
}

} // namespace advforge::geometry
