#include "advforge/filters.hpp"

#include <algorithm>
#include <numeric>

#include "advforge/common.hpp"

namespace advforge::filters {

namespace {

void check_inputs(const DetectionMatrix& pred, const std::vector<BBox>& anchors,
                  const BBox& bbox_real) {
    if (pred.rows < 1 || pred.cols < 6) throw InvalidInput("prediction matrix malformed");
    if (int(anchors.size()) != pred.rows)
        throw InvalidInput("anchor count does not match prediction rows");
    if (!bbox_real.inside_frame()) throw InvalidInput("bbox_real outside frame");
}

std::vector<double> decode_ious(const DetectionMatrix& pred, const std::vector<BBox>& anchors,
                                const BBox& bbox_real) {
    std::vector<double> ious(pred.rows);
    for (int q = 0; q < pred.rows; ++q)
        ious[q] = geometry::iou(geometry::plus(anchors[q], pred.offset(q)), bbox_real);
    return ious;
}

} // namespace

FilterOutput split(const DetectionMatrix& pred, const std::vector<int>& rows) {
    if (pred.cols < 6) throw InvalidInput("row width must be at least 6 (1+4+N with N >= 1)");
    FilterOutput out;
    const int n = pred.num_classes();
    for (int q : rows) {
        if (q < 0 || q >= pred.rows) throw InvalidInput("split row index out of range");
        out.P.push_back(pred.objectness(q));
        std::vector<double> v(n);
        for (int j = 0; j < n; ++j) v[j] = pred.cls(q, j);
        out.V.push_back(std::move(v));
        out.indices.push_back(q);
    }
    return out;
}

FilterOutput s_bbox(const DetectionMatrix& pred, const std::vector<BBox>& anchors,
                    const BBox& bbox_real, double conf_threshold) {
    check_inputs(pred, anchors, bbox_real);
    if (!(conf_threshold > 0.0 && conf_threshold < 1.0))
        throw InvalidInput("conf_threshold must lie in (0, 1)");
    const std::vector<double> ious = decode_ious(pred, anchors, bbox_real);
    int best = -1;
    for (int q = 0; q < pred.rows; ++q) {
        if (pred.objectness(q) < conf_threshold) continue;
        if (best < 0 || ious[q] > ious[best] ||
            (ious[q] == ious[best] && pred.objectness(q) > pred.objectness(best)))
            best = q;
    }
    if (best < 0)
        throw EmptyCandidate("no prediction row passes the confidence threshold");
    return split(pred, {best});
}

FilterOutput m_bbox(const DetectionMatrix& pred, const std::vector<BBox>& anchors,
                    const BBox& bbox_real, MBoxMode mode, int k) {
    check_inputs(pred, anchors, bbox_real);
    if (k < 1) throw InvalidInput("m_bbox k must be at least 1");
    const std::vector<double> ious = decode_ious(pred, anchors, bbox_real);
    std::vector<int> cand;
    if (mode == MBoxMode::Hiding) {
        for (int q = 0; q < pred.rows; ++q)
            if (ious[q] > 0.5) cand.push_back(q);
        if (cand.empty())
            throw EmptyCandidate("no prediction row overlaps the target above IOU 0.5");
        std::sort(cand.begin(), cand.end(), [&](int a, int b) {
            if (pred.objectness(a) != pred.objectness(b))
                return pred.objectness(a) > pred.objectness(b);
            return a < b;
        });
    } else {
        cand.resize(pred.rows);
        std::iota(cand.begin(), cand.end(), 0);
        std::sort(cand.begin(), cand.end(), [&](int a, int b) {
            if (ious[a] != ious[b]) return ious[a] > ious[b];
            if (pred.objectness(a) != pred.objectness(b))
                return pred.objectness(a) > pred.objectness(b);
            return a < b;
        });
    }
    if (int(cand.size()) > k) cand.resize(k);
    return split(pred, cand);
}

} // namespace advforge::filters
