#include <doctest.h>

#include <cmath>
#include <vector>

#include "advforge/common.hpp"
#include "advforge/filters.hpp"
#include "advforge/rng.hpp"
#include "reference.hpp"

using namespace advforge;
using detect::DetectionMatrix;
using filters::FilterOutput;
using filters::MBoxMode;
using geometry::BBox;

namespace {

DetectionMatrix random_matrix(Rng& rng, int rows, int classes) {
    DetectionMatrix m(rows, 5 + classes);
    for (int q = 0; q < rows; ++q) {
        m.at(q, 0) = rng.unit();
        for (int j = 1; j <= 4; ++j) m.at(q, j) = rng.uniform(-0.2, 0.2);
        for (int j = 0; j < classes; ++j) m.at(q, 5 + j) = rng.unit();
    }
    return m;
}

std::vector<BBox> random_anchors(Rng& rng, int rows) {
    std::vector<BBox> anchors(static_cast<size_t>(rows));
    for (BBox& a : anchors) {
        a.w = rng.uniform(0.05, 0.5);
        a.h = rng.uniform(0.05, 0.5);
        a.cx = rng.uniform(0.2, 0.8);
        a.cy = rng.uniform(0.2, 0.8);
    }
    return anchors;
}

// Three nested boxes centered on bbox_real with overlaps 0.9 / 0.6 / 0.4 and
// objectness 0.2 / 0.8 / 0.99.
struct TraceFixture {
    DetectionMatrix m{3, 7};
    std::vector<BBox> anchors;
    BBox real{0.5, 0.5, 0.2, 0.2};

    TraceFixture() {
        const double ious[3] = {0.9, 0.6, 0.4};
        const double objs[3] = {0.2, 0.8, 0.99};
        for (int q = 0; q < 3; ++q) {
            BBox a = real;
            const double side = 0.2 * std::sqrt(ious[q]);
            a.h = side;
            a.w = side;
            anchors.push_back(a);
            m.at(q, 0) = objs[q];
            m.at(q, 5) = 0.3;
            m.at(q, 6) = 0.6;
        }
    }
};

} // namespace

TEST_CASE("split slices objectness and class columns") {
    DetectionMatrix m(2, 7);
    m.at(0, 0) = 0.7;
    m.at(0, 5) = 0.1;
    m.at(0, 6) = 0.9;
    m.at(1, 0) = 0.4;
    const FilterOutput f = filters::split(m, {0});
    REQUIRE(f.k() == 1);
    CHECK(f.P == std::vector<double>{0.7});
    REQUIRE(f.V.size() == 1);
    CHECK(f.V[0] == std::vector<double>{0.1, 0.9});
    CHECK(f.indices == std::vector<int>{0});
    CHECK_THROWS_AS(filters::split(m, {2}), InvalidInput);
    CHECK_THROWS_AS(filters::split(m, {-1}), InvalidInput);
    DetectionMatrix narrow(2, 5);
    CHECK_THROWS_AS(filters::split(narrow, {0}), InvalidInput);
}

TEST_CASE("multi-box hand trace") {
    TraceFixture fx;
    const FilterOutput hide = filters::m_bbox(fx.m, fx.anchors, fx.real, MBoxMode::Hiding, 2);
    CHECK(hide.indices == std::vector<int>{1, 0}); // gate drops iou 0.4; rank by objectness
    const FilterOutput keep = filters::m_bbox(fx.m, fx.anchors, fx.real, MBoxMode::NonHiding, 2);
    CHECK(keep.indices == std::vector<int>{0, 1}); // rank by overlap
    const FilterOutput single = filters::s_bbox(fx.m, fx.anchors, fx.real, 0.45);
    CHECK(single.indices == std::vector<int>{1}); // 0.2 fails the gate, 0.6 beats 0.4
    // Under-full: the gate only passes two rows.
    CHECK(filters::m_bbox(fx.m, fx.anchors, fx.real, MBoxMode::Hiding, 5).k() == 2);
}

TEST_CASE("hiding mode with an empty gate throws") {
    TraceFixture fx;
    BBox far{0.15, 0.15, 0.1, 0.1};
    CHECK_THROWS_AS(filters::m_bbox(fx.m, fx.anchors, far, MBoxMode::Hiding, 2), EmptyCandidate);
    // Non-hiding mode never gates.
    CHECK(filters::m_bbox(fx.m, fx.anchors, far, MBoxMode::NonHiding, 2).k() == 2);
}

TEST_CASE("s_bbox confidence boundary is inclusive") {
    TraceFixture fx;
    fx.m.at(0, 0) = 0.45;
    const FilterOutput f = filters::s_bbox(fx.m, fx.anchors, fx.real, 0.45);
    CHECK(f.indices == std::vector<int>{0}); // now passes, and it has the best overlap
    fx.m.at(0, 0) = 0.1;
    fx.m.at(1, 0) = 0.1;
    fx.m.at(2, 0) = 0.1;
    CHECK_THROWS_AS(filters::s_bbox(fx.m, fx.anchors, fx.real, 0.45), EmptyCandidate);
}

TEST_CASE("filters agree with brute force on random matrices") {
    Rng rng(2024);
    for (int trial = 0; trial < 300; ++trial) {
        const int rows = 5 + int(rng.index(60));
        const int classes = 2 + int(rng.index(5));
        DetectionMatrix m = random_matrix(rng, rows, classes);
        std::vector<BBox> anchors = random_anchors(rng, rows);
        // Force ties in objectness and geometry on a few rows.
        if (rows >= 4) {
            m.at(1, 0) = m.at(0, 0);
            anchors[2] = anchors[3];
            for (int j = 1; j <= 4; ++j) m.at(2, j) = m.at(3, j);
        }
        const BBox real{0.5, 0.5, 0.35, 0.35};
        const double conf = rng.uniform(0.05, 0.95);
        const int k = 1 + int(rng.index(8));

        const std::vector<int> want_s = testref::s_bbox_ref(m, anchors, real, conf);
        if (want_s.empty()) {
            CHECK_THROWS_AS(filters::s_bbox(m, anchors, real, conf), EmptyCandidate);
        } else {
            CHECK(filters::s_bbox(m, anchors, real, conf).indices == want_s);
        }

        const std::vector<int> want_h = testref::m_bbox_ref(m, anchors, real, true, k);
        if (want_h.empty()) {
            CHECK_THROWS_AS(filters::m_bbox(m, anchors, real, MBoxMode::Hiding, k),
                            EmptyCandidate);
        } else {
            CHECK(filters::m_bbox(m, anchors, real, MBoxMode::Hiding, k).indices == want_h);
        }

        const std::vector<int> want_n = testref::m_bbox_ref(m, anchors, real, false, k);
        CHECK(filters::m_bbox(m, anchors, real, MBoxMode::NonHiding, k).indices == want_n);
    }
}

TEST_CASE("filter input validation") {
    TraceFixture fx;
    CHECK_THROWS_AS(filters::m_bbox(fx.m, fx.anchors, fx.real, MBoxMode::Hiding, 0),
                    InvalidInput);
    CHECK_THROWS_AS(filters::s_bbox(fx.m, fx.anchors, fx.real, 1.0), InvalidInput);
    CHECK_THROWS_AS(filters::s_bbox(fx.m, fx.anchors, BBox{1.2, 0.5, 0.2, 0.2}, 0.45),
                    InvalidInput);
    std::vector<BBox> short_anchors(2, fx.anchors[0]);
    CHECK_THROWS_AS(filters::s_bbox(fx.m, short_anchors, fx.real, 0.45), InvalidInput);
}
