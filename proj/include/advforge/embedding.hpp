#pragma once

#include "advforge/geometry.hpp"
#include "advforge/image.hpp"
#include "advforge/rng.hpp"

namespace advforge::imaging {

using geometry::BBox;

// Size bands for sampled sign placements, as fractions of the frame side.
// A placement draws from the small band [r1, r2] with probability p_small,
// otherwise from the large band [r2, r3].
struct EmbeddingRatios {
    double r1 = 0.01;
    double r2 = 0.1;
    double r3 = 0.5;
    double p_small = 0.2;

    void validate() const;
};

// Samples a square sign placement inside a frame_size x frame_size frame.
// Draw order is fixed: band selector, side length, center x, center y.
// A 3-pixel safety margin keeps the box away from the frame border; if the
// sampled side cannot fit with that margin, throws InfeasiblePlacement.
// The returned box is in normalized coordinates (fractions of frame_size).
BBox place_foreground(Rng& rng, int frame_size, const EmbeddingRatios& ratios);

// Deterministic core of place_foreground: maps four uniform draws in [0, 1)
// (band selector, side, center x, center y) to the placed box.
BBox place_from_draws(double band_u, double side_u, double cx_u, double cy_u, int frame_size,
                      const EmbeddingRatios& ratios);

// Integer pixel rectangle covered by a normalized box inside an h x w frame.
struct PixelRect {
    int x0 = 0, y0 = 0, w = 0, h = 0;
};
PixelRect bbox_pixel_rect(const BBox& bbox, int frame_h, int frame_w);

// Pastes the (transformed) sign image into the background at bbox: the sign is
// resized to the integer pixel rectangle and written over the background
// pixels inside it; everything outside is untouched.
Image embed(const Image& background, const Image& sign, const BBox& bbox);

// Gradient of embed with respect to the sign image: crops the frame gradient
// at the pixel rectangle and transposes the resize.
Image embed_sign_grad(const Image& grad_out, const Image& sign, const BBox& bbox);

} // namespace advforge::imaging
